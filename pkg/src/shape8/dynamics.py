"""Planar point-mass dynamics with an alpha-homogeneous attraction.

Configurations are arrays of shape ``(n, 2)`` holding the real and imaginary
parts of each body; most routines also accept the complex form of shape
``(n,)``. Complex numbers are only an internal convenience.

The potential is the positive force function

    U(x) = sum_{j<k} m_j m_k / (alpha |x_j - x_k|^alpha)

so that ``m_j x_j'' = dU/dx_j``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

COLLISION_RTOL = 1e-14
CENTER_RTOL = 1e-12


class CollisionError(ValueError):
    """Raised when a configuration has (numerically) coincident bodies."""


@dataclass(frozen=True)
class MassTriple:
    m1: float
    m2: float
    m3: float

    def __post_init__(self):
        if not all(np.isfinite(m) and m > 0 for m in self.as_array()):
            raise ValueError(f"masses must be positive, got {self.as_array()}")

    def as_array(self) -> np.ndarray:
        return np.array([self.m1, self.m2, self.m3], dtype=float)

    @property
    def isosceles(self) -> bool:
        """True when m1 == m2 exactly, the symmetry needed for the twist."""
        return self.m1 == self.m2


@dataclass(frozen=True)
class Alpha:
    value: float

    def __post_init__(self):
        if not (1.0 <= self.value < 2.0):
            raise ValueError(f"alpha must lie in [1, 2), got {self.value}")

    def __float__(self):
        return float(self.value)


def as_masses(m) -> np.ndarray:
    if isinstance(m, MassTriple):
        return m.as_array()
    m = np.asarray(m, dtype=float)
    if m.ndim != 1 or np.any(m <= 0):
        raise ValueError("masses must be a 1-d array of positive reals")
    return m


def to_complex(x) -> np.ndarray:
    """Return the complex form of a configuration (or stack of them)."""
    x = np.asarray(x)
    if np.iscomplexobj(x):
        return x.astype(complex)
    if x.shape[-1] != 2:
        raise ValueError("real configurations need a trailing axis of length 2")
    return x[..., 0] + 1j * x[..., 1]


def to_real(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    return np.stack([z.real, z.imag], axis=-1)


def wedge(u, v):
    """Planar cross product of complex numbers, ``Re u Im v - Im u Re v``."""
    return (np.conj(u) * v).imag


def _alpha(a) -> float:
    return float(a.value if isinstance(a, Alpha) else a)


def center_of_mass(x, m) -> complex:
    z, m = to_complex(x), as_masses(m)
    return np.sum(m * z, axis=-1) / m.sum()


def center(x, m):
    """Translate so that the mass-weighted centroid is at the origin.

    Returns the same representation (real pairs or complex) as the input.
    """
    z = to_complex(x)
    zc = z - center_of_mass(z, m)[..., None]
    return zc if np.iscomplexobj(x) else to_real(zc)


def moment_of_inertia(x, m) -> float:
    z, m = to_complex(x), as_masses(m)
    return np.sum(m * np.abs(z) ** 2, axis=-1)


def is_centered(x, m, rtol=CENTER_RTOL) -> bool:
    z = to_complex(x)
    scale = np.sqrt(moment_of_inertia(z, m))
    return bool(np.all(np.abs(center_of_mass(z, m)) * as_masses(m).sum()
                       <= rtol * max(scale, np.finfo(float).tiny)))


def pair_distances(x) -> np.ndarray:
    """Distances |x_j - x_k| for j < k, last axis ordered (0,1), (0,2), (1,2), ..."""
    z = to_complex(x)
    n = z.shape[-1]
    j, k = np.triu_indices(n, 1)
    return np.abs(z[..., j] - z[..., k])


def _check_collision(z, m):
    r = pair_distances(z)
    scale = np.sqrt(moment_of_inertia(z, m))
    bad = r <= COLLISION_RTOL * np.asarray(scale)[..., None]
    if np.any(bad) or np.any(r == 0):
        raise CollisionError(f"collision in configuration (min distance {np.min(r):.3e})")
    return r


def potential_energy(x, m, a) -> float:
    z, mm = to_complex(x), as_masses(m)
    alpha = _alpha(a)
    r = _check_collision(z, mm)
    j, k = np.triu_indices(len(mm), 1)
    return np.sum(mm[j] * mm[k] / (alpha * r ** alpha), axis=-1)


def potential_gradient(x, m, a) -> np.ndarray:
    """Complex gradient ``dU/dRe x_j + i dU/dIm x_j`` (no collision check).

    Works on stacks ``(..., n)`` of complex configurations.
    """
    z, mm = to_complex(x), as_masses(m)
    alpha = _alpha(a)
    d = z[..., :, None] - z[..., None, :]
    eye = np.eye(len(mm))
    r2 = np.abs(d) ** 2 + eye
    w = (np.outer(mm, mm) * (1.0 - eye)) * r2 ** (-(alpha + 2) / 2)
    return -np.sum(w * d, axis=-1)


def accelerations(x, m, a):
    z, mm = to_complex(x), as_masses(m)
    _check_collision(z, mm)
    acc = potential_gradient(z, mm, a) / mm
    return acc if np.iscomplexobj(x) else to_real(acc)


def kinetic_energy(v, m) -> float:
    w, mm = to_complex(v), as_masses(m)
    return 0.5 * np.sum(mm * np.abs(w) ** 2, axis=-1)


def angular_momentum(x, v, m) -> float:
    z, w, mm = to_complex(x), to_complex(v), as_masses(m)
    return np.sum(mm * wedge(z, w), axis=-1)


def energy(x, v, m, a) -> float:
    return kinetic_energy(v, m) - potential_energy(x, m, a)


def lagrangian(x, v, m, a) -> float:
    return kinetic_energy(v, m) + potential_energy(x, m, a)
