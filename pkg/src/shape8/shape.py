"""Shape space of the planar three-body problem and syzygy bookkeeping.

The projection to shape space uses mass-weighted Jacobi coordinates

    z1 = sqrt(mu1) (x2 - x1),  z2 = sqrt(mu2) (x3 - (m1 x1 + m2 x2)/(m1 + m2))

followed by the Hopf map ``w = ((|z1|^2 - |z2|^2)/2, Re(conj(z1) z2), Im(conj(z1) z2))``.
With this normalization ``|w| = I/2`` for centered configurations and ``w3`` is a
positive multiple of the signed area (positive for counterclockwise triangles).
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from .dynamics import as_masses, center, moment_of_inertia, to_complex

COLLINEAR_RTOL = 1e-12


class NotCollinearError(ValueError):
    pass


class AmbiguousSyzygyError(ValueError):
    pass


class TangentialCrossingWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ShapePoint:
    w1: float
    w2: float
    w3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.w1, self.w2, self.w3])

    def unit(self) -> "ShapePoint":
        w = self.as_array()
        return ShapePoint(*(w / np.linalg.norm(w)))


@dataclass(frozen=True)
class SyzygyEvent:
    time: float
    type: int
    crossing_sign: int


@dataclass(frozen=True)
class SyzygySequence:
    letters: tuple
    cyclic: bool = False

    @classmethod
    def from_string(cls, s: str, cyclic=False) -> "SyzygySequence":
        return cls(tuple(int(c) for c in s), cyclic)

    def __str__(self):
        return "".join(str(c) for c in self.letters)


def jacobi_coordinates(x, m):
    """Mass-weighted Jacobi vectors ``(z1, z2)`` of a (stack of) configuration(s)."""
    z, (m1, m2, m3) = to_complex(x), as_masses(m)
    mu1 = m1 * m2 / (m1 + m2)
    mu2 = m3 * (m1 + m2) / (m1 + m2 + m3)
    xi1 = z[..., 1] - z[..., 0]
    xi2 = z[..., 2] - (m1 * z[..., 0] + m2 * z[..., 1]) / (m1 + m2)
    return np.sqrt(mu1) * xi1, np.sqrt(mu2) * xi2


def from_jacobi(z1, z2, m):
    """Inverse of :func:`jacobi_coordinates` onto centered configurations."""
    m1, m2, m3 = as_masses(m)
    mtot = m1 + m2 + m3
    xi1 = np.asarray(z1) / np.sqrt(m1 * m2 / (m1 + m2))
    xi2 = np.asarray(z2) / np.sqrt(m3 * (m1 + m2) / mtot)
    c12 = -m3 / mtot * xi2
    return np.stack([c12 - m2 / (m1 + m2) * xi1,
                     c12 + m1 / (m1 + m2) * xi1,
                     (m1 + m2) / mtot * xi2], axis=-1)


def hopf(z1, z2) -> np.ndarray:
    p = np.conj(z1) * z2
    return np.stack([(np.abs(z1) ** 2 - np.abs(z2) ** 2) / 2, p.real, p.imag], axis=-1)


def project_array(x, m) -> np.ndarray:
    """Vectorized projection; returns an array with trailing axis of length 3."""
    return hopf(*jacobi_coordinates(x, m))


def project(cfg, m) -> ShapePoint:
    return ShapePoint(*project_array(cfg, m))


def is_collinear(cfg, m, rtol=COLLINEAR_RTOL) -> bool:
    w = project_array(cfg, m)
    return bool(abs(w[2]) < rtol * moment_of_inertia(cfg, m))


def syzygy_type(cfg, m=(1.0, 1.0, 1.0), rtol=1e-8) -> int:
    """Index (1-based) of the body lying between the other two.

    The ordering is read off along the principal axis of the configuration,
    which is well defined for near-collinear input.
    """
    z = center(to_complex(cfg), m)
    mm = as_masses(m)
    I = moment_of_inertia(z, mm)
    if abs(project_array(z, mm)[2]) > rtol * I:
        raise NotCollinearError("configuration is not collinear")
    pts = np.stack([z.real, z.imag], axis=1)
    tensor = (mm[:, None, None] * pts[:, :, None] * pts[:, None, :]).sum(axis=0)
    axis = np.linalg.eigh(tensor)[1][:, -1]
    s = pts @ axis
    order = np.argsort(s)
    gaps = np.diff(s[order])
    if np.min(gaps) <= rtol * np.sqrt(I):
        raise AmbiguousSyzygyError("binary collision: middle body is not defined")
    return int(order[1]) + 1


def _hermite(t0, t1, x0, x1, v0, v1, t):
    h = t1 - t0
    s = (t - t0) / h
    h00 = 2 * s**3 - 3 * s**2 + 1
    h10 = s**3 - 2 * s**2 + s
    h01 = -2 * s**3 + 3 * s**2
    h11 = s**3 - s**2
    return h00 * x0 + h10 * h * v0 + h01 * x1 + h11 * h * v1


def extract_syzygies(times, positions, m, velocities=None, period=None,
                     zero_rtol=1e-13, tangent_rtol=1e-8):
    """Locate the syzygies (zeros of ``w3``) along a sampled trajectory.

    ``positions`` has shape ``(K, 3)`` complex or ``(K, 3, 2)`` real. When
    ``velocities`` are given, cubic Hermite interpolation is used between
    samples, otherwise linear. With ``period`` set, samples cover
    ``[0, period)`` and the last interval wraps to the first sample.

    Roots are bracketed by sign changes and refined by bisection to
    ``1e-10 * span``.
    """
    t = np.asarray(times, dtype=float)
    z = to_complex(positions)
    v = None if velocities is None else to_complex(velocities)
    mm = as_masses(m)
    span = period if period is not None else (t[-1] - t[0])
    tol_t = 1e-10 * span

    if period is not None:
        t = np.append(t, t[0] + period)
        z = np.concatenate([z, z[:1]])
        if v is not None:
            v = np.concatenate([v, v[:1]])

    I = moment_of_inertia(z, mm)
    w3 = project_array(z, mm)[:, 2]
    sgn = np.where(np.abs(w3) <= zero_rtol * I, 0, np.sign(w3)).astype(int)

    def interp(k, tau):
        if v is None:
            s = (tau - t[k]) / (t[k + 1] - t[k])
            return (1 - s) * z[k] + s * z[k + 1]
        return _hermite(t[k], t[k + 1], z[k], z[k + 1], v[k], v[k + 1], tau)

    def w3_at(k, tau):
        return project_array(interp(k, tau), mm)[2]

    def w3_rate(k, tau):
        h = (1e-7 if v is not None else 1e-3) * (t[k + 1] - t[k])
        lo, hi = max(tau - h, t[k]), min(tau + h, t[k + 1])
        return (w3_at(k, hi) - w3_at(k, lo)) / (hi - lo)

    events = []
    n = len(t)
    nonzero = np.flatnonzero(sgn)
    if len(nonzero) == 0:
        return events
    wrap = period is not None

    def add(time, cfg, rate):
        if abs(rate) * span < tangent_rtol * np.mean(I):
            warnings.warn(f"tangential syzygy crossing near t={time:.6g}",
                          TangentialCrossingWarning, stacklevel=3)
        events.append(SyzygyEvent(float(time), syzygy_type(cfg, mm), int(np.sign(rate))))

    for k in range(n - 1):
        if sgn[k] * sgn[k + 1] < 0:
            a, b = t[k], t[k + 1]
            fa = w3_at(k, a)
            while b - a > tol_t:
                c = 0.5 * (a + b)
                fc = w3_at(k, c)
                if np.sign(fc) == np.sign(fa):
                    a, fa = c, fc
                else:
                    b = c
            root = 0.5 * (a + b)
            add(root, interp(k, root),
                (w3_at(k, t[k + 1]) - w3_at(k, t[k])) / (t[k + 1] - t[k]))
        elif sgn[k] == 0:
            # runs of exact zeros: an event if the signs on both sides differ
            if k > 0 and sgn[k - 1] == 0:
                continue
            j = k
            while j < n and sgn[j] == 0:
                j += 1
            if wrap:
                before = sgn[k - 1] if k > 0 else sgn[nonzero[-1]]
                after = sgn[j] if j < n else sgn[nonzero[0]]
            else:
                if k == 0 or j >= n:
                    continue
                before, after = sgn[k - 1], sgn[j]
            if before * after < 0:
                mid = (k + j - 1) // 2
                rate = w3_rate(mid, t[mid]) if mid < n - 1 else 0.0
                if np.sign(rate) != np.sign(after - before):
                    rate = np.sign(after - before) * abs(rate)
                add(t[mid], z[mid], rate)
    if wrap:
        # the appended copy of sample 0 must not produce a duplicate event
        events = [e for e in events if e.time < t[0] + period - tol_t]
    return sorted(events, key=lambda e: e.time)


def sequence_of(events, cyclic=False) -> SyzygySequence:
    return SyzygySequence(tuple(e.type for e in events), cyclic)


def reduce_sequence(seq: SyzygySequence) -> SyzygySequence:
    """Cancel stutters (adjacent equal letters) until none remain."""
    stack = []
    for c in seq.letters:
        if stack and stack[-1] == c:
            stack.pop()
        else:
            stack.append(c)
    if seq.cyclic:
        while len(stack) >= 2 and stack[0] == stack[-1]:
            stack = stack[1:-1]
    return SyzygySequence(tuple(stack), seq.cyclic)


def canonical_rotation(letters) -> tuple:
    letters = tuple(letters)
    if not letters:
        return letters
    return min(letters[i:] + letters[:i] for i in range(len(letters)))


def brute_force_reductions(seq: SyzygySequence) -> set:
    """Every terminal word reachable by deleting stutters in any order.

    Cyclic words are returned in canonical rotation. Exponential; intended
    as an oracle for short words only.
    """
    seen = set()
    terminal = set()

    def key(w):
        return canonical_rotation(w) if seq.cyclic else w

    stack = [tuple(seq.letters)]
    while stack:
        w = stack.pop()
        if key(w) in seen:
            continue
        seen.add(key(w))
        moves = []
        n = len(w)
        for i in range(n - 1):
            if w[i] == w[i + 1]:
                moves.append(w[:i] + w[i + 2:])
        if seq.cyclic and n >= 2 and w[0] == w[-1]:
            moves.append(w[1:-1])
        if not moves:
            terminal.add(key(w))
        stack.extend(moves)
    return terminal


# --- landmarks -------------------------------------------------------------

def euler_quintic(m_left, m_mid, m_right) -> np.ndarray:
    """Coefficients (highest degree first) of Euler's quintic for alpha = 1.

    The unknown is the ratio of the right gap to the left gap.
    """
    a, b, c = m_left, m_mid, m_right
    return np.array([a + b, 3 * a + 2 * b, 3 * a + b,
                     -(b + 3 * c), -(2 * b + 3 * c), -(b + c)], dtype=float)


def euler_balance(ratio, masses, alpha):
    """Collinear central-configuration defect for bodies at 0, 1, 1 + ratio.

    Zero exactly when the relative accelerations of the two gaps are in
    proportion to the gaps themselves.
    """
    ml, mb, mr = masses
    x = ratio
    f = lambda d: np.sign(d) * abs(d) ** (-(alpha + 1))
    acc_l = mb * f(1.0) + mr * f(1.0 + x)
    acc_b = -ml * f(1.0) + mr * f(x)
    acc_r = -ml * f(1.0 + x) - mb * f(x)
    return (acc_r - acc_b) / x - (acc_b - acc_l)


def _bisect(f, lo, hi, tol):
    flo = f(lo)
    while hi - lo > tol * max(1.0, abs(hi)):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0:
            return mid
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def euler_ratio(masses_in_order, alpha=1.0, tol=1e-12) -> float:
    """Gap ratio of the Euler configuration with the given left/mid/right masses."""
    ml, mb, mr = masses_in_order
    if alpha == 1.0:
        p = euler_quintic(ml, mb, mr)
        f = lambda y: np.polyval(p, y / (1 - y))
    else:
        f = lambda y: euler_balance(y / (1 - y), (ml, mb, mr), alpha)
    # y = ratio / (1 + ratio) maps (0, inf) onto (0, 1)
    y = _bisect(f, 1e-12, 1 - 1e-12, tol)
    return y / (1 - y)


def euler_configuration(m, middle: int, alpha=1.0) -> np.ndarray:
    """Centered collinear central configuration with body ``middle`` (1-based) inside.

    Returned on the real axis in complex form with the lower-indexed outer
    body on the left, scaled so that ``I = 1``.
    """
    mm = as_masses(m)
    outer = [j for j in range(3) if j != middle - 1]
    order = [outer[0], middle - 1, outer[1]]
    ratio = euler_ratio(mm[order], alpha)
    pos = np.zeros(3)
    pos[order] = [0.0, 1.0, 1.0 + ratio]
    z = center(pos.astype(complex), mm)
    return z / np.sqrt(moment_of_inertia(z, mm))


def lagrange_configuration(m, orientation=+1) -> np.ndarray:
    """Equilateral configuration (counterclockwise for orientation +1), I = 1."""
    mm = as_masses(m)
    z = np.exp(2j * np.pi * np.arange(3) / 3 * orientation)
    z = center(z, mm)
    return z / np.sqrt(moment_of_inertia(z, mm))


def binary_collision_configuration(m, pair) -> np.ndarray:
    mm = as_masses(m)
    j, k = sorted(p - 1 for p in pair)
    other = 3 - j - k
    z = np.zeros(3, dtype=complex)
    z[other] = 1.0
    z = center(z, mm)
    return z / np.sqrt(moment_of_inertia(z, mm))


def landmarks(m, alpha=1.0) -> dict:
    """Unit shape-sphere points of the central configurations and collision rays."""
    out = {}
    for j in (1, 2, 3):
        out[f"E{j}"] = project(euler_configuration(m, j, alpha), m).unit()
    out["L+"] = project(lagrange_configuration(m, +1), m).unit()
    out["L-"] = project(lagrange_configuration(m, -1), m).unit()
    for pair in itertools.combinations((1, 2, 3), 2):
        out[f"b{pair[0]}{pair[1]}"] = project(binary_collision_configuration(m, pair), m).unit()
    return out
