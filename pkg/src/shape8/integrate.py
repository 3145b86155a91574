"""Adaptive high-order propagation of the equations of motion.

Thin wrapper around scipy's Dormand-Prince 8(5,3) pair with a terminal
close-approach event.
"""
from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp

from .dynamics import as_masses, moment_of_inertia, potential_gradient

RTOL = 1e-13
CLOSE_APPROACH_RTOL = 1e-6


class IntegrationFailure(RuntimeError):
    pass


def pack(x, v) -> np.ndarray:
    x, v = np.asarray(x, complex), np.asarray(v, complex)
    return np.concatenate([x.real, x.imag, v.real, v.imag])


def unpack(y):
    y = np.asarray(y)
    n = y.shape[0] // 4
    x = y[:n] + 1j * y[n:2 * n]
    v = y[2 * n:3 * n] + 1j * y[3 * n:]
    return x, v


def _rhs(m, alpha):
    def f(t, y):
        x, v = unpack(y)
        a = potential_gradient(x, m, alpha) / m
        return np.concatenate([v.real, v.imag, a.real, a.imag])
    return f


def propagate(x0, v0, m, alpha, t_span, t_eval=None, rtol=RTOL, atol=None,
              close_rtol=CLOSE_APPROACH_RTOL, dense=False):
    """Integrate from ``(x0, v0)`` over ``t_span``.

    Returns ``(t, x, v, sol)`` with complex position and velocity samples
    of shape ``(K, n)``; ``sol`` is the dense interpolant when requested.
    Raises :class:`IntegrationFailure` when bodies approach closer than
    ``close_rtol * sqrt(I)``.
    """
    m = as_masses(m)
    x0 = np.asarray(x0, complex)
    scale = np.sqrt(moment_of_inertia(x0, m))
    if atol is None:
        atol = 1e-3 * rtol * max(scale, 1e-300)
    n = len(m)
    j, k = np.triu_indices(n, 1)

    def close(t, y):
        x = y[:n] + 1j * y[n:2 * n]
        return np.min(np.abs(x[j] - x[k])) - close_rtol * scale
    close.terminal = True

    sol = solve_ivp(_rhs(m, float(alpha)), t_span, pack(x0, v0), method="DOP853",
                    rtol=rtol, atol=atol, t_eval=t_eval, events=close,
                    dense_output=dense)
    if sol.status != 0:
        raise IntegrationFailure(sol.message if sol.status < 0 else
                                 f"close approach at t={sol.t_events[0][0]:.6g}")
    xs, vs = unpack(sol.y)
    return sol.t, xs.T, vs.T, sol.sol
