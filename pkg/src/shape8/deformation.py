"""Local analysis near an isolated binary collision.

Homothetic-parabolic two-body arcs, the plateau/ramp deformation and its
three action pieces, parabolic blow-ups, polar asymptotics of collision
trajectories, and minimizing arcs of the Kepler-type problem
``gamma'' = -M gamma / |gamma|^(alpha + 2)``.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import root

from .dynamics import as_masses
from .minimize import SolveConfig, lbfgs
from .path import ActionEvaluation, DiscretePath, GAUSS_S, GAUSS_W, graded_times
from .integrate import propagate

CSV_VERSION = "shape8-deformation-csv v1"


def exponent(alpha) -> float:
    """The parabolic exponent ``2 / (2 + alpha)``."""
    return 2.0 / (2.0 + alpha)


def kappa(m2, m3, alpha) -> float:
    """Constant making ``(kappa t)^(2/(2+alpha)) s`` a zero-energy two-body solution."""
    m2, m3 = float(m2), float(m3)
    if m2 <= 0 or m3 <= 0:
        raise ValueError("masses must be positive")
    m0 = m2 + m3
    return (2 + alpha) / np.sqrt(2 * alpha) * m0 ** (-alpha / 4) * (m2 * m3) ** ((2 + alpha) / 4)


def kepler_mass(m2, m3, alpha) -> float:
    return m2 * (m2 / (m2 + m3)) ** (1 + alpha)


@dataclass(frozen=True)
class BinaryCentralConfig:
    """Normalized centered two-body configuration with body 3 at angle ``phi3``."""
    phi3: float
    m2: float = 1.0
    m3: float = 1.0

    def __post_init__(self):
        as_masses([self.m2, self.m3])

    @property
    def rho2(self):
        return np.sqrt(self.m3 / (self.m2 * (self.m2 + self.m3)))

    @property
    def rho3(self):
        return np.sqrt(self.m2 / (self.m3 * (self.m2 + self.m3)))

    @property
    def phi2(self):
        return self.phi3 + np.pi

    @property
    def masses(self):
        return np.array([self.m2, self.m3])

    @property
    def s(self) -> np.ndarray:
        return np.array([self.rho2 * np.exp(1j * self.phi2), self.rho3 * np.exp(1j * self.phi3)])


def _inner(a, b, m):
    return float(np.sum(m * (np.conj(a) * b).real))


@dataclass(frozen=True)
class ParabolicArc:
    """Homothetic-parabolic two-body arc ``q(t) = (kappa t)^p s``, ``t >= 0``."""
    config: BinaryCentralConfig
    alpha: float

    @property
    def kappa(self):
        return kappa(self.config.m2, self.config.m3, self.alpha)

    def at(self, t):
        t = np.asarray(t, float)
        p = exponent(self.alpha)
        k = self.kappa
        r = (k * t) ** p
        with np.errstate(divide="ignore"):   # the speed is infinite at t = 0
            rd = p * k ** p * t ** (p - 1)
        s = self.config.s
        return r[..., None] * s, rd[..., None] * s


@dataclass(frozen=True)
class KeplerParabola:
    """Zero-energy collision-ejection solution of the Kepler-type problem."""
    M: float
    alpha: float
    psi_minus: float = 0.0
    psi_plus: float = 0.0

    @property
    def rate(self):
        return (2 + self.alpha) / np.sqrt(2 * self.alpha) * np.sqrt(self.M)

    def at(self, t):
        t = np.asarray(t, float)
        p = exponent(self.alpha)
        at = np.abs(t)
        r = (self.rate * at) ** p
        rd = p * self.rate ** p * at ** (p - 1)
        ang = np.where(t > 0, self.psi_plus, self.psi_minus)
        e = np.exp(1j * ang)
        return r * e, np.sign(t) * rd * e

    def action(self, T):
        """Closed-form action over ``[0, T]``: ``2 M T^(1-p a) / (a (rate)^(p a) (1 - p a))``."""
        pa = exponent(self.alpha) * self.alpha
        return 2 * self.M / (self.alpha * self.rate ** pa) * T ** (1 - pa) / (1 - pa)


def parabolic_arc(arc, t):
    """Position and velocity of a :class:`ParabolicArc` or :class:`KeplerParabola`."""
    return arc.at(t)


def two_body_energy(q, qd, m, alpha):
    m = as_masses(m)
    kin = 0.5 * np.sum(m * np.abs(qd) ** 2, axis=-1)
    r = np.abs(q[..., 0] - q[..., 1])
    return kin - m[0] * m[1] / (alpha * r ** alpha)


def two_body_eom_residual(arc: ParabolicArc, t):
    """Relative residual of ``m q'' = grad U`` along the arc, with the exact second derivative."""
    t = np.atleast_1d(np.asarray(t, float))
    m, a = arc.config.masses, arc.alpha
    p = exponent(a)
    q, _ = arc.at(t)
    acc = (p * (p - 1) * arc.kappa ** p * t ** (p - 2))[:, None] * arc.config.s
    d = q[:, 0] - q[:, 1]
    f = m[0] * m[1] * d * np.abs(d) ** (-a - 2)
    force = np.stack([-f, f], axis=1)
    return np.max(np.abs(m * acc - force), axis=1) / np.max(np.abs(force), axis=1)


# --- plateau/ramp deformation --------------------------------------------------

@dataclass
class DeformationReport:
    epsilon: float
    A1: float
    A2: float
    A3: float
    total: float
    A3_closed_form: float
    quadrature_error: float
    plateau: float

    def to_dict(self):
        return asdict(self)


def plateau_length(eps, alpha):
    """End of the plateau of ``f``: the time where ``t^p / eps`` reaches one."""
    return eps ** ((2 + alpha) / 2)


def _singular_quad(func, lo, hi, power, **kw):
    """Integrate ``func`` on ``[lo, hi]`` with an integrable ``(t - lo)^(-power)`` endpoint.

    The substitution ``t = lo + L v^beta``, ``beta = 1/(1 - power)``, removes the
    singularity.
    """
    L = hi - lo
    beta = 1.0 / (1.0 - power)

    def g(v):
        return func(lo + L * v ** beta) * L * beta * v ** (beta - 1)

    return quad(g, 0.0, 1.0, **kw)


def deform_split(sbar: BinaryCentralConfig, sigma: BinaryCentralConfig, eps, T, alpha,
                 epsrel=1e-12) -> DeformationReport:
    """Split of the action change of ``q + eps f(t) sigma`` against the parabolic arc.

    ``f`` equals one on ``[0, L]``, drops linearly to zero over ``[L, L + eps]``
    and vanishes afterwards, with ``L = eps^((2+alpha)/2)``.
    """
    if (sbar.m2, sbar.m3) != (sigma.m2, sigma.m3):
        raise ValueError("sbar and sigma must use the same masses")
    L = plateau_length(eps, alpha)
    if L + eps > T:
        raise ValueError("deformation window exceeds [0, T]")
    arc = ParabolicArc(sbar, alpha)
    m = sbar.masses
    p = exponent(alpha)
    kp = arc.kappa ** p
    s_rel = sbar.s[1] - sbar.s[0]
    g_rel = sigma.s[1] - sigma.s[0]
    a2 = abs(s_rel) ** 2
    c = (np.conj(s_rel) * g_rel).real
    g2 = abs(g_rel) ** 2
    pref = m[0] * m[1] / alpha

    def f(t):
        return 1.0 if t <= L else max(0.0, 1.0 + (L - t) / eps)

    def du(t):
        # |q + e f sigma|^2 = |q|^2 + 2 e f kp t^p c + e^2 f^2 |sigma|^2, each term >= 0 when c >= 0
        r2 = kp ** 2 * t ** (2 * p) * a2
        ef = eps * f(t)
        r2e = r2 + 2 * ef * kp * t ** p * c + ef ** 2 * g2
        return pref * (r2e ** (-alpha / 2) - r2 ** (-alpha / 2))

    A1, e1 = _singular_quad(du, 0.0, L, p * alpha, epsabs=0.0, epsrel=epsrel, limit=200)
    A2, e2 = quad(du, L, L + eps, epsabs=0.0, epsrel=epsrel, limit=200)

    sg, sb = sigma.s, sbar.s

    def dk(t):
        qd = p * kp * t ** (p - 1) * sb
        return 0.5 * np.sum(m * (np.abs(qd - sg) ** 2 - np.abs(qd) ** 2))

    A3, e3 = quad(dk, L, L + eps, epsabs=0.0, epsrel=epsrel, limit=200)
    closed = eps / 2 * _inner(sg, sg, m) - kp * _inner(sg, sb, m) * ((L + eps) ** p - L ** p)
    return DeformationReport(float(eps), float(A1), float(A2), float(A3), float(A1 + A2 + A3),
                             float(closed), float(e1 + e2 + e3), float(L))


def eps_ladder(lo=1e-6, hi=1e-3, per_decade=8):
    n = int(round(np.log10(hi / lo) * per_decade))
    return np.logspace(np.log10(lo), np.log10(hi), n + 1)


@dataclass
class DeformationSweep:
    reports: list
    A1_exponent: float
    fit_range: tuple

    def rows(self):
        return [(r.epsilon, r.A1, r.A2, r.A3, r.total) for r in self.reports]

    def to_dict(self):
        return {"A1_exponent": self.A1_exponent, "fit_range": list(self.fit_range),
                "reports": [r.to_dict() for r in self.reports]}

    def save_csv(self, fname):
        with open(fname, "w", newline="") as fh:
            fh.write(f"# {CSV_VERSION}\n")
            w = csv.writer(fh)
            w.writerow(["eps", "A1", "A2", "A3", "total"])
            for row in self.rows():
                w.writerow([repr(float(v)) for v in row])

    def save_json(self, fname):
        with open(fname, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)


def deform_sweep(sbar, sigma, alpha, T=1.0, eps=None, drop_decades=1.0) -> DeformationSweep:
    """Evaluate :func:`deform_split` on a geometric ladder and fit the A1 exponent.

    The fit discards the largest ``drop_decades`` of the ladder.
    """
    eps = eps_ladder() if eps is None else np.asarray(eps, float)
    reports = [deform_split(sbar, sigma, e, T, alpha) for e in eps]
    cut = eps.max() / 10 ** drop_decades
    sel = eps <= cut * (1 + 1e-12)
    x = np.log(eps[sel])
    y = np.log(np.abs([r.A1 for r, s in zip(reports, sel) if s]))
    slope = float(np.polyfit(x, y, 1)[0])
    return DeformationSweep(reports, slope, (float(eps[sel].min()), float(eps[sel].max())))


# --- blow-up -------------------------------------------------------------------------

def blow_up(path: DiscretePath, lam, alpha) -> DiscretePath:
    """``x^lam(t) = lam^(-p) x(lam t)`` on the grid ``times / lam``."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    p = exponent(alpha)
    return DiscretePath(np.asarray(path.times) / lam, np.asarray(path.nodes) * lam ** (-p))


def blow_up_factor(lam, alpha):
    """``A(x) = factor * A(x^lam)``."""
    return lam ** ((2 - alpha) / (2 + alpha))


# --- polar asymptotics -------------------------------------------------------------

class NoCollisionError(ValueError):
    pass


def relative_angular_momentum(z, v, m, pair=(1, 2)):
    """Angular momentum of the ``pair`` cluster about its own center of mass."""
    mm = as_masses(m)
    idx = list(pair)
    zk, vk, mk = np.asarray(z)[..., idx], np.asarray(v)[..., idx], mm[idx]
    c = (zk @ mk) / mk.sum()
    cd = (vk @ mk) / mk.sum()
    q, qd = zk - c[..., None], vk - cd[..., None]
    return np.sum(mk * (np.conj(q) * qd).imag, axis=-1)


@dataclass
class PolarLimits:
    theta_plus: float
    theta_dot_exponent: float
    J_K: np.ndarray = field(repr=False)
    theta_dot: np.ndarray = field(repr=False)
    theta_spread: float = 0.0


def polar_limits(times, z, v, m, pair=(1, 2), window=None, collapse_ratio=1e-2, j_rtol=1e-9):
    """Limit angle of body ``pair[1]`` about the cluster center and decay of its rate.

    ``theta_dot = J_K / I_K`` for a two-body cluster. The decay exponent is
    fitted on ``window`` by log-log least squares of ``|theta_dot|``. Samples
    with ``|J_K| <= j_rtol * sum m |q| |q'|`` are treated as numerically zero
    (integration error of a tiny cluster next to a distant body) and left
    out; when none is left the rate is zero and ``inf`` is reported.
    """
    times = np.asarray(times, float)
    mm = as_masses(m)
    idx = list(pair)
    zk, mk = np.asarray(z)[:, idx], mm[idx]
    c = (zk @ mk) / mk.sum()
    q = zk - c[:, None]
    I = np.sum(mk * np.abs(q) ** 2, axis=1)
    i0 = int(np.argmin(times))
    if not I[i0] <= collapse_ratio * I.max():
        raise NoCollisionError("cluster does not collapse toward the earliest sample")
    J = relative_angular_momentum(z, v, m, pair)
    th_dot = J / I
    theta = np.unwrap(np.angle(q[:, 1]))
    sel = np.ones_like(times, bool) if window is None else \
        (times >= window[0]) & (times <= window[1])
    qd = np.asarray(v)[:, idx] - ((np.asarray(v)[:, idx] @ mk) / mk.sum())[:, None]
    noise = j_rtol * np.sum(mk * np.abs(q) * np.abs(qd), axis=1)
    ok = sel & (np.abs(J) > noise)
    if ok.sum() < 2:
        expo = float("inf")
    else:
        expo = float(np.polyfit(np.log(times[ok]), np.log(np.abs(th_dot[ok])), 1)[0])
    spread = float(np.max(np.abs(theta[sel] - theta[i0])))
    return PolarLimits(float(theta[i0]), expo, J, th_dot, spread)


def collision_trajectory(m, alpha, theta_plus=0.0, third=1.0 + 1.0j, t0=1e-9, t1=1e-2,
                         n_samples=200):
    """Three-body trajectory leaving a binary collision of bodies 2 and 3.

    The pair starts on the exact parabolic arc at ``t0`` about the origin,
    body 1 starts at rest at ``third``; the whole state is then shifted to
    the center of mass and integrated to ``t1``. Returns ``(t, z, v)``
    sampled geometrically.
    """
    mm = as_masses(m)
    arc = ParabolicArc(BinaryCentralConfig(theta_plus, mm[1], mm[2]), alpha)
    q, qd = arc.at(t0)
    z0 = np.array([third, q[0], q[1]], complex)
    v0 = np.array([0.0, qd[0], qd[1]], complex)
    z0 -= (mm @ z0) / mm.sum()
    v0 -= (mm @ v0) / mm.sum()
    t_eval = np.geomspace(t0, t1, n_samples)
    t, z, v, _ = propagate(z0, v0, mm, alpha, (t0, t1), t_eval=t_eval, close_rtol=1e-14)
    return t, z, v


# --- Kepler-type arcs --------------------------------------------------------------

class AngleRangeError(ValueError):
    pass


@dataclass
class KeplerArc:
    psi: float
    psi_plus: float
    M: float
    alpha: float
    T: float
    r0: float
    u0: float
    action: float
    parabolic_action: float
    gap: float
    discrete_action: float
    endpoint_defect: float
    status: str
    times: np.ndarray = field(repr=False)
    positions: np.ndarray = field(repr=False)
    integrated_action: float = float("nan")

    def to_dict(self):
        d = asdict(self)
        d.pop("times"), d.pop("positions")
        return d


class KeplerProblem:
    """Discrete Kepler action with ``gamma(T)`` fixed and ``gamma(0)`` on a ray.

    Parameters: ``log |gamma(0)|`` followed by real and imaginary parts of
    the interior nodes.
    """

    def __init__(self, M, alpha, psi, end, times):
        self.M, self.alpha, self.psi = float(M), float(alpha), float(psi)
        self.end = complex(end)
        self.times = np.asarray(times, float)
        self.ray = np.exp(1j * self.psi)

    def decode(self, vec):
        z = np.empty(len(self.times), complex)
        z[0] = np.exp(vec[0]) * self.ray
        z[-1] = self.end
        z[1:-1] = vec[1::2] + 1j * vec[2::2]
        return z

    def encode(self, z):
        out = np.empty(1 + 2 * (len(z) - 2))
        out[0] = np.log(abs(z[0]))
        out[1::2], out[2::2] = z[1:-1].real, z[1:-1].imag
        return out

    def terms(self, z):
        h = np.diff(self.times)
        a, M = self.alpha, self.M
        dz = np.diff(z)
        value = 0.5 * np.sum(np.abs(dz) ** 2 / h)
        grad = np.zeros_like(z)
        grad[:-1] -= dz / h
        grad[1:] += dz / h
        rmin = np.inf
        for s, w in zip(GAUSS_S, GAUSS_W):
            pts = (1 - s) * z[:-1] + s * z[1:]
            r = np.abs(pts)
            rmin = min(rmin, r.min())
            value += np.sum(w * h * M / (a * r ** a))
            g = -w * h * M * pts * r ** (-a - 2)
            grad[:-1] += (1 - s) * g
            grad[1:] += s * g
        return value, grad, rmin

    def evaluate(self, vec):
        z = self.decode(vec)
        value, grad, rmin = self.terms(z)
        out = np.empty_like(vec)
        out[0] = (np.conj(grad[0]) * z[0]).real
        out[1::2], out[2::2] = grad[1:-1].real, grad[1:-1].imag
        scale = abs(self.end)
        return ActionEvaluation(value, out, rmin, 0.0, rmin / scale)

    def preconditioner(self, vec):
        from scipy.linalg import solve_banded

        h = np.diff(self.times)
        n_int = len(self.times) - 2
        r0 = np.exp(vec[0])
        ab = np.zeros((3, n_int))
        ab[0, 1:] = -1.0 / h[1:-1]
        ab[1] = 1.0 / h[:-1] + 1.0 / h[1:]
        ab[2, :-1] = -1.0 / h[1:-1]
        d0 = r0 ** 2 / h[0]

        def apply(g):
            out = np.empty_like(g)
            out[0] = g[0] / d0
            rhs = np.stack([g[1::2], g[2::2]], axis=1)
            sol = solve_banded((1, 1), ab, rhs)
            out[1::2], out[2::2] = sol[:, 0], sol[:, 1]
            return out

        return apply


def _kepler_rhs(M, alpha):
    def f(t, y):
        z = y[0] + 1j * y[1]
        v = y[2] + 1j * y[3]
        r = abs(z)
        acc = -M * z * r ** (-alpha - 2)
        lag = 0.5 * abs(v) ** 2 + M / (alpha * r ** alpha)
        return [v.real, v.imag, acc.real, acc.imag, lag]
    return f


def _kepler_shoot(params, psi, M, alpha, T, t_eval=None, close=1e-8):
    r0, u0 = params
    e = np.exp(1j * psi)
    z0, v0 = r0 * e, 1j * u0 * e

    def hit(t, y):
        return np.hypot(y[0], y[1]) - close * r0
    hit.terminal = True

    sol = solve_ivp(_kepler_rhs(M, alpha), (0.0, T), [z0.real, z0.imag, v0.real, v0.imag, 0.0],
                    method="DOP853", rtol=1e-13, atol=1e-15 * max(r0, 1.0), t_eval=t_eval,
                    events=hit)
    if sol.status != 0:
        raise RuntimeError(sol.message if sol.status < 0 else "close approach to the center")
    return sol


def _radial_quadratures(r0, J, M, alpha, R, epsrel=1e-13):
    """Time, swept angle and potential integral from the apsis ``r0`` to radius ``R``.

    Motion with angular momentum ``J`` and an apsis at ``r0`` obeys
    ``r'^2 = f(r) = 2 M/alpha (r^-alpha - r0^-alpha) - J^2 (r^-2 - r0^-2)``.
    The substitution ``r = r0 + (R - r0) w^2`` removes the turning-point
    singularity; differences are formed stably near ``r0``.
    """
    L = R - r0

    def parts(w):
        x = L * w * w                      # r - r0
        r = r0 + x
        d_alpha = r0 ** -alpha * np.expm1(-alpha * np.log1p(x / r0))
        d_two = -x * (2 * r0 + x) / (r * r * r0 * r0)
        f = 2 * M / alpha * d_alpha - J * J * d_two
        jac = 2 * abs(L) * w / np.sqrt(f)
        return r, jac

    kw = dict(epsabs=0.0, epsrel=epsrel, limit=200)
    t_r = quad(lambda w: parts(w)[1], 0.0, 1.0, **kw)[0]
    ang = quad(lambda w: J / parts(w)[0] ** 2 * parts(w)[1], 0.0, 1.0, **kw)[0]
    pot = quad(lambda w: M / (alpha * parts(w)[0] ** alpha) * parts(w)[1], 0.0, 1.0, **kw)[0]
    return t_r, ang, pot


def _apsis_guess(z, times, M, alpha):
    """Start radius and tangential speed from the energy and angular momentum
    of the middle half of a discrete arc (the start is an apsis)."""
    from scipy.optimize import brentq

    n = len(z) - 1
    k = np.arange(n // 4, 3 * n // 4)
    v = (z[k + 1] - z[k]) / (times[k + 1] - times[k])
    zm = 0.5 * (z[k + 1] + z[k])
    E = np.median(0.5 * np.abs(v) ** 2 - M / (alpha * np.abs(zm) ** alpha))
    J = np.median((np.conj(zm) * v).imag)

    def g(r):
        return 0.5 * J ** 2 / r ** 2 - M / (alpha * r ** alpha) - E

    r_disc = abs(z[0])
    grid = np.geomspace(1e-6 * r_disc, 1e3 * r_disc, 400)
    vals = g(grid)
    roots = [brentq(g, a, b) for a, b, fa, fb in zip(grid, grid[1:], vals, vals[1:])
             if fa * fb < 0]
    if not roots:
        return r_disc, J / r_disc
    r0 = min(roots, key=lambda r: abs(np.log(r / r_disc)))
    return r0, J / r0


def kepler_deform(M, alpha, psi, psi_plus, T=1.0, n=256, cfg=SolveConfig(grad_tol=1e-9),
                  max_newton=20) -> KeplerArc:
    """Minimizing Kepler arc from the ray of angle ``psi`` to the parabolic endpoint.

    The endpoint is ``gamma(T)`` of the collision-ejection solution leaving at
    ``psi_plus``. A discrete minimization on a graded mesh locates the arc.
    The natural boundary condition on the ray makes the start an apsis, so
    the polish shoots on ``(|gamma(0)|, angular momentum)``: travel time and
    swept angle to the endpoint radius come from radial quadratures, which
    stay accurate when the arc starts close to the center. The action is
    evaluated the same way, and the equation of motion is then integrated
    from the solved start as an independent check (``endpoint_defect``,
    ``integrated_action``).
    """
    delta = psi - psi_plus
    if abs(delta) > np.pi or (alpha == 1.0 and abs(delta) >= np.pi):
        raise AngleRangeError("|psi - psi_plus| must be <= pi (< pi for alpha = 1)")
    par = KeplerParabola(M, alpha, psi_plus, psi_plus)
    end, _ = par.at(T)
    R = abs(end)
    times = graded_times(n, T, 2.0)
    prob = KeplerProblem(M, alpha, psi, end, times)

    s = times / T
    ang = psi + (psi_plus - psi) * s
    rad = R * (1.0 + 0.5 * (1 - s))
    z = rad * np.exp(1j * ang)
    z[-1] = end
    res = lbfgs(prob.evaluate, prob.encode(z), cfg, precondition=prob.preconditioner(prob.encode(z)))
    zd = prob.decode(res.params)

    r0, u0 = _apsis_guess(zd, times, M, alpha)

    sign = 1.0 if delta <= 0 else -1.0   # angular momentum sign: psi -> psi_plus
    turn = abs(delta)

    def resid(q):
        rr, jj = np.exp(q[0]), np.exp(q[1])
        with np.errstate(invalid="ignore"):
            t_r, ang, _ = _radial_quadratures(rr, jj, M, alpha, R)
        out = np.array([t_r / T - 1.0, ang - turn])
        return out if np.all(np.isfinite(out)) else np.full(2, 1e3)

    if turn == 0.0:
        from scipy.optimize import brentq

        def g(lr):
            return _radial_quadratures(np.exp(lr), 0.0, M, alpha, R)[0] - T
        lo = np.log(R) + 1e-12
        hi = lo + 1.0
        while g(hi) < 0:
            hi += 1.0
        r0, J = np.exp(brentq(g, lo, hi, xtol=1e-15, rtol=1e-15)), 0.0
    else:
        fit = root(resid, [np.log(r0), np.log(max(abs(u0 * r0), 1e-12))], method="hybr",
                   options={"xtol": 1e-14, "maxfev": 50 * max_newton})
        r0, J = np.exp(fit.x[0]), np.exp(fit.x[1])
    t_r, ang, pot = _radial_quadratures(r0, J, M, alpha, R)
    E = 0.5 * J ** 2 / r0 ** 2 - M / (alpha * r0 ** alpha)
    A = float(E * T + 2 * pot)
    p = np.array([r0, sign * J / r0])

    # independent check: integrate the equation of motion from the solved start
    sol = _kepler_shoot(p, psi, M, alpha, T, t_eval=times)
    zT = sol.y[0, -1] + 1j * sol.y[1, -1]
    defect = abs(zT - end) / R
    A_bar = par.action(T)
    return KeplerArc(float(psi), float(psi_plus), float(M), float(alpha), float(T),
                     float(p[0]), float(p[1]), A, float(A_bar), A - A_bar, float(res.action),
                     float(defect), res.status, sol.t, sol.y[0] + 1j * sol.y[1],
                     float(sol.y[4, -1]))


def kepler_angle_sweep(M=1.0, alpha=1.0, T=1.0, fractions=(0.5, 0.7, 0.9, 0.99), psi_plus=0.0,
                       n=256):
    """Action gaps for ``psi - psi_plus = fraction * pi``."""
    return [kepler_deform(M, alpha, psi_plus + f * np.pi, psi_plus, T, n) for f in fractions]


# --- two-body / Kepler reduction -----------------------------------------------------

def two_body_reduction_check(sbar: BinaryCentralConfig, alpha, T=1.0, epsrel=1e-13):
    """Relative residual of ``A_K(q, T) = (m0 m3 / m2) A_b(q3, T)``.

    Both sides are integrated independently by adaptive quadrature; the
    right side uses the Kepler mass ``M = m2 (m2/m0)^(1+alpha)``.
    """
    m2, m3 = sbar.m2, sbar.m3
    m0 = m2 + m3
    arc = ParabolicArc(sbar, alpha)
    M = kepler_mass(m2, m3, alpha)
    pa = exponent(alpha) * alpha

    def lhs(t):
        q, qd = arc.at(t)
        return (0.5 * (m2 * abs(qd[0]) ** 2 + m3 * abs(qd[1]) ** 2)
                + m2 * m3 / (alpha * abs(q[0] - q[1]) ** alpha))

    def rhs(t):
        q, qd = arc.at(t)
        return 0.5 * abs(qd[1]) ** 2 + M / (alpha * abs(q[1]) ** alpha)

    kw = dict(epsabs=0.0, epsrel=epsrel, limit=200)
    A_k, _ = _singular_quad(lhs, 0.0, T, pa, **kw)
    A_b, _ = _singular_quad(rhs, 0.0, T, pa, **kw)
    right = m0 * m3 / m2 * A_b
    return abs(A_k - right) / abs(A_k), A_k, right
