"""Limited-memory quasi-Newton minimization of discrete actions."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .dynamics import CollisionError
from .path import OmegaParams, OmegaProblem, uniform_times
from .shape import project_array

log = logging.getLogger(__name__)

CONVERGED = "converged"
MAX_ITERS = "max_iters"
COLLISION_GUARD = "collision_guard"
STALLED = "stalled"


@dataclass(frozen=True)
class SolveConfig:
    max_iters: int = 20000
    grad_tol: float = 1e-8
    ls_shrink: float = 0.5
    ls_c1: float = 1e-4
    memory: int = 10
    seed: int = 0
    collision_rtol: float = 1e-10
    noise_rtol: float = 1e-13  # relative action noise tolerated by the line search
    precondition: bool = True

    def __post_init__(self):
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")
        if not 0 < self.ls_shrink < 1 or not 0 < self.ls_c1 < 1:
            raise ValueError("line-search constants must lie in (0, 1)")
        if self.memory < 1 or self.max_iters < 0:
            raise ValueError("memory must be >= 1 and max_iters >= 0")


@dataclass
class SolveResult:
    params: np.ndarray
    action: float
    grad_norm: float
    status: str
    min_pair_distance: tuple
    iterations: int
    history: list = field(default_factory=list, repr=False)

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED

    @property
    def omega(self) -> OmegaParams:
        return OmegaParams.from_vector(self.params)


def lbfgs(evaluate, x0, cfg: SolveConfig, precondition=None, callback=None):
    """Minimize with L-BFGS and Armijo backtracking.

    ``evaluate(x)`` returns an object with ``value``, ``gradient``,
    ``min_pair_distance``, ``min_pair_time`` and ``min_relative_distance``;
    it may raise :class:`CollisionError`. Trial points whose relative pair
    distance drops below ``cfg.collision_rtol`` are rejected.
    """
    x = np.array(x0, dtype=float)
    ev = evaluate(x)
    history = [(0, ev.value, np.max(np.abs(ev.gradient)), ev.min_pair_distance)]
    s_hist, y_hist = [], []
    status = MAX_ITERS
    it = 0
    apply_h0 = precondition if precondition is not None else (lambda g: g)

    def direction(g):
        q = g.copy()
        alphas = []
        for s, y in reversed(list(zip(s_hist, y_hist))):
            rho = 1.0 / (y @ s)
            a = rho * (s @ q)
            alphas.append((rho, a))
            q -= a * y
        if s_hist and precondition is None:
            s, y = s_hist[-1], y_hist[-1]
            q *= (s @ y) / (y @ y)
        r = apply_h0(q)
        for (s, y), (rho, a) in zip(zip(s_hist, y_hist), reversed(alphas)):
            b = rho * (y @ r)
            r += (a - b) * s
        return -r

    while True:
        gnorm = np.max(np.abs(ev.gradient))
        if gnorm <= cfg.grad_tol:
            status = CONVERGED
            break
        if it >= cfg.max_iters:
            status = MAX_ITERS
            break
        accepted = None
        guard_hit = False
        for attempt in range(2):
            d = direction(ev.gradient)
            slope = ev.gradient @ d
            if not slope < 0:
                s_hist.clear(), y_hist.clear()
                d = -apply_h0(ev.gradient)
                slope = ev.gradient @ d
            t = 1.0
            for _ in range(80):
                trial = x + t * d
                try:
                    new = evaluate(trial)
                    bad = new.min_relative_distance < cfg.collision_rtol
                except CollisionError:
                    bad = True
                if bad or not np.isfinite(new.value):
                    guard_hit = True
                    t *= cfg.ls_shrink
                    continue
                if new.value <= ev.value + cfg.ls_c1 * t * slope:
                    accepted = (trial, new, t * d)
                    break
                noise = cfg.noise_rtol * abs(ev.value)
                if (new.value <= ev.value + noise
                        and np.max(np.abs(new.gradient)) < gnorm):
                    accepted = (trial, new, t * d)
                    break
                t *= cfg.ls_shrink
            if accepted is not None:
                break
            s_hist.clear(), y_hist.clear()
        if accepted is None:
            status = COLLISION_GUARD if guard_hit else STALLED
            break
        trial, new, step = accepted
        y = new.gradient - ev.gradient
        if y @ step > 1e-300:
            s_hist.append(step)
            y_hist.append(y)
            if len(s_hist) > cfg.memory:
                s_hist.pop(0), y_hist.pop(0)
        x, ev = trial, new
        it += 1
        rec = (it, ev.value, np.max(np.abs(ev.gradient)), ev.min_pair_distance)
        history.append(rec)
        log.debug("iter %d action %.16g grad_norm %.3e min_dist %.6g", *rec)
        if callback is not None:
            callback(*rec)

    return SolveResult(x, ev.value, float(np.max(np.abs(ev.gradient))), status,
                       (ev.min_pair_distance, ev.min_pair_time), it, history)


def minimize_problem(problem, init, cfg: SolveConfig = SolveConfig(), callback=None):
    init = np.asarray(init, dtype=float)
    build = getattr(problem, "preconditioner", None) or problem.kinetic_preconditioner
    pre = build(init) if cfg.precondition else None
    return lbfgs(problem.evaluate, init, cfg, precondition=pre, callback=callback)


def minimize(init, m, alpha, cfg: SolveConfig = SolveConfig(), times=None, callback=None):
    """Minimize the discrete action over the quarter-period class.

    ``init`` is an :class:`OmegaParams` or its vector; the grid defaults to
    the uniform grid on ``[0, 1]`` matching its node count.
    """
    vec = init.to_vector() if isinstance(init, OmegaParams) else np.asarray(init, float)
    if times is None:
        times = uniform_times((len(vec) - 4) // 4 + 1)
    problem = OmegaProblem(m, alpha, times)
    return orient(problem, minimize_problem(problem, vec, cfg, callback))


def conjugate_params(vec) -> np.ndarray:
    """Chart coordinates of the complex-conjugated path (reflection in the real axis)."""
    p = OmegaParams.from_vector(vec)
    return OmegaParams(p.u, p.v, p.logc, -p.theta, np.conj(p.interior)).to_vector()


def orient(problem: OmegaProblem, result: SolveResult) -> SolveResult:
    """Reflect the path so that its shape curve lies on the ``w3 >= 0`` side."""
    path = problem.decode(result.params)
    w3 = project_array(path.z, problem.m)[:, 2]
    if np.trapezoid(w3, path.times) < 0:
        result = replace(result, params=conjugate_params(result.params))
    return result


def random_init(problem: OmegaProblem, rng) -> np.ndarray:
    lift = rng.uniform(0.1, 0.6)
    theta = rng.choice([-1.0, 1.0]) * rng.uniform(0.25, 0.75) * np.pi
    vec = problem.default_init(lift=lift, logc=rng.uniform(-0.3, 0.3), theta=theta)
    vec[:2] += rng.uniform(-0.3, 0.3, 2)
    vec[4:] *= 1 + 0.05 * rng.standard_normal(len(vec) - 4)
    return vec


def multistart(m, alpha, cfg: SolveConfig = SolveConfig(), n_starts=8, times=None,
               basin_rtol=1e-6):
    """Run ``n_starts`` minimizations and return ``(best, basins, results)``.

    Start 0 is the default initial path; the others are drawn from a
    generator seeded with ``cfg.seed``. ``basins`` groups converged results
    whose actions agree to ``basin_rtol``.
    """
    if n_starts < 1:
        raise ValueError("n_starts must be >= 1")
    problem = OmegaProblem(m, alpha, uniform_times(256) if times is None else times)
    rng = np.random.default_rng(cfg.seed)
    inits = [problem.default_init()]
    inits += [random_init(problem, rng) for _ in range(n_starts - 1)]
    results = [orient(problem, minimize_problem(problem, x0, cfg)) for x0 in inits]
    converged = [r for r in results if r.converged] or results
    best = min(converged, key=lambda r: (r.action, np.linalg.norm(r.params)))
    for r in converged:
        if abs(r.action - best.action) <= 1e-12 * abs(best.action):
            if np.linalg.norm(r.params) < np.linalg.norm(best.params):
                best = r
    basins = []
    for r in sorted(converged, key=lambda r: r.action):
        if basins and abs(r.action - basins[-1]["action"]) <= basin_rtol * abs(r.action):
            basins[-1]["count"] += 1
        else:
            basins.append({"action": r.action, "count": 1,
                           "min_pair_distance": r.min_pair_distance[0]})
    return best, basins, results


def continue_alpha(result: SolveResult, m, alpha0, alpha1, steps, cfg=SolveConfig(),
                   times=None):
    """Warm-started chain of minimizations on a uniform alpha grid.

    Returns ``(final_result, trace)`` where ``trace`` lists
    ``(alpha, action, min_pair_distance, status)`` per step. The chain stops
    early if a step ends in ``collision_guard``.
    """
    if not result.converged:
        raise ValueError("continuation needs a converged starting result")
    if times is None:
        times = uniform_times((len(result.params) - 4) // 4 + 1)
    trace = []
    if alpha0 == alpha1:
        return result, trace
    current = result
    for a in np.linspace(alpha0, alpha1, steps + 1)[1:]:
        problem = OmegaProblem(m, a, times)
        current = orient(problem, minimize_problem(problem, current.params, cfg))
        trace.append((float(a), current.action, current.min_pair_distance[0], current.status))
        if current.status == COLLISION_GUARD:
            break
    return current, trace
