"""Command-line front end.

Every option can come from a flat JSON config file (``--config``) or from a
flag; flags win over the file, and ``SHAPE8_OUTPUT_DIR`` wins over the
file's output directory (but not over ``--output-dir``).

Exit codes: 0 success, 1 error (bad config, missing file, failed run),
2 verification failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

TRAJECTORY_CSV = "shape8-trajectory-csv v1"
SHAPE_CSV = "shape8-shape-csv v1"
KEPLER_CSV = "shape8-kepler-csv v1"
OUTPUT_ENV = "SHAPE8_OUTPUT_DIR"

COMMANDS = ("find-orbit", "schubart", "condition-test", "deform-check", "kepler-arc", "verify")
DEFAULT_ALPHA = {"find-orbit": 1.5, "schubart": 1.0, "condition-test": 1.0,
                 "deform-check": 1.5, "kepler-arc": 1.0, "verify": 1.5}


class ConfigError(ValueError):
    pass


def _floats(value) -> list:
    if isinstance(value, str):
        value = [v for v in value.replace(" ", "").split(",") if v]
    if isinstance(value, (int, float)):
        value = [value]
    try:
        return [float(v) for v in value]
    except (TypeError, ValueError):
        raise ConfigError(f"expected a list of numbers, got {value!r}") from None


@dataclass
class RunConfig:
    command: str = "find-orbit"
    alpha: float | None = None
    m1: float = 1.0
    m2: float = 1.0
    m3: float = 1.0
    T0: float = 1.0
    n: int = 256
    grad_tol: float = 1e-8
    max_iters: int = 20000
    memory: int = 10
    seed: int = 0
    output_dir: str = "shape8-out"
    # find-orbit / verify
    starts: int = 8
    polish: bool = True
    orbit: str | None = None
    geometric_tol: float = 1e-6
    conservation_tol: float = 1e-8
    # schubart / condition-test
    levels: list = field(default_factory=list)
    power: float | None = None
    fit_lo: float = 1e-6
    fit_hi: float = 1e-3
    m3_list: list = field(default_factory=list)
    # deform-check
    theta: float = 0.0
    sigma_theta: float | None = None
    eps_lo: float = 1e-6
    eps_hi: float = 1e-3
    per_decade: int = 8
    T: float = 1.0
    # kepler-arc
    M: float = 1.0
    psi_plus: float = 0.0
    fractions: list = field(default_factory=lambda: [0.5, 0.7, 0.9, 0.99])

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.alpha is None:
            self.alpha = DEFAULT_ALPHA[self.command]
        if self.power is None:
            self.power = 3.5 if self.command == "condition-test" else 3.0
        if not self.levels:
            self.levels = [128, 256, 512] if self.command == "condition-test" else [64, 128, 256]
        self.levels = [int(v) for v in _floats(self.levels)]
        self.m3_list = _floats(self.m3_list) if self.m3_list else [self.m3]
        self.fractions = _floats(self.fractions)
        self.validate()

    def validate(self):
        try:
            for name in ("alpha", "m1", "m2", "m3", "T0", "grad_tol", "power", "fit_lo",
                         "fit_hi", "theta", "eps_lo", "eps_hi", "T", "M", "psi_plus",
                         "geometric_tol", "conservation_tol"):
                setattr(self, name, float(getattr(self, name)))
            for name in ("n", "max_iters", "memory", "seed", "starts", "per_decade"):
                value = getattr(self, name)
                if float(value) != int(value):
                    raise ConfigError(f"{name} must be an integer")
                setattr(self, name, int(value))
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        if not 1.0 <= self.alpha < 2.0:
            raise ConfigError(f"alpha must lie in [1, 2), got {self.alpha}")
        if min(self.m1, self.m2, self.m3, *self.m3_list) <= 0:
            raise ConfigError("masses must be positive")
        if self.n < 8:
            raise ConfigError(f"grid size n must be >= 8, got {self.n}")
        if self.command in ("find-orbit", "schubart", "condition-test") and self.m1 != self.m2:
            raise ConfigError("this command needs m1 == m2")
        if self.command == "condition-test" and self.alpha != 1.0:
            raise ConfigError("condition-test runs at alpha = 1 only")
        if self.command == "verify" and not self.orbit:
            raise ConfigError("verify needs --orbit")
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])) or min(self.levels) < 8:
            raise ConfigError("levels must be strictly increasing and >= 8")
        positive = ("T0", "grad_tol", "power", "T", "M", "eps_lo", "starts", "per_decade",
                    "geometric_tol", "conservation_tol")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if not (0 < self.eps_lo < self.eps_hi and 0 < self.fit_lo < self.fit_hi):
            raise ConfigError("ranges must satisfy 0 < lo < hi")

    @property
    def masses(self) -> np.ndarray:
        return np.array([self.m1, self.m2, self.m3])

    def solve_config(self):
        from .minimize import SolveConfig

        return SolveConfig(max_iters=self.max_iters, grad_tol=self.grad_tol,
                           memory=self.memory, seed=self.seed)


def load_config_file(path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a flat JSON object")
    known = {f.name for f in fields(RunConfig)}
    data = {k.replace("-", "_"): v for k, v in data.items()}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return data


def build_config(command, flags: dict, env=None) -> RunConfig:
    """Merge defaults, config file, environment and flags (in that order)."""
    env = os.environ if env is None else env
    flags = dict(flags)
    opts = load_config_file(flags.pop("config")) if flags.get("config") else {}
    flags.pop("config", None)
    if env.get(OUTPUT_ENV):
        opts["output_dir"] = env[OUTPUT_ENV]
    opts.update(flags)
    opts["command"] = command
    return RunConfig(**opts)


# --- output helpers ------------------------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def write_json(path, data):
    with open(path, "w") as fh:
        json.dump(_jsonable(data), fh, indent=1, sort_keys=True)
        fh.write("\n")


def write_csv(path, version, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(f"# {version}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) for v in row])


def write_trajectory_csv(path, orbit):
    from .orbit import shape_curve

    w = shape_curve(orbit)
    x = orbit.positions.reshape(len(orbit.times), 6)
    header = ["t", "x1re", "x1im", "x2re", "x2im", "x3re", "x3im", "w1", "w2", "w3"]
    write_csv(path, TRAJECTORY_CSV, header, np.column_stack([orbit.times, x, w]))


def write_shape_csv(path, orbit):
    from .orbit import shape_curve

    write_csv(path, SHAPE_CSV, ["t", "w1", "w2", "w3"],
              np.column_stack([orbit.times, shape_curve(orbit)]))


def read_csv(path):
    """Read a versioned CSV back as ``(version, header, array)``."""
    with open(path) as fh:
        version = fh.readline().lstrip("#").strip()
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return version, header, data


# --- plots -----------------------------------------------------------------------------

def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "shape8"
    return plt


def _save_svg(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})


def plot_orbit(orbit, path, title=""):
    plt = _pyplot()
    z = np.vstack([orbit.z, orbit.z[:1]])
    fig, ax = plt.subplots(figsize=(6, 4))
    for j, style in enumerate(("-", "--", ":")):
        ax.plot(z[:, j].real, z[:, j].imag, style, label=f"body {j + 1}")
    ax.plot(orbit.z[0].real, orbit.z[0].imag, "ko", ms=4)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(title or f"orbit, alpha = {orbit.alpha:g}, period = {orbit.period:.6g}")
    ax.legend(fontsize=8)
    _save_svg(fig, path)
    plt.close(fig)


def stereographic(u, center):
    """Stereographic chart of the shape sphere centered at the equatorial point ``center``.

    Projects from the antipode of ``center``: the equator (collinear shapes)
    becomes the horizontal axis, ``w3 > 0`` the upper half plane.
    """
    u = np.asarray(u, float)
    n = np.asarray(center, float) / np.linalg.norm(center)
    up = np.array([0.0, 0.0, 1.0])
    side = np.cross(up, n)
    d = 1.0 + u @ n
    return (u @ side) / d, (u @ up) / d


def plot_shape(orbit, path, alpha=None):
    """Shape curve on the sphere, viewed from the side of the ``E3`` point."""
    from .orbit import shape_curve
    from .shape import landmarks

    plt = _pyplot()
    w = shape_curve(orbit)
    w = np.vstack([w, w[:1]])
    u = w / np.linalg.norm(w, axis=1, keepdims=True)
    marks = landmarks(orbit.masses, orbit.alpha if alpha is None else alpha)
    center = marks["E3"].as_array()
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.axhline(0.0, color="0.6", lw=0.8)
    x, y = stereographic(u, center)
    ax.plot(x, y, "b-", lw=1.2, label="shape curve")
    for label, p in marks.items():
        pa = p.as_array()
        if 1.0 + pa @ center / np.linalg.norm(center) < 0.05:
            continue  # too close to the projection point
        px, py = stereographic(pa, center)
        marker = "s" if label.startswith("E") else ("^" if label.startswith("L") else "x")
        ax.plot(px, py, marker, color="k", ms=5)
        ax.annotate(label, (px, py), textcoords="offset points", xytext=(4, 4), fontsize=8)
    ax.set_aspect("equal")
    lim = max(1.5, 1.1 * np.max(np.abs(np.concatenate([x, y]))))
    ax.set_xlim(-lim, lim)
    ax.set_ylim(-lim, lim)
    ax.set_title("shape sphere (stereographic, centered at E3)")
    _save_svg(fig, path)
    plt.close(fig)


def plot_collinear(path_obj, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for j in range(3):
        ax.plot(path_obj.times, path_obj.nodes[:, j], label=f"x{j + 1}")
    ax.set_xlabel("t")
    ax.set_ylabel("position")
    ax.legend(fontsize=8)
    _save_svg(fig, path)
    plt.close(fig)


def plot_kepler(arcs, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 5))
    for arc in arcs:
        ax.plot(arc.positions.real, arc.positions.imag,
                label=f"psi - psi+ = {(arc.psi - arc.psi_plus) / np.pi:.2f} pi")
    ax.plot(0, 0, "k*")
    ax.set_aspect("equal")
    ax.legend(fontsize=8)
    _save_svg(fig, path)
    plt.close(fig)


def plot_sweep(sweep, path):
    plt = _pyplot()
    eps = np.array([r.epsilon for r in sweep.reports])
    fig, ax = plt.subplots(figsize=(6, 4))
    for name in ("A1", "A2", "A3", "total"):
        vals = np.abs([getattr(r, name) for r in sweep.reports])
        ax.loglog(eps, np.where(vals > 0, vals, np.nan), "o-", ms=3, label=f"|{name}|")
    ax.set_xlabel("epsilon")
    ax.legend(fontsize=8)
    _save_svg(fig, path)
    plt.close(fig)


# --- commands -----------------------------------------------------------------------

def _outdir(cfg) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _say(cfg, msg):
    if not getattr(cfg, "_quiet", False):
        print(msg)


def orbit_passes(report, thresholds) -> bool:
    return bool(report.passed and report.energy_drift <= thresholds.conservation
                and report.J_relative <= thresholds.conservation)


def _thresholds(cfg):
    from .orbit import Thresholds

    return Thresholds(geometric=cfg.geometric_tol, conservation=cfg.conservation_tol)


def cmd_find_orbit(cfg) -> int:
    from .minimize import multistart
    from .orbit import orbit_from_quarter, polish, verify
    from .path import OmegaProblem, save_path, uniform_times

    out = _outdir(cfg)
    times = uniform_times(cfg.n, cfg.T0)
    best, basins, results = multistart(cfg.masses, cfg.alpha, cfg.solve_config(),
                                       cfg.starts, times=times)
    problem = OmegaProblem(cfg.masses, cfg.alpha, times)
    quarter = problem.decode(best.params)
    save_path(out / "quarter.json", quarter, cfg.masses, cfg.alpha)
    orbit = orbit_from_quarter(quarter, cfg.masses, cfg.alpha)
    if cfg.polish:
        orbit = polish(orbit)
    thr = _thresholds(cfg)
    report = verify(orbit, thr)
    ok = orbit_passes(report, thr)
    orbit.save(out / "orbit.json")
    write_trajectory_csv(out / "trajectory.csv", orbit)
    write_shape_csv(out / "shape.csv", orbit)
    write_json(out / "report.json", {
        "command": "find-orbit",
        "config": _config_dict(cfg),
        "minimizer": {"status": best.status, "action_quarter": best.action,
                      "grad_norm": best.grad_norm, "iterations": best.iterations,
                      "min_pair_distance": list(best.min_pair_distance),
                      "basins": basins,
                      "statuses": [r.status for r in results]},
        "verification": report.to_dict(),
        "passed": ok,
    })
    plot_orbit(orbit, out / "orbit.svg")
    plot_shape(orbit, out / "shape.svg")
    _say(cfg, f"action per quarter {best.action:.12g} ({best.status}); "
              f"syzygies {report.syzygy_sequence} -> {report.reduced_sequence}; "
              f"energy drift {report.energy_drift:.2e}; passed: {ok}")
    return 0 if ok else 2


def cmd_verify(cfg) -> int:
    from .orbit import FullOrbit, verify

    try:
        orbit = FullOrbit.load(cfg.orbit)
    except FileNotFoundError:
        raise ConfigError(f"orbit file not found: {cfg.orbit}") from None
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise ConfigError(f"not an orbit file: {cfg.orbit} ({exc})") from None
    thr = _thresholds(cfg)
    report = verify(orbit, thr)
    ok = orbit_passes(report, thr)
    out = _outdir(cfg)
    write_json(out / "verify.json", {"command": "verify", "orbit": str(cfg.orbit),
                                     "verification": report.to_dict(), "passed": ok})
    _say(cfg, f"conditions {report.thm_conditions}; syzygies {report.reduced_sequence}; "
              f"energy drift {report.energy_drift:.2e}; passed: {ok}")
    return 0 if ok else 2


def cmd_schubart(cfg) -> int:
    from .deformation import kappa
    from .schubart import build_schubart, minimize_collinear, sundman_fit

    out = _outdir(cfg)
    path = minimize_collinear(cfg.masses, cfg.alpha, cfg.T0, cfg.levels, cfg.solve_config(),
                              power=cfg.power)
    window = (cfg.fit_lo * cfg.T0, cfg.fit_hi * cfg.T0)
    k_est, e_est = sundman_fit(path, window=window)
    k_ref = kappa(cfg.m2, cfg.m3, cfg.alpha)
    orbit = build_schubart(path)
    orbit.save(out / "schubart_orbit.json")
    write_trajectory_csv(out / "schubart_trajectory.csv", orbit)
    write_json(out / "schubart.json", {
        "command": "schubart", "config": _config_dict(cfg),
        "action_quarter": path.action, "status": path.status, "checks": path.checks,
        "ladder": [{"n": n, "action": a, "status": s} for n, a, s in path.ladder],
        "sundman": {"kappa": k_est, "kappa_reference": k_ref,
                    "kappa_relative_error": abs(k_est - k_ref) / k_ref,
                    "exponent": e_est, "exponent_reference": 4 / (2 + cfg.alpha),
                    "window": list(window)},
    })
    plot_collinear(path, out / "schubart.svg")
    _say(cfg, f"collinear quarter action {path.action:.12g} ({path.status}); "
              f"kappa {k_est:.6g} (reference {k_ref:.6g}), exponent {e_est:.6g}")
    return 0


def cmd_condition_test(cfg) -> int:
    from .schubart import condition_test

    out = _outdir(cfg)
    solve = cfg.solve_config()
    reports = []
    for m3 in cfg.m3_list:
        rep = condition_test([cfg.m1, cfg.m2, m3], cfg.T0, cfg.levels, solve, cfg.power)
        reports.append(rep.to_dict())
        _say(cfg, rep.table())
        with open(out / f"condition_m3_{m3:g}.txt", "w") as fh:
            fh.write(rep.table() + "\n")
    write_json(out / "condition.json", {"command": "condition-test",
                                        "config": _config_dict(cfg), "reports": reports})
    return 0


def cmd_deform_check(cfg) -> int:
    from .deformation import BinaryCentralConfig, deform_sweep, eps_ladder

    out = _outdir(cfg)
    sbar = BinaryCentralConfig(cfg.theta, cfg.m2, cfg.m3)
    sigma = BinaryCentralConfig(cfg.theta if cfg.sigma_theta is None else cfg.sigma_theta,
                                cfg.m2, cfg.m3)
    eps = eps_ladder(cfg.eps_lo, cfg.eps_hi, cfg.per_decade)
    sweep = deform_sweep(sbar, sigma, cfg.alpha, cfg.T, eps)
    sweep.save_csv(out / "deformation.csv")
    summary = sweep.to_dict()
    summary.update({"command": "deform-check", "config": _config_dict(cfg),
                    "expected_A1_exponent": (2 - cfg.alpha) / 2,
                    "A2_nonpositive": all(r.A2 <= 0 for r in sweep.reports),
                    "A3_below_half_eps": all(r.A3 <= r.epsilon / 2 * (1 + 1e-9)
                                             for r in sweep.reports)})
    write_json(out / "deformation.json", summary)
    plot_sweep(sweep, out / "deformation.svg")
    _say(cfg, f"A1 log-log slope {sweep.A1_exponent:.6f} "
              f"(expected {(2 - cfg.alpha) / 2:.6f}) over {sweep.fit_range}")
    return 0


def cmd_kepler_arc(cfg) -> int:
    from .deformation import kepler_angle_sweep

    out = _outdir(cfg)
    arcs = kepler_angle_sweep(cfg.M, cfg.alpha, cfg.T, cfg.fractions, cfg.psi_plus)
    rows = [(f, a.psi, a.action, a.parabolic_action, a.gap, a.r0, a.endpoint_defect)
            for f, a in zip(cfg.fractions, arcs)]
    write_csv(out / "kepler.csv", KEPLER_CSV,
              ["fraction", "psi", "action", "parabolic_action", "gap", "r0", "endpoint_defect"],
              rows)
    write_json(out / "kepler.json", {"command": "kepler-arc", "config": _config_dict(cfg),
                                     "arcs": [a.to_dict() for a in arcs]})
    plot_kepler(arcs, out / "kepler.svg")
    for f, a in zip(cfg.fractions, arcs):
        _say(cfg, f"|psi - psi+| = {f:g} pi: gap {a.gap:.6e} ({a.status})")
    return 0


HANDLERS = {"find-orbit": cmd_find_orbit, "schubart": cmd_schubart,
            "condition-test": cmd_condition_test, "deform-check": cmd_deform_check,
            "kepler-arc": cmd_kepler_arc, "verify": cmd_verify}


def _config_dict(cfg) -> dict:
    d = asdict(cfg)
    d.pop("output_dir")   # keeps reports identical across output locations
    return d


def run(command, config: RunConfig) -> int:
    return HANDLERS[command](config)


# --- argument parsing ------------------------------------------------------------------

def _add_common(p):
    S = argparse.SUPPRESS
    p.add_argument("--config", default=S, help="flat JSON file with any of the options below")
    p.add_argument("--alpha", type=float, default=S, help="potential exponent, 1 <= alpha < 2")
    for name in ("m1", "m2", "m3"):
        p.add_argument(f"--{name}", type=float, default=S, help=f"mass {name[1]}")
    p.add_argument("--T0", type=float, default=S, help="quarter period")
    p.add_argument("--n", type=int, default=S, help="grid segments")
    p.add_argument("--grad-tol", type=float, default=S)
    p.add_argument("--max-iters", type=int, default=S)
    p.add_argument("--memory", type=int, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--output-dir", default=S, help=f"output directory (env {OUTPUT_ENV})")
    p.add_argument("--quiet", action="store_true", help="no console summary")


def make_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    parser = argparse.ArgumentParser(prog="shape8", description=(
        "Action-minimizing three-body orbits with homogeneous potentials."))
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("find-orbit", help="minimize, polish and verify the figure-eight orbit")
    _add_common(p)
    p.add_argument("--starts", type=int, default=S, help="number of multistart runs")
    p.add_argument("--no-polish", dest="polish", action="store_false", default=S)
    p.add_argument("--geometric-tol", type=float, default=S)
    p.add_argument("--conservation-tol", type=float, default=S)

    p = sub.add_parser("verify", help="re-verify a persisted orbit file")
    _add_common(p)
    p.add_argument("--orbit", default=S, help="orbit JSON written by find-orbit")
    p.add_argument("--geometric-tol", type=float, default=S)
    p.add_argument("--conservation-tol", type=float, default=S)

    p = sub.add_parser("schubart", help="collinear collision quarter and Sundman fit")
    _add_common(p)
    p.add_argument("--levels", default=S, help="comma-separated grid sizes")
    p.add_argument("--power", type=float, default=S, help="grading exponent of the grid")
    p.add_argument("--fit-lo", type=float, default=S, help="fit window start, units of T0")
    p.add_argument("--fit-hi", type=float, default=S, help="fit window end, units of T0")

    p = sub.add_parser("condition-test", help="collinear versus planar minimum at alpha = 1")
    _add_common(p)
    p.add_argument("--levels", default=S, help="comma-separated grid sizes")
    p.add_argument("--power", type=float, default=S, help="grading exponent of the grid")
    p.add_argument("--m3-list", default=S, help="comma-separated values of m3")

    p = sub.add_parser("deform-check", help="A1/A2/A3 sweep of the local deformation")
    _add_common(p)
    p.add_argument("--theta", type=float, default=S, help="angle of the collision ray")
    p.add_argument("--sigma-theta", type=float, default=S,
                   help="angle of the deformation direction (default: aligned)")
    p.add_argument("--eps-lo", type=float, default=S)
    p.add_argument("--eps-hi", type=float, default=S)
    p.add_argument("--per-decade", type=int, default=S)
    p.add_argument("--T", type=float, default=S, help="arc duration")

    p = sub.add_parser("kepler-arc", help="action gaps of Kepler arcs versus the parabola")
    _add_common(p)
    p.add_argument("--M", type=float, default=S, help="Kepler mass")
    p.add_argument("--T", type=float, default=S, help="arc duration")
    p.add_argument("--psi-plus", type=float, default=S, help="ejection angle")
    p.add_argument("--fractions", default=S, help="comma-separated |psi - psi+| / pi")
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    quiet = args.pop("quiet", False)
    try:
        cfg = build_config(command, args)
        cfg._quiet = quiet
        return run(command, cfg)
    except ConfigError as exc:
        print(f"shape8: invalid configuration: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - reported as a failed run
        print(f"shape8: {command} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
