"""Scenario parsing, experiment drivers, rate fitting, and persistence.

A scenario is a small YAML document naming the wave objects, the grid, the
evolution controls, the cutoff scale sigma and a seed.  Experiment kinds
reuse the computational modules and write deterministic artifacts: a JSON
summary (sorted keys, no timestamps), a resolved-config record with every
derived constant, and plain-text column files for plotting.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np
import yaml

from .errors import MkdvLabError, NonPositiveDistance
from .evolution import EvolutionControls, Trajectory, evolve, pde_residual
from .functionals import energy, mass, second_energy
from .grid import Field, Grid, integrate, make_field, make_grid, spectral_derivative
from .lyapunov import (
    calibrate_slack,
    coefficient_positivity,
    coercivity_check,
    monotonicity_report,
    select_parameters,
)
from .modulation import scalar_product_series, track_modulation
from .profiles import (
    Breather,
    OrderedConfiguration,
    Soliton,
    check_tails,
    order_and_validate,
    profile_sum,
    shape_pair,
)

RESIDUAL_TOL = 1e-7
DRIFT_TOL = 1e-6
ORTHO_TOL = 1e-10
RATE_R2_TOL = 0.9


@dataclass(frozen=True)
class Scenario:
    """Fully validated experiment description."""

    name: str
    cfg: OrderedConfiguration
    grid: Grid
    controls: EvolutionControls
    sigma: float
    seed: int
    output_dir: str


def _parse_object(entry: dict, index: int):
    kind = entry.get("kind")
    known = {
        "soliton": ("c", "kappa", "x0"),
        "breather": ("alpha", "beta", "x1", "x2"),
    }
    if kind not in known:
        raise ValueError(f"objects[{index}].kind must be 'soliton' or 'breather', got {kind!r}")
    extra = set(entry) - set(known[kind]) - {"kind"}
    if extra:
        raise ValueError(f"objects[{index}] has unknown fields {sorted(extra)}")
    try:
        if kind == "soliton":
            return Soliton(
                c=float(entry["c"]),
                kappa=int(entry.get("kappa", 1)),
                x0=float(entry.get("x0", 0.0)),
            )
        return Breather(
            alpha=float(entry["alpha"]),
            beta=float(entry["beta"]),
            x1=float(entry.get("x1", 0.0)),
            x2=float(entry.get("x2", 0.0)),
        )
    except KeyError as exc:
        raise ValueError(f"objects[{index}] missing required field {exc}") from exc


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a YAML scenario document."""
    doc = yaml.safe_load(text)
    if not isinstance(doc, dict):
        raise ValueError("scenario document must be a mapping")
    required = {"name", "objects", "grid", "evolution"}
    missing = required - set(doc)
    if missing:
        raise ValueError(f"scenario missing required fields {sorted(missing)}")
    objs = doc["objects"]
    if not isinstance(objs, list) or not objs:
        raise ValueError("objects must be a non-empty list")
    cfg = order_and_validate([_parse_object(o, i) for i, o in enumerate(objs)])
    gspec = doc["grid"]
    g = make_grid(float(gspec["half_length"]), int(gspec["n"]))
    espec = doc["evolution"]
    controls = EvolutionControls(
        dt=float(espec["dt"]),
        t_end=float(espec["t_end"]),
        dealias=bool(espec.get("dealias", True)),
        save_every=int(espec.get("save_every", 1)),
    )
    s = Scenario(
        name=str(doc["name"]),
        cfg=cfg,
        grid=g,
        controls=controls,
        sigma=float(doc.get("sigma", 0.01)),
        seed=int(doc.get("seed", 0)),
        output_dir=str(doc.get("output_dir", "out")),
    )
    check_tails(cfg, 0.0, g)
    return s


def load_scenario(path: str) -> Scenario:
    with open(path) as f:
        return parse_scenario(f.read())


def _object_record(o) -> dict:
    if isinstance(o, Soliton):
        return {"kind": "soliton", "c": o.c, "kappa": o.kappa, "x0": o.x0}
    return {"kind": "breather", "alpha": o.alpha, "beta": o.beta, "x1": o.x1, "x2": o.x2}


def resolved_config(s: Scenario) -> dict:
    """Every derived constant the experiment will consume, for reproducibility."""
    record = {
        "name": s.name,
        "objects": [_object_record(o) for o in s.cfg.objects],
        "velocities": list(s.cfg.velocities),
        "shape_pairs": [list(p) for p in s.cfg.shape_pairs()],
        "positive_v1": s.cfg.positive_v1,
        "positive_v2": s.cfg.positive_v2,
        "grid": {"half_length": s.grid.half_length, "n": s.grid.n},
        "evolution": {
            "dt": s.controls.dt,
            "t_end": s.controls.t_end,
            "dealias": s.controls.dealias,
            "save_every": s.controls.save_every,
        },
        "sigma": s.sigma,
        "seed": s.seed,
    }
    if s.cfg.positive_v2:
        p = select_parameters(s.cfg, s.sigma)
        varpi, C = calibrate_slack(s.cfg, p, s.grid)
        record.update(
            {
                "nu1": p.nu1,
                "nu": p.nu,
                "nu_prime": p.nu_prime,
                "nu2": p.nu2,
                "nu3": p.nu3,
                "speeds": list(p.fam.speeds),
                "sigma_effective": p.fam.sigma,
                "tau0": p.fam.tau0 if np.isfinite(p.fam.tau0) else None,
                "omega": p.default_omega(),
                "varpi_hat": varpi,
                "C_hat": C,
                "drop_budget": 1e-5,
            }
        )
    return record


@dataclass
class RateFit:
    """Least-squares exponential fit distance ~ C exp(-varpi t) on a window."""

    times: list[float]
    distances: list[float]
    varpi: float
    C: float
    fit_window: tuple[float, float]
    r_squared: float
    floor_limited: bool = False


def fit_exponential_rate(times, distances, window) -> RateFit:
    """Fit log(distance) linearly in t over [window[0], window[1]]."""
    times = np.asarray(times, dtype=float)
    distances = np.asarray(distances, dtype=float)
    ta, tb = float(window[0]), float(window[1])
    mask = (times >= ta) & (times <= tb)
    if mask.sum() < 2:
        raise ValueError("fit window must contain at least two samples")
    tw = times[mask]
    dw = distances[mask]
    if np.any(dw <= 0):
        raise NonPositiveDistance(
            f"nonpositive distance inside the fit window [{ta}, {tb}]"
        )
    logd = np.log(dw)
    slope, intercept = np.polyfit(tw, logd, 1)
    pred = slope * tw + intercept
    ss_res = float(np.sum((logd - pred) ** 2))
    ss_tot = float(np.sum((logd - np.mean(logd)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return RateFit(
        times=list(times),
        distances=list(distances),
        varpi=float(-slope),
        C=float(np.exp(intercept)),
        fit_window=(ta, tb),
        r_squared=float(r2),
        floor_limited=bool(np.max(dw) < 1e-12),
    )


def localized_bump(
    g: Grid, seed: int, amplitude: float = 1e-3, center: float = 0.0
) -> Field:
    """Seeded smooth localized perturbation (a Gaussian with jittered center/width)."""
    rng = np.random.default_rng(seed)
    x0 = center + rng.uniform(-2.0, 2.0)
    width = rng.uniform(1.5, 3.0)
    return make_field(g, amplitude * np.exp(-((g.x - x0) ** 2) / (2.0 * width**2)))


def _bump_center(cfg: OrderedConfiguration) -> float:
    """Midpoint of the largest gap between object centers at t=0.

    A bump overlapping an object permanently perturbs its shape parameters,
    which translation-only modulation cannot absorb; in a gap it disperses
    as pure radiation.
    """
    from .profiles import center

    cs = sorted(center(o, 0.0) for o in cfg.objects)
    if len(cs) == 1:
        return cs[0] + 25.0
    gaps = [(b - a, 0.5 * (a + b)) for a, b in zip(cs, cs[1:])]
    return max(gaps)[1]


@dataclass
class ExperimentReport:
    """Outcome of one run_experiment call."""

    kind: str
    scenario: str
    passed: bool
    summary: dict
    series: dict = field(default_factory=dict)  # name -> dict of equal-length columns


def _evolve_scenario(s: Scenario, u0: Field | None = None) -> Trajectory:
    if u0 is None:
        u0 = profile_sum(s.cfg, 0.0, s.grid)
    return evolve(u0, s.controls)


def _run_verify_exact(s: Scenario) -> ExperimentReport:
    residuals = {}
    for i, o in enumerate(s.cfg.objects):
        res = pde_residual(o, 0.0, s.grid)
        residuals[f"object_{i}_{type(o).__name__.lower()}"] = res
    worst = max(residuals.values())
    return ExperimentReport(
        kind="verify-exact",
        scenario=s.name,
        passed=worst < RESIDUAL_TOL,
        summary={"residuals": residuals, "worst": worst, "tolerance": RESIDUAL_TOL},
    )


def _run_conservation(s: Scenario) -> ExperimentReport:
    traj = _evolve_scenario(s)
    series = {"t": list(traj.times), "M": [], "E": [], "F": []}
    for u in traj.states:
        series["M"].append(mass(u))
        series["E"].append(energy(u))
        series["F"].append(second_energy(u))
    drifts = {}
    for name in ("M", "E", "F"):
        vals = np.asarray(series[name])
        scale = max(abs(vals[0]), 1e-30)
        drifts[name] = float(np.max(np.abs(vals - vals[0])) / scale)
    worst = max(drifts.values())
    return ExperimentReport(
        kind="conservation",
        scenario=s.name,
        passed=worst < DRIFT_TOL,
        summary={"drifts": drifts, "worst": worst, "tolerance": DRIFT_TOL},
        series={"conserved": series},
    )


def _run_monotonicity(s: Scenario, override: bool = False) -> ExperimentReport:
    p = select_parameters(s.cfg, s.sigma, override=override)
    varpi, C = calibrate_slack(s.cfg, p, s.grid)
    traj = _evolve_scenario(s)
    reports = {}
    series = {}
    worst = 0.0
    tracked_j = list(range(1, s.cfg.J)) or [1]
    for j in tracked_j:
        for which in ("Mj", "weakened_F"):
            rep = monotonicity_report(traj, j, p, which, varpi=varpi, C=C)
            key = f"j{j}_{which}"
            reports[key] = {
                "worst_drop": rep.worst_drop,
                "slack_bound": rep.slack_bound,
                "initial": rep.values[0],
                "final": rep.values[-1],
            }
            series[key] = {"t": rep.times, "value": rep.values}
            worst = max(worst, rep.worst_drop)
    coef = {
        f"j{j}": coefficient_positivity(p, j).all_hold for j in range(1, s.cfg.J)
    }
    return ExperimentReport(
        kind="monotonicity",
        scenario=s.name,
        passed=worst == 0.0 and all(coef.values() if coef else [True]),
        summary={
            "functionals": reports,
            "coefficient_positivity": coef,
            "varpi": varpi,
            "C": C,
            "worst_drop": worst,
        },
        series=series,
    )


def _run_modulate(s: Scenario) -> ExperimentReport:
    traj = _evolve_scenario(s)
    track = track_modulation(traj, s.cfg)
    max_res = max(float(np.max(np.abs(st.ortho_residuals))) for st in track.states)
    max_off = float(np.max(np.abs(track.offsets_matrix())))
    series = {
        "modulation": {
            "t": track.times,
            "w_h2": track.w_h2,
            **{
                f"offset_{k}": list(track.offsets_matrix()[:, k])
                for k in range(track.offsets_matrix().shape[1])
            },
        }
    }
    return ExperimentReport(
        kind="modulate",
        scenario=s.name,
        passed=max_res < ORTHO_TOL,
        summary={
            "max_ortho_residual": max_res,
            "max_offset": max_off,
            "max_w_h2": max(track.w_h2),
            "tolerance": ORTHO_TOL,
        },
        series=series,
    )


def _run_coercivity(s: Scenario) -> ExperimentReport:
    # the dense eigensolve only needs to resolve the profile, not the full run
    n_eig = min(s.grid.n, 512)
    results = {}
    ok = True
    for idx, o in enumerate(s.cfg.objects):
        single = order_and_validate([o])
        p1 = select_parameters(single, s.sigma, override=True)
        a, b = shape_pair(o)
        g = make_grid(max(20.0, 8.0 / b), n_eig)
        # re-center the profile so the dense grid can stay small
        if isinstance(o, Soliton):
            centered = Soliton(c=o.c, kappa=o.kappa, x0=0.0)
        else:
            centered = Breather(alpha=o.alpha, beta=o.beta, x1=0.0, x2=0.0)
        res = coercivity_check(centered, p1, 1, g)
        results[f"object_{idx}"] = {
            "mu": res.mu,
            "lambda_min_raw": res.lambda_min_raw,
            "n": res.n,
        }
        ok = ok and res.mu > 0
    return ExperimentReport(
        kind="coercivity",
        scenario=s.name,
        passed=ok,
        summary={"results": results},
    )


def _windowed_distance(w: Field, fam, t: float) -> float:
    """H^2-type distance weighted by 1 - Phi_{J-1} (the fastest co-moving window).

    Radiation has nonpositive group velocity, so it exits this rightward-
    moving region; the global residual cannot decay on a periodic domain.
    """
    g = w.grid
    one_minus = 1.0 - fam.weight(fam.J - 1, t, g.x) if fam.J > 1 else np.ones(g.n)
    wx = spectral_derivative(w, 1).values
    wxx = spectral_derivative(w, 2).values
    return float(
        np.sqrt(integrate(g, (w.values**2 + wx**2 + wxx**2) * one_minus))
    )


def _run_rate_fit(s: Scenario) -> ExperimentReport:
    p = select_parameters(s.cfg, s.sigma)
    varpi_hat, _ = calibrate_slack(s.cfg, p, s.grid)
    u0 = profile_sum(s.cfg, 0.0, s.grid)
    bump = localized_bump(s.grid, s.seed, center=_bump_center(s.cfg))
    u0 = make_field(s.grid, u0.values + bump.values)
    traj = evolve(u0, s.controls)
    track = track_modulation(traj, s.cfg)
    windowed = [
        _windowed_distance(st.w, p.fam, t) for t, st in zip(track.times, track.states)
    ]
    t_end = track.times[-1]
    window = (0.25 * t_end, t_end)
    fit = fit_exponential_rate(track.times, windowed, window)

    sp = {}
    for j in range(1, s.cfg.J + 1):
        d = scalar_product_series(track, s.cfg, p.fam, j)
        envelope = np.exp(-2.0 * fit.varpi * np.asarray(d["times"])) + np.asarray(
            d["quadratic"]
        )
        sp[f"j{j}"] = {
            "C_measured": float(np.max(d["scalar"] / envelope)),
            "max_scalar": float(np.max(d["scalar"])),
        }
    series = {
        "rate": {
            "t": track.times,
            "windowed_distance": windowed,
            "global_w_h2": track.w_h2,
            "fit_line": [fit.C * np.exp(-fit.varpi * t) for t in track.times],
        }
    }
    passed = fit.varpi > 0 and fit.r_squared > RATE_R2_TOL
    return ExperimentReport(
        kind="rate-fit",
        scenario=s.name,
        passed=passed,
        summary={
            "varpi": fit.varpi,
            "C": fit.C,
            "r_squared": fit.r_squared,
            "fit_window": list(fit.fit_window),
            "varpi_calibrated": varpi_hat,
            "scalar_product": sp,
            "global_distance_final": track.w_h2[-1],
            "note": "distance measured on the 1-Phi_1 weighted region; the "
            "global residual cannot decay on a periodic domain because "
            "radiation never leaves",
        },
        series=series,
    )


_KINDS = {
    "verify-exact": _run_verify_exact,
    "conservation": _run_conservation,
    "monotonicity": _run_monotonicity,
    "modulate": _run_modulate,
    "coercivity": _run_coercivity,
    "rate-fit": _run_rate_fit,
}

EXPERIMENT_KINDS = tuple(_KINDS)


def run_experiment(s: Scenario, kind: str, out_dir: str | None = None) -> ExperimentReport:
    """Run one experiment kind and optionally persist its artifacts."""
    if kind not in _KINDS:
        raise ValueError(f"unknown experiment kind {kind!r}; choose from {EXPERIMENT_KINDS}")
    report = _KINDS[kind](s)
    if out_dir is not None:
        write_report(s, report, out_dir)
    return report


def _json_default(o):
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o)}")


def write_report(s: Scenario, report: ExperimentReport, out_dir: str):
    """Persist summary, resolved config, and plot columns under out_dir."""
    os.makedirs(out_dir, exist_ok=True)
    summary = {
        "kind": report.kind,
        "scenario": report.scenario,
        "passed": report.passed,
        **report.summary,
    }
    with open(os.path.join(out_dir, f"{report.kind}-summary.json"), "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True, default=_json_default)
        f.write("\n")
    with open(os.path.join(out_dir, "resolved-config.json"), "w") as f:
        json.dump(resolved_config(s), f, indent=2, sort_keys=True, default=_json_default)
        f.write("\n")
    emit_plot_data(report, out_dir)


def emit_plot_data(report: ExperimentReport, out_dir: str):
    """One whitespace-separated column file per tracked series."""
    os.makedirs(out_dir, exist_ok=True)
    for name, cols in report.series.items():
        path = os.path.join(out_dir, f"{report.kind}-{name}.dat")
        keys = list(cols)
        rows = zip(*(cols[k] for k in keys)) if keys else []
        with open(path, "w") as f:
            f.write("# " + "\t".join(keys) + "\n")
            for row in rows:
                f.write("\t".join(f"{float(v):.12e}" for v in row) + "\n")
