"""Scenario parsing, experiment drivers, rate fitting, persistence, CLI."""

import json
import os

import numpy as np
import pytest

from mkdvlab.cli import main
from mkdvlab.errors import DuplicateVelocity, NonPositiveDistance
from mkdvlab.lab import (
    ExperimentReport,
    emit_plot_data,
    fit_exponential_rate,
    localized_bump,
    parse_scenario,
    resolved_config,
    run_experiment,
)
from mkdvlab.grid import make_grid

MINIMAL = """
name: minimal
objects:
  - {kind: soliton, c: 1.0}
grid: {half_length: 60.0, n: 1024}
evolution: {dt: 1.0e-3, t_end: 0.1}
"""

FLAGSHIP = """
name: flagship
objects:
  - {kind: breather, alpha: 1.0, beta: 1.0, x2: 60.0}
  - {kind: soliton, c: 1.0}
  - {kind: soliton, c: 4.0, x0: 60.0}
grid: {half_length: 100.0, n: 4096}
evolution: {dt: 5.0e-4, t_end: 8.0, save_every: 400}
sigma: 0.01
seed: 7
"""


def test_parse_minimal_scenario():
    s = parse_scenario(MINIMAL)
    assert s.cfg.J == 1
    assert s.grid.n == 1024
    assert s.sigma == 0.01  # default
    assert s.controls.dt == 1e-3


def test_parse_flagship_resolved_config():
    s = parse_scenario(FLAGSHIP)
    rc = resolved_config(s)
    assert rc["speeds"] == pytest.approx([0.5, 2.5])
    assert rc["nu1"] == pytest.approx(0.5)
    assert rc["velocities"] == pytest.approx([-2.0, 1.0, 4.0])
    # every constant the analysis consumes is present
    for key in ("sigma_effective", "omega", "varpi_hat", "C_hat", "tau0"):
        assert key in rc


def test_parse_rejects_duplicate_velocities():
    doc = MINIMAL.replace(
        "- {kind: soliton, c: 1.0}",
        "- {kind: soliton, c: 1.0}\n  - {kind: soliton, c: 1.0, x0: 20.0}",
    )
    with pytest.raises(DuplicateVelocity):
        parse_scenario(doc)


@pytest.mark.parametrize(
    "mutation",
    [
        ("name: minimal", ""),  # missing required field
        ("kind: soliton", "kind: vortex"),  # unknown kind
        ("c: 1.0", "q: 1.0"),  # unknown/missing object field
        ("n: 1024", "n: 1000"),  # not a power of two
    ],
)
def test_parse_schema_violations(mutation):
    old, new = mutation
    with pytest.raises((ValueError, KeyError)):
        parse_scenario(MINIMAL.replace(old, new))


def test_fit_exponential_rate_exact():
    t = np.linspace(0, 10, 50)
    d = 3.0 * np.exp(-0.7 * t)
    fit = fit_exponential_rate(t, d, (0.0, 10.0))
    assert fit.varpi == pytest.approx(0.7, abs=1e-10)
    assert fit.C == pytest.approx(3.0, abs=1e-9)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)


def test_fit_exponential_rate_floor_limited():
    t = np.linspace(0, 10, 30)
    d = np.full_like(t, 1e-14)
    fit = fit_exponential_rate(t, d, (0.0, 10.0))
    assert abs(fit.varpi) < 1e-6
    assert fit.floor_limited


def test_fit_exponential_rate_nonpositive():
    t = np.array([0.0, 1.0, 2.0])
    with pytest.raises(NonPositiveDistance):
        fit_exponential_rate(t, np.array([1.0, 0.0, 1.0]), (0.0, 2.0))


def test_fit_window_stability():
    t = np.linspace(0, 8, 80)
    rng = np.random.default_rng(4)
    d = 2.0 * np.exp(-0.5 * t) * np.exp(0.02 * rng.standard_normal(80))
    full = fit_exponential_rate(t, d, (0.0, 8.0))
    half = fit_exponential_rate(t, d, (4.0, 8.0))
    assert abs(half.varpi - full.varpi) < 0.2 * full.varpi


def test_localized_bump_is_seed_deterministic():
    g = make_grid(50.0, 256)
    b1 = localized_bump(g, 42, center=10.0)
    b2 = localized_bump(g, 42, center=10.0)
    np.testing.assert_array_equal(b1.values, b2.values)
    assert np.max(b1.values) <= 1e-3 + 1e-15


def test_run_experiment_unknown_kind():
    s = parse_scenario(MINIMAL)
    with pytest.raises(ValueError):
        run_experiment(s, "nonsense")


def test_verify_exact_report(tmp_path):
    s = parse_scenario(MINIMAL)
    rep = run_experiment(s, "verify-exact", out_dir=str(tmp_path))
    assert rep.passed
    summary = json.loads((tmp_path / "verify-exact-summary.json").read_text())
    assert summary["passed"] is True
    assert summary["worst"] < 1e-7
    assert (tmp_path / "resolved-config.json").exists()


def test_summary_is_deterministic(tmp_path):
    s = parse_scenario(MINIMAL)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    run_experiment(s, "verify-exact", out_dir=str(out1))
    run_experiment(s, "verify-exact", out_dir=str(out2))
    assert (out1 / "verify-exact-summary.json").read_bytes() == (
        out2 / "verify-exact-summary.json"
    ).read_bytes()
    assert (out1 / "resolved-config.json").read_bytes() == (
        out2 / "resolved-config.json"
    ).read_bytes()


def test_emit_plot_data_columns(tmp_path):
    rep = ExperimentReport(
        kind="demo",
        scenario="s",
        passed=True,
        summary={},
        series={"series": {"t": [0.0, 1.0], "v": [2.0, 3.0]}, "empty": {}},
    )
    emit_plot_data(rep, str(tmp_path))
    lines = (tmp_path / "demo-series.dat").read_text().splitlines()
    assert lines[0] == "# t\tv"
    assert len(lines) == 3
    assert (tmp_path / "demo-empty.dat").read_text().startswith("#")


def test_conservation_experiment_short(tmp_path):
    s = parse_scenario(MINIMAL.replace("t_end: 0.1", "t_end: 0.5"))
    rep = run_experiment(s, "conservation", out_dir=str(tmp_path))
    assert rep.passed
    assert rep.summary["worst"] < 1e-6
    assert os.path.exists(tmp_path / "conservation-conserved.dat")


def _write(tmp_path, text):
    p = tmp_path / "scenario.yaml"
    p.write_text(text)
    return str(p)


def test_cli_pass_exit_code(tmp_path):
    path = _write(tmp_path, MINIMAL)
    assert main(["verify-exact", "--scenario", path]) == 0


def test_cli_invalid_scenario_exit_code(tmp_path):
    path = _write(tmp_path, MINIMAL.replace("c: 1.0", "c: -1.0"))
    assert main(["verify-exact", "--scenario", path]) == 2


def test_cli_missing_file_exit_code(tmp_path):
    assert main(["verify-exact", "--scenario", str(tmp_path / "nope.yaml")]) == 2


def test_cli_override(tmp_path, capsys):
    path = _write(tmp_path, MINIMAL)
    code = main(
        [
            "verify-exact",
            "--scenario",
            path,
            "--override",
            "grid.n=2048",
            "--override",
            "name=renamed",
        ]
    )
    assert code == 0


def test_cli_bad_override(tmp_path):
    path = _write(tmp_path, MINIMAL)
    assert main(["verify-exact", "--scenario", path, "--override", "oops"]) == 2
