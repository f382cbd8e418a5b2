"""Command-line front end: one subcommand per experiment kind plus `all`.

Exit codes: 0 pass, 1 threshold fail, 2 invalid input, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import sys

import yaml

from .errors import (
    BlowUp,
    DuplicateVelocity,
    EigensolveFailure,
    EmptyAdmissibleInterval,
    HypothesisViolated,
    NoConvergence,
    NonPositiveDistance,
    SingularJacobian,
    TailsTooLarge,
)
from .lab import EXPERIMENT_KINDS, load_scenario, parse_scenario, run_experiment

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_INVALID = 2
EXIT_RUNTIME = 3

_INVALID_ERRORS = (
    ValueError,
    KeyError,
    TypeError,
    DuplicateVelocity,
    TailsTooLarge,
    HypothesisViolated,
    OSError,
    yaml.YAMLError,
)
_RUNTIME_ERRORS = (
    BlowUp,
    NoConvergence,
    SingularJacobian,
    EigensolveFailure,
    EmptyAdmissibleInterval,
    NonPositiveDistance,
)


def _apply_overrides(text: str, overrides: list[str]) -> str:
    """Apply dotted-path key=value overrides to the raw scenario document."""
    doc = yaml.safe_load(text)
    for item in overrides:
        if "=" not in item:
            raise ValueError(f"override must look like key=value, got {item!r}")
        key, _, raw = item.partition("=")
        node = doc
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = yaml.safe_load(raw)
    return yaml.safe_dump(doc)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mkdvlab",
        description="Numerical laboratory for multi-soliton/breather dynamics",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in EXPERIMENT_KINDS + ("all",):
        p = sub.add_parser(kind, help=f"run the {kind} experiment(s)")
        p.add_argument("--scenario", required=True, help="path to the scenario YAML file")
        p.add_argument("--out", default=None, help="output directory for artifacts")
        p.add_argument(
            "--override",
            action="append",
            default=[],
            metavar="K=V",
            help="override a scenario field (dotted path), e.g. evolution.dt=1e-3",
        )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.scenario) as f:
            text = f.read()
        if args.override:
            text = _apply_overrides(text, args.override)
        scenario = parse_scenario(text)
    except _INVALID_ERRORS as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID

    kinds = EXPERIMENT_KINDS if args.command == "all" else (args.command,)
    worst = EXIT_PASS
    for kind in kinds:
        try:
            report = run_experiment(scenario, kind, out_dir=args.out)
        except _RUNTIME_ERRORS as exc:
            print(f"{kind}: runtime failure: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
        except _INVALID_ERRORS as exc:
            print(f"{kind}: invalid input: {exc}", file=sys.stderr)
            return EXIT_INVALID
        status = "PASS" if report.passed else "FAIL"
        print(f"{kind}: {status}")
        if not report.passed:
            worst = EXIT_FAIL
    return worst


if __name__ == "__main__":
    sys.exit(main())
