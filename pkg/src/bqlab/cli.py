"""Command-line surface.

Subcommands: simulate, sweep-acl, growth, contraction, norms, verify.
Every subcommand accepts ``--config <path>`` (INI), repeatable
``--set section.key=value`` overrides, ``--out <dir>``, ``--seeds <n>``
and ``--jobs <n>``.

Exit codes: 0 success, 2 precondition/configuration errors, 3 numerical
divergence (including the energy-doubling monitor), 4 failed verify
checks.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict
from pathlib import Path

from . import __version__
from .errors import NumericalError, PreconditionError
from .experiments import (
    ExperimentConfig,
    default_config,
    emit,
    run_contraction,
    run_growth,
    run_norms,
    run_simulate,
    run_sweep_acl,
    write_csv,
    write_json,
    _fmt,
    _header_lines,
)
from .verify import run_verify

_SUBCOMMANDS = {
    "simulate": "simulate",
    "sweep-acl": "sweep_acl",
    "growth": "growth",
    "contraction": "contraction",
    "norms": "norms",
    "verify": "verify",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bqlab",
        description="Pseudospectral laboratory for the cubic Boussinesq equation",
    )
    parser.add_argument("--version", action="version", version=f"bqlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _SUBCOMMANDS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", type=Path, default=None, help="INI config file")
        p.add_argument(
            "--set", dest="overrides", action="append", default=[],
            metavar="SECTION.KEY=VALUE", help="override one config key (repeatable)",
        )
        p.add_argument("--out", type=Path, default=None, help="output directory")
        p.add_argument("--seeds", type=int, default=None, help="number of data seeds")
        p.add_argument("--jobs", type=int, default=None, help="parallel worker count")
    return parser


def load_config(args) -> ExperimentConfig:
    kind = _SUBCOMMANDS[args.command]
    if args.config is not None:
        config = ExperimentConfig.from_ini(Path(args.config).read_text())
        config.kind = kind
    else:
        config = default_config(kind)
    for assignment in args.overrides:
        config.apply_override(assignment)
    if args.out is not None:
        config.out_dir = str(args.out)
    if args.seeds is not None:
        config.seeds = args.seeds
    if args.jobs is not None:
        config.jobs = args.jobs
    return config.validate()


def _emit_verify(report, config) -> list[Path]:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    header = _header_lines(config)
    if "csv" in config.formats:
        path = out / "verify.csv"
        write_csv(
            path, header,
            ["check", "passed", "measured", "threshold", "detail"],
            [[c.name, c.passed, c.measured, c.threshold, c.detail] for c in report.checks],
        )
        written.append(path)
    if "json" in config.formats:
        path = out / "verify.json"
        write_json(path, {
            "version": __version__,
            "config": asdict(config),
            "checks": [asdict(c) for c in report.checks],
            "all_passed": report.all_passed,
        })
        written.append(path)
    return written


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args)
        if config.kind == "verify":
            report = run_verify(config)
            files = _emit_verify(report, config)
            for c in report.checks:
                status = "PASS" if c.passed else "FAIL"
                print(f"[{status}] {c.name}: measured {_fmt(c.measured)} ({c.threshold})"
                      + (f" - {c.detail}" if c.detail else ""))
            print(f"wrote {', '.join(str(f) for f in files)}")
            return 0 if report.all_passed else 4
        runner = {
            "simulate": run_simulate,
            "sweep_acl": run_sweep_acl,
            "growth": run_growth,
            "contraction": run_contraction,
            "norms": run_norms,
        }[config.kind]
        result = runner(config)
        files = emit(result, config.out_dir, config.formats)
        _print_summary(config.kind, result)
        print(f"wrote {', '.join(str(f) for f in files)}")
        return 0
    except PreconditionError as exc:
        print(f"error (precondition): {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"error (numerical): {exc}", file=sys.stderr)
        return 3


def _print_summary(kind: str, result) -> None:
    if kind == "sweep_acl":
        print(f"fit status: {result.fit_status}")
        if result.fitted_slope is not None:
            print(f"fitted slope (raw): {result.fitted_slope:.4f}  ci {result.slope_ci}")
            print(
                f"fitted slope (normalized): {result.normalized_slope:.4f}  "
                f"ci {result.normalized_ci}"
            )
        failures = [r for r in result.rows if r.error]
        if failures:
            print(f"{len(failures)} failed cells: "
                  + "; ".join(f"(seed {r.seed}, N {r.N}): {r.error}" for r in failures))
    elif kind == "growth":
        print(
            f"N = {result.N_used}, windows to T = {result.times[-1]:.3g}: "
            f"{len(result.times) - 1}, final sup = {result.sup_norms[-1]:.6g}, "
            f"bound C = {result.bound_constant:.6g}, exponent = {result.bound_exponent}"
        )
    elif kind == "contraction":
        for r in result.rows:
            print(
                f"amplitude {r.amplitude:g}: size {r.data_size:.4g}, "
                f"delta_rule {r.delta_rule:.4g} (held: {r.held_at_rule}), "
                f"delta* {r.delta_star:.4g}, ratio mean {r.ratio_mean:.3g}"
            )
        print(f"delta* monotone decreasing in size: {result.monotone}")
    elif kind == "norms":
        for probe, stats in result.summary.items():
            print(
                f"{probe}: n={int(stats['count'])} median {stats['median']:.4g} "
                f"max {stats['max']:.4g} (max/median {stats['max_over_median']:.3g})"
            )
    elif kind == "simulate":
        traj = result.trajectory
        e = traj.energies
        drift = max(abs(x - e[0]) for x in e) / e[0] if e[0] else 0.0
        print(
            f"{len(traj.states) - 1} steps to t = {traj.states[-1].t:.6g}, "
            f"relative energy drift {drift:.3e}"
        )


if __name__ == "__main__":
    sys.exit(main())
