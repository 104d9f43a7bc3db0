"""Command-line entry point: ``wdment {plan,simulate,tomo,compensate,sweep,report}``.

Exit codes: 0 success, 1 usage, 2 validation, 3 finished with failed channels.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .channel_grid import PlanInfeasibleError, build_plan, plan_rows, validate_plan
from .compensate import CompensationPlan, NoPhaseInformationError, fit_entry
from .config import ConfigError, RunConfig, dump_config, load_config
from .sweep import drift_paths, measurement_interval, metrics_row, run_sweep, select_channels, simulate_channel, write_sweep
from .tomo import MleOptions, ReconstructionError, reconstruct

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_PARTIAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def parse_channels(text: str | None) -> list[int] | None:
    """``"1-4,10,44"`` -> [1, 2, 3, 4, 10, 44]."""
    if not text:
        return None
    out = []
    try:
        for part in text.split(","):
            lo, sep, hi = part.strip().partition("-")
            out.extend(range(int(lo), int(hi) + 1) if sep else [int(lo)])
    except ValueError:
        raise UsageError(f"bad --channels value {text!r}") from None
    return sorted(set(out))


def _config(args) -> RunConfig:
    overrides = {}
    if args.seed is not None:
        overrides["run.seed"] = args.seed
    if getattr(args, "noiseless", False):
        overrides["run.noiseless"] = True
    if getattr(args, "out_dir", None):
        overrides["run.output_dir"] = args.out_dir
    return load_config(args.config, overrides)


def _emit(rows, fields, fmt: str) -> None:
    if fmt == "json":
        json.dump([{f: r.get(f) for f in fields} for r in rows], sys.stdout, indent=1)
        sys.stdout.write("\n")
    else:
        io.write_csv(None, rows, fields, stream=sys.stdout)


def cmd_plan(args) -> int:
    cfg = _config(args)
    plan = build_plan(cfg.grid)
    problems = validate_plan(plan, cfg.grid)
    _emit(plan_rows(plan), io.PLAN_FIELDS, args.format)
    for p in problems:
        print(f"warning: {p}", file=sys.stderr)
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _config(args)
    plan = build_plan(cfg.grid)
    chosen = select_channels(plan, parse_channels(args.channels))
    paths = drift_paths(cfg, measurement_interval(len(plan), cfg))
    rows = [row for ch in chosen for row in io.records_to_rows(simulate_channel(cfg, ch, paths))]
    out = Path(cfg.run.output_dir)
    io.write_csv(out / "counts.csv", rows, io.COUNTS_FIELDS)
    (out / "config.cfg").write_text(dump_config(cfg))
    print(out / "counts.csv")
    return EXIT_OK


def cmd_tomo(args) -> int:
    counts = Path(args.counts or Path(args.out_dir or "out") / "counts.csv")
    out = Path(args.out_dir or counts.parent)
    by_channel = io.read_counts(counts)
    wanted = parse_channels(args.channels)
    rows, failed = [], 0
    for ch, records in sorted(by_channel.items()):
        if wanted and ch not in wanted:
            continue
        try:
            result = reconstruct(records, args.method, MleOptions(max_evals=args.max_evals))
        except ReconstructionError as exc:
            print(f"channel {ch}: {exc}", file=sys.stderr)
            failed += 1
            continue
        io.write_density(io.rho_path(out / "rho", ch), result.rho)
        rows.append(metrics_row(ch, result))
    io.write_csv(out / "metrics.csv", rows, io.METRICS_FIELDS)
    print(out / "metrics.csv")
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_compensate(args) -> int:
    rho_dir = Path(args.rho_dir or Path(args.out_dir or "out") / "rho")
    out = Path(args.out_dir or rho_dir.parent)
    plan, failed = CompensationPlan(), 0
    for ch, rho in sorted(io.read_densities(rho_dir).items()):
        try:
            plan.entries[ch] = fit_entry(rho, ch)
        except NoPhaseInformationError as exc:
            print(f"channel {ch}: {exc}", file=sys.stderr)
            failed += 1
    if not plan.entries and not failed:
        raise UsageError(f"no rho_chNN.txt files in {rho_dir}")
    io.write_csv(out / "compensation.csv", plan.rows(), io.COMPENSATION_FIELDS)
    print(out / "compensation.csv")
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config(args)
    report = run_sweep(cfg, parse_channels(args.channels), workers=args.workers)
    out = Path(cfg.run.output_dir)
    write_sweep(report, out)
    (out / "config.cfg").write_text(dump_config(cfg))
    _summarize(report.rows(), args.format)
    for o in report.failed:
        print(f"channel {o.channel.index} failed: {o.error}", file=sys.stderr)
    return EXIT_PARTIAL if report.failed else EXIT_OK


def _summarize(rows: list[dict], fmt: str, column: str = "fidelity_max") -> None:
    vals = np.array([float(r[column]) for r in rows if r.get(column) not in (None, "")])
    if fmt == "json":
        summary = {"column": column, "channels": len(rows), "n": int(vals.size)}
        if vals.size:
            summary.update(min=float(vals.min()), median=float(np.median(vals)), max=float(vals.max()))
        json.dump(summary, sys.stdout)
        sys.stdout.write("\n")
        return
    if vals.size:
        print(f"{column}: min={vals.min():.4f} median={np.median(vals):.4f} "
              f"max={vals.max():.4f} over {vals.size} channels")
    else:
        print(f"{column}: no values")


def cmd_report(args) -> int:
    path = Path(args.input)
    rows = io.read_csv(path)
    if not rows:
        raise UsageError(f"{path} has no rows")
    key = "index" if "index" in rows[0] else "channel"
    if "fidelity_max" not in rows[0]:
        raise UsageError(f"{path} has no fidelity_max column")
    table = [
        {
            "channel": int(r[key]),
            "fidelity_max": io.parse_float(r["fidelity_max"]),
            "fidelity_phi_plus": io.parse_float(r.get("fidelity_phi_plus", "")),
        }
        for r in rows
    ]
    if args.format == "json":
        _emit(table, ("channel", "fidelity_max", "fidelity_phi_plus"), "json")
    else:
        io.write_csv(None, table, ("channel", "fidelity_max", "fidelity_phi_plus"), stream=sys.stdout)
    _summarize([{"fidelity_max": r["fidelity_max"]} for r in table if not np.isnan(r["fidelity_max"])],
               args.format)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", default=None, help="config file or preset name (e.g. paper)")
    common.add_argument("--seed", type=int, default=None, help="override run.seed")
    common.add_argument("--out-dir", default=None)
    common.add_argument("--channels", default=None, help="subset, e.g. 1-4,44")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    ap = _Parser(prog="wdment", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("plan", parents=[common], help="print the channel grid")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("simulate", parents=[common], help="simulate tomography counts")
    p.add_argument("--noiseless", action="store_true", help="record expected values instead of Poisson draws")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("tomo", parents=[common], help="reconstruct states from a counts CSV")
    p.add_argument("--counts", default=None)
    p.add_argument("--method", choices=("mle", "linear"), default="mle")
    p.add_argument("--max-evals", type=int, default=100_000)
    p.set_defaults(func=cmd_tomo)

    p = sub.add_parser("compensate", parents=[common], help="fit waveplate compensation per channel")
    p.add_argument("--rho-dir", default=None)
    p.set_defaults(func=cmd_compensate)

    p = sub.add_parser("sweep", parents=[common], help="full per-channel pipeline")
    p.add_argument("--noiseless", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", parents=[common], help="summarize a sweep or metrics CSV")
    p.add_argument("input")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, PlanInfeasibleError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (UsageError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
