"""Command-line interface.

Subcommands: ``zoo list``, ``run <config>``, ``plot <report>``,
``verify-src --case <name>``, ``probe --case <name>``.  Exit codes:
0 all pass, 1 assertion failure, 2 input error, 3 numerical failure
(max severity across experiments).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ConfigError, NumericalError, SrcGeoLabError
from .runner import RunFlags, run_config_file
from .zoo import ZooRegistry


def _add_common(parser):
    parser.add_argument("--out", type=Path, default=Path("srcgeolab-out"),
                        help="output directory for reports and artifacts")
    parser.add_argument("--steps", type=int, default=None,
                        help="override integrator steps for all experiments")
    parser.add_argument("--basis-n", type=int, default=None,
                        help="override Hessian basis resolution")
    parser.add_argument("--seed", type=int, default=None,
                        help="override experiment seeds")
    parser.add_argument("--canonical-output", action="store_true",
                        help="strip timings for byte-identical reports")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="srcgeolab",
        description="Geodesics, lightlike lifts, Morse indices, and "
                    "path-space regularity experiments for Randers metrics "
                    "and stationary product spacetimes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    zoo = sub.add_parser("zoo", help="inspect the metric zoo")
    zoo_sub = zoo.add_subparsers(dest="zoo_command", required=True)
    zoo_sub.add_parser("list", help="list built-in zoo cases")

    run = sub.add_parser("run", help="run experiments from a config file")
    run.add_argument("config_path", nargs="?", type=Path, default=None)
    run.add_argument("--config", type=Path, default=None,
                     help="config file (alternative to the positional)")
    _add_common(run)

    plot = sub.add_parser("plot", help="render SVG figures from a report")
    plot.add_argument("report", type=Path)
    plot.add_argument("--out", type=Path, default=None,
                      help="figure directory (default: next to the report)")

    verify = sub.add_parser("verify-src",
                            help="four-way index comparison for one zoo case")
    verify.add_argument("--case", required=True, help="zoo case name")
    _add_common(verify)

    probe = sub.add_parser("probe",
                           help="energy-regularity probe for one zoo case")
    probe.add_argument("--case", required=True, help="zoo case name")
    _add_common(probe)
    return parser


def _flags(args) -> RunFlags:
    return RunFlags(
        out_dir=args.out,
        canonical=args.canonical_output,
        steps=args.steps,
        basis_n=args.basis_n,
        seed=args.seed,
    )


def _shortcut_config(kind: str, case: str, out_dir: Path) -> Path:
    """Materialize a one-experiment config for the direct subcommands."""
    from .runner import dump_canonical_json

    out_dir.mkdir(parents=True, exist_ok=True)
    doc = {
        "experiments": [
            {"name": f"{kind}-{case}", "kind": kind, "zoo": case}
        ]
    }
    path = out_dir / f"{kind}-{case}.config.json"
    path.write_text(dump_canonical_json(doc) + "\n")
    return path


def _print_summary(report) -> None:
    for record in report["experiments"]:
        status = record["status"]
        line = f"[{status:>4}] {record['name']} ({record['kind']})"
        if status in ("input-error", "numerical-failure"):
            line += f": {record.get('error', '')}"
        elif "verdicts" in record:
            failed = [k for k, ok in record["verdicts"].items() if not ok]
            if failed:
                line += f": failed {', '.join(failed)}"
        print(line)
    overall = report["overall"]
    print(f"overall: {'pass' if overall['pass'] else 'FAIL'} "
          f"(exit {overall['exit_code']})")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "zoo":
            registry = ZooRegistry()
            for name in registry.names():
                entry = registry.entry(name)
                print(f"{name:18s} {entry.kind:22s} params={entry.params}")
            return 0

        if args.command == "run":
            config = args.config_path or args.config
            if config is None:
                print("error: run needs a config path (positional or --config)",
                      file=sys.stderr)
                return 2
            report, code = run_config_file(config, _flags(args))
            _print_summary(report)
            return code

        if args.command == "plot":
            from .plots import emit_plots

            out = args.out or args.report.parent
            written = emit_plots(args.report, args.report.parent, out)
            for path in written:
                print(path)
            return 0

        if args.command in ("verify-src", "probe"):
            kind = "verify-src" if args.command == "verify-src" else "probe"
            config = _shortcut_config(kind, args.case, args.out)
            report, code = run_config_file(config, _flags(args))
            _print_summary(report)
            return code
    except ConfigError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except SrcGeoLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
