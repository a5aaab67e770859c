"""Command-line harness: `hamest run|sweep|verify`.

run     execute the configured experiment, write a CSV of per-trial records
        and a JSON summary (success rate, median/quartile time resource).
sweep   rerun the experiment over a decreasing list of error tolerances and
        fit the log-log scaling of the median time resource.
verify  run the seeded invariant suites and report PASS/FAIL per property.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .config import parse_config
from .errors import HamestError, ValidationError
from .runner import run_experiment, run_sweep, write_outputs
from .verify import SUITES, run_suite


def _output_paths(cfg, out_override, default_stem):
    csv_path = out_override or cfg.out_csv or f"{default_stem}.csv"
    if cfg.out_json and not out_override:
        json_path = cfg.out_json
    else:
        base = csv_path[:-4] if csv_path.endswith(".csv") else csv_path
        json_path = base + ".summary.json"
    return csv_path, json_path


def _load_config(args):
    cfg = parse_config(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, master_seed=args.seed)
    return cfg


def cmd_run(args) -> int:
    cfg = _load_config(args)
    rows, summary = run_experiment(cfg, jobs=args.jobs)
    csv_path, json_path = _output_paths(cfg, args.out, f"run_{cfg.scheme}")
    write_outputs(rows, summary, csv_path, json_path)
    failures = [r for r in rows if r.get("error")]
    for r in failures:
        print(f"trial {r['trial']}: {r['error']}", file=sys.stderr)
    print(f"wrote {len(rows)} trials to {csv_path}; "
          f"success_rate={summary['success_rate']:.3f} "
          f"median_T={summary['median_T']:.6g}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    try:
        deltas = [float(x) for x in args.delta_list.split(",") if x.strip()]
    except ValueError:
        raise ValidationError(f"could not parse --delta-list {args.delta_list!r}")
    rows, summary = run_sweep(cfg, deltas, jobs=args.jobs)
    csv_path, json_path = _output_paths(cfg, args.out, f"sweep_{cfg.scheme}")
    write_outputs(rows, summary, csv_path, json_path)
    print(f"wrote {len(rows)} trials to {csv_path}; slope={summary['slope']:.4f}")
    return 0


def cmd_verify(args) -> int:
    ok = run_suite(args.suite)
    print("verify:", "OK" if ok else "FAILED")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hamest",
        description="Multiparameter Hamiltonian estimation experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one configured experiment")
    run_p.add_argument("--config", required=True, help="experiment config file")
    run_p.add_argument("--seed", type=int, default=None, help="override master seed")
    run_p.add_argument("--out", default=None, help="CSV output path")
    run_p.add_argument("--jobs", type=int, default=1, help="parallel worker count")
    run_p.set_defaults(func=cmd_run)

    sweep_p = sub.add_parser("sweep", help="scaling sweep over error tolerances")
    sweep_p.add_argument("--config", required=True, help="experiment config file")
    sweep_p.add_argument("--delta-list", required=True,
                         help="comma-separated, strictly decreasing deltas")
    sweep_p.add_argument("--seed", type=int, default=None, help="override master seed")
    sweep_p.add_argument("--out", default=None, help="CSV output path")
    sweep_p.add_argument("--jobs", type=int, default=1, help="parallel worker count")
    sweep_p.set_defaults(func=cmd_sweep)

    verify_p = sub.add_parser("verify", help="run invariant suites")
    verify_p.add_argument("suite", choices=sorted(SUITES))
    verify_p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except HamestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
