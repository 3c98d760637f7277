"""Command-line entry point: ``convlearn {decay,heat,validate}``."""

from __future__ import annotations

import argparse
import sys

from .experiments import (
    ConfigError,
    ExperimentConfig,
    ExperimentError,
    run_decay,
    run_heat,
    write_outputs,
)
from .validate import DEFAULT_SEED, run_validate

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="convlearn", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in (("decay", "error decay against sample size"),
                           ("heat", "heat kernel reconstruction")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--config", help="JSON experiment file (defaults used if omitted)")
        s.add_argument("--out-dir", help="output directory (overrides the config)")
        s.add_argument("--seed", type=int, help="master seed (overrides the config)")
        s.add_argument("--workers", type=int, help="worker threads; results do not depend on it")
        s.add_argument("--no-plot", action="store_true", help="skip plot.svg")
    v = sub.add_parser("validate", help="run the invariant suite")
    v.add_argument("--quick", action="store_true", help="fewer random cases")
    v.add_argument("--seed", type=int, default=DEFAULT_SEED)
    v.add_argument("--perturb-sobolev", type=float, metavar="FRACTION",
                   help="scale one Sobolev weight by 1+FRACTION (fault injection)")
    return p


def _load(args) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.from_file(args.config)
    else:
        cfg = ExperimentConfig.from_dict({"experiment": args.command})
    if cfg["experiment"] != args.command:
        raise ConfigError(f"config is for {cfg['experiment']!r}, not {args.command!r}")
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.workers is not None:
        updates["workers"] = args.workers
    if args.out_dir:
        updates["out_dir"] = args.out_dir
    cfg = cfg.replace(**updates) if updates else cfg
    if args.no_plot:
        cfg.data["output"]["plot"] = False
    return cfg


def _report_decay(result) -> None:
    for e in result.summary["per_n"]:
        print(f"n={e['n']:>6}  h_error_sq={e['h_error_sq_mean']:.4e}  "
              f"pred_error_sq={e['pred_error_sq_mean']:.4e}  op_error={e['op_error_mean']:.4e}")
    for key, rate in result.summary.get("rates", {}).items():
        th = rate["theory_slope"]
        th_s = f"{th:.4f}" if th is not None else "n/a"
        print(f"slope {key}: fitted {rate['fitted_slope']:.4f}, theory {th_s}")


def _report_heat(result) -> None:
    for r in result.rows:
        print(f"width={r['width_cells']:>5} cells  lambda={r['lambda']:.3e}  "
              f"rel_l2_error={r['rel_l2_error']:.4e}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "validate":
        results = run_validate(quick=args.quick, seed=args.seed, perturb_sobolev=args.perturb_sobolev)
        for r in results:
            print(r.line())
        failed = [r for r in results if not r.passed]
        print(f"{len(results) - len(failed)}/{len(results)} checks passed")
        return EXIT_FAIL if failed else EXIT_OK
    try:
        cfg = _load(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = run_decay(cfg) if args.command == "decay" else run_heat(cfg)
    except ExperimentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    paths = write_outputs(result)
    (_report_decay if args.command == "decay" else _report_heat)(result)
    for name in sorted(paths):
        print(f"wrote {paths[name]}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
