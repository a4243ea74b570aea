"""Command-line interface for sweeps, figure presets and analytic tables.

Exit codes: 0 on success, 1 for invalid configuration, 2 when a sweep
completed but some records carry a numeric-failure status.
"""

import argparse
import json
import sys
from pathlib import Path

from .harness import (
    PRESETS,
    SweepSpec,
    ValidationError,
    expand_spec,
    mi_theory_table,
    preset_points,
    read_records,
    run_to_file,
    threshold_curve,
    threshold_table,
    write_table,
)

_SPEC_LIST_FIELDS = {
    "lambda_grid": float,
    "p_grid": float,
    "n_grid": int,
    "snr_grid_db": float,
    "linewidth_grid_hz": float,
    "variants": str,
    "seeds": int,
}


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; this tool reserves 2 for numeric
    # failures and reports all validation problems with exit code 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", type=Path, default=None,
                        help="output file (default <command>.<format>)")
    parser.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    parser.add_argument("--plot", action="store_true",
                        help="also render a PNG next to the output file")


def _add_sim_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0,
                        help="first seed (trials use seed..seed+num-seeds-1)")
    parser.add_argument("--num-seeds", type=int, default=1)
    parser.add_argument("--n-symbols", type=int, default=None)
    parser.add_argument("--baud", type=float, default=None)
    parser.add_argument("--source-mode", choices=("iid", "constant_composition"),
                        default=None)
    parser.add_argument("--block", type=int, default=None,
                        help="genie slip-correction block length")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--no-resume", action="store_true",
                        help="recompute every record even if present in --out")
    parser.add_argument("--timing", action="store_true",
                        help="include wall_time_s in the output "
                             "(breaks byte-identical reruns)")
    parser.add_argument("--progress", action="store_true")


def _add_grid_overrides(parser: argparse.ArgumentParser) -> None:
    for name in _SPEC_LIST_FIELDS:
        flag = "--" + name.replace("_", "-")
        parser.add_argument(flag, type=str, default=None,
                            help=f"comma-separated override for {name}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pscpr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="run a sweep from a config file")
    sweep.add_argument("--config", type=Path, default=None,
                       help="JSON file with SweepSpec fields")
    _add_grid_overrides(sweep)
    _add_sim_options(sweep)
    _add_common(sweep)

    for name in PRESETS:
        p = sub.add_parser(name, help=f"run the {name} preset")
        _add_sim_options(p)
        _add_common(p)

    table1 = sub.add_parser("table1", help="MAP thresholds at optimal shaping")
    table1.add_argument("--snr-grid-db", type=str, default=None)
    table1.add_argument("--lambdas", type=str, default=None,
                        help="comma-separated shaping factors, one per SNR")
    _add_common(table1)

    mi = sub.add_parser("mi-theory", help="theoretical MI table")
    mi.add_argument("--snr-grid-db", type=str, default=None)
    mi.add_argument("--lambda-grid", type=str, default=None)
    _add_common(mi)

    thr = sub.add_parser("thresholds", help="median vs MAP threshold curves")
    thr.add_argument("--snr", type=float, default=10.0)
    thr.add_argument("--lambda-grid", type=str, default=None)
    _add_common(thr)

    return parser


def _parse_list(text: str, cast):
    return tuple(cast(part) for part in text.split(",") if part != "")


def _build_spec(args) -> SweepSpec:
    data = {}
    config = getattr(args, "config", None)
    if config is not None:
        try:
            data.update(json.loads(Path(config).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config file: {exc}") from exc
    for name, cast in _SPEC_LIST_FIELDS.items():
        override = getattr(args, name, None)
        if override is not None:
            data[name] = _parse_list(override, cast)
        elif name in data:
            data[name] = tuple(cast(v) for v in data[name])
    if args.num_seeds < 1:
        raise ValidationError("--num-seeds must be >= 1")
    if "seeds" not in data:
        data["seeds"] = tuple(range(args.seed, args.seed + args.num_seeds))
    for name, attr in (("n_symbols", "n_symbols"), ("baud", "baud"),
                       ("source_mode", "source_mode"), ("slip_block", "block")):
        value = getattr(args, attr, None)
        if value is not None:
            data[name] = value
    spec = SweepSpec.from_mapping(data)
    spec.validate()
    return spec


def _emit_records(args, spec: SweepSpec, points, preset: str) -> int:
    out = args.out or Path(f"{args.command}.{args.format}")
    records = run_to_file(
        points, spec, out, fmt=args.format, workers=args.workers,
        resume=not args.no_resume, timing=args.timing, progress=args.progress,
    )
    bad = sum(rec.status != "ok" for rec in records)
    print(f"wrote {len(records)} records to {out}" +
          (f" ({bad} with errors)" if bad else ""))
    if args.plot:
        from .plots import render

        png = render(records, preset, out.with_suffix(".png"))
        print(f"rendered {png}")
    return 2 if bad else 0


def _emit_table(args, rows, plot_records=None, preset: str | None = None) -> int:
    out = args.out or Path(f"{args.command}.{args.format}")
    write_table(rows, out, fmt=args.format)
    print(f"wrote {len(rows)} rows to {out}")
    if args.plot and preset is not None and plot_records is not None:
        from .plots import render

        png = render(plot_records, preset, out.with_suffix(".png"))
        print(f"rendered {png}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "sweep":
            spec = _build_spec(args)
            return _emit_records(args, spec, expand_spec(spec), "sweep")
        if args.command in PRESETS:
            spec = _build_spec(args)
            return _emit_records(args, spec, preset_points(args.command, spec),
                                 args.command)
        if args.command == "table1":
            snrs = _parse_list(args.snr_grid_db, float) if args.snr_grid_db \
                else tuple(float(s) for s in range(8, 15))
            lam_map = None
            if args.lambdas:
                lams = _parse_list(args.lambdas, float)
                if len(lams) != len(snrs):
                    raise ValidationError("--lambdas must match --snr-grid-db")
                lam_map = dict(zip(snrs, lams))
            return _emit_table(args, threshold_table(snrs, lam_map))
        if args.command == "mi-theory":
            kwargs = {}
            if args.lambda_grid:
                kwargs["lambda_grid"] = _parse_list(args.lambda_grid, float)
            if args.snr_grid_db:
                kwargs["snr_grid_db"] = _parse_list(args.snr_grid_db, float)
            return _emit_table(args, mi_theory_table(**kwargs))
        if args.command == "thresholds":
            kwargs = {}
            if args.lambda_grid:
                kwargs["lambda_grid"] = _parse_list(args.lambda_grid, float)
            return _emit_table(args, threshold_curve(args.snr, **kwargs))
        raise ValidationError(f"unknown command: {args.command}")
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
