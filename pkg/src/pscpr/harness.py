"""Experiment sweeps: configuration, deterministic seeding and emission.

A sweep is a Cartesian product of parameter grids; every grid point runs
the full chain (shaped source, channel, recovery, metrics) and yields one
record per seed.  Records are deterministic functions of their
configuration: the channel RNG is keyed by a content hash of every
physics-affecting parameter, so reordering or parallelizing a sweep never
changes its output, and completed records can be reused on resume.
"""

import csv
import hashlib
import io
import itertools
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable, Sequence

from .channel import SOURCE_MODES, ChannelParams, simulate
from .constellation import build_16qam, shaped_source
from .cpr import CprConfig, run_cpr
from .decision import RingModel, map_threshold_pair, median_thresholds
from .metrics import DEFAULT_LAMBDA_GRID, estimate_mi, optimal_lambda, phase_mse, theoretical_mi

__all__ = [
    "SweepSpec",
    "SweepPoint",
    "SweepRecord",
    "ValidationError",
    "expand_spec",
    "run_point",
    "run_points",
    "run_sweep",
    "run_to_file",
    "threshold_table",
    "mi_theory_table",
    "threshold_curve",
    "write_records",
    "read_records",
    "write_table",
    "PRESETS",
    "preset_points",
]

DEFAULT_P_GRID = tuple(round(1.0 + 0.5 * i, 10) for i in range(9))
DEFAULT_N_GRID = (10, 20, 50, 100, 200, 400)
DEFAULT_SNR_GRID = tuple(float(s) for s in range(8, 15))
VARIANTS = ("conventional", "modified")


class ValidationError(ValueError):
    """Raised when a sweep specification cannot be executed."""


@dataclass(frozen=True)
class SweepSpec:
    """Declarative description of a sweep (grids plus shared settings)."""

    lambda_grid: Sequence[float] = DEFAULT_LAMBDA_GRID
    p_grid: Sequence[float] = DEFAULT_P_GRID
    n_grid: Sequence[int] = DEFAULT_N_GRID
    snr_grid_db: Sequence[float] = DEFAULT_SNR_GRID
    linewidth_grid_hz: Sequence[float] = (1e5,)
    variants: Sequence[str] = VARIANTS
    n_symbols: int = 2**17
    baud: float = 56e9
    seeds: Sequence[int] = (0,)
    source_mode: str = "iid"
    slip_block: int = 4

    def validate(self) -> None:
        for name in ("lambda_grid", "p_grid", "n_grid", "snr_grid_db",
                     "linewidth_grid_hz", "variants", "seeds"):
            if len(getattr(self, name)) == 0:
                raise ValidationError(f"{name} must not be empty")
        if any(lam < 0 for lam in self.lambda_grid):
            raise ValidationError("shaping factors must be >= 0")
        if any(p < 0 for p in self.p_grid):
            raise ValidationError("filter weights must be >= 0")
        if any(n < 0 or n % 2 for n in self.n_grid):
            raise ValidationError("filter lengths must be even and >= 0")
        unknown = set(self.variants) - set(VARIANTS)
        if unknown:
            raise ValidationError(f"unknown variants: {sorted(unknown)}")
        if self.source_mode not in SOURCE_MODES:
            raise ValidationError(f"source_mode must be one of {SOURCE_MODES}")
        if self.baud <= 0:
            raise ValidationError("baud must be > 0")
        if self.slip_block < 1:
            raise ValidationError("slip_block must be >= 1")
        needed = 2 * max(self.n_grid) + 1000
        if self.n_symbols < needed:
            raise ValidationError(
                f"n_symbols must be >= {needed} for the largest filter"
            )

    @classmethod
    def from_mapping(cls, data: dict) -> "SweepSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown spec fields: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class SweepPoint:
    """One grid point; ``seed`` distinguishes repeated trials."""

    shaping_factor: float
    weight_p: float
    filter_n: int
    snr_db: float
    linewidth_hz: float
    variant: str
    seed: int


# Field order of the delimited output; wall_time_s is emitted only on
# request because wall-clock timing would break byte-identical reruns.
RECORD_FIELDS = (
    "lambda", "p", "filter_n", "snr_db", "linewidth_hz", "variant", "seed",
    "r1", "r2", "entropy_bits", "mi_bits", "mi_theoretical_bits",
    "phase_mse", "wall_time_s", "status",
)


@dataclass
class SweepRecord:
    """One executed configuration point."""

    shaping_factor: float
    weight_p: float
    filter_n: int
    snr_db: float
    linewidth_hz: float
    variant: str
    seed: int
    r1: float = math.nan
    r2: float = math.nan
    entropy_bits: float = math.nan
    mi_bits: float = math.nan
    mi_theoretical_bits: float = math.nan
    phase_mse: float = math.nan
    wall_time_s: float = math.nan
    status: str = "ok"

    def key(self) -> tuple:
        return (
            self.shaping_factor, self.weight_p, self.filter_n, self.snr_db,
            self.linewidth_hz, self.variant, self.seed,
        )

    def as_row(self, timing: bool) -> dict:
        row = {
            "lambda": self.shaping_factor,
            "p": self.weight_p,
            "filter_n": self.filter_n,
            "snr_db": self.snr_db,
            "linewidth_hz": self.linewidth_hz,
            "variant": self.variant,
            "seed": self.seed,
            "r1": self.r1,
            "r2": self.r2,
            "entropy_bits": self.entropy_bits,
            "mi_bits": self.mi_bits,
            "mi_theoretical_bits": self.mi_theoretical_bits,
            "phase_mse": self.phase_mse,
            "status": self.status,
        }
        if timing:
            row["wall_time_s"] = self.wall_time_s
        return row


def point_key(point: SweepPoint) -> tuple:
    return (
        point.shaping_factor, point.weight_p, point.filter_n, point.snr_db,
        point.linewidth_hz, point.variant, point.seed,
    )


def expand_spec(spec: SweepSpec) -> list[SweepPoint]:
    """Deterministic Cartesian expansion of a spec into points.

    The conventional variant pins the filter weight to one, so its rows
    do not multiply with the weight grid.
    """
    spec.validate()
    points = []
    for snr, lw, lam, n, variant in itertools.product(
        spec.snr_grid_db, spec.linewidth_grid_hz, spec.lambda_grid,
        spec.n_grid, spec.variants,
    ):
        p_values = spec.p_grid if variant == "modified" else (1.0,)
        for p, seed in itertools.product(p_values, spec.seeds):
            points.append(SweepPoint(
                shaping_factor=float(lam), weight_p=float(p), filter_n=int(n),
                snr_db=float(snr), linewidth_hz=float(lw), variant=variant,
                seed=int(seed),
            ))
    return points


def _channel_seed(point: SweepPoint, spec: SweepSpec) -> int:
    """Content-addressed RNG seed: stable under grid reordering."""
    key = "|".join([
        f"{point.shaping_factor:.12g}", f"{point.snr_db:.12g}",
        f"{point.linewidth_hz:.12g}", f"{spec.baud:.12g}",
        str(spec.n_symbols), spec.source_mode, str(point.seed),
    ])
    digest = hashlib.blake2b(key.encode(), digest_size=16).digest()
    return int.from_bytes(digest, "big")


def run_point(point: SweepPoint, spec: SweepSpec) -> SweepRecord:
    """Execute one configuration point into a record.

    Failures are captured in the record's status field rather than
    raised, so a sweep never aborts on a single bad point.
    """
    record = SweepRecord(
        shaping_factor=point.shaping_factor, weight_p=point.weight_p,
        filter_n=point.filter_n, snr_db=point.snr_db,
        linewidth_hz=point.linewidth_hz, variant=point.variant,
        seed=point.seed,
    )
    start = time.perf_counter()
    try:
        constellation = build_16qam()
        source = shaped_source(constellation, point.shaping_factor)
        params = ChannelParams(
            snr_db=point.snr_db, linewidth_hz=point.linewidth_hz,
            baud=spec.baud, n_symbols=spec.n_symbols,
            seed=_channel_seed(point, spec), source_mode=spec.source_mode,
        )
        realization = simulate(constellation, source, params)
        if point.variant == "conventional":
            thresholds = median_thresholds(constellation)
        else:
            model = RingModel.from_source(
                source, constellation, realization.noise_var_per_component
            )
            thresholds = map_threshold_pair(model)
        config = CprConfig(
            thresholds=thresholds, half_window=point.filter_n // 2,
            weight_p=point.weight_p, variant=point.variant,
            slip_block=spec.slip_block,
        )
        result = run_cpr(realization, config)
        margin = config.half_window
        stop = slice(margin, spec.n_symbols - margin if margin else None)
        record.r1 = thresholds.r1
        record.r2 = thresholds.r2
        record.entropy_bits = source.entropy_bits
        record.mi_bits = estimate_mi(
            result.compensated[stop], realization.tx[stop], source, constellation
        )
        record.mi_theoretical_bits = theoretical_mi(source, constellation, point.snr_db)
        record.phase_mse = phase_mse(realization.phase, result.est_phase, margin)
        if not all(map(math.isfinite, (record.mi_bits, record.phase_mse,
                                       record.mi_theoretical_bits))):
            record.status = "error: non-finite metric"
    except Exception as exc:  # recorded, not raised
        record.status = f"error: {type(exc).__name__}: {exc}"
    record.wall_time_s = time.perf_counter() - start
    return record


def _run_point_task(args: tuple) -> SweepRecord:
    return run_point(*args)


def run_points(
    points: Iterable[SweepPoint], spec: SweepSpec, workers: int = 1,
    reuse: dict | None = None, progress: bool = False,
) -> list[SweepRecord]:
    """Execute points in deterministic order, reusing cached records."""
    points = list(points)
    reuse = reuse or {}
    todo = [pt for pt in points if point_key(pt) not in reuse]
    computed: dict[tuple, SweepRecord] = {}
    if workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for pt, rec in zip(
                todo, pool.map(_run_point_task, [(pt, spec) for pt in todo])
            ):
                computed[point_key(pt)] = rec
    else:
        for i, pt in enumerate(todo):
            computed[point_key(pt)] = run_point(pt, spec)
            if progress:
                print(f"\r{i + 1}/{len(todo)} points", end="", flush=True)
        if progress and todo:
            print()
    return [reuse.get(point_key(pt)) or computed[point_key(pt)] for pt in points]


def run_sweep(spec: SweepSpec, workers: int = 1, progress: bool = False) -> list[SweepRecord]:
    """Expand and execute a full sweep specification."""
    return run_points(expand_spec(spec), spec, workers=workers, progress=progress)


# --------------------------------------------------------------------------
# record serialization


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def write_records(
    records: Sequence[SweepRecord], path: str | Path, fmt: str = "csv",
    timing: bool = False,
) -> None:
    path = Path(path)
    columns = [c for c in RECORD_FIELDS if timing or c != "wall_time_s"]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for rec in records:
            row = rec.as_row(timing)
            writer.writerow([_fmt(row[c]) for c in columns])
        path.write_text(buf.getvalue())
        return
    lines = []
    if fmt == "jsonl":
        for rec in records:
            row = rec.as_row(timing)
            clean = {c: (None if isinstance(row[c], float) and not math.isfinite(row[c])
                         else row[c]) for c in columns}
            lines.append(json.dumps(clean))
    else:
        raise ValidationError(f"unknown format: {fmt}")
    path.write_text("\n".join(lines) + "\n")


def read_records(path: str | Path) -> list[SweepRecord]:
    """Read records back from a csv or jsonl file."""
    path = Path(path)
    text = path.read_text().strip()
    if not text:
        return []
    records = []
    lines = text.splitlines()
    if lines[0].startswith("lambda,"):
        reader = csv.reader(lines)
        columns = next(reader)
        for parts in reader:
            records.append(_record_from_row(dict(zip(columns, parts))))
    else:
        for line in lines:
            records.append(_record_from_row(json.loads(line)))
    return records


def _record_from_row(row: dict) -> SweepRecord:
    def num(name, cast=float):
        value = row.get(name)
        if value is None or value == "":
            return math.nan if cast is float else 0
        return cast(value)

    return SweepRecord(
        shaping_factor=num("lambda"), weight_p=num("p"),
        filter_n=num("filter_n", int), snr_db=num("snr_db"),
        linewidth_hz=num("linewidth_hz"), variant=str(row["variant"]),
        seed=num("seed", int), r1=num("r1"), r2=num("r2"),
        entropy_bits=num("entropy_bits"), mi_bits=num("mi_bits"),
        mi_theoretical_bits=num("mi_theoretical_bits"),
        phase_mse=num("phase_mse"), wall_time_s=num("wall_time_s"),
        status=str(row.get("status", "ok")),
    )


def run_to_file(
    points: Sequence[SweepPoint], spec: SweepSpec, path: str | Path,
    fmt: str = "csv", workers: int = 1, resume: bool = True,
    timing: bool = False, progress: bool = False,
) -> list[SweepRecord]:
    """Execute points and write them, reusing completed records on resume.

    Resume matches records by their configuration fields and assumes the
    spec-level settings (symbol count, baud, source mode, slip block) are
    unchanged; write to a fresh path when changing those.
    """
    path = Path(path)
    reuse: dict[tuple, SweepRecord] = {}
    if resume and path.exists():
        for rec in read_records(path):
            if rec.status == "ok":
                reuse[rec.key()] = rec
    records = run_points(points, spec, workers=workers, reuse=reuse, progress=progress)
    write_records(records, path, fmt=fmt, timing=timing)
    return records


# --------------------------------------------------------------------------
# analytic tables (no Monte-Carlo involved)


def threshold_table(
    snr_grid_db: Sequence[float] = DEFAULT_SNR_GRID,
    lambda_per_snr: dict | None = None,
) -> list[dict]:
    """MAP thresholds at the per-SNR optimal shaping factor.

    The shaping factor defaults to the theoretical-MI argmax on the
    standard grid; pass ``lambda_per_snr`` to pin specific values.  The
    noise variance is the analytic N0/2 at the shaped mean energy.
    """
    constellation = build_16qam()
    rows = []
    for snr in snr_grid_db:
        lam = (lambda_per_snr or {}).get(snr, None)
        if lam is None:
            lam = optimal_lambda(snr)
        source = shaped_source(constellation, lam)
        sigma2 = source.mean_energy * 10.0 ** (-snr / 10.0) / 2.0
        thr = map_threshold_pair(RingModel.from_source(source, constellation, sigma2))
        rows.append({
            "snr_db": float(snr), "lambda": float(lam),
            "r1": thr.r1, "r2": thr.r2,
        })
    return rows


def mi_theory_table(
    lambda_grid: Sequence[float] = DEFAULT_LAMBDA_GRID,
    snr_grid_db: Sequence[float] = DEFAULT_SNR_GRID,
) -> list[dict]:
    """Theoretical MI over the shaping-factor x SNR grid."""
    constellation = build_16qam()
    rows = []
    for snr in snr_grid_db:
        for lam in lambda_grid:
            source = shaped_source(constellation, lam)
            rows.append({
                "snr_db": float(snr), "lambda": float(lam),
                "entropy_bits": source.entropy_bits,
                "mi_theoretical_bits": theoretical_mi(source, constellation, snr),
            })
    return rows


def threshold_curve(
    snr_db: float, lambda_grid: Sequence[float] = DEFAULT_LAMBDA_GRID
) -> list[dict]:
    """Median vs MAP thresholds across shaping factors at one SNR."""
    constellation = build_16qam()
    med = median_thresholds(constellation)
    rows = []
    for lam in lambda_grid:
        source = shaped_source(constellation, lam)
        sigma2 = source.mean_energy * 10.0 ** (-snr_db / 10.0) / 2.0
        thr = map_threshold_pair(RingModel.from_source(source, constellation, sigma2))
        rows.append({
            "snr_db": float(snr_db), "lambda": float(lam),
            "r1_median": med.r1, "r2_median": med.r2,
            "r1_map": thr.r1, "r2_map": thr.r2,
        })
    return rows


def write_table(rows: Sequence[dict], path: str | Path, fmt: str = "csv") -> None:
    """Write an analytic table (list of uniform dicts) to csv or jsonl."""
    path = Path(path)
    if not rows:
        path.write_text("")
        return
    columns = list(rows[0].keys())
    if fmt == "csv":
        lines = [",".join(columns)]
        lines += [",".join(_fmt(row[c]) for c in columns) for row in rows]
    elif fmt == "jsonl":
        lines = [json.dumps(row) for row in rows]
    else:
        raise ValidationError(f"unknown format: {fmt}")
    path.write_text("\n".join(lines) + "\n")


# --------------------------------------------------------------------------
# figure presets


def _points(
    spec: SweepSpec, *, lams=None, snrs=None, lws=None, ns=(50,),
    configs=(("conventional", 1.0),),
) -> list[SweepPoint]:
    lams = spec.lambda_grid if lams is None else lams
    snrs = snrs if snrs is not None else (10.0,)
    lws = lws if lws is not None else (1e5,)
    out = []
    for snr, lw, lam, n, (variant, p) in itertools.product(
        snrs, lws, lams, ns, configs
    ):
        for seed in spec.seeds:
            out.append(SweepPoint(
                shaping_factor=float(lam), weight_p=float(p), filter_n=int(n),
                snr_db=float(snr), linewidth_hz=float(lw), variant=variant,
                seed=int(seed),
            ))
    return out


def preset_fig3(spec: SweepSpec) -> list[SweepPoint]:
    """Conventional recovery vs shaping factor for several filter lengths."""
    return _points(spec, snrs=(9.0, 10.0), ns=DEFAULT_N_GRID)


def preset_fig4(spec: SweepSpec) -> list[SweepPoint]:
    """Median-threshold recovery across filter weights (weighting study)."""
    return _points(
        spec, configs=tuple(("conventional", p) for p in spec.p_grid)
    )


def preset_fig7(spec: SweepSpec) -> list[SweepPoint]:
    """MAP-threshold recovery across filter weights."""
    return _points(spec, configs=tuple(("modified", p) for p in spec.p_grid))


def preset_fig8(spec: SweepSpec) -> list[SweepPoint]:
    """Conventional vs jointly optimized recovery across shaping factors."""
    return _points(spec, configs=(("conventional", 1.0), ("modified", 3.0)))


def preset_fig9(spec: SweepSpec) -> list[SweepPoint]:
    """Phase-error comparison at three SNRs across shaping factors."""
    return _points(
        spec, snrs=(8.0, 10.0, 12.0),
        configs=(("conventional", 1.0), ("modified", 3.0)),
    )


def preset_fig10a(spec: SweepSpec) -> list[SweepPoint]:
    """Both variants at each SNR's optimal shaping factor."""
    out = []
    for snr in spec.snr_grid_db:
        lam = optimal_lambda(snr)
        out += _points(
            spec, lams=(lam,), snrs=(snr,),
            configs=(("conventional", 1.0), ("modified", 3.0)),
        )
    return out


def preset_fig10b(spec: SweepSpec) -> list[SweepPoint]:
    """Linewidth robustness at the SNR-10 optimal shaping factor."""
    return _points(
        spec, lams=(optimal_lambda(10.0),), lws=(1e5, 5e5, 1e6),
        configs=(("conventional", 1.0), ("modified", 3.0)),
    )


PRESETS = {
    "fig3": preset_fig3,
    "fig4": preset_fig4,
    "fig7": preset_fig7,
    "fig8": preset_fig8,
    "fig9": preset_fig9,
    "fig10a": preset_fig10a,
    "fig10b": preset_fig10b,
}


def preset_points(name: str, spec: SweepSpec) -> list[SweepPoint]:
    if name not in PRESETS:
        raise ValidationError(f"unknown preset: {name}")
    spec.validate()
    return PRESETS[name](spec)
