"""Figure rendering for sweep outputs.

Each preset's records can be rendered to a PNG next to the delimited
output.  Rendering is purely a view of the records: it never feeds back
into the data path.
"""

from collections import defaultdict
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .harness import SweepRecord

__all__ = ["render", "PLOTTERS"]


def _mean_by(records, keys, value):
    """Group records by key fields and average a value over seeds."""
    groups = defaultdict(list)
    for rec in records:
        if rec.status != "ok":
            continue
        groups[tuple(getattr(rec, k) for k in keys)].append(getattr(rec, value))
    return {k: sum(v) / len(v) for k, v in groups.items()}


def _series(mean_map, fixed):
    """Extract a sorted (x, y) series where the leading key fields match."""
    xs, ys = [], []
    for key, val in sorted(mean_map.items()):
        if key[:-1] == fixed:
            xs.append(key[-1])
            ys.append(val)
    return xs, ys


def _plot_mi_vs_lambda_by_filter(records, ax):
    mi = _mean_by(records, ("snr_db", "filter_n", "shaping_factor"), "mi_bits")
    theory = _mean_by(records, ("snr_db", "shaping_factor"), "mi_theoretical_bits")
    snrs = sorted({rec.snr_db for rec in records})
    filters = sorted({rec.filter_n for rec in records})
    for snr in snrs:
        for n in filters:
            xs, ys = _series(mi, (snr, n))
            ax.plot(xs, ys, marker="o", ms=3, label=f"N={n}, {snr:g} dB")
        xs, ys = _series(theory, (snr,))
        ax.plot(xs, ys, "k--", alpha=0.6,
                label=f"theory, {snr:g} dB" if len(snrs) > 1 else "theory")
    ax.set_xlabel(r"shaping factor $\lambda$")
    ax.set_ylabel("MI (bit/symbol)")


def _plot_mi_vs_weight(records, ax):
    mi = _mean_by(records, ("shaping_factor", "weight_p"), "mi_bits")
    lams = sorted({rec.shaping_factor for rec in records})
    shown = lams if len(lams) <= 8 else lams[:: max(1, len(lams) // 8)]
    for lam in shown:
        xs, ys = _series(mi, (lam,))
        ax.plot(xs, ys, marker="o", ms=3, label=rf"$\lambda$={lam:g}")
    ax.set_xlabel("filter weight p")
    ax.set_ylabel("MI (bit/symbol)")


def _plot_mi_vs_lambda_by_variant(records, ax):
    mi = _mean_by(records, ("variant", "shaping_factor"), "mi_bits")
    theory = _mean_by(records, ("shaping_factor",), "mi_theoretical_bits")
    for variant in sorted({rec.variant for rec in records}):
        xs, ys = _series(mi, (variant,))
        ax.plot(xs, ys, marker="o", ms=3, label=variant)
    xs, ys = _series(theory, ())
    ax.plot(xs, ys, "k--", alpha=0.6, label="theory")
    ax.set_xlabel(r"shaping factor $\lambda$")
    ax.set_ylabel("MI (bit/symbol)")


def _plot_mse_vs_lambda(records, ax):
    mse = _mean_by(records, ("snr_db", "variant", "shaping_factor"), "phase_mse")
    for snr in sorted({rec.snr_db for rec in records}):
        for variant, style in (("conventional", "-"), ("modified", "--")):
            xs, ys = _series(mse, (snr, variant))
            if xs:
                ax.semilogy(xs, ys, style, marker="o", ms=3,
                            label=f"{variant}, {snr:g} dB")
    ax.set_xlabel(r"shaping factor $\lambda$")
    ax.set_ylabel(r"phase MSE (rad$^2$)")


def _plot_mi_vs_snr(records, ax):
    mi = _mean_by(records, ("variant", "snr_db"), "mi_bits")
    theory = _mean_by(records, ("snr_db",), "mi_theoretical_bits")
    for variant in sorted({rec.variant for rec in records}):
        xs, ys = _series(mi, (variant,))
        ax.plot(xs, ys, marker="o", ms=3, label=variant)
    xs, ys = _series(theory, ())
    ax.plot(xs, ys, "k--", alpha=0.6, label="theory")
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("MI (bit/symbol)")


def _plot_mi_vs_linewidth(records, ax):
    mi = _mean_by(records, ("variant", "linewidth_hz"), "mi_bits")
    for variant in sorted({rec.variant for rec in records}):
        xs, ys = _series(mi, (variant,))
        ax.semilogx(xs, ys, marker="o", ms=3, label=variant)
    ax.set_xlabel("combined linewidth (Hz)")
    ax.set_ylabel("MI (bit/symbol)")


PLOTTERS = {
    "fig3": _plot_mi_vs_lambda_by_filter,
    "fig4": _plot_mi_vs_weight,
    "fig7": _plot_mi_vs_weight,
    "fig8": _plot_mi_vs_lambda_by_variant,
    "fig9": _plot_mse_vs_lambda,
    "fig10a": _plot_mi_vs_snr,
    "fig10b": _plot_mi_vs_linewidth,
    "sweep": _plot_mi_vs_lambda_by_variant,
}


def render(records: Sequence[SweepRecord], preset: str, path: str | Path) -> Path:
    """Render the preset's standard view of the records to a PNG."""
    plotter = PLOTTERS.get(preset)
    if plotter is None:
        raise ValueError(f"no plotter for preset: {preset}")
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    plotter(records, ax)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out
