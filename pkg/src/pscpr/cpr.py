"""QPSK-partition carrier phase recovery with ring weighting.

Inner- and outer-ring symbols carry QPSK-like modulation angles, so their
fourth power strips the modulation and leaves four times the carrier
phase.  The estimator averages amplitude-normalized fourth powers over a
sliding window, with a tunable weight on the outer ring, recovers the
angle, unwraps it and finally removes residual quarter-plane slips
against the known transmitted symbols.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .channel import ChannelRealization
from .constellation import Constellation
from .decision import Thresholds, median_thresholds

__all__ = [
    "CprConfig",
    "CprResult",
    "classify_rings",
    "vv_estimate",
    "unwrap",
    "genie_slip_correct",
    "run_cpr",
]

_QUARTER_ROTATIONS = np.array([1.0, 1.0j, -1.0, -1.0j])


@dataclass(frozen=True)
class CprConfig:
    """Carrier phase recovery settings.

    ``half_window`` is half the averaging filter length N (the filter
    spans N + 1 symbols).  ``weight_p`` scales the outer-ring fourth-power
    terms.  ``variant`` labels the canonical configurations: conventional
    uses median thresholds with weight 1, modified uses MAP thresholds
    with a tunable weight.  ``normalize_fourth_power`` switches between
    unit-amplitude fourth powers (default, so the weight is the only ring
    weighting) and raw fourth powers.  ``slip_block`` is the genie
    correction block length in symbols.
    """

    thresholds: Thresholds
    half_window: int
    weight_p: float = 1.0
    variant: str = "modified"
    normalize_fourth_power: bool = True
    slip_block: int = 4

    def __post_init__(self) -> None:
        if self.half_window < 0:
            raise ValueError("half_window must be >= 0")
        if self.weight_p < 0:
            raise ValueError("weight_p must be >= 0")
        if self.slip_block < 1:
            raise ValueError("slip_block must be >= 1")
        if self.variant not in ("conventional", "modified"):
            raise ValueError("variant must be 'conventional' or 'modified'")

    @classmethod
    def conventional(cls, constellation: Constellation, half_window: int,
                     slip_block: int = 4) -> "CprConfig":
        """Median thresholds with unit outer-ring weight."""
        return cls(
            thresholds=median_thresholds(constellation),
            half_window=half_window,
            weight_p=1.0,
            variant="conventional",
            slip_block=slip_block,
        )


@dataclass(frozen=True)
class CprResult:
    """Outputs of the recovery pipeline.

    ``est_phase`` is the final phase estimate including the genie slip
    corrections, so ``compensated == rx * exp(-1j * est_phase)`` holds
    exactly.  ``used_mask`` marks symbols classified onto the inner or
    outer ring (the ones feeding the estimator).
    """

    est_phase: NDArray[np.float64]
    compensated: NDArray[np.complex128]
    ring_labels: NDArray[np.int64]
    used_mask: NDArray[np.bool_]


def classify_rings(
    rx: NDArray[np.complex128], thresholds: Thresholds
) -> NDArray[np.int64]:
    """Assign each symbol to a ring by amplitude; ties go outward."""
    amplitude = np.abs(rx)
    return np.where(
        amplitude < thresholds.r1, 0, np.where(amplitude < thresholds.r2, 1, 2)
    ).astype(np.int64)


def vv_estimate(
    rx: NDArray[np.complex128],
    rings: NDArray[np.int64],
    config: CprConfig,
) -> NDArray[np.float64]:
    """Raw windowed fourth-power phase estimates, one per symbol.

    Middle-ring symbols contribute nothing; the window shrinks at the
    sequence edges.  Empty windows repeat the previous estimate (zero at
    the start).  Estimates live in (-pi/2, 0] until unwrapped.
    """
    if len(rx) != len(rings):
        raise ValueError("rx and rings must have equal length")
    n = len(rx)
    terms = np.zeros(n, dtype=np.complex128)
    inner = rings == 0
    outer = rings == 2
    if config.normalize_fourth_power:
        if inner.any():
            terms[inner] = (rx[inner] / np.abs(rx[inner])) ** 4
        if outer.any():
            terms[outer] = config.weight_p * (rx[outer] / np.abs(rx[outer])) ** 4
    else:
        terms[inner] = rx[inner] ** 4
        terms[outer] = config.weight_p * rx[outer] ** 4

    csum = np.concatenate([[0.0 + 0.0j], np.cumsum(terms)])
    k = np.arange(n)
    hw = config.half_window
    window_sum = csum[np.minimum(k + hw + 1, n)] - csum[np.maximum(k - hw, 0)]

    raw = np.empty(n)
    usable = window_sum != 0
    raw[usable] = (np.angle(window_sum[usable]) - np.pi) / 4.0
    if not usable.all():
        raw[~usable] = np.nan
        # Forward-fill: repeat the last usable estimate, zero before the first.
        filled = np.where(usable, k, 0)
        np.maximum.accumulate(filled, out=filled)
        raw = raw[filled]
        raw[np.isnan(raw)] = 0.0
    return raw


def unwrap(raw: NDArray[np.float64]) -> NDArray[np.float64]:
    """Resolve quarter-plane wraps so consecutive steps stay below pi/4.

    Each output equals the raw value shifted by the multiple of pi/2 that
    brings it closest to the previous output.
    """
    return np.unwrap(np.asarray(raw, dtype=float), period=np.pi / 2.0)


def _block_rotation_angles(
    compensated: NDArray[np.complex128],
    tx: NDArray[np.complex128],
    block: int,
) -> NDArray[np.float64]:
    """Per-block quarter-plane rotation angles best aligning with tx.

    Maximizes Re(rot * sum(y * conj(x))) per block over the four
    quarter-plane rotations, which minimizes sum |rot*y - x|^2.
    """
    n = len(compensated)
    n_blocks = -(-n // block)
    stat = np.zeros(n_blocks * block, dtype=np.complex128)
    stat[:n] = compensated * np.conj(tx)
    block_sum = stat.reshape(n_blocks, block).sum(axis=1)
    scores = (block_sum[:, None] * _QUARTER_ROTATIONS[None, :]).real
    return np.angle(_QUARTER_ROTATIONS[np.argmax(scores, axis=1)])


def genie_slip_correct(
    compensated: NDArray[np.complex128],
    tx: NDArray[np.complex128],
    block: int,
) -> NDArray[np.complex128]:
    """Remove quarter-plane slips by block against known symbols.

    Each block of ``block`` symbols is rotated by whichever of
    {1, j, -1, -j} minimizes its squared distance to the transmitted
    symbols.
    """
    if len(compensated) != len(tx):
        raise ValueError("compensated and tx must have equal length")
    if block < 1:
        raise ValueError("block must be >= 1")
    angles = _block_rotation_angles(compensated, tx, block)
    rotations = np.repeat(np.exp(1j * angles), block)[: len(compensated)]
    return compensated * rotations


def run_cpr(realization: ChannelRealization, config: CprConfig) -> CprResult:
    """Full pipeline: classify, estimate, unwrap, compensate, deslip.

    The block rotations from the genie stage are folded into the returned
    phase track (with 2*pi continuity across blocks) so the estimate, the
    compensated symbols and the true phase remain mutually consistent.
    """
    rx = realization.rx
    rings = classify_rings(rx, config.thresholds)
    raw = vv_estimate(rx, rings, config)
    est = unwrap(raw)
    compensated = rx * np.exp(-1j * est)

    angles = _block_rotation_angles(compensated, realization.tx, config.slip_block)
    rotations = np.exp(1j * angles)
    # exp(+j*theta) applied to the symbols is a -theta shift of the phase
    # estimate; unwrap the shifts across blocks so the track keeps its
    # absolute 2*pi branch instead of collapsing to (-pi, pi].
    shifts = np.unwrap(-angles, period=2.0 * np.pi)
    n = len(rx)
    est = est + np.repeat(shifts, config.slip_block)[:n]
    compensated = compensated * np.repeat(rotations, config.slip_block)[:n]
    return CprResult(
        est_phase=est,
        compensated=compensated,
        ring_labels=rings,
        used_mask=rings != 1,
    )
