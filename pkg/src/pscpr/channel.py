"""Shaped symbol generation and the Wiener phase noise + AWGN channel.

All randomness flows through explicitly seeded ``numpy.random.Generator``
instances, so any realization is reproducible from its parameters and can
be generated concurrently with others.
"""

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .constellation import Constellation, ShapedSource

__all__ = [
    "SOURCE_MODES",
    "ChannelParams",
    "ChannelRealization",
    "generate_symbol_indices",
    "generate_symbols",
    "wiener_phase",
    "apply_channel",
    "simulate",
]

SOURCE_MODES = ("iid", "constant_composition")


@dataclass(frozen=True)
class ChannelParams:
    """Scalar description of one channel realization.

    ``snr_db`` is Es/N0 with Es the *shaped* mean symbol energy, so at a
    fixed SNR the additive noise power shrinks as shaping strengthens.
    """

    snr_db: float
    linewidth_hz: float
    baud: float
    n_symbols: int
    seed: int
    source_mode: str = "iid"

    def __post_init__(self) -> None:
        if self.linewidth_hz < 0:
            raise ValueError("linewidth must be >= 0")
        if self.baud <= 0:
            raise ValueError("baud rate must be > 0")
        if self.n_symbols < 1:
            raise ValueError("n_symbols must be >= 1")
        if self.source_mode not in SOURCE_MODES:
            raise ValueError(f"source_mode must be one of {SOURCE_MODES}")


@dataclass(frozen=True)
class ChannelRealization:
    """Transmitted symbols, phase trajectory and received symbols.

    ``noise_var_per_component`` is the variance of each of the real and
    imaginary noise components (N0/2); it is the sigma^2 that enters the
    Rician amplitude statistics at the receiver.
    """

    tx: NDArray[np.complex128]
    phase: NDArray[np.float64]
    rx: NDArray[np.complex128]
    noise_var_per_component: float
    seed: int


def generate_symbol_indices(
    source: ShapedSource, n: int, seed: "int | np.random.SeedSequence", mode: str = "iid"
) -> NDArray[np.int64]:
    """Draw per-symbol constellation indices from a shaped source.

    ``iid`` draws independently from the PMF.  ``constant_composition``
    fixes the empirical count of each point to its largest-remainder
    integer apportionment of n * pmf and shuffles the order, mimicking a
    distribution matcher output.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if mode not in SOURCE_MODES:
        raise ValueError(f"mode must be one of {SOURCE_MODES}")
    rng = np.random.default_rng(seed)
    if mode == "iid":
        return rng.choice(len(source.pmf), size=n, p=source.pmf).astype(np.int64)
    counts = _apportion_counts(n, source.pmf)
    indices = np.repeat(np.arange(len(counts), dtype=np.int64), counts)
    rng.shuffle(indices)
    return indices


def _apportion_counts(n: int, pmf: NDArray[np.float64]) -> NDArray[np.int64]:
    # Largest-remainder rounding: floor everything, then hand the leftover
    # symbols to the points with the largest fractional parts.
    exact = n * pmf
    counts = np.floor(exact).astype(np.int64)
    remainder = exact - counts
    short = n - int(counts.sum())
    if short > 0:
        counts[np.argsort(-remainder)[:short]] += 1
    return counts


def generate_symbols(
    source: ShapedSource,
    constellation: Constellation,
    n: int,
    seed: "int | np.random.SeedSequence",
    mode: str = "iid",
) -> NDArray[np.complex128]:
    """Generate a shaped transmit-symbol sequence (see generate_symbol_indices)."""
    return constellation.points[generate_symbol_indices(source, n, seed, mode)]


def wiener_phase(
    n: int, linewidth_hz: float, baud: float, seed: "int | np.random.SeedSequence"
) -> NDArray[np.float64]:
    """Laser phase noise trajectory: a Wiener process starting at zero.

    The per-symbol increment is zero-mean Gaussian with variance
    2*pi*linewidth_hz/baud.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if linewidth_hz < 0:
        raise ValueError("linewidth must be >= 0")
    if baud <= 0:
        raise ValueError("baud rate must be > 0")
    phase = np.zeros(n)
    if linewidth_hz > 0 and n > 1:
        sigma_p = math.sqrt(2.0 * math.pi * linewidth_hz / baud)
        rng = np.random.default_rng(seed)
        phase[1:] = np.cumsum(rng.normal(0.0, sigma_p, size=n - 1))
    return phase


def apply_channel(
    tx: NDArray[np.complex128],
    phase: NDArray[np.float64],
    snr_db: float,
    mean_energy: float,
    seed: "int | np.random.SeedSequence",
) -> ChannelRealization:
    """Rotate symbols by the phase trajectory and add complex AWGN.

    The total complex noise variance is N0 = mean_energy / 10^(snr_db/10);
    an infinite SNR disables the noise entirely.
    """
    if len(tx) != len(phase):
        raise ValueError("tx and phase must have equal length")
    if mean_energy <= 0:
        raise ValueError("mean_energy must be > 0")
    rx = tx * np.exp(1j * phase)
    if math.isinf(snr_db):
        sigma2 = 0.0
    else:
        n0 = mean_energy * 10.0 ** (-snr_db / 10.0)
        sigma2 = n0 / 2.0
        rng = np.random.default_rng(seed)
        noise = rng.normal(0.0, math.sqrt(sigma2), size=(2, len(tx)))
        rx = rx + noise[0] + 1j * noise[1]
    return ChannelRealization(tx, phase, rx, sigma2, seed)


def simulate(
    constellation: Constellation, source: ShapedSource, params: ChannelParams
) -> ChannelRealization:
    """Run the full transmit chain for one parameter set.

    The symbol, phase and noise streams are split deterministically from
    ``params.seed`` so the three stages never share an RNG stream.
    """
    seeds = np.random.SeedSequence(params.seed).spawn(3)
    tx = generate_symbols(
        source, constellation, params.n_symbols, seeds[0], params.source_mode
    )
    phase = wiener_phase(params.n_symbols, params.linewidth_hz, params.baud, seeds[1])
    channel = apply_channel(tx, phase, params.snr_db, source.mean_energy, seeds[2])
    return ChannelRealization(
        channel.tx, channel.phase, channel.rx,
        channel.noise_var_per_component, params.seed,
    )
