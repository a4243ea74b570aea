"""16-QAM geometry and the Maxwell-Boltzmann shaping family.

The constellation is kept on the unnormalized +-1/+-3 grid so that ring
radii and decision thresholds are expressed in the same units everywhere;
the shaped mean symbol energy is carried explicitly for SNR calibration.
"""

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

__all__ = [
    "Constellation",
    "ShapedSource",
    "build_16qam",
    "shaped_source",
    "lambda_for_entropy",
]

_LEVELS = (-3.0, -1.0, 1.0, 3.0)


@dataclass(frozen=True)
class Constellation:
    """16-QAM point set with its three amplitude rings.

    Attributes
    ----------
    points : complex ndarray, shape (16,)
        Constellation points on the unnormalized grid.
    ring_radii : float ndarray, shape (3,)
        Ring amplitudes in ascending order: sqrt(2), sqrt(10), 3*sqrt(2).
    ring_of_point : int ndarray, shape (16,)
        Ring index (0 inner, 1 middle, 2 outer) of each point.
    """

    points: NDArray[np.complex128]
    ring_radii: NDArray[np.float64]
    ring_of_point: NDArray[np.int64]

    def __post_init__(self) -> None:
        for arr in (self.points, self.ring_radii, self.ring_of_point):
            arr.flags.writeable = False

    @property
    def energies(self) -> NDArray[np.float64]:
        """|x_i|^2 of each point."""
        return np.abs(self.points) ** 2


@dataclass(frozen=True)
class ShapedSource:
    """Maxwell-Boltzmann shaped symbol distribution over a constellation.

    Attributes
    ----------
    shaping_factor : float
        Nonnegative exponent of the Maxwell-Boltzmann weights; 0 is uniform.
    pmf : float ndarray, shape (16,)
        Per-point probabilities.
    ring_probs : float ndarray, shape (3,)
        Total probability of each amplitude ring.
    entropy_bits : float
        Source entropy in bit/symbol (base-2).
    mean_energy : float
        E|X|^2 in constellation units.
    """

    shaping_factor: float
    pmf: NDArray[np.float64]
    ring_probs: NDArray[np.float64]
    entropy_bits: float
    mean_energy: float

    def __post_init__(self) -> None:
        self.pmf.flags.writeable = False
        self.ring_probs.flags.writeable = False


def build_16qam() -> Constellation:
    """Build the canonical 16-QAM constellation on the +-1/+-3 grid.

    Points are ordered row-major over (real, imag) levels.  The three
    amplitude rings hold 4, 8 and 4 points respectively.
    """
    points = np.array(
        [complex(re, im) for re in _LEVELS for im in _LEVELS], dtype=np.complex128
    )
    ring_radii = np.array([np.sqrt(2.0), np.sqrt(10.0), 3.0 * np.sqrt(2.0)])
    ring_of_point = np.argmin(
        np.abs(np.abs(points)[:, None] - ring_radii[None, :]), axis=1
    ).astype(np.int64)
    return Constellation(points, ring_radii, ring_of_point)


def shaped_source(constellation: Constellation, shaping_factor: float) -> ShapedSource:
    """Construct the Maxwell-Boltzmann source for a given shaping factor.

    Point probabilities are proportional to exp(-shaping_factor * |x_i|^2),
    so equal-energy points are equiprobable and larger factors concentrate
    probability on the inner ring.

    Raises
    ------
    ValueError
        If ``shaping_factor`` is negative.
    """
    if shaping_factor < 0:
        raise ValueError(f"shaping factor must be >= 0, got {shaping_factor}")
    energies = constellation.energies
    # Subtract the minimum energy before exponentiating; the offset cancels
    # in the normalization and keeps weights bounded for large factors.
    weights = np.exp(-shaping_factor * (energies - energies.min()))
    pmf = weights / weights.sum()
    ring_probs = np.zeros(3)
    np.add.at(ring_probs, constellation.ring_of_point, pmf)
    # Entries can underflow to zero at extreme factors; 0 log 0 is 0.
    nonzero = pmf > 0
    entropy_bits = float(-(pmf[nonzero] * np.log2(pmf[nonzero])).sum())
    mean_energy = float((pmf * energies).sum())
    return ShapedSource(float(shaping_factor), pmf, ring_probs, entropy_bits, mean_energy)


def lambda_for_entropy(
    constellation: Constellation, target_bits: float, tol: float = 1e-9
) -> float:
    """Invert the entropy map: find the shaping factor with a given entropy.

    Entropy decreases monotonically from 4 bit/symbol at factor 0 towards
    2 bit/symbol (inner ring only) as the factor grows, so the target must
    lie in that range.  Solved by bisection to ``tol`` bits.

    Raises
    ------
    ValueError
        If ``target_bits`` is outside the achievable range.
    """
    if not 0.0 < target_bits <= 4.0:
        raise ValueError(f"target entropy must be in (0, 4], got {target_bits}")
    if target_bits == 4.0:
        return 0.0

    def entropy(lam: float) -> float:
        return shaped_source(constellation, lam).entropy_bits

    lo, hi = 0.0, 1.0
    while entropy(hi) > target_bits:
        hi *= 2.0
        if hi > 1e6:
            raise ValueError(
                f"target entropy {target_bits} bit/symbol is not achievable"
            )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        h_mid = entropy(mid)
        if abs(h_mid - target_bits) < tol:
            return mid
        if h_mid > target_bits:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)
