"""Rician amplitude statistics and ring decision thresholds.

The received amplitude of a symbol transmitted on ring A follows a Rician
density with the per-component noise variance sigma^2.  Weighting each
ring's density by its prior and intersecting adjacent pairs gives the
decision thresholds that minimize the ring misclassification probability;
the conventional alternative is the prior-free midpoint between radii.

All densities are evaluated in the log domain: the Bessel factor uses
scipy's exp-scaled ``ive``, so evaluation stays finite for arguments far
beyond the float64 overflow point of I0 itself.
"""

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy import integrate
from scipy.special import ive

from .constellation import Constellation, ShapedSource

__all__ = [
    "RingModel",
    "Thresholds",
    "rician_pdf",
    "log_rician_pdf",
    "mixture_pdf",
    "median_thresholds",
    "map_threshold_pair",
    "decision_error_probability",
    "estimate_noise_variance",
]


@dataclass(frozen=True)
class RingModel:
    """Amplitude rings with priors and receiver noise variance."""

    radii: NDArray[np.float64]
    probs: NDArray[np.float64]
    sigma2: float

    def __post_init__(self) -> None:
        radii = np.asarray(self.radii, dtype=float)
        probs = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "probs", probs)
        if radii.shape != probs.shape:
            raise ValueError("radii and probs must have equal length")
        if not np.all(np.diff(radii) > 0) or radii[0] <= 0:
            raise ValueError("radii must be positive and strictly ascending")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError("probs must be nonnegative and sum to 1")
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be > 0")

    @classmethod
    def from_source(
        cls, source: ShapedSource, constellation: Constellation, sigma2: float
    ) -> "RingModel":
        return cls(constellation.ring_radii.copy(), source.ring_probs.copy(), sigma2)


@dataclass(frozen=True)
class Thresholds:
    """Ring decision boundaries.

    ``r2 = inf`` means the outer ring is never selected.  Degenerate
    models may collapse the boundaries (r1 == r2, skipping the middle
    ring); the regular case satisfies 0 < r1 < r2.
    """

    r1: float
    r2: float
    kind: str  # "median" or "map"

    def __post_init__(self) -> None:
        if not 0 <= self.r1 <= self.r2:
            raise ValueError("thresholds must satisfy 0 <= r1 <= r2")


def log_rician_pdf(r, a: float, sigma2: float):
    """Log of the Rician density, finite for arbitrarily large r*a/sigma2."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("r must be >= 0")
    if a < 0:
        raise ValueError("a must be >= 0")
    if sigma2 <= 0:
        raise ValueError("sigma2 must be > 0")
    with np.errstate(divide="ignore"):
        logr = np.log(r)
    arg = r * a / sigma2
    # log I0(x) = log(ive(0, x)) + x; ive is the exp-scaled Bessel function.
    return logr - np.log(sigma2) - (r * r + a * a) / (2.0 * sigma2) + np.log(ive(0, arg)) + arg


def rician_pdf(r, a: float, sigma2: float):
    """Rician amplitude density (r/s2) exp(-(r^2+a^2)/(2 s2)) I0(r a / s2).

    Reduces to the Rayleigh density at a = 0; integrates to one over
    r in [0, inf) for any (a, sigma2).  Accepts scalar or array ``r``.
    """
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r_arr < 0):
        raise ValueError("r must be >= 0")
    out = np.zeros_like(r_arr)
    positive = r_arr > 0
    if positive.any():
        out[positive] = np.exp(log_rician_pdf(r_arr[positive], a, sigma2))
    return out if np.ndim(r) else float(out[0])


def mixture_pdf(r, model: RingModel):
    """Prior-weighted mixture of the per-ring Rician densities."""
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    out = np.zeros_like(r_arr)
    for prob, radius in zip(model.probs, model.radii):
        if prob > 0:
            out += prob * rician_pdf(r_arr, float(radius), model.sigma2)
    return out if np.ndim(r) else float(out[0])


def median_thresholds(constellation: Constellation) -> Thresholds:
    """Midpoints between adjacent ring radii (the prior-free convention)."""
    radii = constellation.ring_radii
    return Thresholds(
        r1=float((radii[0] + radii[1]) / 2.0),
        r2=float((radii[1] + radii[2]) / 2.0),
        kind="median",
    )


def _crossing_pair(
    p_lo: float, a_lo: float, p_hi: float, a_hi: float, sigma2: float
) -> float:
    """Amplitude where p_lo*f(r|a_lo) = p_hi*f(r|a_hi), a_lo < a_hi.

    The weighted log-ratio is monotone decreasing in r (monotone
    likelihood-ratio family), so the crossing is unique when it exists.
    Returns 0 if the outer density dominates everywhere and inf if it
    never catches up below a_hi + 20 sigma.
    """
    if p_hi == 0:
        return math.inf
    if p_lo == 0:
        return 0.0

    def log_ratio(r: float) -> float:
        return (
            math.log(p_lo)
            + float(log_rician_pdf(r, a_lo, sigma2))
            - math.log(p_hi)
            - float(log_rician_pdf(r, a_hi, sigma2))
        )

    sigma = math.sqrt(sigma2)
    cap = a_hi + 20.0 * sigma
    if log_ratio(a_lo) < 0:
        # Crossing below the inner radius; bracket towards zero.
        lo = 1e-12 * min(a_lo, sigma)
        if log_ratio(lo) < 0:
            return 0.0
        hi = a_lo
    else:
        lo = a_lo
        hi = min(a_hi, cap)
        while log_ratio(hi) > 0:
            hi = a_hi + 2.0 * (hi - a_hi) + sigma
            if hi > cap:
                return math.inf
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if log_ratio(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def map_threshold_pair(model: RingModel) -> Thresholds:
    """Thresholds minimizing the ring misclassification probability.

    Each boundary is the crossing of the adjacent prior-weighted Rician
    densities, found by bisection on the log-ratio.  A vanished middle
    ring collapses both boundaries onto the inner/outer crossing; a
    vanished outer ring yields an infinite r2.
    """
    radii = model.radii
    probs = model.probs
    s2 = model.sigma2
    if probs[1] == 0 and probs[0] > 0 and probs[2] > 0:
        r = _crossing_pair(float(probs[0]), float(radii[0]), float(probs[2]), float(radii[2]), s2)
        return Thresholds(r1=r, r2=r, kind="map")
    r1 = _crossing_pair(float(probs[0]), float(radii[0]), float(probs[1]), float(radii[1]), s2)
    r2 = _crossing_pair(float(probs[1]), float(radii[1]), float(probs[2]), float(radii[2]), s2)
    return Thresholds(r1=r1, r2=r2, kind="map")


def _tail_above(threshold: float, a: float, sigma2: float) -> float:
    """Integral of the Rician density over (threshold, inf)."""
    sigma = math.sqrt(sigma2)
    upper = max(a, threshold) + 45.0 * sigma
    if upper <= threshold:
        return 0.0
    points = [a] if threshold < a < upper else None
    value, _ = integrate.quad(
        rician_pdf, threshold, upper, args=(a, sigma2),
        epsabs=1e-12, epsrel=1e-10, points=points, limit=200,
    )
    return value


def _tail_below(threshold: float, a: float, sigma2: float) -> float:
    """Integral of the Rician density over [0, threshold)."""
    sigma = math.sqrt(sigma2)
    lower = max(0.0, min(a, threshold) - 45.0 * sigma)
    if lower >= threshold:
        return 0.0
    points = [a] if lower < a < threshold else None
    value, _ = integrate.quad(
        rician_pdf, lower, threshold, args=(a, sigma2),
        epsabs=1e-12, epsrel=1e-10, points=points, limit=200,
    )
    return value


def decision_error_probability(thresholds: Thresholds, model: RingModel) -> float:
    """Total probability of deciding the wrong ring between adjacent pairs.

    For each boundary r* between rings m and m+1 this accumulates
    p_m * P(R > r* | A_m) + p_{m+1} * P(R < r* | A_{m+1}), each tail
    evaluated by adaptive quadrature.
    """
    total = 0.0
    for m, r_star in enumerate((thresholds.r1, thresholds.r2)):
        if math.isinf(r_star):
            # This boundary never selects the outer ring: its whole prior
            # mass lands on the inner side.
            total += float(model.probs[m + 1])
            continue
        total += float(model.probs[m]) * _tail_above(r_star, float(model.radii[m]), model.sigma2)
        total += float(model.probs[m + 1]) * _tail_below(r_star, float(model.radii[m + 1]), model.sigma2)
    return total


def estimate_noise_variance(rx: NDArray[np.complex128], mean_energy: float) -> float:
    """Blind moment-based per-component noise variance estimate.

    Uses E|y|^2 = Es + N0 for the phase-rotated AWGN channel; the result
    is clipped at zero for noiseless inputs.
    """
    return max(float(np.mean(np.abs(rx) ** 2) - mean_energy) / 2.0, 0.0)
