import math

import numpy as np
import pytest
from scipy import integrate

from pscpr.channel import ChannelParams, simulate
from pscpr.constellation import shaped_source
from pscpr.decision import (
    RingModel,
    Thresholds,
    decision_error_probability,
    estimate_noise_variance,
    log_rician_pdf,
    map_threshold_pair,
    median_thresholds,
    mixture_pdf,
    rician_pdf,
)

TABLE1_LAMBDA = {8: 0.12, 9: 0.10, 10: 0.08, 11: 0.06, 12: 0.06, 13: 0.04, 14: 0.02}
TABLE1_R1 = {8: 2.486, 9: 2.418, 10: 2.365, 11: 2.324, 12: 2.317, 13: 2.293, 14: 2.275}
TABLE1_R2 = {8: 4.551, 9: 4.368, 10: 4.218, 11: 4.096, 12: 4.015, 13: 3.937, 14: 3.875}


def make_model(qam16, lam, snr_db):
    source = shaped_source(qam16, lam)
    sigma2 = source.mean_energy * 10.0 ** (-snr_db / 10.0) / 2.0
    return RingModel.from_source(source, qam16, sigma2)


class TestRicianPdf:
    def test_zero_at_origin(self):
        assert rician_pdf(0.0, 1.0, 0.5) == 0.0
        assert rician_pdf(0.0, 0.0, 2.0) == 0.0

    def test_rayleigh_special_case(self):
        # a = 0 reduces to a Rayleigh density; at r = sigma = 1 the value
        # is exp(-1/2).
        assert rician_pdf(1.0, 0.0, 1.0) == pytest.approx(
            0.60653065971263342, abs=1e-14
        )

    @pytest.mark.parametrize(
        "a,sigma2", [(math.sqrt(2), 0.5), (3 * math.sqrt(2), 0.05)]
    )
    def test_normalization_quadrature_oracle(self, a, sigma2):
        upper = a + 12 * math.sqrt(sigma2)
        total, err = integrate.quad(
            rician_pdf, 0.0, upper, args=(a, sigma2), epsabs=1e-12, limit=200
        )
        assert total == pytest.approx(1.0, abs=1e-8)

    def test_matches_high_precision_reference(self):
        # direct formula with 50-digit Bessel evaluation
        mpmath = pytest.importorskip("mpmath")
        mpmath.mp.dps = 50
        for r, a, s2 in [(1.7, 1.4142, 0.5), (4.9, 4.2426, 0.05), (2.0, 3.0, 0.2)]:
            expected = (
                mpmath.mpf(r) / s2
                * mpmath.exp(-(mpmath.mpf(r) ** 2 + mpmath.mpf(a) ** 2) / (2 * mpmath.mpf(s2)))
                * mpmath.besseli(0, mpmath.mpf(r) * a / s2)
            )
            assert rician_pdf(r, a, s2) == pytest.approx(float(expected), rel=1e-12)

    def test_log_domain_stability(self):
        # r*a/sigma2 up to 1e6 must evaluate finite (log I0 would overflow
        # in linear domain beyond ~700)
        value = log_rician_pdf(100.0, 100.0, 0.01)
        assert math.isfinite(float(value))
        assert math.isfinite(float(log_rician_pdf(1000.0, 1000.0, 1.0)))

    def test_domain_violations(self):
        with pytest.raises(ValueError):
            rician_pdf(-0.1, 1.0, 1.0)
        with pytest.raises(ValueError):
            rician_pdf(1.0, -1.0, 1.0)
        with pytest.raises(ValueError):
            rician_pdf(1.0, 1.0, 0.0)

    def test_vectorized(self):
        r = np.linspace(0, 5, 64)
        vals = rician_pdf(r, 2.0, 0.3)
        assert vals.shape == r.shape
        assert vals[0] == 0.0
        assert np.all(vals >= 0)


class TestMixturePdf:
    def test_degenerate_single_ring(self, qam16):
        model = RingModel(qam16.ring_radii.copy(), np.array([1.0, 0.0, 0.0]), 0.4)
        r = np.linspace(0.01, 6, 50)
        assert np.allclose(
            mixture_pdf(r, model), rician_pdf(r, float(qam16.ring_radii[0]), 0.4)
        )

    def test_normalization(self, qam16):
        model = make_model(qam16, 0.15, 12.0)
        upper = float(model.radii[-1]) + 12 * math.sqrt(model.sigma2)
        total, _ = integrate.quad(
            mixture_pdf, 0.0, upper, args=(model,), epsabs=1e-12, limit=300
        )
        assert total == pytest.approx(1.0, abs=1e-8)

    def test_three_weighted_lobes(self, qam16):
        # local maxima near each radius, scaled by the ring priors
        model = make_model(qam16, 0.15, 12.0)
        r = np.linspace(0.05, 6.5, 2000)
        pdf = mixture_pdf(r, model)
        interior = (pdf[1:-1] > pdf[:-2]) & (pdf[1:-1] > pdf[2:])
        peaks = r[1:-1][interior]
        assert len(peaks) == 3
        assert np.abs(peaks - model.radii).max() < 0.25


class TestMedianThresholds:
    def test_values(self, qam16):
        thr = median_thresholds(qam16)
        assert thr.kind == "median"
        assert thr.r1 == pytest.approx(2.2882456112707372, abs=1e-12)
        assert thr.r2 == pytest.approx(3.7024591736438322, abs=1e-12)

    def test_brackets_middle_radius(self, qam16):
        thr = median_thresholds(qam16)
        assert thr.r1 < math.sqrt(10) < thr.r2


class TestMapThresholds:
    @pytest.mark.parametrize("snr_db", sorted(TABLE1_LAMBDA))
    def test_reference_operating_points(self, qam16, snr_db):
        model = make_model(qam16, TABLE1_LAMBDA[snr_db], float(snr_db))
        thr = map_threshold_pair(model)
        assert thr.kind == "map"
        assert thr.r1 == pytest.approx(TABLE1_R1[snr_db], abs=0.03)
        assert thr.r2 == pytest.approx(TABLE1_R2[snr_db], abs=0.03)

    def test_strong_shaping_outer_boundary(self, qam16):
        thr = map_threshold_pair(make_model(qam16, 0.15, 10.0))
        assert thr.r2 == pytest.approx(4.24, abs=0.03)

    def test_midpoint_limit_as_noise_vanishes(self, qam16):
        model = RingModel(
            qam16.ring_radii.copy(), np.array([1 / 3, 1 / 3, 1 / 3]), 1e-4
        )
        thr = map_threshold_pair(model)
        mid1 = (model.radii[0] + model.radii[1]) / 2
        mid2 = (model.radii[1] + model.radii[2]) / 2
        assert abs(thr.r1 - mid1) < 0.01
        assert abs(thr.r2 - mid2) < 0.01
        # dense grid scan of the weighted log-ratio confirms the unique
        # crossing sits where the bisection put it
        r = np.linspace(mid1 - 0.05, mid1 + 0.05, 4001)
        ratio = (
            np.log(model.probs[0])
            + log_rician_pdf(r, float(model.radii[0]), model.sigma2)
            - np.log(model.probs[1])
            - log_rician_pdf(r, float(model.radii[1]), model.sigma2)
        )
        signs = np.sign(ratio)
        flips = np.nonzero(np.diff(signs))[0]
        assert len(flips) == 1
        assert abs(r[flips[0]] - thr.r1) < (r[1] - r[0]) * 2

    def test_vanishing_outer_prior_gives_infinite_boundary(self, qam16):
        model = RingModel(
            qam16.ring_radii.copy(), np.array([0.6, 0.4, 0.0]), 0.4
        )
        thr = map_threshold_pair(model)
        assert math.isinf(thr.r2)
        assert math.isfinite(thr.r1)

    def test_vanishing_middle_prior_collapses_boundaries(self, qam16):
        model = RingModel(
            qam16.ring_radii.copy(), np.array([0.7, 0.0, 0.3]), 0.4
        )
        thr = map_threshold_pair(model)
        assert thr.r1 == thr.r2
        assert model.radii[0] < thr.r1 < model.radii[2]

    def test_r2_nondecreasing_in_shaping(self, qam16):
        # stronger shaping lowers the outer prior, pushing the boundary out
        lams = [round(0.02 * i, 2) for i in range(16)]
        r2s = [map_threshold_pair(make_model(qam16, lam, 10.0)).r2 for lam in lams]
        assert all(b >= a - 1e-12 for a, b in zip(r2s, r2s[1:]))


class TestDecisionErrorProbability:
    def test_vanishing_noise_separates_lobes(self, qam16):
        model = RingModel(
            qam16.ring_radii.copy(), np.array([0.5, 0.3, 0.2]), 1e-6
        )
        err = decision_error_probability(median_thresholds(qam16), model)
        assert err < 1e-12

    def test_map_beats_median_under_strong_shaping(self, qam16):
        model = make_model(qam16, 0.15, 10.0)
        err_map = decision_error_probability(map_threshold_pair(model), model)
        err_med = decision_error_probability(median_thresholds(qam16), model)
        assert err_map < err_med

    def test_map_minimizes_over_grid_oracle(self, qam16):
        # brute force: no candidate pair on a fine grid beats the MAP pair
        model = make_model(qam16, 0.08, 10.0)
        thr = map_threshold_pair(model)
        best = decision_error_probability(thr, model)
        r1_grid = np.linspace(thr.r1 - 0.5, thr.r1 + 0.5, 50)
        r2_grid = np.linspace(thr.r2 - 0.5, thr.r2 + 0.5, 40)
        for r1 in r1_grid:
            for r2 in r2_grid:
                candidate = Thresholds(float(r1), float(r2), "map")
                assert decision_error_probability(candidate, model) >= best - 1e-12

    @pytest.mark.parametrize("snr_db,lam", [(8.0, 0.12), (10.0, 0.2), (12.0, 0.02)])
    def test_map_optimal_along_axes(self, qam16, snr_db, lam):
        # 1-D scans (grid step 1e-3) through the MAP point on each axis
        model = make_model(qam16, lam, snr_db)
        thr = map_threshold_pair(model)
        best = decision_error_probability(thr, model)
        for r1 in np.arange(thr.r1 - 0.02, thr.r1 + 0.02, 1e-3):
            assert decision_error_probability(
                Thresholds(float(r1), thr.r2, "map"), model
            ) >= best - 1e-12
        for r2 in np.arange(thr.r2 - 0.02, thr.r2 + 0.02, 1e-3):
            assert decision_error_probability(
                Thresholds(thr.r1, float(r2), "map"), model
            ) >= best - 1e-12

    def test_infinite_boundary_counts_outer_mass(self, qam16):
        model = RingModel(
            qam16.ring_radii.copy(), np.array([0.5, 0.3, 0.2]), 1e-6
        )
        thr = Thresholds(median_thresholds(qam16).r1, math.inf, "map")
        err = decision_error_probability(thr, model)
        assert err == pytest.approx(0.2, abs=1e-9)


class TestBlindNoiseEstimate:
    def test_recovers_channel_variance(self, qam16):
        source = shaped_source(qam16, 0.08)
        params = ChannelParams(10.0, 1e5, 56e9, 2**16, seed=17)
        real = simulate(qam16, source, params)
        blind = estimate_noise_variance(real.rx, source.mean_energy)
        assert blind == pytest.approx(real.noise_var_per_component, rel=0.02)

    def test_noiseless_clips_to_zero(self, qam16):
        source = shaped_source(qam16, 0.0)
        tx = qam16.points[np.zeros(64, dtype=int)]
        assert estimate_noise_variance(tx * 0.999, source.mean_energy * 0.998**2) >= 0.0


class TestModelValidation:
    def test_ring_model_rejects_bad_inputs(self, qam16):
        radii = qam16.ring_radii.copy()
        with pytest.raises(ValueError):
            RingModel(radii, np.array([0.5, 0.5, 0.5]), 0.1)
        with pytest.raises(ValueError):
            RingModel(radii, np.array([0.5, 0.3, 0.2]), 0.0)
        with pytest.raises(ValueError):
            RingModel(radii[::-1].copy(), np.array([0.5, 0.3, 0.2]), 0.1)

    def test_thresholds_ordering(self):
        with pytest.raises(ValueError):
            Thresholds(2.0, 1.0, "median")
