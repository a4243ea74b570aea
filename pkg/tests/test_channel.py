import math

import numpy as np
import pytest

from pscpr.channel import (
    ChannelParams,
    apply_channel,
    generate_symbol_indices,
    generate_symbols,
    simulate,
    wiener_phase,
)
from pscpr.constellation import shaped_source


class TestGenerateSymbols:
    def test_uniform_iid_frequencies(self, qam16):
        src = shaped_source(qam16, 0.0)
        n = 16000
        idx = generate_symbol_indices(src, n, seed=1, mode="iid")
        counts = np.bincount(idx, minlength=16)
        # binomial: mean 1000, sigma = sqrt(n p (1-p)) ~ 30.6
        sigma = math.sqrt(n * (1 / 16) * (15 / 16))
        assert np.all(np.abs(counts - 1000) < 5 * sigma)

    def test_constant_composition_counts_exact(self, qam16):
        src = shaped_source(qam16, 0.1)
        n = 2**17
        idx = generate_symbol_indices(src, n, seed=3, mode="constant_composition")
        counts = np.bincount(idx, minlength=16)
        assert counts.sum() == n
        # largest-remainder apportionment of n * pmf
        exact = n * src.pmf
        base = np.floor(exact).astype(int)
        rem = exact - base
        base[np.argsort(-rem)[: n - base.sum()]] += 1
        assert np.array_equal(counts, base)
        assert np.abs(counts - exact).max() < 1.0

    def test_iid_empirical_entropy(self, qam16):
        src = shaped_source(qam16, 0.1)
        idx = generate_symbol_indices(src, 2**17, seed=7, mode="iid")
        freq = np.bincount(idx, minlength=16) / 2**17
        emp_entropy = -(freq[freq > 0] * np.log2(freq[freq > 0])).sum()
        assert emp_entropy == pytest.approx(src.entropy_bits, abs=0.01)

    def test_symbols_are_constellation_points(self, qam16):
        src = shaped_source(qam16, 0.2)
        tx = generate_symbols(src, qam16, 500, seed=0)
        assert set(tx.tolist()) <= set(qam16.points.tolist())

    def test_deterministic_given_seed(self, qam16):
        src = shaped_source(qam16, 0.05)
        for mode in ("iid", "constant_composition"):
            a = generate_symbol_indices(src, 4096, seed=11, mode=mode)
            b = generate_symbol_indices(src, 4096, seed=11, mode=mode)
            c = generate_symbol_indices(src, 4096, seed=12, mode=mode)
            assert np.array_equal(a, b)
            assert not np.array_equal(a, c)

    def test_bad_args(self, qam16):
        src = shaped_source(qam16, 0.0)
        with pytest.raises(ValueError):
            generate_symbol_indices(src, 0, seed=0)
        with pytest.raises(ValueError):
            generate_symbol_indices(src, 10, seed=0, mode="bogus")


class TestWienerPhase:
    def test_zero_linewidth(self):
        assert np.array_equal(wiener_phase(100, 0.0, 56e9, seed=0), np.zeros(100))

    def test_starts_at_zero(self):
        assert wiener_phase(1000, 1e5, 56e9, seed=5)[0] == 0.0

    @pytest.mark.parametrize(
        "linewidth,expected",
        [(1e5, 1.121997376282069e-5), (1e6, 1.121997376282069e-4)],
    )
    def test_increment_variance(self, linewidth, expected):
        phase = wiener_phase(2**17 + 1, linewidth, 56e9, seed=2)
        increments = np.diff(phase)
        assert np.var(increments) == pytest.approx(expected, rel=0.03)
        # zero-mean increments: |mean| below 4 sigma of the sample mean
        assert abs(increments.mean()) < 4 * math.sqrt(expected / len(increments))

    def test_negative_linewidth_rejected(self):
        with pytest.raises(ValueError):
            wiener_phase(10, -1.0, 56e9, seed=0)


class TestApplyChannel:
    def test_noiseless_identity(self, qam16):
        src = shaped_source(qam16, 0.0)
        tx = generate_symbols(src, qam16, 256, seed=0)
        real = apply_channel(tx, np.zeros(256), math.inf, src.mean_energy, seed=0)
        assert np.array_equal(real.rx, tx)
        assert real.noise_var_per_component == 0.0

    def test_uniform_n0_at_10db(self, qam16):
        src = shaped_source(qam16, 0.0)
        tx = generate_symbols(src, qam16, 128, seed=0)
        real = apply_channel(tx, np.zeros(128), 10.0, src.mean_energy, seed=0)
        assert 2 * real.noise_var_per_component == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("lam", [0.0, 0.08, 0.3])
    def test_snr_calibration(self, qam16, lam):
        src = shaped_source(qam16, lam)
        n = 2**17
        params = ChannelParams(10.0, 1e5, 56e9, n, seed=4)
        real = simulate(qam16, src, params)
        noise = real.rx - real.tx * np.exp(1j * real.phase)
        measured = 10 * np.log10(
            np.mean(np.abs(real.tx) ** 2) / np.mean(np.abs(noise) ** 2)
        )
        assert measured == pytest.approx(10.0, abs=0.1)

    def test_phase_applied(self, qam16):
        src = shaped_source(qam16, 0.0)
        tx = generate_symbols(src, qam16, 64, seed=0)
        phase = np.full(64, 0.3)
        real = apply_channel(tx, phase, math.inf, src.mean_energy, seed=0)
        assert np.allclose(real.rx, tx * np.exp(0.3j))

    def test_reproducible(self, qam16):
        src = shaped_source(qam16, 0.12)
        params = ChannelParams(9.0, 1e5, 56e9, 4096, seed=99)
        a = simulate(qam16, src, params)
        b = simulate(qam16, src, params)
        assert np.array_equal(a.rx, b.rx)
        assert np.array_equal(a.tx, b.tx)
        assert np.array_equal(a.phase, b.phase)

    def test_bad_args(self, qam16):
        src = shaped_source(qam16, 0.0)
        tx = generate_symbols(src, qam16, 8, seed=0)
        with pytest.raises(ValueError):
            apply_channel(tx, np.zeros(7), 10.0, src.mean_energy, seed=0)
        with pytest.raises(ValueError):
            apply_channel(tx, np.zeros(8), 10.0, 0.0, seed=0)

    def test_params_validation(self):
        with pytest.raises(ValueError):
            ChannelParams(10.0, -1.0, 56e9, 100, seed=0)
        with pytest.raises(ValueError):
            ChannelParams(10.0, 1e5, 0.0, 100, seed=0)
        with pytest.raises(ValueError):
            ChannelParams(10.0, 1e5, 56e9, 0, seed=0)
        with pytest.raises(ValueError):
            ChannelParams(10.0, 1e5, 56e9, 100, seed=0, source_mode="nope")
