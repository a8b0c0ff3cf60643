import numpy as np
import pytest

from coexsim import channel, ofdm


class TestConfig:
    def test_defaults_fit_cyclic_prefix(self):
        cfg = channel.ChannelConfig()
        assert cfg.n_taps * cfg.sample_period_s <= channel.CYCLIC_PREFIX_S * (1 + 1e-9)

    def test_too_long_rejected(self):
        with pytest.raises(ValueError, match="prefix"):
            channel.ChannelConfig(n_taps=17)

    def test_tap_variance_ratio(self):
        std = channel.tap_std_profile(channel.ChannelConfig())
        assert (std[1] / std[0]) ** 2 == pytest.approx(np.exp(-0.5), rel=1e-12)

    def test_profile_normalized(self):
        std = channel.tap_std_profile(channel.ChannelConfig())
        assert np.sum(std**2) == pytest.approx(1.0, rel=1e-12)


class TestDrawChannel:
    def test_single_tap_is_flat(self):
        cfg = channel.ChannelConfig(tau_rms_s=0.0, n_taps=1)
        rng = np.random.default_rng(0)
        r = channel.draw_channel(cfg, rng)
        mags = np.abs(r.h_freq)
        assert np.allclose(mags, mags[0])

    def test_flat_debug_mode_is_exactly_one(self):
        r = channel.draw_channel(
            channel.ChannelConfig(flat=True), np.random.default_rng(0)
        )
        assert np.all(r.h_grid == 1.0)

    def test_unit_average_energy(self):
        cfg = channel.ChannelConfig()
        rng = np.random.default_rng(1)
        total = 0.0
        n = 100_000
        std = channel.tap_std_profile(cfg)
        g = rng.standard_normal((n, cfg.n_taps, 2))
        taps = std * (g[..., 0] + 1j * g[..., 1]) / np.sqrt(2)
        total = np.mean(np.sum(np.abs(taps) ** 2, axis=1))
        assert total == pytest.approx(1.0, abs=0.01)

    def test_h_freq_matches_direct_dft(self):
        rng = np.random.default_rng(2)
        r = channel.draw_channel(channel.ChannelConfig(), rng)
        k = np.arange(64)
        direct = np.array(
            [np.sum(r.taps * np.exp(-2j * np.pi * kk * np.arange(r.taps.size) / 64))
             for kk in k]
        )
        assert np.max(np.abs(direct - r.h_freq)) / np.max(np.abs(direct)) < 1e-10

    def test_mean_subcarrier_gain_is_unity(self):
        cfg = channel.ChannelConfig()
        rng = np.random.default_rng(3)
        acc = np.zeros(64)
        n = 10_000
        for _ in range(n):
            acc += np.abs(channel.draw_channel(cfg, rng).h_freq) ** 2
        assert np.mean(acc / n) == pytest.approx(1.0, abs=0.03)

    def test_grid_order_puts_dc_in_middle(self):
        r = channel.draw_channel(channel.ChannelConfig(), np.random.default_rng(4))
        assert r.h_grid[32] == r.h_freq[0]


class TestNoise:
    def test_noise_variance_examples(self):
        assert channel.noise_variance(0.0, ofdm.MODES[12]) == pytest.approx(1.0)
        assert channel.noise_variance(0.0, ofdm.MODES[54]) == pytest.approx(48 / 216)
        assert channel.noise_variance(10.0, ofdm.MODES[12]) == pytest.approx(0.1)

    def test_zero_noise_is_identity(self):
        rng = np.random.default_rng(5)
        grid = ofdm.map_symbols(rng.integers(0, 2, 96, np.uint8), ofdm.MODES[12])
        out = channel.add_noise(grid, 0.0, rng)
        assert np.array_equal(out.symbols, grid.symbols)

    def test_negative_noise_rejected(self):
        grid = ofdm.SubcarrierGrid(np.zeros((1, 64), complex))
        with pytest.raises(ValueError):
            channel.add_noise(grid, -1.0, np.random.default_rng(0))

    def test_noise_calibration(self):
        rng = np.random.default_rng(6)
        n_sym = 2000  # 2000 * 52 > 1e5 occupied cells
        grid = ofdm.SubcarrierGrid(np.zeros((n_sym, 64), complex))
        out = channel.add_noise(grid, 1.0, rng)
        cells = out.symbols[:, ofdm.OCCUPIED_COLS].ravel()
        assert np.mean(np.abs(cells) ** 2) == pytest.approx(1.0, abs=0.02)
        assert np.var(cells.real) == pytest.approx(0.5, rel=0.02)
        assert np.var(cells.imag) == pytest.approx(0.5, rel=0.02)
        # nulls stay silent
        null_cols = ofdm.NULL_SUBCARRIERS + 32
        assert not np.any(out.symbols[:, null_cols])
