"""Multipath Rayleigh block-fading channel and calibrated AWGN.

Taps follow an exponential power delay profile at the 50 ns sample period
of the 20 MHz channel, normalized to unit average energy; one realization
holds for a whole packet. The receiver is assumed to know the frequency
response exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .ofdm import ModeParams, N_DATA, N_FFT, OCCUPIED_COLS, SubcarrierGrid

CYCLIC_PREFIX_S = 800e-9


@dataclass(frozen=True)
class ChannelConfig:
    """Exponential-profile channel; `flat` forces h = 1 exactly (debug)."""

    tau_rms_s: float = 100e-9
    sample_period_s: float = 50e-9
    n_taps: int = 16
    flat: bool = False

    def __post_init__(self):
        if self.n_taps < 1:
            raise ValueError("n_taps must be at least 1")
        if self.sample_period_s <= 0:
            raise ValueError("sample period must be positive")
        # keep the whole impulse response inside the cyclic prefix
        if self.n_taps * self.sample_period_s > CYCLIC_PREFIX_S * (1 + 1e-9):
            raise ValueError("tap span exceeds the 800 ns cyclic prefix")


@dataclass
class ChannelRealization:
    """Complex taps and their 64-point frequency response (DFT index order)."""

    taps: np.ndarray
    h_freq: np.ndarray

    @property
    def h_grid(self) -> np.ndarray:
        """Per-subcarrier gains reordered to grid columns k = -32 .. 31."""
        return np.fft.fftshift(self.h_freq)


@lru_cache(maxsize=None)
def tap_std_profile(cfg: ChannelConfig) -> np.ndarray:
    """Per-tap standard deviations of the normalized exponential profile."""
    k = np.arange(cfg.n_taps)
    if cfg.tau_rms_s > 0:
        var = np.exp(-k * cfg.sample_period_s / cfg.tau_rms_s)
    else:
        var = np.zeros(cfg.n_taps)
        var[0] = 1.0
    return np.sqrt(var / var.sum())


def draw_channel(cfg: ChannelConfig, rng: np.random.Generator) -> ChannelRealization:
    """Draw one block-fading realization (held for a whole packet)."""
    if cfg.flat:
        taps = np.ones(1, dtype=np.complex128)
    else:
        std = tap_std_profile(cfg)
        g = rng.standard_normal((cfg.n_taps, 2))
        taps = std * (g[:, 0] + 1j * g[:, 1]) / np.sqrt(2)
    return ChannelRealization(taps, np.fft.fft(taps, N_FFT))


def noise_variance(ebn0_db: float, mode: ModeParams) -> float:
    """Per-subcarrier complex noise variance for a target Eb/N0.

    With unit data-subcarrier energy, one OFDM symbol carries 48 units of
    energy and n_dbps information bits, so Eb/N0 = 48 / (n_dbps * N0).
    """
    return (N_DATA / mode.n_dbps) * 10.0 ** (-ebn0_db / 10.0)


def add_noise(
    grid: SubcarrierGrid, n0: float, rng: np.random.Generator
) -> SubcarrierGrid:
    """Add circular complex Gaussian noise of variance `n0` to every
    occupied subcarrier cell; n0 = 0 returns a bit-exact copy."""
    if n0 < 0:
        raise ValueError("noise variance must be non-negative")
    out = grid.symbols.copy()
    if n0 > 0:
        g = rng.standard_normal((grid.n_sym, OCCUPIED_COLS.size, 2))
        out[:, OCCUPIED_COLS] += np.sqrt(n0 / 2) * (g[..., 0] + 1j * g[..., 1])
    return SubcarrierGrid(out)
