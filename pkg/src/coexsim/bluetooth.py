"""Bluetooth HV1 interferer: GFSK bursts, their spectral footprint on the
OFDM subcarrier grid, the frequency-hopping slot timeline, and injection.

The worst case is modelled: every 625 us slot carries a burst (100% load at
1600 hops/s), active for the first 366 us. Hops are uniform over the 79
channels at 2402..2480 MHz. Interference enters in the frequency domain: a
time-domain GFSK burst is generated per slot, its spectrum is sampled at
the 64 subcarrier frequencies, and that footprint is added to overlapped
OFDM symbols scaled by the square root of the temporal overlap fraction.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .ofdm import (
    N_FFT,
    N_DATA,
    OCCUPIED_BANDWIDTH_MHZ,
    SUBCARRIER_SPACING_MHZ,
    SYMBOL_US,
    SubcarrierGrid,
)

BT_CHANNEL_BASE_MHZ = 2402.0
N_BT_CHANNELS = 79
MIN_BURST_BITS = 366  # one active window at 1 Mb/s


@dataclass(frozen=True)
class BtConfig:
    """HV1 interferer parameters.

    `sir_db` is the ratio of total OFDM data power (48 unit-energy
    subcarriers) to total received BT power. `binary_overlap` replaces the
    sqrt-of-overlap amplitude scaling with a hard 0/1 collision flag for
    sensitivity checks.
    """

    sir_db: float = 0.0
    wlan_center_mhz: float = 2441.0
    slot_us: float = 625.0
    active_us: float = 366.0
    hop_rate_hz: float = 1600.0
    modulation_index: float = 0.32
    gaussian_bt_product: float = 0.5
    symbol_rate_hz: float = 1e6
    oversample: int = 20
    binary_overlap: bool = False

    def __post_init__(self):
        if abs(self.hop_rate_hz * self.slot_us - 1e6) > 1e-3:
            raise ValueError("hop rate and slot length must give one hop per slot")
        if not 0 < self.active_us <= self.slot_us:
            raise ValueError("active window must fit inside the slot")
        if self.oversample < 2:
            raise ValueError("oversample factor must be at least 2")


def bt_channel_freqs() -> np.ndarray:
    """Centre frequencies of the 79 BT channels in MHz."""
    return BT_CHANNEL_BASE_MHZ + np.arange(N_BT_CHANNELS)


def in_band(f_bt_mhz, cfg: BtConfig):
    """Whether a hop at `f_bt_mhz` lands inside the occupied OFDM band.

    The band spans the 52 used subcarriers (+-8.125 MHz around the WLAN
    centre). A hop centred within half a subcarrier spacing of the unused
    DC slot counts as out of band: it sits on the one hole in the occupied
    spectrum. At the default mid-band centre this yields exactly 16 of the
    79 channels.
    """
    off = np.abs(np.asarray(f_bt_mhz, dtype=float) - cfg.wlan_center_mhz)
    return (off <= OCCUPIED_BANDWIDTH_MHZ / 2) & (off >= SUBCARRIER_SPACING_MHZ / 2)


def in_band_channels(cfg: BtConfig) -> np.ndarray:
    """The BT channel frequencies that overlap the occupied OFDM band."""
    freqs = bt_channel_freqs()
    return freqs[in_band(freqs, cfg)]


def draw_hops(n_slots: int, cfg: BtConfig, rng: np.random.Generator) -> np.ndarray:
    """Independent uniform hop centre frequencies for `n_slots` slots, MHz."""
    del cfg  # hop statistics do not depend on the config
    return BT_CHANNEL_BASE_MHZ + rng.integers(0, N_BT_CHANNELS, n_slots).astype(float)


@lru_cache(maxsize=8)
def _frequency_pulse(bt_product: float, oversample: int, span_symbols: int = 4) -> np.ndarray:
    """Gaussian-filtered rectangular frequency pulse with unit total area,
    so one bit advances the phase by exactly pi * modulation_index."""
    half = span_symbols * oversample // 2
    t = np.arange(-half, half + 1) / oversample
    g = np.exp(-2 * np.pi**2 * bt_product**2 * t**2 / np.log(2))
    g /= g.sum()
    return np.convolve(g, np.ones(oversample)) / oversample


def gfsk_baseband(bits, cfg: BtConfig = BtConfig()) -> np.ndarray:
    """Unit-envelope GFSK baseband burst at `oversample` samples per symbol.

    Bits become +-1 frequency pulses shaped by the Gaussian filter; the
    integrated phase is modulated onto a constant-modulus carrier.
    """
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    if bits.size < MIN_BURST_BITS:
        raise ValueError(f"need at least {MIN_BURST_BITS} bits for one burst")
    sps = cfg.oversample
    pulse = _frequency_pulse(cfg.gaussian_bt_product, sps)
    impulses = np.zeros(bits.size * sps)
    impulses[::sps] = 2.0 * bits - 1.0
    freq = np.convolve(impulses, pulse)[: impulses.size]
    phase = np.pi * cfg.modulation_index * np.cumsum(freq)
    return np.exp(1j * phase)


def spectral_footprint(
    burst: np.ndarray,
    f_bt_mhz: float,
    cfg: BtConfig,
    rng: np.random.Generator | None = None,
    *,
    phase: float | None = None,
) -> np.ndarray:
    """Burst spectrum sampled at the 64 subcarrier frequencies (grid order).

    Subcarrier k sits at (wlan_center + k * 0.3125) MHz; the burst spectrum
    is evaluated there relative to its own centre `f_bt_mhz`. Total power
    over the 64 samples is normalized to 48 * 10^(-sir/10), and the whole
    footprint is rotated by a uniform random carrier phase (drawn from
    `rng` unless given explicitly).
    """
    burst = np.asarray(burst, dtype=np.complex128).ravel()
    if burst.size == 0:
        raise ValueError("empty burst")
    if not BT_CHANNEL_BASE_MHZ <= f_bt_mhz <= BT_CHANNEL_BASE_MHZ + N_BT_CHANNELS - 1:
        raise ValueError(f"BT centre {f_bt_mhz} MHz outside 2402..2480")
    if phase is None:
        if rng is None:
            raise ValueError("need rng or explicit phase")
        phase = rng.uniform(0.0, 2 * np.pi)

    offset_mhz = f_bt_mhz - cfg.wlan_center_mhz
    fs_mhz = cfg.symbol_rate_hz * cfg.oversample / 1e6
    # The evaluation frequencies sit on the subcarrier raster, so when the
    # sample rate is a multiple of the spacing the shifted DTFT reduces to
    # folding plus one FFT, with subcarrier k landing on bin k mod L.
    fold = round(fs_mhz / SUBCARRIER_SPACING_MHZ)
    if abs(fold * SUBCARRIER_SPACING_MHZ - fs_mhz) > 1e-9:
        raise ValueError("sample rate must be a multiple of the subcarrier spacing")
    n = np.arange(burst.size)
    shifted = burst * np.exp(2j * np.pi * (offset_mhz / fs_mhz) * n)
    pad = (-shifted.size) % fold
    if pad:
        shifted = np.concatenate([shifted, np.zeros(pad, dtype=np.complex128)])
    bins = np.fft.fft(shifted.reshape(-1, fold).sum(axis=0))
    spec = bins[np.arange(-N_FFT // 2, N_FFT // 2) % fold]

    target = N_DATA * 10.0 ** (-cfg.sir_db / 10.0)
    total = np.sum(np.abs(spec) ** 2)
    if target == 0.0 or total == 0.0:
        return np.zeros(N_FFT, dtype=np.complex128)
    return spec * np.sqrt(target / total) * np.exp(1j * phase)


@dataclass
class BtEpisode:
    """One packet's interference context on the BT slot timeline.

    `time_overlap` is the per-symbol temporal overlap fraction with active
    BT windows before frequency gating; `overlap_fraction` is zeroed where
    the overlapping hop falls outside the occupied band. `footprint` holds
    the overlapping burst's 64 spectral samples per symbol (zero rows where
    there is no overlap).
    """

    t_dt_us: float
    wlan_center_mhz: float
    slot_hops_mhz: np.ndarray
    time_overlap: np.ndarray
    overlap_fraction: np.ndarray
    f_bt_mhz: np.ndarray
    phase: np.ndarray
    footprint: np.ndarray


def draw_episode(
    packet_duration_us: float,
    n_sym: int,
    cfg: BtConfig,
    rng: np.random.Generator,
) -> BtEpisode:
    """Draw one packet's interference episode.

    The packet starts at t_dt ~ U[0, 625) on the slot timeline; each slot it
    touches gets an independent uniform hop and, when it actually overlaps
    the packet with an in-band hop, a fresh random-payload GFSK burst.
    """
    if abs(packet_duration_us - SYMBOL_US * n_sym) > 1e-9:
        raise ValueError("packet duration must equal 4 us per OFDM symbol")
    t_dt = rng.uniform(0.0, cfg.slot_us)
    n_slots = int((t_dt + packet_duration_us) // cfg.slot_us) + 1
    hops = draw_hops(n_slots, cfg, rng)

    starts = t_dt + SYMBOL_US * np.arange(n_sym)
    ends = starts + SYMBOL_US
    base_slot = (starts // cfg.slot_us).astype(np.int64)

    time_overlap = np.zeros(n_sym)
    sym_slot = np.full(n_sym, -1, dtype=np.int64)
    # active windows are 259 us apart, so a 4 us symbol meets at most one
    for cand in (base_slot, base_slot + 1):
        win_start = cand * cfg.slot_us
        ov = np.minimum(ends, win_start + cfg.active_us) - np.maximum(starts, win_start)
        hit = ov > 0
        time_overlap[hit] = ov[hit] / SYMBOL_US
        sym_slot[hit] = cand[hit]

    f_sym = np.full(n_sym, np.nan)
    touched = sym_slot >= 0
    f_sym[touched] = hops[sym_slot[touched]]

    gated = time_overlap.copy()
    gated[touched & ~in_band(f_sym, cfg)] = 0.0
    if cfg.binary_overlap:
        gated = (gated > 0).astype(float)

    phase = np.zeros(n_sym)
    footprint = np.zeros((n_sym, N_FFT), dtype=np.complex128)
    n_burst_bits = int(round(cfg.active_us * cfg.symbol_rate_hz / 1e6))
    for slot in np.unique(sym_slot[gated > 0]):
        bits = rng.integers(0, 2, n_burst_bits, dtype=np.uint8)
        burst_phase = rng.uniform(0.0, 2 * np.pi)
        fp = spectral_footprint(
            gfsk_baseband(bits, cfg), hops[slot], cfg, phase=burst_phase
        )
        rows = (sym_slot == slot) & (gated > 0)
        footprint[rows] = fp
        phase[rows] = burst_phase

    return BtEpisode(
        t_dt_us=t_dt,
        wlan_center_mhz=cfg.wlan_center_mhz,
        slot_hops_mhz=hops,
        time_overlap=time_overlap,
        overlap_fraction=gated,
        f_bt_mhz=f_sym,
        phase=phase,
        footprint=footprint,
    )


def inject(grid: SubcarrierGrid, episode: BtEpisode) -> SubcarrierGrid:
    """Add sqrt(overlap_fraction) * footprint to each overlapped symbol."""
    if episode.overlap_fraction.shape[0] != grid.n_sym:
        raise ValueError(
            f"episode covers {episode.overlap_fraction.shape[0]} symbols, "
            f"grid has {grid.n_sym}"
        )
    out = grid.symbols.copy()
    rows = np.flatnonzero(episode.overlap_fraction > 0)
    if rows.size:
        amp = np.sqrt(episode.overlap_fraction[rows])[:, None]
        out[rows] += amp * episode.footprint[rows]
    return SubcarrierGrid(out)
