"""OFDM layer: 802.11g rate table, Gray constellations, subcarrier grid
assembly and max-log soft demapping.

The simulation stays in the frequency domain end to end: a packet is a
stack of 64-point subcarrier vectors (48 data + 4 pilot + 12 null slots),
never a time-domain waveform. Cyclic-prefix adequacy (800 ns against a
channel far shorter than that) is asserted by the channel model, not
simulated.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import fec

N_FFT = 64
N_DATA = 48
SUBCARRIER_SPACING_MHZ = 20.0 / 64  # 0.3125 MHz
SYMBOL_US = 4.0
SERVICE_BITS = 16

PILOT_SUBCARRIERS = np.array([-21, -7, 7, 21])
DATA_SUBCARRIERS = np.array(
    [k for k in range(-26, 27) if k != 0 and k not in (-21, -7, 7, 21)]
)
OCCUPIED_SUBCARRIERS = np.sort(np.concatenate([DATA_SUBCARRIERS, PILOT_SUBCARRIERS]))
NULL_SUBCARRIERS = np.array(
    [k for k in range(-32, 32) if k not in set(OCCUPIED_SUBCARRIERS.tolist())]
)

# grid columns are ordered k = -32 .. 31
DATA_COLS = DATA_SUBCARRIERS + 32
PILOT_COLS = PILOT_SUBCARRIERS + 32
OCCUPIED_COLS = OCCUPIED_SUBCARRIERS + 32

OCCUPIED_BANDWIDTH_MHZ = OCCUPIED_SUBCARRIERS.size * SUBCARRIER_SPACING_MHZ  # 16.25


class DegenerateChannelError(ValueError):
    """Raised when an exactly-zero channel gain hits an unmasked data cell."""


@dataclass(frozen=True)
class ModeParams:
    """One 802.11g rate: modulation, code rate, and per-symbol bit counts."""

    rate_mbps: int
    modulation: str
    code_rate: str
    n_bpsc: int
    n_cbps: int
    n_dbps: int

    def __post_init__(self):
        if self.n_cbps != N_DATA * self.n_bpsc:
            raise ValueError(f"n_cbps must be {N_DATA} * n_bpsc")
        if self.n_dbps != self.n_cbps * Fraction(self.code_rate):
            raise ValueError("n_dbps inconsistent with code rate")
        if self.rate_mbps != self.n_dbps / SYMBOL_US:
            raise ValueError("rate inconsistent with n_dbps at 4 us symbols")


MODES = {
    12: ModeParams(12, "qpsk", "1/2", 2, 96, 48),
    24: ModeParams(24, "16qam", "1/2", 4, 192, 96),
    36: ModeParams(36, "16qam", "3/4", 4, 192, 144),
    48: ModeParams(48, "64qam", "2/3", 6, 288, 192),
    54: ModeParams(54, "64qam", "3/4", 6, 288, 216),
}


def mode_for(rate_mbps: int) -> ModeParams:
    try:
        return MODES[rate_mbps]
    except KeyError:
        raise ValueError(
            f"unsupported rate {rate_mbps} Mb/s; choose from {sorted(MODES)}"
        ) from None


@dataclass
class SubcarrierGrid:
    """Per-packet stack of OFDM symbols, one 64-slot complex vector each."""

    symbols: np.ndarray

    def __post_init__(self):
        self.symbols = np.asarray(self.symbols, dtype=np.complex128)
        if self.symbols.ndim != 2 or self.symbols.shape[1] != N_FFT:
            raise ValueError(f"grid must be (n_sym, {N_FFT}) complex")

    @property
    def n_sym(self) -> int:
        return self.symbols.shape[0]


# Gray-coded axis levels indexed by the axis bit group (MSB first), before
# unit-energy scaling. QPSK maps bit 0 to +1; the QAM tables follow the
# standard 00 -> -3 ordering.
_AXIS_LEVELS = {
    "qpsk": np.array([1.0, -1.0]),
    "16qam": np.array([-3.0, -1.0, 3.0, 1.0]),
    "64qam": np.array([-7.0, -5.0, -1.0, -3.0, 7.0, 5.0, 1.0, 3.0]),
}
_SCALE = {"qpsk": 1 / np.sqrt(2), "16qam": 1 / np.sqrt(10), "64qam": 1 / np.sqrt(42)}


@lru_cache(maxsize=None)
def constellation(modulation: str) -> tuple[np.ndarray, np.ndarray]:
    """Unit-energy constellation points and their bit labels.

    Returns (points, labels): points[m] is the complex symbol for integer
    label m, labels[m] its bits MSB-first. The first half of the bits sets
    the I axis, the second half the Q axis.
    """
    if modulation not in _AXIS_LEVELS:
        raise ValueError(f"unknown modulation {modulation!r}")
    levels = _AXIS_LEVELS[modulation]
    bits_per_axis = levels.size.bit_length() - 1
    n_bpsc = 2 * bits_per_axis
    idx = np.arange(1 << n_bpsc)
    i_idx = idx >> bits_per_axis
    q_idx = idx & ((1 << bits_per_axis) - 1)
    points = _SCALE[modulation] * (levels[i_idx] + 1j * levels[q_idx])
    labels = ((idx[:, None] >> np.arange(n_bpsc - 1, -1, -1)) & 1).astype(bool)
    return points, labels


def map_symbols(coded_bits, mode: ModeParams) -> SubcarrierGrid:
    """Map interleaved coded bits onto the subcarrier grid.

    Data subcarriers are filled in ascending-index order, `n_bpsc` bits per
    subcarrier; pilots carry a fixed +1 and nulls stay exactly 0+0j.
    """
    bits = np.asarray(coded_bits, dtype=np.uint8).ravel()
    if bits.size % mode.n_cbps:
        raise ValueError(
            f"coded length {bits.size} is not a multiple of n_cbps {mode.n_cbps}"
        )
    n_sym = bits.size // mode.n_cbps
    points, _ = constellation(mode.modulation)
    weights = 1 << np.arange(mode.n_bpsc - 1, -1, -1)
    labels = bits.reshape(-1, mode.n_bpsc) @ weights
    grid = np.zeros((n_sym, N_FFT), dtype=np.complex128)
    grid[:, DATA_COLS] = points[labels].reshape(n_sym, N_DATA)
    grid[:, PILOT_COLS] = 1.0
    return SubcarrierGrid(grid)


def demap_soft(
    grid: SubcarrierGrid,
    h: np.ndarray,
    noise_var: float,
    erasure_mask: np.ndarray | None,
    mode: ModeParams,
) -> fec.SoftBits:
    """Max-log LLR demapping with perfect channel knowledge.

    `h` holds the 64 per-subcarrier complex gains in grid order; the cell is
    equalized to y/h and demapped with effective noise variance
    noise_var/|h|^2. `erasure_mask` is (n_sym, 48) over the data subcarriers
    in ascending-index order; every bit of a masked cell comes back as
    (value 0, erased). Pilots and nulls produce no soft bits.
    """
    h = np.asarray(h, dtype=np.complex128).ravel()
    if h.size != N_FFT:
        raise ValueError(f"h must have {N_FFT} entries")
    if noise_var <= 0:
        raise ValueError("noise_var must be positive")
    n_sym = grid.n_sym
    if erasure_mask is None:
        mask = np.zeros((n_sym, N_DATA), dtype=bool)
    else:
        mask = np.asarray(erasure_mask, dtype=bool)
        if mask.shape != (n_sym, N_DATA):
            raise ValueError(f"erasure mask must be ({n_sym}, {N_DATA})")

    h_data = h[DATA_COLS]
    dead = h_data == 0
    if np.any(dead[None, :] & ~mask):
        raise DegenerateChannelError("zero channel gain on an unmasked data subcarrier")

    z = grid.symbols[:, DATA_COLS] / np.where(dead, 1.0, h_data)
    snr_scale = np.abs(h_data) ** 2 / noise_var

    points, labels = constellation(mode.modulation)
    d = np.abs(z.reshape(-1, 1) - points) ** 2
    llr = np.empty((z.size, mode.n_bpsc))
    for i in range(mode.n_bpsc):
        d0 = d[:, ~labels[:, i]].min(axis=1)
        d1 = d[:, labels[:, i]].min(axis=1)
        llr[:, i] = d1 - d0
    llr *= np.tile(snr_scale, n_sym)[:, None]

    flat_mask = mask.ravel()
    llr[flat_mask] = 0.0
    erased = np.repeat(flat_mask, mode.n_bpsc)
    return fec.SoftBits(llr.ravel(), erased)


def n_symbols(payload_octets: int, mode: ModeParams) -> int:
    """OFDM symbol count for a payload: service + payload + tail, rounded up
    to whole symbols."""
    bits = SERVICE_BITS + 8 * payload_octets + fec.TAIL_BITS
    return -(-bits // mode.n_dbps)


def assemble_packet(
    payload_octets: int, mode: ModeParams, rng: np.random.Generator
) -> tuple[np.ndarray, SubcarrierGrid]:
    """Build one packet's transmit grid.

    The encoder input is 16 zero service bits, random payload bits, 6 zero
    tail bits, then zero padding up to n_sym * n_dbps. The stream runs
    through encode -> puncture -> per-symbol interleave -> map. Returns
    (info_bits, grid); pad bits are dropped again after decoding.
    """
    if payload_octets < 1:
        raise ValueError("payload must be at least 1 octet")
    n_sym = n_symbols(payload_octets, mode)
    info = np.zeros(n_sym * mode.n_dbps, dtype=np.uint8)
    n_payload = 8 * payload_octets
    info[SERVICE_BITS:SERVICE_BITS + n_payload] = rng.integers(
        0, 2, n_payload, dtype=np.uint8
    )
    coded = fec.puncture(fec.conv_encode(info), mode.code_rate)
    perm = fec.interleave_permutation(mode.n_cbps, mode.n_bpsc)
    blocks = coded.reshape(n_sym, mode.n_cbps)
    interleaved = np.empty_like(blocks)
    interleaved[:, perm] = blocks
    return info, map_symbols(interleaved.ravel(), mode)
