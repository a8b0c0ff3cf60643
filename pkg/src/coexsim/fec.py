"""Bit-level FEC pipeline for the 802.11g OFDM PHY.

Convolutional encoding with the constraint-length-7 (133, 171) octal mother
code, puncturing to the 2/3 and 3/4 rates, the standard two-step block
interleaver, and a soft-decision Viterbi decoder that handles erasures
natively: an erased position contributes exactly zero to every path metric.

Soft-value convention: positive favours bit 0. Any common scale factor on
the values cancels in path comparisons, so no normalization is performed.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numba import njit

N_STATES = 64
TAIL_BITS = 6

# Puncture masks over the serialized (A0, B0, A1, B1, ...) coded stream.
# Rate 2/3 drops B1 of every two pairs; rate 3/4 drops B1 and A2 of every
# three pairs.
PUNCTURE_MASKS = {
    "1/2": np.array([1, 1], dtype=bool),
    "2/3": np.array([1, 1, 1, 0], dtype=bool),
    "3/4": np.array([1, 1, 1, 0, 0, 1], dtype=bool),
}

CODE_RATES = tuple(PUNCTURE_MASKS)


def _octal_taps(generator: int, width: int = 7) -> np.ndarray:
    """Expand an octal generator into a 0/1 tap vector, newest bit first."""
    return np.array([(generator >> i) & 1 for i in range(width - 1, -1, -1)],
                    dtype=np.uint8)


@dataclass(frozen=True)
class CodeConfig:
    """Mother convolutional code; defaults are the 802.11 K=7 generators."""

    constraint_length: int = 7
    g0: int = 0o133
    g1: int = 0o171

    def __post_init__(self):
        if self.constraint_length != 7:
            raise ValueError("only constraint length 7 is supported")
        for g in (self.g0, self.g1):
            taps = _octal_taps(g, self.constraint_length)
            if taps[0] != 1 or taps[-1] != 1:
                raise ValueError(f"generator {g:#o} must tap delays 0 and 6")


def _puncture_mask(rate: str) -> np.ndarray:
    try:
        return PUNCTURE_MASKS[rate]
    except KeyError:
        raise ValueError(f"unknown code rate {rate!r}; choose from {CODE_RATES}") from None


def conv_encode(info_bits, code: CodeConfig = CodeConfig()) -> np.ndarray:
    """Rate-1/2 convolutional encode, serialized as (A0, B0, A1, B1, ...).

    The encoder starts in the all-zero state. Callers wanting a zero end
    state append the 6 zero tail bits themselves.
    """
    bits = np.asarray(info_bits, dtype=np.uint8).ravel()
    out = np.empty(2 * bits.size, dtype=np.uint8)
    out[0::2] = np.convolve(bits, _octal_taps(code.g0))[: bits.size] % 2
    out[1::2] = np.convolve(bits, _octal_taps(code.g1))[: bits.size] % 2
    return out


def puncture(coded, rate: str) -> np.ndarray:
    """Delete coded bits according to the mask for `rate`."""
    mask = _puncture_mask(rate)
    coded = np.asarray(coded, dtype=np.uint8).ravel()
    if coded.size % mask.size:
        raise ValueError(
            f"coded length {coded.size} is not a multiple of the "
            f"rate-{rate} puncture period {mask.size}"
        )
    return coded[np.tile(mask, coded.size // mask.size)]


@dataclass
class SoftBits:
    """A soft-decision sequence.

    `value` is a log-likelihood metric with positive favouring bit 0;
    `erased` marks positions the decoder must ignore entirely.
    """

    value: np.ndarray
    erased: np.ndarray

    def __post_init__(self):
        self.value = np.asarray(self.value, dtype=np.float64).ravel()
        self.erased = np.asarray(self.erased, dtype=bool).ravel()
        if self.value.size != self.erased.size:
            raise ValueError("value and erased must have equal length")

    def __len__(self) -> int:
        return self.value.size

    @classmethod
    def from_hard(cls, bits) -> "SoftBits":
        """Map hard bits to unit-confidence soft values (bit 0 -> +1)."""
        bits = np.asarray(bits, dtype=np.uint8).ravel()
        return cls(1.0 - 2.0 * bits, np.zeros(bits.size, dtype=bool))


def depuncture(soft: SoftBits, rate: str) -> SoftBits:
    """Reinsert punctured positions as erasures, restoring the mother-rate
    stream length. Kept positions carry their original values and flags."""
    mask = _puncture_mask(rate)
    kept = int(mask.sum())
    if len(soft) % kept:
        raise ValueError(
            f"soft length {len(soft)} inconsistent with rate-{rate} puncturing"
        )
    periods = len(soft) // kept
    value = np.zeros(periods * mask.size, dtype=np.float64)
    erased = np.ones(periods * mask.size, dtype=bool)
    keep_idx = np.flatnonzero(np.tile(mask, periods))
    value[keep_idx] = soft.value
    erased[keep_idx] = soft.erased
    return SoftBits(value, erased)


@lru_cache(maxsize=None)
def interleave_permutation(n_cbps: int, n_bpsc: int) -> np.ndarray:
    """Two-step 802.11 block interleaver permutation.

    Returns `perm` such that output[perm[k]] = input[k]. Treat as read-only.
    """
    if n_cbps != 48 * n_bpsc:
        raise ValueError(f"n_cbps {n_cbps} does not match n_bpsc {n_bpsc}")
    k = np.arange(n_cbps)
    i = (n_cbps // 16) * (k % 16) + k // 16
    s = max(n_bpsc // 2, 1)
    j = s * (i // s) + (i + n_cbps - (16 * i) // n_cbps) % s
    return j


def interleave(bits, n_cbps: int, n_bpsc: int) -> np.ndarray:
    """Interleave one OFDM symbol's coded bits."""
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    if bits.size != n_cbps:
        raise ValueError(f"expected {n_cbps} bits for one symbol, got {bits.size}")
    perm = interleave_permutation(n_cbps, n_bpsc)
    out = np.empty_like(bits)
    out[perm] = bits
    return out


def deinterleave(soft: SoftBits, n_cbps: int, n_bpsc: int) -> SoftBits:
    """Invert `interleave` on a soft-bit block, flags included."""
    if len(soft) != n_cbps:
        raise ValueError(f"expected {n_cbps} soft bits for one symbol, got {len(soft)}")
    perm = interleave_permutation(n_cbps, n_bpsc)
    return SoftBits(soft.value[perm], soft.erased[perm])


# Trellis sign tables per code: sign = +1 where the branch output bit is 0.
_TRELLIS_CACHE: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}


def _trellis_signs(code: CodeConfig) -> tuple[np.ndarray, np.ndarray]:
    key = (code.g0, code.g1)
    if key not in _TRELLIS_CACHE:
        g0 = _octal_taps(code.g0).astype(np.int64)
        g1 = _octal_taps(code.g1).astype(np.int64)
        sign_a = np.empty((N_STATES, 2))
        sign_b = np.empty((N_STATES, 2))
        for s in range(N_STATES):
            # state bit 5 is the most recent input; window is newest-first
            window = np.array([(s >> (5 - i)) & 1 for i in range(6)], dtype=np.int64)
            for u in (0, 1):
                full = np.concatenate(([u], window))
                sign_a[s, u] = 1.0 - 2.0 * (int(full @ g0) & 1)
                sign_b[s, u] = 1.0 - 2.0 * (int(full @ g1) & 1)
        _TRELLIS_CACHE[key] = (sign_a, sign_b)
    return _TRELLIS_CACHE[key]


@njit(cache=True)
def _acs_kernel(ya, yb, sign_a, sign_b):  # pragma: no cover - exercised via viterbi_decode
    n = ya.shape[0]
    metric = np.full(N_STATES, -1e300)
    metric[0] = 0.0
    new_metric = np.empty(N_STATES)
    decisions = np.empty((n, N_STATES), np.uint8)
    for t in range(n):
        a = ya[t]
        b = yb[t]
        for s_next in range(N_STATES):
            u = s_next >> 5
            p0 = (s_next & 31) << 1
            p1 = p0 | 1
            m0 = metric[p0] + sign_a[p0, u] * a + sign_b[p0, u] * b
            m1 = metric[p1] + sign_a[p1, u] * a + sign_b[p1, u] * b
            # ties go to the lower-index predecessor
            if m1 > m0:
                new_metric[s_next] = m1
                decisions[t, s_next] = 1
            else:
                new_metric[s_next] = m0
                decisions[t, s_next] = 0
        metric, new_metric = new_metric, metric
    bits = np.empty(n, np.uint8)
    state = 0
    for t in range(n - 1, -1, -1):
        bits[t] = state >> 5
        state = ((state & 31) << 1) | decisions[t, state]
    return bits


def viterbi_decode(soft: SoftBits, code: CodeConfig = CodeConfig()) -> np.ndarray:
    """Maximum-metric sequence decode over the 64-state trellis.

    Assumes a tail-terminated input (zero start and end state) and returns
    the information bits with the 6 tail bits stripped. The path metric is
    the sum of sign-matched soft values over non-erased positions; erased
    positions add zero to every branch. Ties resolve toward the lower-index
    predecessor, so an all-erased input decodes deterministically to zeros.
    """
    n = len(soft)
    if n % 2:
        raise ValueError(f"soft input length {n} is odd")
    if n < 2 * (TAIL_BITS + 1):
        raise ValueError(f"soft input length {n} too short for a terminated codeword")
    values = np.where(soft.erased, 0.0, soft.value)
    sign_a, sign_b = _trellis_signs(code)
    bits = _acs_kernel(
        np.ascontiguousarray(values[0::2]),
        np.ascontiguousarray(values[1::2]),
        sign_a,
        sign_b,
    )
    return bits[:-TAIL_BITS]
