"""Fast built-in invariant suite for the `selftest` CLI subcommand.

Four checks sized for a desk machine: a codec oracle (known encoder vectors
plus Viterbi-vs-exhaustive-ML agreement), interleaver bijectivity, the
collision-probability composition against its closed form, and an uncoded
QPSK BER point against the Gaussian tail formula.
"""

from __future__ import annotations

import math
import sys

import numpy as np

from . import fec
from .bluetooth import BtConfig, draw_episode
from .channel import add_noise
from .engine import analytic_collision_probability, wilson_interval
from .ofdm import MODES, SubcarrierGrid, map_symbols, demap_soft

# Impulse response of the reference (133, 171) encoder, pairs (A, B) per step.
_IMPULSE_PAIRS = [(1, 1), (0, 1), (1, 1), (1, 1), (0, 0), (1, 0), (1, 1)]


def _codeword_signs(k: int, code: fec.CodeConfig) -> np.ndarray:
    """Sign matrix (+1 for coded bit 0) of all 2^k tail-terminated codewords."""
    n_msgs = 1 << k
    signs = np.empty((n_msgs, 2 * (k + fec.TAIL_BITS)))
    msg = np.zeros(k + fec.TAIL_BITS, dtype=np.uint8)
    for m in range(n_msgs):
        for i in range(k):
            msg[i] = (m >> (k - 1 - i)) & 1
        signs[m] = 1.0 - 2.0 * fec.conv_encode(msg, code)
    return signs


def _check_codec_oracle(code: fec.CodeConfig | None = None):
    code = code or fec.CodeConfig()
    impulse = np.zeros(7, dtype=np.uint8)
    impulse[0] = 1
    got = fec.conv_encode(impulse, code).reshape(-1, 2)
    expected = np.array(_IMPULSE_PAIRS, dtype=np.uint8)
    if not np.array_equal(got, expected):
        return False, "encoder impulse response differs from the (133,171) reference"

    rng = np.random.default_rng(20240)
    k = 6  # divides evenly into every puncture period
    signs = _codeword_signs(k, code)
    for rate in fec.CODE_RATES:
        kept = int(fec.PUNCTURE_MASKS[rate].sum())
        n_soft = 2 * (k + fec.TAIL_BITS) // fec.PUNCTURE_MASKS[rate].size * kept
        for case in range(80):
            soft = fec.SoftBits(rng.normal(size=n_soft), rng.random(n_soft) < 0.1)
            full = fec.depuncture(soft, rate)
            decoded = fec.viterbi_decode(full, code)
            values = np.where(full.erased, 0.0, full.value)
            best = int(np.argmax(signs @ values))
            best_bits = [(best >> (k - 1 - i)) & 1 for i in range(k)]
            if not np.array_equal(decoded, best_bits):
                return False, f"rate {rate} case {case}: decoder disagrees with exhaustive ML"
    return True, "impulse anchor and 240 exhaustive-ML cases agree"


def _check_interleaver():
    for n_bpsc in (1, 2, 4, 6):
        n_cbps = 48 * n_bpsc
        perm = fec.interleave_permutation(n_cbps, n_bpsc)
        if not np.array_equal(np.sort(perm), np.arange(n_cbps)):
            return False, f"permutation for n_cbps={n_cbps} is not bijective"
        rng = np.random.default_rng(n_cbps)
        block = rng.integers(0, 2, n_cbps, dtype=np.uint8)
        soft = fec.SoftBits.from_hard(fec.interleave(block, n_cbps, n_bpsc))
        back = fec.deinterleave(soft, n_cbps, n_bpsc)
        if not np.array_equal((back.value < 0).astype(np.uint8), block):
            return False, f"round trip failed for n_cbps={n_cbps}"
    return True, "bijective and round-trip clean for n_cbps in {48, 96, 192, 288}"


def _check_collision_probability():
    cfg = BtConfig()
    duration = 72.0
    n_sym = int(duration / 4)
    rng = np.random.default_rng(7)
    hits = 0
    n_eps = 20_000
    for _ in range(n_eps):
        ep = draw_episode(duration, n_sym, cfg, rng)
        hits += bool(np.any(ep.overlap_fraction > 0))
    empirical = hits / n_eps
    analytic = analytic_collision_probability(duration, cfg)
    ok = abs(empirical - analytic) < 0.01
    return ok, f"empirical {empirical:.4f} vs analytic {analytic:.4f} (72 us)"


def _check_uncoded_ber():
    ebn0_db = 4.0
    ebn0 = 10.0 ** (ebn0_db / 10.0)
    n0 = 1.0 / (2.0 * ebn0)  # QPSK: 2 bits per unit-energy symbol
    mode = MODES[12]
    rng = np.random.default_rng(11)
    n_sym = 1000
    bits = rng.integers(0, 2, n_sym * mode.n_cbps, dtype=np.uint8)
    grid = map_symbols(bits, mode)
    noisy = add_noise(grid, n0, rng)
    soft = demap_soft(noisy, np.ones(64, dtype=complex), n0, None, mode)
    hard = (soft.value < 0).astype(np.uint8)
    n_err = int(np.count_nonzero(hard != bits))
    lo, hi = wilson_interval(n_err, bits.size)
    theory = 0.5 * math.erfc(math.sqrt(ebn0))  # Q(sqrt(2 Eb/N0))
    ok = lo <= theory <= hi
    return ok, f"BER {n_err / bits.size:.5f} vs theory {theory:.5f} at {ebn0_db:g} dB"


def run_selftest(code: fec.CodeConfig | None = None, stream=None) -> int:
    """Run all checks, print one line each; returns 0 if all pass, else 3."""
    stream = stream or sys.stdout
    checks = [
        ("codec_oracle", lambda: _check_codec_oracle(code)),
        ("interleaver_bijective", _check_interleaver),
        ("collision_probability", _check_collision_probability),
        ("uncoded_ber", _check_uncoded_ber),
    ]
    failed = []
    for name, check in checks:
        try:
            ok, detail = check()
        except Exception as exc:  # a crash is a failure, not an abort
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        print(f"{name}: {'PASS' if ok else 'FAIL'} ({detail})", file=stream)
        if not ok:
            failed.append(name)
    if failed:
        print(f"selftest FAILED: {', '.join(failed)}", file=stream)
        return 3
    print("selftest OK", file=stream)
    return 0
