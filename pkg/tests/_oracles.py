"""Independent reference implementations used as test oracles.

Deliberately written in a different style from the production code (integer
shift-register state, per-step loops) so the two sides cannot share a bug.
"""

import numpy as np

TAIL = 6
_TABLE_CACHE = {}


def ref_encode(bits, g0=0o133, g1=0o171):
    """Rate-1/2 convolutional encoder, serialized (A0, B0, A1, B1, ...)."""
    state = 0
    out = []
    for b in bits:
        state = ((state >> 1) | (int(b) << 6)) & 0x7F
        # state bit 6 is the newest input, so generator bit d taps delay 6-d
        a = bin(state & g0).count("1") & 1
        c = bin(state & g1).count("1") & 1
        out += [a, c]
    return np.array(out, dtype=np.uint8)


def codeword_sign_table(k):
    """Sign matrix (+1 where the coded bit is 0) of all 2^k tail-terminated
    codewords, message bits MSB-first in the row index."""
    if k not in _TABLE_CACHE:
        table = np.empty((1 << k, 2 * (k + TAIL)))
        for m in range(1 << k):
            msg = [(m >> (k - 1 - i)) & 1 for i in range(k)] + [0] * TAIL
            table[m] = 1.0 - 2.0 * ref_encode(msg)
        _TABLE_CACHE[k] = table
    return _TABLE_CACHE[k]


def bits_of(m, k):
    return np.array([(m >> (k - 1 - i)) & 1 for i in range(k)], dtype=np.uint8)
