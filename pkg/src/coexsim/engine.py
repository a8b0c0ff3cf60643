"""End-to-end packet transaction and the Monte Carlo harness.

A trial is a pure function of (sim point, trial index): every random draw
comes from a stream seeded by a counter construction over the master seed,
the point's parameters, and the trial index. Sweeps are therefore
bit-identical across runs and across any worker count; error counts are
commutative sums and the trial schedule depends only on observed history.
"""

from __future__ import annotations

import math
import multiprocessing
import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import fec
from .bluetooth import BtConfig, draw_episode, in_band, bt_channel_freqs, inject
from .channel import ChannelConfig, add_noise, draw_channel, noise_variance
from .erasures import ErasurePolicy, build_mask
from .ofdm import (
    MODES,
    ModeParams,
    SERVICE_BITS,
    SYMBOL_US,
    SubcarrierGrid,
    assemble_packet,
    demap_soft,
)

TOP_RATE_MBPS = 54
_Z95 = 1.959963984540054


@dataclass(frozen=True)
class StopRule:
    """Stop a point after `min_errors` packet errors or `max_trials` trials,
    whichever comes first."""

    min_errors: int = 100
    max_trials: int = 200_000

    def __post_init__(self):
        if self.min_errors < 1:
            raise ValueError("min_errors must be at least 1")
        if self.max_trials < self.min_errors:
            raise ValueError("max_trials must be at least min_errors")


@dataclass(frozen=True)
class SimPoint:
    """One Monte Carlo cell: rate, Eb/N0, erasure count, interference setup."""

    mode: ModeParams
    ebn0_db: float
    n_erasures: int = 0
    bt_enabled: bool = True
    sir_db: float = 0.0
    seed: int = 1
    payload_bytes: int = 100
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    bt: BtConfig = field(default_factory=BtConfig)

    def __post_init__(self):
        if not math.isfinite(self.ebn0_db):
            raise ValueError("ebn0_db must be finite")
        if not 0 <= self.n_erasures <= 48:
            raise ValueError("n_erasures must be in [0, 48]")
        if self.payload_bytes < 1:
            raise ValueError("payload must be at least 1 octet")


@dataclass(frozen=True)
class PerPoint:
    """PER estimate for one point, with its Wilson 95% interval."""

    point: SimPoint
    trials: int
    packet_errors: int
    per: float
    ci_lo: float
    ci_hi: float


def wilson_interval(errors: int, trials: int, z: float = _Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion; stays valid at the
    small error counts the stopping rule produces."""
    if trials < 1:
        raise ValueError("need at least one trial")
    if not 0 <= errors <= trials:
        raise ValueError("errors must be in [0, trials]")
    p = errors / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    # the bounds are exactly 0 and 1 at the extremes; keep them that way
    lo = 0.0 if errors == 0 else max(0.0, centre - half)
    hi = 1.0 if errors == trials else min(1.0, centre + half)
    return lo, hi


def _trial_seed(point: SimPoint, trial: int) -> np.random.SeedSequence:
    """Counter-style seed derivation: non-negative words from the master
    seed, the point's parameters, and the trial index."""
    def milli(x: float) -> int:
        return int(round(x * 1000.0)) & 0xFFFFFFFF

    words = [
        point.seed & 0xFFFFFFFFFFFFFFFF,
        point.mode.rate_mbps,
        milli(point.ebn0_db),
        point.n_erasures,
        int(point.bt_enabled),
        milli(point.sir_db),
        point.payload_bytes,
        trial & 0xFFFFFFFFFFFFFFFF,
    ]
    return np.random.SeedSequence(words)


def run_packet(point: SimPoint, trial_index: int) -> bool:
    """Simulate one packet; returns True on a packet error.

    Deterministic in (point, trial_index): assemble, fade, add interference
    if enabled, add noise, erase, demap, deinterleave, depuncture, decode,
    and compare the payload bits.
    """
    rng = np.random.default_rng(_trial_seed(point, trial_index))
    mode = point.mode

    info, grid = assemble_packet(point.payload_bytes, mode, rng)
    n_sym = grid.n_sym

    realization = draw_channel(point.channel, rng)
    h = realization.h_grid
    rx = SubcarrierGrid(grid.symbols * h)

    episode = None
    if point.bt_enabled:
        bt_cfg = replace(point.bt, sir_db=point.sir_db)
        episode = draw_episode(SYMBOL_US * n_sym, n_sym, bt_cfg, rng)
        rx = inject(rx, episode)

    n0 = noise_variance(point.ebn0_db, mode)
    rx = add_noise(rx, n0, rng)

    mask = build_mask(episode, ErasurePolicy(point.n_erasures), n_sym)
    soft = demap_soft(rx, h, n0, mask, mode)

    perm = fec.interleave_permutation(mode.n_cbps, mode.n_bpsc)
    soft = fec.SoftBits(
        soft.value.reshape(n_sym, mode.n_cbps)[:, perm].ravel(),
        soft.erased.reshape(n_sym, mode.n_cbps)[:, perm].ravel(),
    )
    decoded = fec.viterbi_decode(fec.depuncture(soft, mode.code_rate))

    lo = SERVICE_BITS
    hi = SERVICE_BITS + 8 * point.payload_bytes
    return bool(np.any(decoded[lo:hi] != info[lo:hi]))


def _trial_task(args: tuple[SimPoint, int]) -> bool:
    return run_packet(*args)


def _next_batch(trials: int, errors: int, stop: StopRule) -> int:
    """Deterministic adaptive batch schedule.

    The first batch is `min_errors` trials (so a PER-1 point stops at
    exactly that many); later batches extrapolate from the running error
    rate. Depends only on (trials, errors, stop), never on worker count.
    """
    if trials >= stop.max_trials or errors >= stop.min_errors:
        return 0
    if trials == 0:
        want = stop.min_errors
    elif errors == 0:
        want = 3 * trials
    else:
        needed = stop.min_errors - errors
        want = math.ceil(1.15 * needed * trials / errors)
    return min(max(want, 1), stop.max_trials - trials)


def estimate_per(
    point: SimPoint,
    stop: StopRule = StopRule(),
    pool: "multiprocessing.pool.Pool | None" = None,
) -> PerPoint:
    """Monte Carlo PER estimate for one point."""
    trials = 0
    errors = 0
    while True:
        batch = _next_batch(trials, errors, stop)
        if batch == 0:
            break
        tasks = [(point, t) for t in range(trials, trials + batch)]
        if pool is None:
            outcomes = [run_packet(point, t) for _, t in tasks]
        else:
            outcomes = pool.map(_trial_task, tasks, chunksize=max(1, batch // 32))
        errors += sum(outcomes)
        trials += batch
    lo, hi = wilson_interval(errors, trials)
    return PerPoint(point, trials, errors, errors / trials, lo, hi)


def sweep(
    points: list[SimPoint],
    stop: StopRule = StopRule(),
    workers: int | None = None,
    progress=None,
) -> list[PerPoint]:
    """Estimate every point in input order; `progress` (if given) is called
    with each finished PerPoint. Results do not depend on `workers`."""
    if not points:
        raise ValueError("empty point list")
    if workers is None:
        workers = os.cpu_count() or 1
    pool = multiprocessing.Pool(workers) if workers > 1 else None
    try:
        results = []
        for point in points:
            result = estimate_per(point, stop, pool)
            if progress is not None:
                progress(result)
            results.append(result)
        return results
    finally:
        if pool is not None:
            pool.close()
            pool.join()


def normalized_throughput(p: PerPoint) -> float:
    """(1 - PER) * rate / 54: success-weighted rate against the top mode."""
    return (1.0 - p.per) * p.point.mode.rate_mbps / TOP_RATE_MBPS


def _overlap_window_profile(
    packet_duration_us: float, cfg: BtConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Partition of the start-offset interval [0, slot) by how many active
    BT windows a packet of the given duration overlaps.

    Returns (lengths, counts): piece lengths in us and the number of
    overlapped windows on each piece. Exact interval arithmetic."""
    slot, active, dur = cfg.slot_us, cfg.active_us, packet_duration_us
    last_slot = int((slot + dur) // slot) + 1
    cuts = {0.0, slot}
    for j in range(last_slot + 1):
        for edge in (j * slot - dur, j * slot + active):
            if 0.0 < edge < slot:
                cuts.add(edge)
    xs = sorted(cuts)
    lengths = []
    counts = []
    for a, b in zip(xs[:-1], xs[1:]):
        mid = (a + b) / 2
        lengths.append(b - a)
        counts.append(
            sum(1 for j in range(last_slot + 1) if j * slot - dur < mid < j * slot + active)
        )
    return np.array(lengths), np.array(counts)


def analytic_collision_probability(
    packet_duration_us: float, cfg: BtConfig = BtConfig()
) -> float:
    """Exact probability that a packet overlaps at least one in-band burst.

    Integrates over the uniform start offset within a slot; with one
    independent uniform hop per slot, a packet overlapping n active windows
    collides with probability 1 - (1 - q)^n where q is the in-band hop
    fraction. Serves as the oracle for the Monte Carlo episode model.
    """
    if packet_duration_us <= 0:
        raise ValueError("duration must be positive")
    freqs = bt_channel_freqs()
    q = np.count_nonzero(in_band(freqs, cfg)) / freqs.size
    lengths, counts = _overlap_window_profile(packet_duration_us, cfg)
    return float(np.sum(lengths * (1.0 - (1.0 - q) ** counts)) / cfg.slot_us)
