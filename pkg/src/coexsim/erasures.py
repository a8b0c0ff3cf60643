"""Symbol-erasure selection: pick the data subcarriers nearest the
interferer's centre frequency on each overlapped OFDM symbol.

Erasing a cell means the demapper emits zero-confidence soft bits for it,
which keeps the corrupted cells from biasing the Viterbi path metrics. The
receiver is assumed to know the interferer centre exactly; `freq_error_mhz`
offsets that belief for sensitivity studies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bluetooth import BtEpisode
from .ofdm import DATA_SUBCARRIERS, N_DATA, SUBCARRIER_SPACING_MHZ


@dataclass(frozen=True)
class ErasurePolicy:
    n_erasures: int
    freq_error_mhz: float = 0.0

    def __post_init__(self):
        if not 0 <= self.n_erasures <= N_DATA:
            raise ValueError(f"erasure count must be in [0, {N_DATA}]")


def nearest_data_subcarriers(offset_mhz: float, count: int) -> np.ndarray:
    """The `count` data subcarrier indices closest to a frequency offset
    from the WLAN centre; ties break toward the lower subcarrier index."""
    distance = np.abs(DATA_SUBCARRIERS * SUBCARRIER_SPACING_MHZ - offset_mhz)
    order = np.lexsort((DATA_SUBCARRIERS, distance))
    return np.sort(order[:count])


def build_mask(
    episode: BtEpisode | None, policy: ErasurePolicy, n_sym: int
) -> np.ndarray:
    """Per-(symbol, data subcarrier) erasure mask.

    Each symbol with a positive overlap fraction gets exactly
    `policy.n_erasures` marks on the data subcarriers nearest the
    overlapping burst's centre; non-overlapped symbols stay clear. Columns
    follow the ascending data-subcarrier order used by the demapper.
    """
    mask = np.zeros((n_sym, N_DATA), dtype=bool)
    if episode is None or policy.n_erasures == 0:
        return mask
    if episode.overlap_fraction.shape[0] != n_sym:
        raise ValueError(
            f"episode covers {episode.overlap_fraction.shape[0]} symbols, "
            f"grid has {n_sym}"
        )
    for s in np.flatnonzero(episode.overlap_fraction > 0):
        believed = episode.f_bt_mhz[s] - episode.wlan_center_mhz + policy.freq_error_mhz
        mask[s, nearest_data_subcarriers(believed, policy.n_erasures)] = True
    return mask
