"""Frequency-domain Monte Carlo simulator for 802.11g packet error rate
under worst-case Bluetooth HV1 interference, including symbol-erasure
mitigation at the receiver."""

from .bluetooth import (
    BtConfig,
    BtEpisode,
    bt_channel_freqs,
    draw_episode,
    draw_hops,
    gfsk_baseband,
    in_band,
    in_band_channels,
    inject,
    spectral_footprint,
)
from .channel import (
    ChannelConfig,
    ChannelRealization,
    add_noise,
    draw_channel,
    noise_variance,
)
from .engine import (
    PerPoint,
    SimPoint,
    StopRule,
    analytic_collision_probability,
    estimate_per,
    normalized_throughput,
    run_packet,
    sweep,
    wilson_interval,
)
from .erasures import ErasurePolicy, build_mask, nearest_data_subcarriers
from .fec import (
    CodeConfig,
    SoftBits,
    conv_encode,
    deinterleave,
    depuncture,
    interleave,
    puncture,
    viterbi_decode,
)
from .ofdm import (
    MODES,
    ModeParams,
    SubcarrierGrid,
    assemble_packet,
    constellation,
    demap_soft,
    map_symbols,
    mode_for,
    n_symbols,
)

__version__ = "0.1.0"
