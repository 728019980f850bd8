"""Hierarchical multi-beam search and low-complexity hybrid precoding for mmWave MIMO."""

__version__ = "0.1.0"

from .channel import (  # noqa: E402
    ChannelRealization, PathComponent, channel_from_paths, generate_channel, measure,
    steering_vector,
)
from .codebook import Codebook, Codeword, beam_gain, build_codebook, children  # noqa: E402
from .experiments import SimConfig, run_rate_sweep, run_success_sweep  # noqa: E402
from .precoding import (  # noqa: E402
    PrecodingSolution, achievable_rate, analog_precoders, baseband_channel, digital_precoders,
    lc_hpc, rate_bound, waterfill,
)
from .search import BeamSearchResult, hierarchical_search, sequential_search  # noqa: E402

__all__ = [
    "BeamSearchResult", "ChannelRealization", "Codebook", "Codeword", "PathComponent",
    "PrecodingSolution", "SimConfig", "achievable_rate", "analog_precoders", "baseband_channel",
    "beam_gain", "build_codebook", "channel_from_paths", "children", "digital_precoders",
    "generate_channel", "hierarchical_search", "lc_hpc", "measure", "rate_bound",
    "run_rate_sweep", "run_success_sweep", "sequential_search", "steering_vector", "waterfill",
]
