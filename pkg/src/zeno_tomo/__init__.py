"""Quantum Zeno absorption tomography versus standard transmission tomography."""

from zeno_tomo.interferometer import (
    ApparatusConfig,
    ChannelProbabilities,
    ConsistencyError,
    RegimeError,
    TransferMatrix,
    beam_splitter,
    effective_transmission,
    evolve,
    loop_matrix,
    standard_probabilities,
    zeno_probabilities,
    zeno_probabilities_asymptotic,
    zeno_threshold,
    zeno_threshold_loops,
)

__version__ = "0.1.0"

__all__ = [
    "ApparatusConfig",
    "ChannelProbabilities",
    "ConsistencyError",
    "RegimeError",
    "TransferMatrix",
    "beam_splitter",
    "effective_transmission",
    "evolve",
    "loop_matrix",
    "standard_probabilities",
    "zeno_probabilities",
    "zeno_probabilities_asymptotic",
    "zeno_threshold",
    "zeno_threshold_loops",
]
