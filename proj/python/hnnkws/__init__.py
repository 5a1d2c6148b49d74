"""Hierarchical keyword-spotting networks on synthetic multi-environment data."""

from ._core import (
    FRAME_DIM,
    FRAME_SECONDS,
    NUM_CLASSES,
    WINDOW_DIM,
    ConfigError,
    Corpus,
    Error,
    IoError,
    Model,
    NumericalError,
    Utterance,
    __version__,
    accept_labels,
    complexity_report,
    decode_stream,
    default_config,
    gen_corpus,
    resolve_config,
    run,
    sweep_roc,
)

__all__ = [
    "FRAME_DIM",
    "FRAME_SECONDS",
    "NUM_CLASSES",
    "WINDOW_DIM",
    "ConfigError",
    "Corpus",
    "Error",
    "IoError",
    "Model",
    "NumericalError",
    "Utterance",
    "__version__",
    "accept_labels",
    "complexity_report",
    "decode_stream",
    "default_config",
    "gen_corpus",
    "resolve_config",
    "run",
    "sweep_roc",
]
