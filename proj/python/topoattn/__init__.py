"""Topology-guided attention maps for segmentation probability maps."""

from ._core import (
    InvariantError,
    IoError,
    ParseError,
    ValidationError,
    __version__,
    compute_persistence,
    generate_attention_map,
)

__all__ = [
    "InvariantError",
    "IoError",
    "ParseError",
    "ValidationError",
    "__version__",
    "compute_persistence",
    "generate_attention_map",
]
