"""Desk-scale toolkit for block-holomorphic function theory on grid regions."""

from .region import (
    BlockShape,
    CompactSample,
    PointZ,
    Region,
    contains,
    dense_sequence,
    dist_to_complement,
    load_region,
    project,
    save_region,
    slice_region,
    sublevel_compact,
    sup_norm,
)

__all__ = [
    "BlockShape",
    "CompactSample",
    "PointZ",
    "Region",
    "contains",
    "dense_sequence",
    "dist_to_complement",
    "load_region",
    "project",
    "save_region",
    "slice_region",
    "sublevel_compact",
    "sup_norm",
]

__version__ = "0.1.0"
