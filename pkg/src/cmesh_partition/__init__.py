"""Coarse-mesh partitioning for forest-of-trees adaptive meshes.

Partitions are stored as signed offset arrays, send/receive patterns are
computed locally from two offset arrays, and trees plus face-neighbor ghost
trees are exchanged between simulated ranks.
"""
from .cmesh import Cmesh, GhostRecord, distribute, neighbor_global_index
from .connectivity import (
    Connectivity,
    FormatError,
    dump_connectivity,
    load_connectivity,
    validate_global_connectivity,
)
from .eclass import TreeClass, compute_orientation, decode_face, encode_face
from .exchange import MissingGhostError, RankMessage, partition_cmesh
from .forest import ForestSummary, partition_from_forest, synthetic_band_forest, witness_forest
from .ghosts import ConnectionType, classify_connection, ghost_set, send_ghost
from .meshgen import BrickSpec, brick_world, shift_partition, three_tree_ring, two_triangle_mesh
from .offsets import (
    OffsetArray,
    PartitionError,
    PartitionView,
    decode_offsets,
    encode_offsets,
    first_tree,
    is_valid,
    last_tree,
    num_local_trees,
)
from .pattern import CommPattern, compute_pattern, compute_R, compute_S, sender_of_tree, sends_to
from .runtime import PartitionStats, RepartitionError, World, run_repartition, verify_world

__all__ = [
    "brick_world",
    "BrickSpec",
    "classify_connection",
    "Cmesh",
    "CommPattern",
    "compute_orientation",
    "compute_pattern",
    "compute_R",
    "compute_S",
    "ConnectionType",
    "Connectivity",
    "decode_face",
    "decode_offsets",
    "distribute",
    "dump_connectivity",
    "encode_face",
    "encode_offsets",
    "first_tree",
    "ForestSummary",
    "FormatError",
    "ghost_set",
    "GhostRecord",
    "is_valid",
    "last_tree",
    "load_connectivity",
    "MissingGhostError",
    "neighbor_global_index",
    "num_local_trees",
    "OffsetArray",
    "partition_cmesh",
    "partition_from_forest",
    "PartitionError",
    "PartitionStats",
    "PartitionView",
    "RankMessage",
    "RepartitionError",
    "run_repartition",
    "send_ghost",
    "sender_of_tree",
    "sends_to",
    "shift_partition",
    "synthetic_band_forest",
    "three_tree_ring",
    "TreeClass",
    "two_triangle_mesh",
    "validate_global_connectivity",
    "verify_world",
    "witness_forest",
    "World",
]

__version__ = "0.1.0"
