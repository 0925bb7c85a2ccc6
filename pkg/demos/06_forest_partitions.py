"""Partitions induced by a partitioned forest of leaves.

A forest is summarized by the leaf count of each tree. Cutting the global
leaf sequence into P pieces gives each rank a run of trees; a tree whose
leaves land on several ranks is shared.
"""
import numpy as np

from cmesh_partition.forest import ForestSummary, partition_from_forest, synthetic_band_forest, witness_forest
from cmesh_partition.offsets import is_valid

# %% Uniform refinement: two levels on 6 quads, 5 ranks.
forest = ForestSummary(np.full(6, 16))
O = partition_from_forest(forest, 5)
print("uniform:", O.tolist(), "shared trees:", O.shared_tree_count())

# %% A refined band makes the cut points move.
band = synthetic_band_forest(12, base_level=1, refined_trees=range(4, 7), dim=2)
O = partition_from_forest(band, 5)
print("band leaves", band.leaf_counts.tolist())
print("band partition:", O.tolist(), is_valid(O))

# %% Weights other than one leaf per element.
w = np.ones(band.num_leaves)
w[: band.num_leaves // 3] = 3.0
O = partition_from_forest(ForestSummary(band.leaf_counts, w), 5)
print("weighted:", O.tolist())

# %% Any valid partition comes from some forest; here is one that produces it.
forest, cuts = witness_forest(O)
print("witness leaves", forest.leaf_counts.tolist(), "cuts", cuts.tolist())
