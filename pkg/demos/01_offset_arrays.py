"""Signed offset arrays: how a partition with shared trees fits in P+1 integers.

Run with ``python3 demos/01_offset_arrays.py``.
"""
import numpy as np

from cmesh_partition.offsets import (
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

# %% Three ranks over five trees. Rank 1 also holds tree 2, which rank 0 owns
# first, so its entry is stored as -(2)-1 = -3.
view = PartitionView(first=(0, 2, 3), last=(2, 3, 4), shared=(False, True, True))
O = encode_offsets(view, 5)
print("encoded:", O.tolist())

for p in range(O.num_ranks):
    print(f"rank {p}: trees {first_tree(O, p)}..{last_tree(O, p)} ({num_local_trees(O, p)} local)")

# %% Decoding gives back the view exactly.
assert decode_offsets(O) == view

# %% An empty rank repeats the boundary: it gets first = last + 1 of the
# previous nonempty rank, so its count comes out as zero.
O = OffsetArray([0, 2, 2, 5])
print("with empty rank 1:", [(first_tree(O, p), last_tree(O, p)) for p in range(3)])

# %% The validator reports broken arrays instead of guessing. A wrong first or
# last entry is rejected as soon as the array is built.
for bad in ([0, 3, 2, 5], [0, -3, 1, 5], [1, 2, 5]):
    try:
        ok, problems = is_valid(OffsetArray(bad))
    except PartitionError as err:
        ok, problems = False, [str(err)]
    print(bad, "->", "valid" if ok else problems[0])

# %% Counts, first and last trees are vectorized over all ranks at once.
O = OffsetArray(np.array([0, -3, 4, 4, -7, 9]))
print("first", O.first, "last", O.last, "counts", O.counts)
print("trees held by more than one rank:", O.shared_tree_count())
