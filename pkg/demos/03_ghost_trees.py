"""Ghost trees: which face neighbors travel with each message.

Three quads glued in a ring. Rank 0 holds tree 0 and rank 1 holds trees 1 and
2. After repartitioning, ranks 0 and 1 share tree 0, rank 1 adds tree 1 and
rank 2 takes tree 2.
"""
from cmesh_partition.exchange import partition_cmesh
from cmesh_partition.ghosts import format_plan
from cmesh_partition.meshgen import three_tree_ring
from cmesh_partition.offsets import OffsetArray, offsets_from_ranges
from cmesh_partition.runtime import World

conn = three_tree_ring()
old = OffsetArray([0, 1, 3, 3])
new = offsets_from_ranges([(0, 0), (0, 1), (2, 2)], 3)
print("old", old.tolist(), "new", new.tolist())

# %% Each ghost is sent by exactly one rank: the smallest of the ranks that
# own one of its local neighbors on the receiver, unless the receiver already
# has it, in which case it is kept and never sent at all.
world = World.from_connectivity(conn, old)
result, messages = partition_cmesh(world.cmeshes, new)
print(format_plan(sorted((m.src, m.dst, list(m.tree_ids), [g.id for g in m.ghosts]) for m in messages)))

# %% After the exchange every rank has exactly its face-neighbor ghosts.
for C in result:
    print(f"rank {C.rank}: trees {C.first_tree}..{C.first_tree + C.n_local - 1}, "
          f"ghosts {[g.id for g in C.ghosts]}")
