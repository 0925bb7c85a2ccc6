"""Who sends which trees to whom, computed by each rank on its own.

Every rank knows the old and the new offset array. From those alone it finds
the ranks it sends to, the ranks it receives from, and the tree range for each
message. Nobody has to talk to anybody to agree on the pattern.
"""
from cmesh_partition.offsets import OffsetArray
from cmesh_partition.pattern import compute_pattern, format_pattern, sender_of_tree

# %% Five trees on three ranks; tree 1 is shared by ranks 0 and 1 before,
# trees 2 and 3 are shared after.
old = OffsetArray([0, -2, 3, 5])
new = OffsetArray([0, -3, -4, 5])
pats = [compute_pattern(old, new, p) for p in range(3)]
print(format_pattern(pats))

# %% A tree that stays local is never shipped by anybody else. Otherwise the
# smallest old owner sends it, so each (tree, receiver) pair moves once.
for q in range(3):
    for k in range(int(new.first[q]), int(new.last[q]) + 1):
        print(f"tree {k} -> rank {q}: sent by rank {sender_of_tree(old, new, k, q)}")

# %% Send and receive sets agree: q is in p's sends iff p is in q's receives.
for p in range(3):
    for q in pats[p].send_to:
        assert p in pats[q].recv_from
print("send and receive sets are consistent")
