"""A full repartition on simulated ranks, with real serialized messages.

Every wire message goes through bytes and back; messages a rank sends to
itself are plain local moves and cost nothing. The outcome does not depend on
how the ranks are scheduled.
"""
import tempfile
from pathlib import Path

import numpy as np

from cmesh_partition.forest import random_forest_partition
from cmesh_partition.meshgen import random_mesh
from cmesh_partition.runtime import World, run_repartition, serialize_world, verify_world

rng = np.random.default_rng(3)
K, P = 40, 6
conn = random_mesh(K, rng, dim=3, mixed=True)
old, *_ = random_forest_partition(K, P, rng)
new, *_ = random_forest_partition(K, P, rng)
print("old", old.tolist())
print("new", new.tolist())

# %% One step, messages dumped to disk.
with tempfile.TemporaryDirectory() as tmp:
    world, stats = run_repartition(World.from_connectivity(conn, old), new, dump_dir=tmp)
    files = sorted(Path(tmp).iterdir())
    print(f"{len(files)} message files, first header:", files[0].read_bytes().split(b"\n")[0].decode())

print(stats.to_csv())
print("problems:", verify_world(world, conn) or "none")

# %% Threads and a shuffled schedule give the identical result.
again, _ = run_repartition(World.from_connectivity(conn, old), new, workers=4, schedule_seed=11)
assert serialize_world(again) == serialize_world(world)
print("schedule independent")

# %% Repartitioning to the same partition sends nothing.
_, idle = run_repartition(world, new)
print("identity step bytes on the wire:", idle.bytes_sent)
