"""Benchmark-style run: hex bricks, every rank hands 43% of its trees on.

This is a scaled-down version of the large disjoint-brick test. Timings come
from simulated ranks in one Python process and are not comparable to numbers
from a real distributed run.
"""
import time

from cmesh_partition.meshgen import BrickSpec, brick_connectivity, brick_world, shift_partition
from cmesh_partition.runtime import run_repartition, verify_world

spec = BrickSpec(10, 18, 8, ranks=8)
world, O = brick_world(spec)
print(f"{spec.num_trees} hexes on {spec.ranks} ranks")

# %% Three shift steps in a row; every step moves trees towards higher ranks.
reference = brick_connectivity(spec)
for step in range(3):
    O = shift_partition(O, 0.43)
    t0 = time.perf_counter()
    world, stats = run_repartition(world, O)
    dt = time.perf_counter() - t0
    problems = verify_world(world, reference)
    print(f"step {step}: {stats.trees_sent} trees, {stats.ghosts_sent} ghosts, "
          f"{stats.bytes_sent / 1e6:.2f} MB in {dt * 1e3:.0f} ms, "
          f"verified {'ok' if not problems else problems[0]}")
