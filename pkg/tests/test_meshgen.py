import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cmesh_partition.connectivity import validate_global_connectivity
from cmesh_partition.meshgen import (
    BrickSpec,
    brick_connectivity,
    brick_offsets,
    brick_world,
    shift_partition,
    three_tree_ring,
    two_triangle_mesh,
)
from cmesh_partition.offsets import OffsetArray, is_valid
from oracle import random_partition


def interior_faces(conn, k):
    return sum(not conn.is_boundary(k, f) for f in range(conn.num_faces(k)))


def test_fig7_brick_size():
    spec = BrickSpec.parse("10x18x8", ranks=6)
    assert spec.trees_per_rank == 1440 and spec.num_trees == 8640
    O = brick_offsets(spec)
    assert O.tolist() == [1440 * p for p in range(7)]


def test_single_tree_brick():
    conn = brick_connectivity(BrickSpec(1, 1, 1, 1))
    assert conn.num_trees == 1 and interior_faces(conn, 0) == 0


def test_2d_strips():
    conn = brick_connectivity(BrickSpec.parse("2x1", ranks=2))
    assert conn.num_trees == 4 and conn.dim == 2
    assert conn.tree_to_tree[0, 1] == 1 and conn.tree_to_tree[2, 1] == 3
    # the two strips are disjoint
    assert conn.is_boundary(1, 1) and conn.is_boundary(2, 0)


def test_connected_bricks_glue_along_x():
    conn = brick_connectivity(BrickSpec.parse("2x2", ranks=2, connected=True))
    assert conn.tree_to_tree[1, 1] == 4 and conn.tree_to_tree[4, 0] == 1
    assert validate_global_connectivity(conn) == []


def test_brick_payload_is_global_id():
    conn = brick_connectivity(BrickSpec(2, 2, 2, 2))
    assert [int.from_bytes(d, "little") for d in conn.tree_data] == list(range(16))


def test_brick_parse_errors():
    with pytest.raises(ValueError):
        BrickSpec.parse("10x")
    with pytest.raises(ValueError):
        BrickSpec(0, 1, 1)


@pytest.mark.parametrize("dims", [(1, 1, 1), (4, 4, 4), (3, 2, 4), (4, 1, 2)])
@pytest.mark.parametrize("P", [1, 3, 8])
@pytest.mark.parametrize("connected", [False, True])
def test_bricks_validate(dims, P, connected):
    conn = brick_connectivity(BrickSpec(*dims, ranks=P, connected=connected))
    assert validate_global_connectivity(conn) == []


def test_brick_world_has_no_shared_trees():
    world, O = brick_world(BrickSpec(2, 2, 2, 3))
    assert all(v >= 0 for v in O) and O.shared_tree_count() == 0
    assert world.size == 3 and all(C.n_local == 8 for C in world.cmeshes)


def test_shift_uniform():
    O = OffsetArray([100 * p for p in range(5)])
    new = shift_partition(O, 0.43)
    counts = [int(new.counts[p]) for p in range(4)]
    assert counts == [57, 100, 100, 143]
    assert new.tolist() == [0, 57, 157, 257, 400]


def test_shift_trivial_cases():
    O = OffsetArray([0, 10, 25, 40])
    assert shift_partition(O, 0) == O
    assert shift_partition(OffsetArray([0, 9]), 0.43) == OffsetArray([0, 9])
    with pytest.raises(ValueError):
        shift_partition(O, 1.0)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 80), st.integers(1, 16), st.floats(0, 0.99), st.integers(0, 2**32 - 1))
def test_shift_valid_and_conserving(K, P, frac, seed):
    O, _ = random_partition(K, P, np.random.default_rng(seed))
    new = shift_partition(O, frac)
    assert is_valid(new)[0]
    assert new.num_trees == K and new.shared_tree_count() == 0


def test_small_meshes():
    tri = two_triangle_mesh()
    assert tri.num_trees == 2
    interior = [interior_faces(tri, k) for k in range(2)]
    assert interior == [1, 1]
    assert sum(3 - n for n in interior) == 4
    ring = three_tree_ring()
    assert [interior_faces(ring, k) for k in range(3)] == [2, 2, 2]
    for k in range(3):
        assert set(ring.face_neighbors(k).tolist()) == {0, 1, 2} - {k}
    assert validate_global_connectivity(tri) == validate_global_connectivity(ring) == []
