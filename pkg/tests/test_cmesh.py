import numpy as np
import pytest

from cmesh_partition.cmesh import Cmesh, GhostRecord, distribute, neighbor_global_index
from cmesh_partition.eclass import TreeClass
from cmesh_partition.meshgen import random_mesh
from cmesh_partition.offsets import OffsetArray


def five_quads_at_ten():
    # rank 1 holds trees 10..14 of 50
    O = OffsetArray([0, 10, 15, 50])
    t2t = np.array([[2, 6, 0, 0], [1, 1, 1, 5]] + [[k, k, k, k] for k in range(2, 5)], dtype=np.int32)
    t2f = np.tile(np.arange(4, dtype=np.int16), (5, 1))
    t2f[1, 3] = 2
    ghosts = [GhostRecord(9, TreeClass.QUAD, (9, 9, 9, 9), (0, 1, 2, 3)),
              GhostRecord(40, TreeClass.QUAD, (40, 14, 40, 40), (0, 1, 2, 3))]
    return Cmesh(1, O, 2, np.full(5, TreeClass.QUAD, np.uint8), t2t, t2f, [b""] * 5, ghosts)


def test_neighbor_resolution_examples():
    C = five_quads_at_ten()
    assert neighbor_global_index(C, 0, 0) == 12
    assert neighbor_global_index(C, 0, 1) == 40
    assert neighbor_global_index(C, 3, 2) is None
    assert neighbor_global_index(C, 1, 3) == 9


def test_neighbor_resolution_errors():
    C = five_quads_at_ten()
    with pytest.raises(IndexError):
        neighbor_global_index(C, 5, 0)
    with pytest.raises(IndexError):
        neighbor_global_index(C, 0, 4)


def test_count_must_match_offsets():
    with pytest.raises(ValueError):
        Cmesh(0, OffsetArray([0, 2]), 2, np.zeros(1, np.uint8), np.zeros((1, 4)), np.zeros((1, 4)), [b""])


def test_distribute_matches_global():
    rng = np.random.default_rng(1)
    conn = random_mesh(30, rng, dim=3, mixed=True)
    O = OffsetArray([0, 11, -12, 30])
    for p in range(3):
        C = distribute(conn, O, p)
        assert C.n_local == O.counts[p]
        assert [g.id for g in C.ghosts] == sorted(g.id for g in C.ghosts)
        for i in range(C.n_local):
            k = C.global_index(i)
            nf = conn.num_faces(k)
            assert C.global_neighbors[i, :nf].tolist() == conn.tree_to_tree[k, :nf].tolist()
            assert C.as_ghost(i).tree_to_tree == tuple(conn.tree_to_tree[k, :nf].tolist())
        for g in C.ghosts:
            assert C.record_of(g.id) is g


def test_ghost_record_neighbors_skip_boundary():
    g = GhostRecord(3, TreeClass.QUAD, (3, 5, 3, 3), (0, 1, 2, 1))
    # face 3 points at tree 3 face 1: one-tree periodicity, not a boundary
    assert g.neighbors() == [5, 3]
