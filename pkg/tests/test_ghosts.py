import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cmesh_partition.cmesh import distribute
from cmesh_partition.connectivity import Connectivity
from cmesh_partition.eclass import TreeClass
from cmesh_partition.ghosts import (
    ConnectionType,
    classify_connection,
    ghost_set,
    outgoing_ghosts,
    parse_neighbors,
    send_ghost,
)
from cmesh_partition.meshgen import random_mesh, three_tree_ring
from cmesh_partition.offsets import OffsetArray, offsets_from_ranges
from cmesh_partition.pattern import compute_pattern
from oracle import ghost_sets, random_partition

RING_OLD = OffsetArray([0, 1, 3, 3])
RING_NEW = offsets_from_ranges([(0, 0), (0, 1), (2, 2)], 3)


def test_ring_ghost_sets():
    conn = three_tree_ring()
    assert ghost_set(RING_NEW, 0, conn) == {1, 2}
    assert ghost_set(RING_NEW, 1, conn) == {2}
    assert ghost_set(RING_NEW, 2, conn) == {0, 1}
    assert ghost_set(RING_OLD, 2, conn) == set()


def test_single_boundary_tree_has_no_ghosts():
    conn = Connectivity.unconnected([TreeClass.HEX], dim=3)
    assert ghost_set(OffsetArray([0, 1]), 0, conn) == set()


def test_send_ghost_ring():
    conn = three_tree_ring()
    c0, c1 = distribute(conn, RING_OLD, 0), distribute(conn, RING_OLD, 1)
    assert send_ghost(c1, c1.record_of(0), 2, RING_NEW)
    # rank 1 keeps tree 1, a neighbor of 2, so it retains ghost 2 itself
    assert not send_ghost(c0, c0.record_of(2), 1, RING_NEW)


def test_parse_neighbors_ring():
    conn = three_tree_ring()
    c0, c1 = distribute(conn, RING_OLD, 0), distribute(conn, RING_OLD, 1)
    plan = parse_neighbors(c1, 1, 1, 2, {}, RING_NEW, (2, 2))
    assert sorted(plan) == [0, 1]
    assert parse_neighbors(c0, 0, 0, 1, {}, RING_NEW, (0, 0)) == {}


def test_parse_neighbors_boundary_tree():
    conn = Connectivity.unconnected([TreeClass.QUAD] * 2, dim=2)
    O = OffsetArray([0, 2, 2])
    C = distribute(conn, O, 0)
    assert parse_neighbors(C, 0, 0, 1, {}, OffsetArray([0, 1, 2]), (1, 1)) == {}


def star_mesh():
    # tree 4 touches trees 1, 2 and 3
    conn = Connectivity.unconnected([TreeClass.QUAD] * 5, dim=2)
    conn.join(4, 0, 1, 1)
    conn.join(4, 1, 2, 0)
    conn.join(4, 2, 3, 3)
    return conn


def test_smallest_candidate_ships():
    conn = star_mesh()
    old = offsets_from_ranges([(0, 0), None, None, (1, 1), None, (2, 4)], 5)
    new = offsets_from_ranges([(0, 2), None, None, None, None, (3, 4)], 5)
    c3, c5 = distribute(conn, old, 3), distribute(conn, old, 5)
    g = c5.record_of(4)
    assert send_ghost(c3, c3.record_of(4), 0, new)
    assert not send_ghost(c5, g, 0, new)


def test_classify_connection():
    O = OffsetArray([0, 2, 4])
    assert classify_connection(O, 0, "local", 1, {2}) == ConnectionType.LOCAL_LOCAL
    assert classify_connection(O, 0, "local", 2, {2}) == ConnectionType.LOCAL_GHOST
    assert classify_connection(O, 0, "ghost", 0, {2}) == ConnectionType.GHOST_LOCAL
    assert classify_connection(O, 0, "ghost", 2, {2, 3}) == ConnectionType.GHOST_GHOST
    assert classify_connection(O, 0, "ghost", 3, {2}) == ConnectionType.GHOST_NONLOCAL
    with pytest.raises(ValueError):
        classify_connection(O, 0, "local", 3, {2})


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 40), st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_ghost_shipping_unique_and_complete(K, P, seed):
    rng = np.random.default_rng(seed)
    conn = random_mesh(K, rng, dim=int(rng.choice([2, 3])))
    A, fa = random_partition(K, P, rng)
    B, fb = random_partition(K, P, rng)
    need = ghost_sets(conn, fb)
    cms = [distribute(conn, A, p) for p in range(P)]
    shipped = {}
    for C in cms:
        pat = compute_pattern(A, B, C.rank)
        for q in pat.send_to:
            if q == C.rank:
                continue
            for g in outgoing_ghosts(C, q, B, pat.ranges[q]):
                # sender subset: only ranks that ship trees to q ship ghosts
                assert (g.id, q) not in shipped
                shipped[g.id, q] = C.rank
    for q in range(P):
        got = {g for (g, dst) in shipped if dst == q}
        assert got <= need[q]
        # ghosts q does not receive must touch a tree q keeps
        kept = fa[q] & fb[q]
        for g in need[q] - got:
            assert any(int(u) in kept for u in conn.tree_to_tree[g] if u >= 0)
        for g in got:
            assert not any(int(u) in kept for u in conn.tree_to_tree[g] if u >= 0)
