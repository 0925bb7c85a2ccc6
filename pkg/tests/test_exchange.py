import numpy as np
import pytest

from cmesh_partition.cmesh import GhostRecord, distribute, neighbor_global_index
from cmesh_partition.exchange import (
    MissingGhostError,
    RankMessage,
    ghost_to_local_index,
    new_local_index,
    partition_cmesh,
    pending_code,
    send_phase,
    update_ids_phase1,
    update_ids_phase2,
)
from cmesh_partition.meshgen import line_mesh, random_mesh, three_tree_ring
from cmesh_partition.offsets import OffsetArray, offsets_from_ranges

RING_OLD = OffsetArray([0, 1, 3, 3])
RING_NEW = offsets_from_ranges([(0, 0), (0, 1), (2, 2)], 3)
LINE_OLD = OffsetArray([0, -2, 3, 5])
LINE_NEW = OffsetArray([0, -3, -4, 5])


def world(conn, O):
    return [distribute(conn, O, p) for p in range(O.num_ranks)]


def wire(sent):
    return sorted((m.src, m.dst, list(m.tree_ids), [g.id for g in m.ghosts]) for m in sent if m.src != m.dst)


def test_index_formulas():
    assert new_local_index(5, 2, 6) == 1
    assert ghost_to_local_index(40, 38) == 2
    with pytest.raises(ValueError):
        new_local_index(5, 2, 6, n_new=1)


def test_phase1_rewrites_only_new_locals():
    nbrs = np.array([[3, 4, 9, -1]])
    out = update_ids_phase1(nbrs, 3, 5)
    assert out.tolist() == [[0, 1, pending_code(9), -1]]


def test_phase2_ring_rank2():
    conn = three_tree_ring()
    new, _ = partition_cmesh(world(conn, RING_OLD), RING_NEW)
    c2 = new[2]
    assert c2.n_local == 1 and [g.id for g in c2.ghosts] == [0, 1]
    # tree 2's faces 2 and 0 lead to trees 1 and 0 -> ghost slots 2 and 1
    assert c2.tree_to_tree[0].tolist() == [1, 0, 2, 0]


def test_phase2_missing_ghost():
    t2t = np.array([[0, pending_code(7), -1, -1]])
    t2f = np.array([[0, 0, -1, -1]])
    with pytest.raises(MissingGhostError, match="ghost 7"):
        update_ids_phase2(t2t, t2f, [], 3, 2)


def test_phase2_without_ghosts_is_identity():
    t2t = np.array([[0, 1, 0, 0], [0, 1, 1, 1]])
    t2f = np.zeros((2, 4), dtype=np.int16)
    assert update_ids_phase2(t2t, t2f, [], 0, 2).tolist() == t2t.tolist()


def test_line_wire_messages():
    conn = line_mesh(5)
    new, sent = partition_cmesh(world(conn, LINE_OLD), LINE_NEW)
    assert [(s, d, t) for s, d, t, _ in wire(sent)] == [(1, 0, [2]), (2, 1, [3])]
    self_moves = {m.src: list(m.tree_ids) for m in sent if m.src == m.dst}
    assert self_moves == {0: [0, 1], 1: [2], 2: [3, 4]}
    # rank 1 now holds trees 2 and 3 as local 0 and 1
    c1 = new[1]
    assert [c1.global_index(i) for i in range(c1.n_local)] == [2, 3]
    for i, k in enumerate((2, 3)):
        for f in range(4):
            u = neighbor_global_index(c1, i, f)
            assert (k if u is None else u) == conn.tree_to_tree[k, f]


def test_ring_wire_messages():
    conn = three_tree_ring()
    new, sent = partition_cmesh(world(conn, RING_OLD), RING_NEW)
    assert wire(sent) == [(0, 1, [0], []), (1, 2, [2], [0, 1])]
    retained = {m.src: (list(m.tree_ids), [g.id for g in m.ghosts]) for m in sent if m.src == m.dst}
    assert retained == {0: ([0], [1, 2]), 1: ([1], [2])}


def test_identity_repartition():
    rng = np.random.default_rng(4)
    conn = random_mesh(20, rng)
    O = OffsetArray([0, 7, -8, 20])
    before = world(conn, O)
    after, sent = partition_cmesh(before, O)
    assert wire(sent) == []
    for a, b in zip(before, after):
        assert np.array_equal(a.tree_to_tree, b.tree_to_tree)
        assert [g.id for g in a.ghosts] == [g.id for g in b.ghosts]
        assert a.tree_data == b.tree_data


def test_message_round_trip():
    rng = np.random.default_rng(9)
    conn = random_mesh(12, rng, dim=3, mixed=True)
    cms = world(conn, OffsetArray([0, 6, 12]))
    for msg in send_phase(cms[0], OffsetArray([0, 2, 12])):
        raw = msg.to_bytes()
        assert raw.startswith(msg.header().encode() + b"\n")
        back = RankMessage.from_bytes(raw)
        assert (back.src, back.dst, back.dim, back.first_tree) == (msg.src, msg.dst, msg.dim, msg.first_tree)
        assert np.array_equal(back.eclass, msg.eclass)
        assert np.array_equal(back.tree_to_tree, msg.tree_to_tree)
        assert np.array_equal(back.tree_to_face, msg.tree_to_face)
        assert back.tree_data == list(msg.tree_data)
        assert back.ghosts == msg.ghosts


def test_header_format():
    m = RankMessage(1, 2, 2, 2, np.zeros(1, np.uint8), np.zeros((1, 4)), np.zeros((1, 4)), [b""],
                    [GhostRecord(0, 2, (0, 1, 0, 0), (0, 0, 2, 3))])
    assert m.header() == "msg v1 from=1 to=2 ntrees=1 nghosts=1"


def test_truncated_message_rejected():
    conn = three_tree_ring()
    raw = send_phase(distribute(conn, RING_OLD, 1), RING_NEW)[-1].to_bytes()
    with pytest.raises(ValueError):
        RankMessage.from_bytes(raw[:-3])
    with pytest.raises(ValueError):
        RankMessage.from_bytes(raw + b"x")
    with pytest.raises(ValueError):
        RankMessage.from_bytes(b"msg v9" + raw[6:])


def test_partition_rejects_mismatch():
    conn = three_tree_ring()
    with pytest.raises(ValueError):
        partition_cmesh(world(conn, RING_OLD), OffsetArray([0, 3]))


def test_partition_rejects_invalid_offsets():
    conn = three_tree_ring()
    with pytest.raises(ValueError, match="invalid"):
        partition_cmesh(world(conn, RING_OLD), OffsetArray([0, 2, 1, 3]))
