import dataclasses
import json

import numpy as np
import pytest

from cmesh_partition import runtime
from cmesh_partition.meshgen import line_mesh, random_mesh, three_tree_ring
from cmesh_partition.offsets import OffsetArray, offsets_from_ranges
from cmesh_partition.runtime import (
    RepartitionError,
    World,
    gather_connectivity,
    run_repartition,
    serialize_world,
    verify_world,
)
from oracle import random_partition, send_table, world_mismatches

LINE_OLD = OffsetArray([0, -2, 3, 5])
LINE_NEW = OffsetArray([0, -3, -4, 5])
RING_OLD = OffsetArray([0, 1, 3, 3])
RING_NEW = offsets_from_ranges([(0, 0), (0, 1), (2, 2)], 3)


def test_line_stats():
    conn = line_mesh(5)
    new, st = run_repartition(World.from_connectivity(conn, LINE_OLD), LINE_NEW)
    assert st.messages_sent == 2 and st.trees_sent == 2
    # rank 0 gains tree 2 and needs ghost 3; rank 1 gains tree 3 and needs ghost 4
    assert st.ghosts_sent == 2
    assert [w[:2] for w in st.wire] == [(1, 0), (2, 1)]
    assert verify_world(new, conn) == []


def test_identity_sends_no_bytes():
    conn = three_tree_ring()
    new, st = run_repartition(World.from_connectivity(conn, RING_OLD), RING_OLD)
    assert st.bytes_sent == 0 and st.messages_sent == 0


def test_ring_shared_count():
    conn = three_tree_ring()
    new, st = run_repartition(World.from_connectivity(conn, RING_OLD), RING_NEW)
    assert st.shared_tree_count == 1
    assert [r.S_size for r in st.ranks] == [2, 2, 0]
    assert verify_world(new, conn) == []


def test_shared_count_bound():
    rng = np.random.default_rng(0)
    for _ in range(100):
        P = int(rng.integers(1, 12))
        O, _ = random_partition(int(rng.integers(1, 30)), P, rng)
        assert O.shared_tree_count() <= P - 1


def test_dropped_ghost_is_reported():
    conn = three_tree_ring()
    new, _ = run_repartition(World.from_connectivity(conn, RING_OLD), RING_NEW)
    c2 = new.cmeshes[2]
    new.cmeshes[2] = dataclasses.replace(c2, ghosts=c2.ghosts[:1])
    report = verify_world(new, conn)
    assert any("missing ghost 1" in line for line in report)


def test_corrupted_payload_is_reported():
    conn = line_mesh(5)
    new, _ = run_repartition(World.from_connectivity(conn, LINE_OLD), LINE_NEW)
    new.cmeshes[2].tree_data[0] = b"bad"
    assert verify_world(new, conn)


def test_chained_random_steps():
    rng = np.random.default_rng(21)
    conn = random_mesh(40, rng, dim=3, mixed=True)
    O, _ = random_partition(40, 9, rng)
    w = World.from_connectivity(conn, O)
    for _ in range(10):
        O_new, sets = random_partition(40, 9, rng)
        w, _ = run_repartition(w, O_new)
        assert verify_world(w, conn) == []
        assert world_mismatches(w, conn, sets) == []
    assert w.step == 10
    gathered, problems = gather_connectivity(w)
    assert problems == [] and gathered.equals(conn)


def test_schedule_independence():
    rng = np.random.default_rng(8)
    conn = random_mesh(50, rng)
    O, _ = random_partition(50, 12, rng)
    O_new, _ = random_partition(50, 12, rng)
    outcomes = []
    for workers, seed in ((1, None), (4, 1), (8, 2)):
        w, st = run_repartition(World.from_connectivity(conn, O), O_new, workers=workers, schedule_seed=seed)
        agg = st.aggregate()
        agg.pop("wall_time")
        outcomes.append((serialize_world(w), agg, st.to_csv()))
    assert outcomes[0] == outcomes[1] == outcomes[2]


def test_wire_matches_send_table():
    rng = np.random.default_rng(13)
    conn = random_mesh(30, rng)
    O, fa = random_partition(30, 8, rng)
    O_new, fb = random_partition(30, 8, rng)
    _, st = run_repartition(World.from_connectivity(conn, O), O_new)
    table = {k: sorted(v) for k, v in send_table(fa, fb).items() if k[0] != k[1]}
    assert {(s, d): t for s, d, t, _ in st.wire} == table


def test_failure_names_rank(monkeypatch):
    real = runtime.send_phase

    def broken(C, O_new):
        if C.rank == 1:
            raise KeyError("boom")
        return real(C, O_new)

    monkeypatch.setattr(runtime, "send_phase", broken)
    with pytest.raises(RepartitionError) as info:
        run_repartition(World.from_connectivity(three_tree_ring(), RING_OLD), RING_NEW)
    assert info.value.rank == 1 and info.value.phase == "send"


def test_rejects_bad_new_partition():
    w = World.from_connectivity(three_tree_ring(), RING_OLD)
    with pytest.raises(ValueError):
        run_repartition(w, OffsetArray([0, 3]))
    with pytest.raises(ValueError):
        run_repartition(w, OffsetArray([0, 2, 1, 3]))


def test_stats_formats(tmp_path):
    conn = line_mesh(5)
    _, st = run_repartition(World.from_connectivity(conn, LINE_OLD), LINE_NEW, dump_dir=tmp_path)
    lines = st.to_csv().splitlines()
    assert lines[0] == "rank,trees_sent,ghosts_sent,bytes,S_size"
    assert lines[1].startswith("0,0,0,0,1")
    agg = json.loads(st.to_json())
    assert agg["trees_sent"] == 2 and agg["ranks"] == 3
    dumps = sorted(p.name for p in tmp_path.iterdir())
    assert dumps == ["step0_1_to_0.msg", "step0_2_to_1.msg"]
    assert (tmp_path / "step0_1_to_0.msg").read_bytes().startswith(b"msg v1 from=1 to=0 ntrees=1 nghosts=1\n")
