from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cmesh_partition.offsets import OffsetArray, offsets_from_ranges
from cmesh_partition.pattern import (
    compute_pattern,
    compute_R,
    compute_S,
    format_pattern,
    send_bounds,
    sender_of_tree,
    sends_to,
)
from oracle import random_partition, send_table

GOLDEN = Path(__file__).parent / "golden"
O_LINE = OffsetArray([0, -2, 3, 5])
O_LINE_NEW = OffsetArray([0, -3, -4, 5])
RING_OLD = OffsetArray([0, 1, 3, 3])
RING_NEW = offsets_from_ranges([(0, 0), (0, 1), (2, 2)], 3)


def test_line_sets():
    assert [compute_S(O_LINE, O_LINE_NEW, p) for p in range(3)] == [[0], [0, 1], [1, 2]]
    assert [compute_R(O_LINE, O_LINE_NEW, p) for p in range(3)] == [[0, 1], [1, 2], [2]]


def test_line_send_table():
    ranges = {p: compute_pattern(O_LINE, O_LINE_NEW, p).ranges for p in range(3)}
    assert ranges == {
        0: {0: (0, 1)},
        1: {0: (2, 2), 1: (2, 2)},
        2: {1: (3, 3), 2: (3, 4)},
    }


def test_sender_of_tree_examples():
    assert sender_of_tree(O_LINE, O_LINE_NEW, 2, 0) == 1
    assert sender_of_tree(O_LINE, O_LINE_NEW, 1, 0) == 0
    with pytest.raises(ValueError):
        sender_of_tree(O_LINE, O_LINE_NEW, 4, 0)
    for p in range(3):
        for k in range(int(O_LINE.first[p]), int(O_LINE.last[p]) + 1):
            assert sender_of_tree(O_LINE, O_LINE, k, p) == p


def test_sends_to_examples():
    assert sends_to(O_LINE, O_LINE_NEW, 1, 0)
    assert not sends_to(O_LINE, O_LINE_NEW, 0, 1)
    assert sends_to(O_LINE, O_LINE_NEW, 2, 1)
    for p in range(3):
        assert sends_to(RING_OLD, RING_OLD, p, p) == (not RING_OLD.is_empty(p))


def test_ring_sets():
    assert [compute_S(RING_OLD, RING_NEW, p) for p in range(3)] == [[0, 1], [1, 2], []]
    assert [compute_R(RING_OLD, RING_NEW, p) for p in range(3)] == [[0], [0, 1], [1]]


def test_empty_old_rank_sends_nothing():
    assert send_bounds(RING_OLD, RING_NEW, 2) is None


def test_new_empty_rank_receives_nothing():
    assert compute_R(RING_NEW, RING_OLD, 2) == []


@pytest.mark.parametrize(
    "name, old, new",
    [("pattern_line5", O_LINE, O_LINE_NEW), ("pattern_ring3", RING_OLD, RING_NEW)],
)
def test_format_golden(name, old, new):
    text = format_pattern(compute_pattern(old, new, p) for p in range(old.num_ranks))
    assert text + "\n" == (GOLDEN / f"{name}.txt").read_text()


def _check_against_oracle(A, B, fa, fb):
    table = send_table(fa, fb)
    P = A.num_ranks
    for p in range(P):
        S = sorted(q for (s, q) in table if s == p)
        R = sorted(s for (s, q) in table if q == p)
        ranges = {q: (min(table[p, q]), max(table[p, q])) for q in S}
        pat = compute_pattern(A, B, p)
        assert pat.send_to == S, (A, B, p)
        assert pat.recv_from == R, (A, B, p)
        assert pat.ranges == ranges, (A, B, p)
        # ranges hold exactly the oracle's trees, so they are contiguous
        for q in S:
            assert len(table[p, q]) == ranges[q][1] - ranges[q][0] + 1
        for q in range(P):
            assert sends_to(A, B, p, q) == ((p, q) in table)


@settings(max_examples=400, deadline=None)
@given(st.integers(1, 50), st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_oracle_equivalence(K, P, seed):
    rng = np.random.default_rng(seed)
    A, fa = random_partition(K, P, rng)
    B, fb = random_partition(K, P, rng)
    _check_against_oracle(A, B, fa, fb)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 30), st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_symmetry_and_unique_sender(K, P, seed):
    rng = np.random.default_rng(seed)
    A, _ = random_partition(K, P, rng)
    B, fb = random_partition(K, P, rng)
    S = [compute_S(A, B, p) for p in range(P)]
    for p in range(P):
        R = compute_R(A, B, p)
        assert R == [q for q in range(P) if p in S[q]]
        assert (R == []) == B.is_empty(p)
        for k in fb[p]:
            s = sender_of_tree(A, B, k, p)
            assert p in S[s]
            if A.is_local(k, p):
                assert s == p


def test_identity_is_local_only():
    rng = np.random.default_rng(11)
    for _ in range(50):
        A, _ = random_partition(20, 7, rng)
        for p in range(7):
            pat = compute_pattern(A, A, p)
            expect = [] if A.is_empty(p) else [p]
            assert pat.send_to == expect and pat.recv_from == expect


def test_rank_count_mismatch():
    with pytest.raises(ValueError):
        compute_pattern(O_LINE, OffsetArray([0, 5]), 0)
