"""Coarse-mesh partitions induced by cutting a forest's leaf sequence.

Only leaf counts per tree matter here: leaves are ordered tree-major, so the
``I``-th leaf of tree ``k`` has global position ``sum(N[:k]) + I``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .offsets import OffsetArray, offsets_from_ranges


@dataclass(frozen=True)
class ForestSummary:
    """Leaf counts per tree and optional per-leaf weights (tree-major order)."""

    leaf_counts: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        counts = np.asarray(self.leaf_counts, dtype=np.int64)
        if counts.ndim != 1 or np.any(counts < 0):
            raise ValueError("leaf counts must be a 1-D array of nonnegative integers")
        object.__setattr__(self, "leaf_counts", counts)
        if self.weights is not None:
            w = np.asarray(self.weights)
            if w.shape != (self.num_leaves,):
                raise ValueError(f"need one weight per leaf ({self.num_leaves}), got {w.shape}")
            if np.any(w <= 0):
                raise ValueError("leaf weights must be positive")
            object.__setattr__(self, "weights", w)

    @property
    def num_trees(self) -> int:
        return len(self.leaf_counts)

    @property
    def num_leaves(self) -> int:
        return int(self.leaf_counts.sum())

    def dumps(self) -> str:
        return f"forest K={self.num_trees} : " + " ".join(str(n) for n in self.leaf_counts)

    @classmethod
    def loads(cls, line: str) -> "ForestSummary":
        head, _, body = line.partition(":")
        parts = head.split()
        if len(parts) != 2 or parts[0] != "forest" or not parts[1].startswith("K="):
            raise ValueError(f"bad forest line {line!r}")
        counts = [int(n) for n in body.split()]
        if len(counts) != int(parts[1][2:]):
            raise ValueError(f"forest line announces K={parts[1][2:]}, found {len(counts)}")
        return cls(np.array(counts, dtype=np.int64))


def uniform_cuts(num_leaves: int, P: int) -> np.ndarray:
    """Leaf cut positions ``floor(p * N / P)`` for ``p = 0..P``."""
    p = np.arange(P + 1, dtype=np.int64)
    return (p * num_leaves) // P


def weighted_cuts(weights, P: int) -> np.ndarray:
    """Greedy prefix cuts: rank ``p`` ends at the shortest prefix of weight ``>= (p+1) W / P``.

    Each rank's weight then lies within one maximal leaf weight of ``W / P``.
    """
    w = np.asarray(weights)
    cum = np.concatenate(([0], np.cumsum(w)))
    total = cum[-1]
    p = np.arange(1, P, dtype=np.float64)
    # compare cum * P >= p * W to stay exact for integer weights
    inner = np.searchsorted(cum * P, p * total, side="left")
    return np.concatenate(([0], inner, [len(w)])).astype(np.int64)


def induced_partition(leaf_counts, cuts) -> OffsetArray:
    """Offset array of the coarse partition induced by leaf cut positions.

    Rank ``p`` owns leaves ``[cuts[p], cuts[p+1])``; tree ``k`` is local to
    ``p`` iff ``p`` owns at least one of its leaves.
    """
    counts = np.asarray(leaf_counts, dtype=np.int64)
    starts = np.concatenate(([0], np.cumsum(counts)))
    cuts = np.asarray(cuts, dtype=np.int64)
    ranges = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b <= a:
            ranges.append(None)
            continue
        # tree holding leaf i is the last tree whose start is <= i
        first = int(np.searchsorted(starts, a, side="right")) - 1
        last = int(np.searchsorted(starts, b - 1, side="right")) - 1
        ranges.append((first, last))
    return offsets_from_ranges(ranges, len(counts))


def partition_from_forest(forest: ForestSummary, P: int) -> OffsetArray:
    """Coarse-mesh offset array for an SFC partition of `forest` onto `P` ranks."""
    if P < 1:
        raise ValueError("need at least one rank")
    if forest.weights is None:
        cuts = uniform_cuts(forest.num_leaves, P)
    else:
        cuts = weighted_cuts(forest.weights, P)
    return induced_partition(forest.leaf_counts, cuts)


def synthetic_band_forest(K: int, base_level: int, refined_trees, dim: int) -> ForestSummary:
    """Uniform level-`base_level` forest with one extra level on `refined_trees`."""
    if dim not in (2, 3):
        raise ValueError("dim must be 2 or 3")
    if base_level < 0:
        raise ValueError("base_level must be nonnegative")
    children = 4 if dim == 2 else 8
    # 2**63 bounds int64 leaf counts
    if (base_level + 1) * (children.bit_length() - 1) >= 63:
        raise OverflowError(f"level {base_level + 1} leaf count overflows 64 bits")
    counts = np.full(K, children**base_level, dtype=np.int64)
    refined = np.fromiter(refined_trees, dtype=np.int64)
    if refined.size and (refined.min() < 0 or refined.max() >= K):
        raise ValueError("refined tree index out of range")
    counts[refined] = children ** (base_level + 1)
    return ForestSummary(counts)


def witness_forest(O: OffsetArray, children: int = 4):
    """A forest and leaf cuts that induce the valid partition `O`.

    Trees local to one rank stay unrefined; a tree shared by ``m`` ranks is
    refined uniformly until it has more than ``m`` leaves. The first ``m - 1``
    sharers get one leaf each, the last one the remainder.

    Returns
    -------
    forest : ForestSummary
    cuts : ndarray of ``P + 1`` leaf positions
    """
    K, P = O.num_trees, O.num_ranks
    nonempty = [p for p in range(P) if not O.is_empty(p)]
    owners = [[] for _ in range(K)]
    for p in nonempty:
        for k in range(int(O.first[p]), int(O.last[p]) + 1):
            owners[k].append(p)

    leaf_counts = np.ones(K, dtype=np.int64)
    per_rank = np.zeros(P, dtype=np.int64)
    for k, ranks in enumerate(owners):
        m = len(ranks)
        if m > 1:
            n = children
            while n <= m:
                n *= children
            leaf_counts[k] = n
        for r in ranks[:-1]:
            per_rank[r] += 1
        per_rank[ranks[-1]] += leaf_counts[k] - (m - 1)
    cuts = np.concatenate(([0], np.cumsum(per_rank)))
    return ForestSummary(leaf_counts), cuts


def random_forest_partition(K: int, P: int, rng: np.random.Generator, max_leaves: int | None = None):
    """Random valid partition from a random forest cut at random leaf positions.

    Leaf counts are drawn from ``1..max_leaves`` (default ``P + 2`` so that
    single trees can be shared by many ranks); the ``P - 1`` inner cuts are
    uniform over all leaf positions, so empty ranks occur too.

    Returns
    -------
    O : OffsetArray
    forest : ForestSummary
    cuts : ndarray
    """
    if K < 1 or P < 1:
        raise ValueError("need at least one tree and one rank")
    hi = max_leaves if max_leaves is not None else P + 2
    counts = rng.integers(1, hi + 1, size=K)
    N = int(counts.sum())
    cuts = np.sort(np.concatenate(([0, N], rng.integers(0, N + 1, size=P - 1))))
    return induced_partition(counts, cuts), ForestSummary(counts), cuts
