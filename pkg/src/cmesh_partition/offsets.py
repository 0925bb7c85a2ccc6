"""Signed offset arrays: compact encoding of SFC-induced coarse-mesh partitions.

A partition of ``K`` trees to ``P`` ranks is stored in ``P + 1`` signed 64-bit
integers. Entry ``p`` holds the first local tree ``k_p`` of rank ``p``, or
``-k_p - 1`` if that tree is shared with the next smaller nonempty rank; the
last entry holds ``K``. Empty ranks get ``k_p = K_q + 1`` and ``K_p = K_q``
where ``q`` is the largest nonempty rank below ``p`` (``k_p = 0, K_p = -1`` if
there is none), so the decoding formulas need no special case for them.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


class PartitionError(ValueError):
    """An offset array or partition view violates the validity properties."""


@dataclass(frozen=True)
class PartitionView:
    """Decoded per-rank description of a partition.

    ``first[p]`` and ``last[p]`` are ``k_p`` and ``K_p`` (empty-rank
    convention included); ``shared[p]`` flags a first tree that is shared
    with the next smaller nonempty rank.
    """

    first: tuple
    last: tuple
    shared: tuple

    @property
    def num_ranks(self) -> int:
        return len(self.first)

    def empty(self, p) -> bool:
        return self.last[p] < self.first[p]


class OffsetArray:
    """Immutable signed offset table of length ``P + 1``.

    Decoded views (``first``, ``last``, ``counts``) are computed once and
    cached; all accessors are read-only, so one instance can be shared by every
    rank.
    """

    def __init__(self, values):
        values = np.array(values, dtype=np.int64).reshape(-1)
        if len(values) < 2:
            raise PartitionError("an offset array needs at least two entries (P >= 1)")
        if values[0] != 0:
            raise PartitionError(f"O[0] must be 0, got {values[0]}")
        if values[-1] < 0:
            raise PartitionError(f"O[P] must be the tree count K >= 0, got {values[-1]}")
        values.flags.writeable = False
        self._values = values

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def num_ranks(self) -> int:
        return len(self._values) - 1

    @property
    def num_trees(self) -> int:
        return int(self._values[-1])

    def __len__(self):
        return len(self._values)

    def __getitem__(self, i):
        return int(self._values[i])

    def __iter__(self):
        return (int(v) for v in self._values)

    def __eq__(self, other):
        if isinstance(other, OffsetArray):
            return np.array_equal(self._values, other._values)
        return NotImplemented

    def __hash__(self):
        return hash(self._values.tobytes())

    def __repr__(self):
        return f"OffsetArray({self.tolist()})"

    def tolist(self) -> list[int]:
        return [int(v) for v in self._values]

    # decoded views ---------------------------------------------------------

    @cached_property
    def first(self) -> np.ndarray:
        """``k_p`` for every rank."""
        o = self._values[:-1]
        k = np.where(o >= 0, o, -(o + 1))
        k.flags.writeable = False
        return k

    @cached_property
    def last(self) -> np.ndarray:
        """``K_p = |O[p+1]| - 1`` for every rank."""
        K = np.abs(self._values[1:]) - 1
        K.flags.writeable = False
        return K

    @cached_property
    def counts(self) -> np.ndarray:
        """``n_p`` for every rank (negative only for corrupt arrays)."""
        n = self.last - self.first + 1
        n.flags.writeable = False
        return n

    @cached_property
    def shared_first(self) -> np.ndarray:
        s = self._values[:-1] < 0
        s.flags.writeable = False
        return s

    @cached_property
    def _prev_nonempty(self) -> np.ndarray:
        # largest nonempty rank <= p, -1 if none
        idx = np.where(self.counts > 0, np.arange(self.num_ranks), -1)
        return np.maximum.accumulate(idx)

    @cached_property
    def _next_nonempty(self) -> np.ndarray:
        # smallest nonempty rank >= p, P if none
        P = self.num_ranks
        idx = np.where(self.counts > 0, np.arange(P), P)
        return np.minimum.accumulate(idx[::-1])[::-1]

    @cached_property
    def _carried_first(self) -> np.ndarray:
        # first tree of the closest nonempty rank at or below p; nondecreasing
        prev = self._prev_nonempty
        return np.where(prev >= 0, self.first[np.maximum(prev, 0)], -1)

    def view(self) -> PartitionView:
        return PartitionView(
            tuple(int(v) for v in self.first),
            tuple(int(v) for v in self.last),
            tuple(bool(v) for v in self.shared_first),
        )

    # ownership queries -----------------------------------------------------

    def is_local(self, k, p) -> bool:
        return bool(self.first[p] <= k <= self.last[p])

    def is_empty(self, p) -> bool:
        return bool(self.counts[p] <= 0)

    def min_owner(self, k) -> int:
        """Smallest rank that has tree `k` as a local tree."""
        return int(np.searchsorted(self.last, k, side="left"))

    def max_owner(self, k) -> int:
        """Largest rank that has tree `k` as a local tree."""
        p = int(np.searchsorted(self._carried_first, k, side="right")) - 1
        return int(self._prev_nonempty[p])

    def next_nonempty(self, p) -> int:
        """Smallest nonempty rank ``>= p`` (``P`` if none)."""
        return int(self._next_nonempty[p]) if p < self.num_ranks else self.num_ranks

    def prev_nonempty(self, p) -> int:
        """Largest nonempty rank ``<= p`` (-1 if none)."""
        return int(self._prev_nonempty[p]) if p >= 0 else -1

    def shared_tree_count(self) -> int:
        """Number of distinct trees local to more than one rank."""
        nonempty = self.counts > 0
        f, l = self.first[nonempty], self.last[nonempty]
        # consecutive nonempty ranks share a tree iff the later one starts
        # where the earlier one ends
        return int(len(np.unique(f[1:][f[1:] == l[:-1]])))

    # serialization ---------------------------------------------------------

    def dumps(self) -> str:
        vals = " ".join(str(v) for v in self)
        return f"offsets P={self.num_ranks} K={self.num_trees} : {vals}"

    @classmethod
    def loads(cls, line: str) -> "OffsetArray":
        try:
            head, vals = line.strip().split(":")
            word, pfield, kfield = head.split()
            if word != "offsets":
                raise ValueError(word)
            P = int(pfield.removeprefix("P="))
            K = int(kfield.removeprefix("K="))
            values = [int(v) for v in vals.split()]
        except ValueError as err:
            raise PartitionError(f"cannot parse offsets line {line!r}") from err
        if len(values) != P + 1 or values[-1] != K:
            raise PartitionError(f"offsets line disagrees with its header: {line!r}")
        return cls(values)


def first_tree(O: OffsetArray, p: int) -> int:
    """``k_p``: ``O[p]`` if nonnegative, else ``|O[p] + 1|``."""
    _check_rank(O, p)
    v = O[p]
    return v if v >= 0 else abs(v + 1)


def last_tree(O: OffsetArray, p: int) -> int:
    """``K_p = |O[p+1]| - 1``."""
    _check_rank(O, p)
    return abs(O[p + 1]) - 1


def num_local_trees(O: OffsetArray, p: int) -> int:
    """``n_p = |O[p+1]| - k_p``."""
    return abs(O[p + 1]) - first_tree(O, p)


def _check_rank(O, p):
    if not 0 <= p < O.num_ranks:
        raise IndexError(f"rank {p} out of range for P={O.num_ranks}")


def validate_view(view: PartitionView, K: int) -> list[str]:
    """Diagnostics for a decoded partition (empty list if valid)."""
    problems = []
    P = view.num_ranks
    prev = -1  # last nonempty rank seen
    for p in range(P):
        k, Kp, sh = view.first[p], view.last[p], view.shared[p]
        if Kp < k - 1:
            problems.append(f"rank {p}: negative tree count ({k}..{Kp})")
            continue
        if Kp == k - 1:
            expect_last = view.last[prev] if prev >= 0 else -1
            if Kp != expect_last:
                problems.append(
                    f"rank {p}: empty rank must have K_p={expect_last}, got {Kp}"
                )
            if sh:
                problems.append(f"rank {p}: empty rank flagged as shared")
            continue
        if not (0 <= k and Kp < K):
            problems.append(f"rank {p}: trees {k}..{Kp} outside [0, {K})")
        if prev < 0:
            if sh:
                problems.append(f"rank {p}: first tree flagged shared but no smaller nonempty rank")
            if k != 0:
                problems.append(f"rank {p}: trees 0..{k - 1} are not covered")
        else:
            pK = view.last[prev]
            if pK > k:
                problems.append(
                    f"ranks {prev},{p}: monotonicity violated (K_{prev}={pK} > k_{p}={k})"
                )
            elif sh and pK != k:
                problems.append(
                    f"rank {p}: first tree {k} flagged shared but rank {prev} ends at {pK}"
                )
            elif not sh and pK == k:
                problems.append(f"rank {p}: first tree {k} shared with rank {prev} but not flagged")
            elif not sh and pK != k - 1:
                problems.append(f"trees {pK + 1}..{k - 1} are not covered")
        prev = p
    if prev < 0:
        if K > 0:
            problems.append(f"no rank holds any of the {K} trees")
    elif view.last[prev] != K - 1:
        problems.append(f"trees {view.last[prev] + 1}..{K - 1} are not covered")
    if not problems:
        problems.extend(_check_sharing_corollaries(view))
    return problems


def _check_sharing_corollaries(view: PartitionView) -> list[str]:
    # Redundant with the checks above for well-formed views; kept as
    # independent assertions: pairs share at most one tree, and every rank
    # strictly between two sharers of k holds exactly {k} or nothing.
    problems = []
    nonempty = [p for p in range(view.num_ranks) if not view.empty(p)]
    for a, b in zip(nonempty, nonempty[1:]):
        overlap = view.last[a] - view.first[b] + 1
        if overlap > 1:
            problems.append(f"ranks {a},{b} share {overlap} trees")
    shared_trees = sorted(
        {view.first[b] for a, b in zip(nonempty, nonempty[1:]) if view.first[b] == view.last[a]}
    )
    for k in shared_trees:
        owners = [r for r in nonempty if view.first[r] <= k <= view.last[r]]
        lo, hi = nonempty.index(owners[0]), nonempty.index(owners[-1])
        if nonempty[lo : hi + 1] != owners:
            problems.append(f"tree {k}: sharing ranks are not consecutive")
        for r in owners[1:-1]:
            if view.first[r] != view.last[r]:
                problems.append(f"rank {r} sits between sharers of tree {k} but holds more")
    return problems


def encode_offsets(view: PartitionView, K: int) -> OffsetArray:
    """Encode a valid partition view; raises :class:`PartitionError` otherwise."""
    problems = validate_view(view, K)
    if problems:
        raise PartitionError("; ".join(problems))
    vals = [-k - 1 if sh else k for k, sh in zip(view.first, view.shared)]
    return OffsetArray(vals + [K])


def decode_offsets(O: OffsetArray) -> PartitionView:
    return O.view()


def validate_offsets(O: OffsetArray) -> list[str]:
    """Diagnostics for `O` (empty list if it encodes a valid partition)."""
    return validate_view(O.view(), O.num_trees)


def is_valid(O: OffsetArray) -> tuple[bool, list[str]]:
    """Return ``(valid, diagnostics)`` for offset array `O`."""
    problems = validate_offsets(O)
    return not problems, problems


def offsets_from_ranges(ranges, K: int) -> OffsetArray:
    """Build an offset array from per-rank ``(first, last)`` pairs.

    ``None`` marks an empty rank. Shared flags are inferred: a first tree is
    shared iff the previous nonempty rank ends on it.
    """
    first, last, shared = [], [], []
    prev_last = -1
    for r in ranges:
        if r is None:
            first.append(prev_last + 1)
            last.append(prev_last)
            shared.append(False)
            continue
        a, b = r
        first.append(a)
        last.append(b)
        shared.append(prev_last >= 0 and a == prev_last)
        prev_last = b
    return encode_offsets(PartitionView(tuple(first), tuple(last), tuple(shared)), K)
