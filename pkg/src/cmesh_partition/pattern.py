"""Communication pattern of a repartition, derived from two offset arrays only.

Ownership rule: a tree ``k`` that rank ``p`` holds in the new partition is
delivered by ``p`` itself if ``k`` was already local on ``p``, otherwise by the
smallest rank that had ``k`` as a local tree. Every rank can evaluate this for
any pair of ranks with binary searches and constant-time checks, so no
handshake is needed before the exchange.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .offsets import OffsetArray


@dataclass
class CommPattern:
    """Sending and receiving partners of one rank.

    Attributes
    ----------
    rank : int
    send_to : list of int
        ``S_p``, ascending; contains ``rank`` when trees stay in place.
    recv_from : list of int
        ``R_p``, ascending.
    ranges : dict
        For each ``q`` in `send_to`, the inclusive global tree range sent to it.
    """

    rank: int
    send_to: list
    recv_from: list
    ranges: dict = field(default_factory=dict)


def sender_of_tree(O_old: OffsetArray, O_new: OffsetArray, k: int, p: int) -> int:
    """Rank that delivers tree `k` to its new owner `p`."""
    if not O_new.is_local(k, p):
        raise ValueError(f"tree {k} is not a new local tree of rank {p}")
    if O_old.is_local(k, p):
        return p
    return O_old.min_owner(k)


def send_bounds(O_old: OffsetArray, O_new: OffsetArray, p: int):
    """``(s_first, s_last)`` of rank `p`, or ``None`` if ``S_p`` is empty.

    The empty cases (no old trees; a single shared first tree that moves away)
    are answered up front. Otherwise binary searches in the new partition
    bracket the receivers of p's first and last sendable trees, and the bracket
    is tightened with :func:`sends_to`. Tightening only skips ranks that already
    held p's last tree, so it stays bounded by the number of its sharers.
    """
    if O_old.is_empty(p):
        return None
    k, K = int(O_old.first[p]), int(O_old.last[p])
    a = k
    keeps_first = False
    if O_old.shared_first[p]:
        # a shared first tree is only ever sent by p to itself
        keeps_first = O_new.is_local(k, p)
        a = k + 1
    if a > K and not keeps_first:
        return None

    if keeps_first:
        lo = p
        hi = max(p, O_new.max_owner(K)) if a <= K else p
    else:
        lo, hi = O_new.min_owner(a), O_new.max_owner(K)
    while lo <= hi and not sends_to(O_old, O_new, p, lo):
        lo += 1
    while hi >= lo and not sends_to(O_old, O_new, p, hi):
        hi -= 1
    return (lo, hi) if lo <= hi else None


def sends_to(O_old: OffsetArray, O_new: OffsetArray, p_tilde: int, q: int) -> bool:
    """Constant-time test whether `p_tilde` sends local trees to `q`."""
    if O_old.is_empty(p_tilde) or O_new.is_empty(q):
        return False
    if p_tilde == q:
        # local movement of the trees p keeps
        lo = max(O_old.first[q], O_new.first[q])
        hi = min(O_old.last[q], O_new.last[q])
        return bool(lo <= hi)

    k_hat = int(O_old.first[p_tilde]) + int(O_old.shared_first[p_tilde])
    K_hat = int(O_old.last[p_tilde])
    if not O_old.is_empty(q) and K_hat == O_old.first[q]:
        K_hat -= 1
    kq_hat = int(O_new.first[q])
    if O_old.is_local(kq_hat, q):
        kq_hat += 1
    Kq_hat = int(O_new.last[q])
    return k_hat <= K_hat and k_hat <= Kq_hat and kq_hat <= K_hat and kq_hat <= Kq_hat


def compute_S(O_old: OffsetArray, O_new: OffsetArray, p: int) -> list[int]:
    """Ranks that `p` sends local trees to, ascending."""
    bounds = send_bounds(O_old, O_new, p)
    if bounds is None:
        return []
    lo, hi = bounds
    return [q for q in range(lo, hi + 1) if sends_to(O_old, O_new, p, q)]


def recv_bounds(O_old: OffsetArray, O_new: OffsetArray, p: int):
    """``(r_first, r_last)`` of rank `p`, or ``None`` if ``R_p`` is empty."""
    if O_new.is_empty(p):
        return None
    r_first = sender_of_tree(O_old, O_new, int(O_new.first[p]), p)
    r_last = sender_of_tree(O_old, O_new, int(O_new.last[p]), p)
    return r_first, r_last


def compute_R(O_old: OffsetArray, O_new: OffsetArray, p: int) -> list[int]:
    """Ranks that `p` receives local trees from, ascending."""
    bounds = recv_bounds(O_old, O_new, p)
    if bounds is None:
        return []
    lo, hi = bounds
    return [q for q in range(lo, hi + 1) if sends_to(O_old, O_new, q, p)]


def send_range(O_old: OffsetArray, O_new: OffsetArray, p: int, q: int):
    """Inclusive global range of trees `p` sends to `q`, or ``None``."""
    if O_old.is_empty(p) or O_new.is_empty(q):
        return None
    if p == q:
        lo = max(int(O_old.first[p]), int(O_new.first[p]))
        hi = min(int(O_old.last[p]), int(O_new.last[p]))
        return (lo, hi) if lo <= hi else None
    lo = max(int(O_old.first[p]) + int(O_old.shared_first[p]), int(O_new.first[q]))
    hi = min(int(O_old.last[p]), int(O_new.last[q]))
    if lo > hi:
        return None
    if not O_old.is_empty(q):
        # q already holds trees of its old range; they can touch ours only at an end
        qa, qb = int(O_old.first[q]), int(O_old.last[q])
        if qa == hi:
            hi -= 1
        if qb == lo:
            lo += 1
        if lo <= hi and not (qb < lo or qa > hi):
            raise AssertionError(f"send range {p}->{q} is not contiguous")
    return (lo, hi) if lo <= hi else None


def compute_pattern(O_old: OffsetArray, O_new: OffsetArray, p: int) -> CommPattern:
    """Full communication pattern of rank `p`."""
    if O_old.num_ranks != O_new.num_ranks:
        raise ValueError("old and new partitions have different rank counts")
    if O_old.num_trees != O_new.num_trees:
        raise ValueError("old and new partitions have different tree counts")
    S = compute_S(O_old, O_new, p)
    R = compute_R(O_old, O_new, p)
    ranges = {}
    for q in S:
        rng = send_range(O_old, O_new, p, q)
        if rng is None:
            raise AssertionError(f"rank {p} lists {q} as receiver but sends nothing")
        ranges[q] = rng
    return CommPattern(p, S, R, ranges)


def format_pattern(patterns) -> str:
    """Human-readable table of send/receive sets and ranges, one rank per line."""
    lines = []
    for pat in patterns:
        rng = " ".join(f"{q}:[{a},{b}]" for q, (a, b) in pat.ranges.items())
        S = ",".join(map(str, pat.send_to))
        R = ",".join(map(str, pat.recv_from))
        lines.append(f"rank {pat.rank}: S={{{S}}} R={{{R}}} send {rng}".rstrip())
    return "\n".join(lines)
