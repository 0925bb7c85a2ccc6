"""Ghost trees and the rule deciding who ships which ghost during a repartition.

A ghost that must appear on rank ``q`` is considered by every rank that sends
``q`` one of the ghost's face neighbors. Because a ghost record carries the
global ids of all its neighbors, each of those ranks can list the others
without communicating; only the smallest one ships it, and nobody does if
``q`` itself keeps a neighbor (then ``q`` already holds the ghost's data).
"""
from __future__ import annotations

import enum

import numpy as np

from .cmesh import Cmesh, GhostRecord, global_ghost_set
from .connectivity import Connectivity
from .offsets import OffsetArray
from .pattern import sender_of_tree


class ConnectionType(enum.IntEnum):
    LOCAL_LOCAL = 1
    LOCAL_GHOST = 2
    GHOST_LOCAL = 3
    GHOST_GHOST = 4
    GHOST_NONLOCAL = 5


def ghost_set(O: OffsetArray, p: int, conn: Connectivity) -> set[int]:
    """Ghost trees of rank `p` under partition `O`, from the replicated mesh."""
    if O.is_empty(p):
        return set()
    return {int(k) for k in global_ghost_set(conn, int(O.first[p]), int(O.last[p]))}


def classify_connection(O: OffsetArray, p: int, from_kind: str, to_global: int, ghost_ids) -> ConnectionType:
    """Type of a face connection seen from rank `p`.

    `from_kind` is ``"local"`` or ``"ghost"`` for the tree the connection
    starts at; `ghost_ids` are the ghosts held by `p`.
    """
    if from_kind not in ("local", "ghost"):
        raise ValueError(f"from_kind must be 'local' or 'ghost', got {from_kind!r}")
    from_local = from_kind == "local"
    if O.is_local(to_global, p):
        return ConnectionType.LOCAL_LOCAL if from_local else ConnectionType.GHOST_LOCAL
    if to_global in ghost_ids:
        return ConnectionType.LOCAL_GHOST if from_local else ConnectionType.GHOST_GHOST
    if from_local:
        raise ValueError(f"tree {to_global} neighbors a local tree of rank {p} but is no ghost")
    return ConnectionType.GHOST_NONLOCAL


def ghost_senders(O_old: OffsetArray, O_new: OffsetArray, g: GhostRecord, q: int) -> set[int]:
    """Ranks that send some face neighbor of `g` to `q` as a local tree."""
    return {
        sender_of_tree(O_old, O_new, u, q)
        for u in set(g.tree_to_tree)
        if O_new.is_local(u, q)
    }


def send_ghost(C: Cmesh, g: GhostRecord, q: int, O_new: OffsetArray) -> bool:
    """Whether rank ``C.rank`` ships `g` to `q` as a ghost."""
    S = ghost_senders(C.offsets, O_new, g, q)
    return bool(S) and q not in S and C.rank == min(S)


def parse_neighbors(C: Cmesh, k: int, p: int, q: int, plan: dict, O_new: OffsetArray, send_range) -> dict:
    """Add the neighbors of local tree `k` that `p` must ship to `q` as ghosts.

    Parameters
    ----------
    C : Cmesh
        Mesh of rank `p` before the repartition.
    k : int
        Local index of a tree inside `send_range`.
    plan : dict
        Accumulator ``{global id: GhostRecord}`` for destination `q`; updated
        in place and returned.
    send_range : (int, int)
        Inclusive global range of trees `p` sends to `q`.
    """
    s, e = send_range
    for f in range(C.num_faces(k)):
        if C.is_boundary_face(k, f):
            continue
        u = int(C.global_neighbors[k, f])
        if s <= u <= e or u in plan or O_new.is_local(u, q):
            continue
        g = C.record_of(u)
        if send_ghost(C, g, q, O_new):
            plan[u] = g
    return plan


def outgoing_ghosts(C: Cmesh, q: int, O_new: OffsetArray, send_range) -> list[GhostRecord]:
    """Ghosts rank ``C.rank`` ships to ``q != C.rank`` alongside `send_range`.

    Equivalent to :func:`parse_neighbors` over the whole range, with the
    candidate neighbors collected in one vectorized pass.
    """
    s, e = send_range
    lo = s - C.first_tree
    rows = C.global_neighbors[lo : e - C.first_tree + 1]
    cand = np.unique(rows[rows >= 0])
    new_first, new_last = O_new.first[q], O_new.last[q]
    cand = cand[(cand < new_first) | (cand > new_last)]
    plan = []
    for u in cand.tolist():
        g = C.record_of(u)
        if send_ghost(C, g, q, O_new):
            plan.append(g)
    return plan


def retained_ghosts(C: Cmesh, O_new: OffsetArray, keep_range) -> list[GhostRecord]:
    """Ghosts rank ``p = C.rank`` keeps for itself: neighbors of the trees it keeps.

    These are exactly the new ghosts ``g`` of ``p`` for which ``p`` appears in
    the sender set of :func:`send_ghost`, so no other rank ships them.
    """
    if keep_range is None:
        return []
    s, e = keep_range
    p = C.rank
    rows = C.global_neighbors[s - C.first_tree : e - C.first_tree + 1]
    cand = np.unique(rows[rows >= 0])
    if not O_new.is_empty(p):
        cand = cand[(cand < O_new.first[p]) | (cand > O_new.last[p])]
    return [C.record_of(u) for u in cand.tolist()]


def format_plan(entries) -> str:
    """Lines ``p -> q : trees [..] ghosts [..]`` for ``(p, q, trees, ghosts)`` tuples."""
    lines = []
    for p, q, trees, ghosts in entries:
        t = ",".join(map(str, trees))
        g = ",".join(map(str, ghosts))
        lines.append(f"{p} -> {q} : trees [{t}] ghosts [{g}]")
    return "\n".join(lines)
