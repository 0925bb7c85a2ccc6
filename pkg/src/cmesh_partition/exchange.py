"""Repartitioning a coarse mesh: sending phase, receiving phase, index updates.

Wire format of a :class:`RankMessage` (all integers little-endian)::

    msg v1 from=<p> to=<q> ntrees=<n> nghosts=<m>\\n      ASCII header
    u8   dim
    i64  global index of the first tree
    u8   [n]        tree classes
    i64  [n, F]     tree_to_tree   (>= 0 new local index, -1 unused face,
                                    -2 - g for a neighbor that becomes ghost g)
    i16  [n, F]     tree_to_face
    u32  [n]        tree_data lengths, followed by the concatenated bytes
    i64  [m]        ghost global ids
    u8   [m]        ghost classes
    i64  [m, F]     ghost tree_to_tree (global ids, -1 unused)
    i16  [m, F]     ghost tree_to_face

``F`` is the maximal face count of the dimension (4 in 2D, 6 in 3D).
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .cmesh import Cmesh, GhostRecord
from .eclass import max_faces
from .ghosts import outgoing_ghosts, retained_ghosts
from .offsets import OffsetArray, validate_offsets
from .pattern import compute_pattern, compute_R

UNUSED = -1


class MissingGhostError(RuntimeError):
    """A tree expects a ghost neighbor that no message delivered."""


def pending_code(gid):
    """Placeholder for a neighbor that becomes a ghost; resolved in phase 2."""
    return -2 - gid


def new_local_index(k_old_first: int, k_tilde: int, k_new_first: int, n_new=None) -> int:
    """New local index ``k_p~ + k~ - k_p^new`` of a tree moving between ranks."""
    k = k_old_first + k_tilde - k_new_first
    if n_new is not None and not 0 <= k < n_new:
        raise ValueError(f"index {k} outside the destination range [0, {n_new})")
    return k


def ghost_to_local_index(gid: int, k_new_first: int, n_new=None) -> int:
    """New local index ``g.Id - k_p^new`` of a ghost that becomes a local tree."""
    return new_local_index(gid, 0, k_new_first, n_new)


def update_ids_phase1(global_nbrs: np.ndarray, new_first: int, new_last: int) -> np.ndarray:
    """Rewrite neighbor entries for the destination rank before sending.

    Neighbors that will be local on the destination get their new local index
    (global id minus the destination's new first tree); all others are left as
    :func:`pending_code` for the receiver.
    """
    g = np.asarray(global_nbrs, dtype=np.int64)
    out = np.full_like(g, UNUSED)
    used = g >= 0
    becomes_local = used & (g >= new_first) & (g <= new_last)
    out[becomes_local] = g[becomes_local] - new_first
    out[used & ~becomes_local] = pending_code(g[used & ~becomes_local])
    return out


def update_ids_phase2(tree_to_tree: np.ndarray, tree_to_face: np.ndarray, ghosts, new_first: int, dim: int) -> np.ndarray:
    """Resolve pending neighbor entries once all ghosts have arrived.

    Ghost ``i`` gets local index ``n_local + i``. Each ghost's neighbor list is
    scanned for new local trees, and the matching face slot of that tree
    (the face recorded in the ghost's face code) is pointed at the ghost.
    """
    t2t = np.array(tree_to_tree, dtype=np.int64)
    n = len(t2t)
    nf = max_faces(dim)
    for i, g in enumerate(ghosts):
        for f, u in enumerate(g.tree_to_tree):
            k = u - new_first
            if not 0 <= k < n:
                continue
            face = int(g.tree_to_face[f]) % nf
            if t2t[k, face] != pending_code(g.id):
                # connection of g's face f lands on another tree or is already set
                continue
            t2t[k, face] = n + i
    if np.any(t2t < UNUSED):
        k, face = np.argwhere(t2t < UNUSED)[0]
        gid = -2 - int(t2t[k, face])
        raise MissingGhostError(
            f"tree {new_first + k} face {face} expects ghost {gid}, which was not received"
        )
    return t2t.astype(np.int32)


@dataclass
class RankMessage:
    """Trees and ghosts one rank hands to another during a repartition."""

    src: int
    dst: int
    dim: int
    first_tree: int
    eclass: np.ndarray
    tree_to_tree: np.ndarray
    tree_to_face: np.ndarray
    tree_data: list
    ghosts: list = field(default_factory=list)

    @property
    def ntrees(self) -> int:
        return len(self.eclass)

    @property
    def nghosts(self) -> int:
        return len(self.ghosts)

    @property
    def tree_ids(self) -> range:
        return range(self.first_tree, self.first_tree + self.ntrees)

    def header(self) -> str:
        return (
            f"msg v1 from={self.src} to={self.dst} "
            f"ntrees={self.ntrees} nghosts={self.nghosts}"
        )

    def to_bytes(self) -> bytes:
        nf = max_faces(self.dim)
        buf = io.BytesIO()
        buf.write((self.header() + "\n").encode("ascii"))
        buf.write(np.uint8(self.dim).tobytes())
        buf.write(np.int64(self.first_tree).tobytes())
        buf.write(np.asarray(self.eclass, dtype="<u1").tobytes())
        buf.write(np.asarray(self.tree_to_tree, dtype="<i8").tobytes())
        buf.write(np.asarray(self.tree_to_face, dtype="<i2").tobytes())
        buf.write(np.array([len(d) for d in self.tree_data], dtype="<u4").tobytes())
        buf.write(b"".join(self.tree_data))
        m = self.nghosts
        g_t2t = np.full((m, nf), UNUSED, dtype="<i8")
        g_t2f = np.full((m, nf), UNUSED, dtype="<i2")
        for i, g in enumerate(self.ghosts):
            g_t2t[i, : g.num_faces] = g.tree_to_tree
            g_t2f[i, : g.num_faces] = g.tree_to_face
        buf.write(np.array([g.id for g in self.ghosts], dtype="<i8").tobytes())
        buf.write(np.array([g.eclass for g in self.ghosts], dtype="<u1").tobytes())
        buf.write(g_t2t.tobytes())
        buf.write(g_t2f.tobytes())
        return buf.getvalue()

    @classmethod
    def from_bytes(cls, raw: bytes) -> "RankMessage":
        head, _, body = raw.partition(b"\n")
        fields = head.decode("ascii").split()
        if fields[:2] != ["msg", "v1"]:
            raise ValueError(f"bad message header {head!r}")
        kv = dict(f.split("=") for f in fields[2:])
        src, dst = int(kv["from"]), int(kv["to"])
        n, m = int(kv["ntrees"]), int(kv["nghosts"])

        pos = 0

        def take(dtype, count):
            nonlocal pos
            arr = np.frombuffer(body, dtype=dtype, count=count, offset=pos)
            pos += arr.nbytes
            return arr

        dim = int(take("<u1", 1)[0])
        nf = max_faces(dim)
        first = int(take("<i8", 1)[0])
        eclass = take("<u1", n).astype(np.uint8)
        t2t = take("<i8", n * nf).reshape(n, nf).astype(np.int64)
        t2f = take("<i2", n * nf).reshape(n, nf).astype(np.int16)
        lengths = take("<u4", n)
        data = []
        for ln in lengths.tolist():
            data.append(body[pos : pos + ln])
            pos += ln
        ids = take("<i8", m)
        gcls = take("<u1", m)
        g_t2t = take("<i8", m * nf).reshape(m, nf)
        g_t2f = take("<i2", m * nf).reshape(m, nf)
        if pos != len(body):
            raise ValueError(f"trailing bytes in message {head!r}")
        ghosts = []
        for i in range(m):
            used = g_t2t[i] != UNUSED
            ghosts.append(
                GhostRecord(
                    int(ids[i]),
                    int(gcls[i]),
                    tuple(int(u) for u in g_t2t[i][used]),
                    tuple(int(c) for c in g_t2f[i][used]),
                )
            )
        return cls(src, dst, dim, first, eclass, t2t, t2f, data, ghosts)


def send_phase(C: Cmesh, O_new: OffsetArray) -> list[RankMessage]:
    """Messages rank ``C.rank`` produces for every ``q`` in its sender set.

    The message to itself carries the trees it keeps and the ghosts it
    retains; it is a local data movement and never serialized.
    """
    p = C.rank
    pattern = compute_pattern(C.offsets, O_new, p)
    out = []
    for q in pattern.send_to:
        s, e = pattern.ranges[q]
        rows = slice(s - C.first_tree, e - C.first_tree + 1)
        if q == p:
            ghosts = retained_ghosts(C, O_new, (s, e))
        else:
            ghosts = outgoing_ghosts(C, q, O_new, (s, e))
        t2t = update_ids_phase1(
            C.global_neighbors[rows], int(O_new.first[q]), int(O_new.last[q])
        )
        out.append(
            RankMessage(
                src=p,
                dst=q,
                dim=C.dim,
                first_tree=s,
                eclass=C.eclass[rows],
                tree_to_tree=t2t,
                tree_to_face=C.tree_to_face[rows],
                tree_data=C.tree_data[rows],
                ghosts=sorted(ghosts, key=lambda g: g.id),
            )
        )
    return out


def receive_phase(p: int, O_old: OffsetArray, O_new: OffsetArray, messages, dim: int) -> Cmesh:
    """Assemble rank `p`'s new mesh from the messages of its receive set.

    `messages` may arrive in any order; they are processed by ascending
    sender, which fixes the ghost order.
    """
    msgs = sorted(messages, key=lambda m: m.src)
    expected = compute_R(O_old, O_new, p)
    got = [m.src for m in msgs]
    if got != expected:
        raise RuntimeError(f"rank {p}: expected messages from {expected}, got {got}")

    new_first, new_last = int(O_new.first[p]), int(O_new.last[p])
    nf = max_faces(dim)
    n = max(new_last - new_first + 1, 0)
    eclass = np.empty(n, dtype=np.uint8)
    t2t = np.full((n, nf), UNUSED, dtype=np.int64)
    t2f = np.full((n, nf), UNUSED, dtype=np.int16)
    data = [None] * n
    filled = np.zeros(n, dtype=bool)
    ghosts, seen = [], set()
    for m in msgs:
        if m.dst != p:
            raise RuntimeError(f"rank {p} got a message addressed to {m.dst}")
        lo = m.first_tree - new_first
        hi = lo + m.ntrees
        if lo < 0 or hi > n:
            raise RuntimeError(f"rank {p}: trees {m.tree_ids} outside its new range")
        if filled[lo:hi].any():
            raise RuntimeError(f"rank {p}: tree received twice from rank {m.src}")
        filled[lo:hi] = True
        eclass[lo:hi] = m.eclass
        t2t[lo:hi] = m.tree_to_tree
        t2f[lo:hi] = m.tree_to_face
        data[lo:hi] = m.tree_data
        for g in m.ghosts:
            if g.id in seen:
                raise RuntimeError(f"rank {p}: ghost {g.id} received twice")
            seen.add(g.id)
            ghosts.append(g)
    if not filled.all():
        missing = new_first + int(np.flatnonzero(~filled)[0])
        raise RuntimeError(f"rank {p}: new local tree {missing} was not received")

    t2t = update_ids_phase2(t2t, t2f, ghosts, new_first, dim)
    return Cmesh(p, O_new, dim, eclass, t2t, t2f, data, ghosts)


def partition_cmesh(cmeshes, O_new: OffsetArray):
    """Repartition all ranks' meshes to `O_new` in one sequential sweep.

    Returns the new meshes and the messages that were exchanged, both indexed
    by rank. See :func:`cmesh_partition.runtime.run_repartition` for the
    concurrent driver with statistics.
    """
    P = len(cmeshes)
    if O_new.num_ranks != P:
        raise ValueError(f"new partition has {O_new.num_ranks} ranks, world has {P}")
    O_old = cmeshes[0].offsets
    if O_new.num_trees != O_old.num_trees:
        raise ValueError("new partition has a different tree count")
    problems = validate_offsets(O_new)
    if problems:
        raise ValueError("invalid new partition: " + "; ".join(problems))
    inbox = [[] for _ in range(P)]
    sent = []
    for C in cmeshes:
        for msg in send_phase(C, O_new):
            inbox[msg.dst].append(msg)
            sent.append(msg)
    dim = cmeshes[0].dim
    new = [receive_phase(p, O_old, O_new, inbox[p], dim) for p in range(P)]
    return new, sent
