"""Deterministic multi-rank simulation of the repartitioning exchange.

Each simulated rank owns one :class:`~cmesh_partition.cmesh.Cmesh`. A
repartition step runs every rank's sending phase (possibly on a thread pool),
delivers serialized messages to per-rank mailboxes, waits at a barrier, then
runs every receiving phase with the mailbox sorted by sender.
"""
from __future__ import annotations

import csv
import io
import json
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .cmesh import Cmesh, distribute, global_ghost_set
from .connectivity import Connectivity
from .eclass import max_faces
from .exchange import RankMessage, receive_phase, send_phase
from .offsets import OffsetArray, validate_offsets


class RepartitionError(RuntimeError):
    """A rank failed during a repartition step."""

    def __init__(self, rank, phase, cause):
        super().__init__(f"rank {rank} failed in {phase} phase: {cause}")
        self.rank = rank
        self.phase = phase
        self.cause = cause


@dataclass
class RankStats:
    rank: int
    trees_sent: int = 0
    ghosts_sent: int = 0
    bytes_sent: int = 0
    messages_sent: int = 0
    S_size: int = 0


@dataclass
class PartitionStats:
    """Wire traffic of one repartition step.

    Counters cover wire messages only. `wire` and `local` list
    ``(src, dst, tree ids, ghost ids)`` for wire messages and for the local
    moves of trees and retained ghosts, respectively.
    """

    ranks: list = field(default_factory=list)
    shared_tree_count: int = 0
    wall_time: float = 0.0
    wire: list = field(default_factory=list)
    local: list = field(default_factory=list)

    @property
    def trees_sent(self) -> int:
        return sum(r.trees_sent for r in self.ranks)

    @property
    def ghosts_sent(self) -> int:
        return sum(r.ghosts_sent for r in self.ranks)

    @property
    def bytes_sent(self) -> int:
        return sum(r.bytes_sent for r in self.ranks)

    @property
    def messages_sent(self) -> int:
        return sum(r.messages_sent for r in self.ranks)

    @property
    def mean_S_size(self) -> float:
        return float(np.mean([r.S_size for r in self.ranks])) if self.ranks else 0.0

    def aggregate(self) -> dict:
        return {
            "ranks": len(self.ranks),
            "trees_sent": self.trees_sent,
            "ghosts_sent": self.ghosts_sent,
            "bytes_sent": self.bytes_sent,
            "messages_sent": self.messages_sent,
            "mean_S_size": self.mean_S_size,
            "shared_tree_count": self.shared_tree_count,
            "wall_time": self.wall_time,
        }

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["rank", "trees_sent", "ghosts_sent", "bytes", "S_size"])
        for r in self.ranks:
            w.writerow([r.rank, r.trees_sent, r.ghosts_sent, r.bytes_sent, r.S_size])
        return out.getvalue()

    def to_json(self) -> str:
        return json.dumps(self.aggregate(), indent=2, sort_keys=True)


class World:
    """``P`` simulated ranks, each holding its own coarse mesh."""

    def __init__(self, cmeshes):
        self.cmeshes = list(cmeshes)
        self.step = 0

    @classmethod
    def from_connectivity(cls, conn: Connectivity, O: OffsetArray) -> "World":
        problems = validate_offsets(O)
        if problems:
            raise ValueError("invalid partition: " + "; ".join(problems))
        return cls(distribute(conn, O, p) for p in range(O.num_ranks))

    @property
    def size(self) -> int:
        return len(self.cmeshes)

    @property
    def offsets(self) -> OffsetArray:
        return self.cmeshes[0].offsets

    def __getitem__(self, p) -> Cmesh:
        return self.cmeshes[p]


def _run_ranks(fn, ranks, workers, schedule_seed):
    order = list(ranks)
    if schedule_seed is not None:
        random.Random(schedule_seed).shuffle(order)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = dict(zip(order, pool.map(fn, order)))
    else:
        results = {p: fn(p) for p in order}
    return [results[p] for p in ranks]


def run_repartition(world: World, O_new: OffsetArray, workers: int = 1,
                    schedule_seed=None, dump_dir=None):
    """Repartition every rank of `world` to `O_new`.

    Parameters
    ----------
    workers : int
        Thread-pool size for both phases; 1 runs sequentially.
    schedule_seed : int, optional
        Shuffle the order in which ranks are scheduled (the result must not
        depend on it).
    dump_dir : path, optional
        Write every wire message to ``<dump_dir>/step<N>_<p>_to_<q>.msg``.

    Returns
    -------
    (World, PartitionStats)
    """
    t0 = time.perf_counter()
    P = world.size
    O_old = world.offsets
    if O_new.num_ranks != P:
        raise ValueError(f"new partition has {O_new.num_ranks} ranks, world has {P}")
    if O_new.num_trees != O_old.num_trees:
        raise ValueError(
            f"new partition has {O_new.num_trees} trees, mesh has {O_old.num_trees}"
        )
    problems = validate_offsets(O_new)
    if problems:
        raise ValueError("invalid new partition: " + "; ".join(problems))

    def sending(p):
        try:
            out = []
            for msg in send_phase(world[p], O_new):
                # only wire traffic is serialized; self-delivery is a local move
                out.append((msg, msg.to_bytes() if msg.dst != p else None))
            return out
        except Exception as err:  # attribute failures to their rank
            raise RepartitionError(p, "send", err) from err

    outgoing = _run_ranks(sending, range(P), workers, schedule_seed)

    # barrier: every message is enqueued before any rank receives
    mailbox = [[] for _ in range(P)]
    stats = PartitionStats(ranks=[RankStats(p) for p in range(P)])
    for p, msgs in enumerate(outgoing):
        stats.ranks[p].S_size = len(msgs)
        for msg, raw in msgs:
            if raw is None:
                mailbox[msg.dst].append(msg)
                stats.local.append((p, p, list(msg.tree_ids), [g.id for g in msg.ghosts]))
                continue
            rs = stats.ranks[p]
            rs.trees_sent += msg.ntrees
            rs.ghosts_sent += msg.nghosts
            rs.bytes_sent += len(raw)
            rs.messages_sent += 1
            stats.wire.append((p, msg.dst, list(msg.tree_ids), [g.id for g in msg.ghosts]))
            mailbox[msg.dst].append(raw)
            if dump_dir is not None:
                from pathlib import Path

                path = Path(dump_dir) / f"step{world.step}_{p}_to_{msg.dst}.msg"
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_bytes(raw)

    dim = world[0].dim

    def receiving(p):
        try:
            msgs = [m if isinstance(m, RankMessage) else RankMessage.from_bytes(m)
                    for m in mailbox[p]]
            return receive_phase(p, O_old, O_new, msgs, dim)
        except Exception as err:
            raise RepartitionError(p, "receive", err) from err

    new = World(_run_ranks(receiving, range(P), workers, schedule_seed))
    new.step = world.step + 1
    stats.shared_tree_count = O_new.shared_tree_count()
    stats.wall_time = time.perf_counter() - t0
    return new, stats


def gather_connectivity(world: World):
    """Reassemble the replicated connectivity from all ranks' local trees.

    Returns ``(conn, problems)``; shared trees must agree on every rank that
    holds them.
    """
    problems = []
    O = world.offsets
    K = O.num_trees
    dim = world[0].dim
    nf = max_faces(dim)
    eclass = np.zeros(K, dtype=np.uint8)
    t2t = np.full((K, nf), -1, dtype=np.int64)
    t2f = np.full((K, nf), -1, dtype=np.int16)
    data = [None] * K
    seen = np.zeros(K, dtype=bool)
    for C in world.cmeshes:
        if C.n_local == 0:
            continue
        sl = slice(C.first_tree, C.first_tree + C.n_local)
        nbrs = C.global_neighbors
        dup = seen[sl]
        if dup.any():
            for i in np.flatnonzero(dup):
                k = C.first_tree + int(i)
                if (
                    eclass[k] != C.eclass[i]
                    or not np.array_equal(t2t[k], nbrs[i])
                    or not np.array_equal(t2f[k], C.tree_to_face[i])
                    or data[k] != C.tree_data[i]
                ):
                    problems.append(f"shared tree {k} differs on rank {C.rank}")
        eclass[sl] = C.eclass
        t2t[sl] = nbrs
        t2f[sl] = C.tree_to_face
        data[sl] = C.tree_data
        seen[sl] = True
    if not seen.all():
        problems.append(f"tree {int(np.flatnonzero(~seen)[0])} is held by no rank")
    data = [d if d is not None else b"" for d in data]
    return Connectivity(dim, eclass, t2t, t2f, data), problems


def verify_world(world: World, reference: Connectivity) -> list[str]:
    """Differences between the distributed state and the replicated `reference`.

    Checks the per-rank invariants (tree counts, ghost sets against the ghost
    definition, ghost records against the reference) and that the reassembled
    connectivity equals `reference` bit for bit.
    """
    problems = []
    O = world.offsets
    problems += [f"offsets: {msg}" for msg in validate_offsets(O)]
    if O.num_trees != reference.num_trees:
        return problems + [f"world has {O.num_trees} trees, reference {reference.num_trees}"]
    for p, C in enumerate(world.cmeshes):
        if C.rank != p or C.offsets != O:
            problems.append(f"rank {p}: inconsistent rank id or offsets")
            continue
        n_expected = max(int(O.counts[p]), 0)
        if C.n_local != n_expected:
            problems.append(f"rank {p}: {C.n_local} local trees, expected {n_expected}")
        if C.n_local:
            used = C.tree_to_tree >= 0
            if (C.tree_to_tree[used] >= C.n_local + C.n_ghosts).any():
                problems.append(f"rank {p}: neighbor index out of range")
        if O.is_empty(p):
            expect = set()
        else:
            expect = set(global_ghost_set(reference, int(O.first[p]), int(O.last[p])).tolist())
        have = [g.id for g in C.ghosts]
        if len(set(have)) != len(have):
            problems.append(f"rank {p}: duplicate ghosts")
        for gid in sorted(expect - set(have)):
            problems.append(f"rank {p}: missing ghost {gid}")
        for gid in sorted(set(have) - expect):
            problems.append(f"rank {p}: unexpected ghost {gid}")
        for g in C.ghosts:
            if not 0 <= g.id < reference.num_trees:
                continue
            nf = reference.num_faces(g.id)
            if (
                g.eclass != reference.eclass[g.id]
                or list(g.tree_to_tree) != reference.tree_to_tree[g.id, :nf].tolist()
                or list(g.tree_to_face) != reference.tree_to_face[g.id, :nf].tolist()
            ):
                problems.append(f"rank {p}: ghost {g.id} record differs from reference")
    if problems:
        return problems
    conn, gather_problems = gather_connectivity(world)
    problems += gather_problems
    if not gather_problems and not conn.equals(reference):
        bad = np.flatnonzero(
            (conn.eclass != reference.eclass)
            | (conn.tree_to_tree != reference.tree_to_tree).any(axis=1)
            | (conn.tree_to_face != reference.tree_to_face).any(axis=1)
        ).tolist()
        bad += [k for k in range(reference.num_trees) if conn.tree_data[k] != reference.tree_data[k]]
        problems.append(f"reassembled connectivity differs at trees {sorted(set(bad))[:10]}")
    return problems


def serialize_world(world: World) -> bytes:
    """Canonical byte image of all ranks (used to compare runs)."""
    parts = [world.offsets.dumps().encode()]
    for C in world.cmeshes:
        parts.append(np.asarray(C.eclass, dtype="<u1").tobytes())
        parts.append(np.asarray(C.tree_to_tree, dtype="<i4").tobytes())
        parts.append(np.asarray(C.tree_to_face, dtype="<i2").tobytes())
        parts.append(b"".join(C.tree_data))
        parts.append(repr([asdict(g) for g in C.ghosts]).encode())
    return b"|".join(parts)
