"""Per-rank partitioned coarse mesh: local trees plus face-neighbor ghost trees."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .connectivity import Connectivity
from .eclass import TreeClass, decode_face
from .offsets import OffsetArray


@dataclass(frozen=True)
class GhostRecord:
    """A non-local tree replicated on a rank.

    Unlike local trees, a ghost lists every face neighbor by *global* index,
    including neighbors that are neither local nor ghost on the holding rank.
    """

    id: int
    eclass: int
    tree_to_tree: tuple
    tree_to_face: tuple

    @property
    def num_faces(self) -> int:
        return len(self.tree_to_tree)

    def neighbors(self):
        """Global ids across non-boundary faces (may repeat)."""
        return [
            u for f, u in enumerate(self.tree_to_tree)
            if not (u == self.id and self._neighbor_face(f) == f)
        ]

    def _neighbor_face(self, f):
        # F is the same for every class of one dimension
        dim = TreeClass(self.eclass).dimension
        return decode_face(self.tree_to_face[f], dim)[1]


@dataclass
class Cmesh:
    """Coarse mesh as seen by one rank.

    Attributes
    ----------
    rank : int
    offsets : OffsetArray
        Current partition, known to every rank.
    dim : int
    eclass : ndarray, shape (n_local,), uint8
    tree_to_tree : ndarray, shape (n_local, F), int32
        Local index of the neighbor across each face: ``u < n_local`` is local
        tree ``u``, otherwise ghost ``u - n_local``. A face pointing at its own
        tree with the same face number is a domain boundary; unused slots of
        classes with fewer than ``F`` faces hold -1.
    tree_to_face : ndarray, shape (n_local, F), int16
        Face codes ``or * F + f'``.
    tree_data : list of bytes
    ghosts : list of GhostRecord
    """

    rank: int
    offsets: OffsetArray
    dim: int
    eclass: np.ndarray
    tree_to_tree: np.ndarray
    tree_to_face: np.ndarray
    tree_data: list
    ghosts: list = field(default_factory=list)

    def __post_init__(self):
        n = self.offsets.counts[self.rank]
        if max(int(n), 0) != len(self.eclass):
            raise ValueError(
                f"rank {self.rank}: offsets say {n} local trees, got {len(self.eclass)}"
            )

    @property
    def world_size(self) -> int:
        return self.offsets.num_ranks

    @property
    def n_local(self) -> int:
        return len(self.eclass)

    @property
    def n_ghosts(self) -> int:
        return len(self.ghosts)

    @property
    def first_tree(self) -> int:
        """Global index ``k_p`` of local tree 0."""
        return int(self.offsets.first[self.rank])

    @cached_property
    def ghost_ids(self) -> np.ndarray:
        return np.array([g.id for g in self.ghosts], dtype=np.int64)

    @cached_property
    def ghost_index(self) -> dict:
        return {g.id: i for i, g in enumerate(self.ghosts)}

    @cached_property
    def global_neighbors(self) -> np.ndarray:
        """``tree_to_tree`` translated to global indices (unused slots stay -1)."""
        t2t = self.tree_to_tree.astype(np.int64)
        out = np.full_like(t2t, -1)
        n = self.n_local
        local = (t2t >= 0) & (t2t < n)
        out[local] = t2t[local] + self.first_tree
        ghost = t2t >= n
        if ghost.any():
            out[ghost] = self.ghost_ids[t2t[ghost] - n]
        return out

    def global_index(self, local: int) -> int:
        return self.first_tree + local

    def is_boundary_face(self, local: int, face: int) -> bool:
        return (
            self.tree_to_tree[local, face] == local
            and decode_face(self.tree_to_face[local, face], self.dim)[1] == face
        )

    def num_faces(self, local: int) -> int:
        return TreeClass(int(self.eclass[local])).num_faces

    def as_ghost(self, local: int) -> GhostRecord:
        """Ghost record of local tree `local` (neighbors converted to global ids)."""
        nf = self.num_faces(local)
        return GhostRecord(
            self.global_index(local),
            int(self.eclass[local]),
            tuple(int(u) for u in self.global_neighbors[local, :nf]),
            tuple(int(c) for c in self.tree_to_face[local, :nf]),
        )

    def record_of(self, gid: int) -> GhostRecord:
        """Ghost record of tree `gid`, which must be local or a ghost here."""
        k = gid - self.first_tree
        if 0 <= k < self.n_local:
            return self.as_ghost(k)
        return self.ghosts[self.ghost_index[gid]]


def neighbor_global_index(c: Cmesh, local: int, face: int):
    """Global index of the neighbor of local tree `local` across `face`.

    Returns ``None`` for a domain boundary.
    """
    if not 0 <= local < c.n_local:
        raise IndexError(f"local tree {local} out of range (n_local={c.n_local})")
    if not 0 <= face < c.num_faces(local):
        raise IndexError(f"face {face} out of range for local tree {local}")
    if c.is_boundary_face(local, face):
        return None
    u = int(c.tree_to_tree[local, face])
    if u < c.n_local:
        return c.first_tree + u
    return c.ghosts[u - c.n_local].id


def ghost_record(conn: Connectivity, k: int) -> GhostRecord:
    nf = conn.num_faces(k)
    return GhostRecord(
        int(k),
        int(conn.eclass[k]),
        tuple(int(u) for u in conn.tree_to_tree[k, :nf]),
        tuple(int(c) for c in conn.tree_to_face[k, :nf]),
    )


def global_ghost_set(conn: Connectivity, first: int, last: int) -> np.ndarray:
    """Trees outside ``[first, last]`` that are face neighbors of a tree inside."""
    if last < first:
        return np.empty(0, dtype=np.int64)
    nbrs = conn.tree_to_tree[first : last + 1]
    nbrs = nbrs[nbrs >= 0]
    return np.unique(nbrs[(nbrs < first) | (nbrs > last)])


def distribute(conn: Connectivity, O: OffsetArray, p: int) -> Cmesh:
    """Rank `p`'s share of the replicated connectivity `conn` under partition `O`.

    Ghosts are ordered by global id.
    """
    if O.num_trees != conn.num_trees:
        raise ValueError(f"partition has {O.num_trees} trees, mesh has {conn.num_trees}")
    first, last = int(O.first[p]), int(O.last[p])
    n = max(last - first + 1, 0)
    sl = slice(first, first + n)
    ghost_ids = global_ghost_set(conn, first, last)
    t2t_glob = conn.tree_to_tree[sl]
    t2t = np.full(t2t_glob.shape, -1, dtype=np.int32)
    used = t2t_glob >= 0
    local = used & (t2t_glob >= first) & (t2t_glob <= last)
    t2t[local] = t2t_glob[local] - first
    remote = used & ~local
    t2t[remote] = n + np.searchsorted(ghost_ids, t2t_glob[remote])
    return Cmesh(
        rank=p,
        offsets=O,
        dim=conn.dim,
        eclass=conn.eclass[sl].copy(),
        tree_to_tree=t2t,
        tree_to_face=conn.tree_to_face[sl].copy(),
        tree_data=list(conn.tree_data[sl]),
        ghosts=[ghost_record(conn, int(g)) for g in ghost_ids],
    )

