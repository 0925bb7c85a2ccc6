"""Coarse-mesh generators for tests, demos and benchmarks."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .connectivity import Connectivity
from .eclass import TreeClass, encode_face
from .offsets import OffsetArray


@dataclass(frozen=True)
class BrickSpec:
    """One ``nx x ny (x nz)`` block of quads/hexes per rank."""

    nx: int
    ny: int
    nz: int = 1
    ranks: int = 1
    dim: int = 3
    connected: bool = False

    def __post_init__(self):
        if min(self.nx, self.ny, self.nz, self.ranks) < 1:
            raise ValueError("brick dimensions and rank count must be >= 1")
        if self.dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")

    @property
    def trees_per_rank(self) -> int:
        return self.nx * self.ny * (self.nz if self.dim == 3 else 1)

    @property
    def num_trees(self) -> int:
        return self.ranks * self.trees_per_rank

    @classmethod
    def parse(cls, text: str, ranks: int = 1, connected: bool = False) -> "BrickSpec":
        """Parse ``NXxNY`` (2D) or ``NXxNYxNZ`` (3D)."""
        parts = [int(v) for v in text.lower().split("x")]
        if len(parts) == 2:
            return cls(parts[0], parts[1], 1, ranks, 2, connected)
        if len(parts) == 3:
            return cls(*parts, ranks, 3, connected)
        raise ValueError(f"brick spec must be NXxNY or NXxNYxNZ, got {text!r}")


def brick_connectivity(spec: BrickSpec) -> Connectivity:
    """Disjoint union of one structured block per rank.

    Axis-aligned neighbors connect -x/+x, -y/+y, -z/+z with orientation 0;
    block faces are domain boundary unless ``spec.connected`` glues the +x side
    of block ``p`` to the -x side of block ``p + 1``. Each tree carries its
    global index as an 8-byte payload.
    """
    dim = spec.dim
    nz = spec.nz if dim == 3 else 1
    per = spec.trees_per_rank
    K = spec.num_trees
    if K >= 2**62:
        raise OverflowError("brick has too many trees")
    eclass = TreeClass.HEX if dim == 3 else TreeClass.QUAD
    data = [int(k).to_bytes(8, "little") for k in range(K)]
    conn = Connectivity.unconnected(np.full(K, eclass, dtype=np.uint8), dim, data)

    ids = np.arange(K, dtype=np.int64)
    block, local = np.divmod(ids, per)
    i = local % spec.nx
    j = (local // spec.nx) % spec.ny
    k = local // (spec.nx * spec.ny)
    strides = (1, spec.nx, spec.nx * spec.ny)
    coords = (i, j, k)
    extents = (spec.nx, spec.ny, nz)
    for axis in range(dim):
        lo_face, hi_face = 2 * axis, 2 * axis + 1
        inner = coords[axis] < extents[axis] - 1
        a = ids[inner]
        b = a + strides[axis]
        _glue(conn, a, hi_face, b, lo_face)
    if spec.connected and spec.ranks > 1:
        edge = (i == spec.nx - 1) & (block < spec.ranks - 1)
        a = ids[edge]
        b = a + per - (spec.nx - 1)
        _glue(conn, a, 1, b, 0)
    return conn


def _glue(conn, a, fa, b, fb):
    conn.tree_to_tree[a, fa] = b
    conn.tree_to_face[a, fa] = encode_face(0, fb, conn.dim)
    conn.tree_to_tree[b, fb] = a
    conn.tree_to_face[b, fb] = encode_face(0, fa, conn.dim)


def brick_offsets(spec: BrickSpec) -> OffsetArray:
    """Block-per-rank partition: no shared trees, all entries nonnegative."""
    return OffsetArray(np.arange(spec.ranks + 1, dtype=np.int64) * spec.trees_per_rank)


def brick_world(spec: BrickSpec):
    """Distributed brick mesh: ``(World, offsets)`` with rank ``p`` owning block ``p``."""
    from .runtime import World

    O = brick_offsets(spec)
    return World.from_connectivity(brick_connectivity(spec), O), O


def shift_partition(O: OffsetArray, fraction: float) -> OffsetArray:
    """Every rank hands ``floor(fraction * n_p)`` trees from its tail to rank ``p + 1``.

    The last rank keeps all its trees. Shares are computed from `O` for all
    ranks at once; a shared tree counts for its smallest owner only, so the
    result never shares trees.
    """
    if not 0 <= fraction < 1:
        raise ValueError(f"fraction must lie in [0, 1), got {fraction}")
    P = O.num_ranks
    # unique-ownership boundaries: rank p owns [B[p], B[p+1])
    first = np.where(O.shared_first, O.first + 1, O.first)
    B = np.empty(P + 1, dtype=np.int64)
    B[-1] = O.num_trees
    # empty ranks start where the next rank starts
    B[:-1] = np.where(O.counts > 0, first, 0)
    for p in range(P - 1, -1, -1):
        if O.counts[p] <= 0 or first[p] > O.last[p]:
            B[p] = B[p + 1]
    own = np.diff(B)
    give = np.floor(fraction * own).astype(np.int64)
    give[-1] = 0
    new = B.copy()
    new[1:-1] = B[1:-1] - give[:-1]
    return OffsetArray(new)


def two_triangle_mesh() -> Connectivity:
    """Unit square split along its diagonal into triangles 0 and 1."""
    conn = Connectivity.unconnected([TreeClass.TRIANGLE, TreeClass.TRIANGLE], dim=2)
    # tree 0: (0,0) (1,0) (1,1); tree 1: (0,0) (1,1) (0,1); diagonal is
    # face 1 of tree 0 and face 2 of tree 1, both starting at (0,0)
    conn.join(0, 1, 1, 2, orientation=0)
    return conn


def three_tree_ring() -> Connectivity:
    """Three quads, each face-adjacent to the other two, two free faces each."""
    conn = Connectivity.unconnected([TreeClass.QUAD] * 3, dim=2)
    conn.join(0, 1, 1, 0)
    conn.join(1, 3, 2, 2)
    conn.join(2, 0, 0, 3)
    return conn


def line_mesh(K: int, dim: int = 2) -> Connectivity:
    """``K`` quads (or hexes) in a row along x."""
    spec = BrickSpec(K, 1, 1, 1, dim)
    return brick_connectivity(spec)


_MIXED_3D = (TreeClass.HEX, TreeClass.TET, TreeClass.PRISM, TreeClass.PYRAMID)


def random_mesh(K: int, rng: np.random.Generator, dim: int = 3, mixed: bool = False,
                boundary_fraction: float = 0.2, payload: bool = True) -> Connectivity:
    """Random, mutually consistent face pairing of ``K`` trees.

    Faces are matched at random among faces with the same corner count; about
    `boundary_fraction` of them stay on the boundary. The result need not be
    embeddable in space, which the partitioner does not require. Two faces of
    the same tree may be glued (one-tree periodicity).
    """
    if mixed and dim == 3:
        classes = rng.choice(np.array(_MIXED_3D, dtype=np.uint8), size=K)
    elif mixed and dim == 2:
        classes = rng.choice(np.array([TreeClass.QUAD, TreeClass.TRIANGLE], dtype=np.uint8), size=K)
    else:
        classes = np.full(K, TreeClass.HEX if dim == 3 else TreeClass.QUAD, dtype=np.uint8)
    data = [rng.bytes(int(rng.integers(0, 9))) if payload else b"" for _ in range(K)]
    conn = Connectivity.unconnected(classes, dim=dim, tree_data=data)

    by_corners = {}
    for k in range(K):
        tc = TreeClass(int(classes[k]))
        for f in range(tc.num_faces):
            if rng.random() >= boundary_fraction:
                by_corners.setdefault(tc.face_corner_count(f), []).append((k, f))
    for corners, slots in by_corners.items():
        order = rng.permutation(len(slots))
        for a, b in zip(order[0::2], order[1::2]):
            (k, f), (k2, f2) = slots[a], slots[b]
            conn.join(k, f, k2, f2, orientation=int(rng.integers(corners)))
    return conn
