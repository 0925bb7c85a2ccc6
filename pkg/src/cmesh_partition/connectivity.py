"""Replicated (global) coarse-mesh connectivity, its validation and text dump."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .eclass import TreeClass, decode_face, encode_face, max_faces


class FormatError(ValueError):
    """A dump file or serialized record could not be parsed."""


@dataclass
class Connectivity:
    """Face connectivity of all ``K`` trees, indexed by global tree id.

    Attributes
    ----------
    dim : int
        Spatial dimension shared by all trees.
    eclass : ndarray, shape (K,), uint8
        :class:`TreeClass` of every tree.
    tree_to_tree : ndarray, shape (K, F), int64
        Global neighbor across each face. A face pointing at its own tree with
        the same face number is a domain boundary. Slots beyond the class's
        face count hold -1.
    tree_to_face : ndarray, shape (K, F), int16
        Face code ``or * F + f'`` of each connection (-1 in unused slots).
    tree_data : list of bytes
        Opaque per-tree payload.
    """

    dim: int
    eclass: np.ndarray
    tree_to_tree: np.ndarray
    tree_to_face: np.ndarray
    tree_data: list = field(default_factory=list)

    @property
    def num_trees(self) -> int:
        return len(self.eclass)

    @classmethod
    def unconnected(cls, eclasses, dim=None, tree_data=None) -> "Connectivity":
        """All trees with every face on the domain boundary."""
        eclasses = np.asarray(eclasses, dtype=np.uint8)
        if dim is None:
            dim = TreeClass(int(eclasses[0])).dimension if len(eclasses) else 3
        nf = max_faces(dim)
        K = len(eclasses)
        t2t = np.full((K, nf), -1, dtype=np.int64)
        t2f = np.full((K, nf), -1, dtype=np.int16)
        for ec in np.unique(eclasses):
            tc = TreeClass(int(ec))
            if tc.dimension != dim:
                raise ValueError(f"{tc.name} is not a {dim}D class")
            rows = np.flatnonzero(eclasses == ec)
            faces = np.arange(tc.num_faces)
            t2t[rows[:, None], faces] = rows[:, None]
            t2f[rows[:, None], faces] = faces
        if tree_data is None:
            tree_data = [b""] * K
        return cls(dim, eclasses, t2t, t2f, list(tree_data))

    def join(self, k, f, k2, f2, orientation=0):
        """Glue face `f` of tree `k` to face `f2` of tree `k2` (both sides)."""
        if k == k2 and f == f2:
            raise ValueError("a face cannot be connected to itself")
        self.tree_to_tree[k, f] = k2
        self.tree_to_face[k, f] = encode_face(orientation, f2, self.dim)
        self.tree_to_tree[k2, f2] = k
        self.tree_to_face[k2, f2] = encode_face(orientation, f, self.dim)

    def num_faces(self, k) -> int:
        return TreeClass(int(self.eclass[k])).num_faces

    def is_boundary(self, k, f) -> bool:
        return (
            self.tree_to_tree[k, f] == k
            and decode_face(self.tree_to_face[k, f], self.dim)[1] == f
        )

    def face_neighbors(self, k) -> np.ndarray:
        """Distinct global neighbors of `k` across its faces, boundary excluded."""
        nf = self.num_faces(k)
        nbrs = self.tree_to_tree[k, :nf]
        return np.unique(nbrs[nbrs != k])

    def equals(self, other: "Connectivity") -> bool:
        return (
            self.dim == other.dim
            and np.array_equal(self.eclass, other.eclass)
            and np.array_equal(self.tree_to_tree, other.tree_to_tree)
            and np.array_equal(self.tree_to_face, other.tree_to_face)
            and list(self.tree_data) == list(other.tree_data)
        )


_NUM_FACES = np.array([TreeClass(c).num_faces for c in range(len(TreeClass))])
_CORNERS = np.zeros((len(TreeClass), 6), dtype=np.int64)
for _tc in TreeClass:
    for _f in range(_tc.num_faces):
        _CORNERS[_tc, _f] = _tc.face_corner_count(_f)


def validate_global_connectivity(conn: Connectivity) -> list[str]:
    """Check mutual consistency of all face connections.

    Every connection must be listed by both trees with swapped face numbers
    and the same orientation; boundary faces must carry orientation 0. A
    broken connection between two trees is reported once.

    Returns a list of human-readable violations; an empty list means the mesh
    is valid.
    """
    K = conn.num_trees
    nf = max_faces(conn.dim)
    eclass = np.asarray(conn.eclass, dtype=np.int64)
    if K == 0:
        return []
    if eclass.max() >= len(TreeClass):
        return [f"tree {int(np.argmax(eclass >= len(TreeClass)))}: unknown class"]
    problems = []
    dims = np.array([TreeClass(c).dimension for c in range(len(TreeClass))])[eclass]
    for k in np.flatnonzero(dims != conn.dim).tolist():
        problems.append(f"tree {k}: class {TreeClass(int(eclass[k])).name} is not {conn.dim}D")
    if problems:
        return problems

    t2t = np.asarray(conn.tree_to_tree, dtype=np.int64)
    t2f = np.asarray(conn.tree_to_face, dtype=np.int64)
    faces = np.arange(nf)
    used = faces[None, :] < _NUM_FACES[eclass][:, None]
    for k, f in np.argwhere(~used & ((t2t != -1) | (t2f != -1))).tolist():
        problems.append(f"tree {k} slot {f}: unused face slot is not -1")

    k_idx, f_idx = np.nonzero(used)
    k2 = t2t[k_idx, f_idx]
    code = t2f[k_idx, f_idx]
    bad = (k2 < 0) | (k2 >= K)
    for k, f, v in zip(k_idx[bad], f_idx[bad], k2[bad]):
        problems.append(f"tree {k} face {f}: neighbor {v} out of range")
    neg = ~bad & (code < 0)
    for k, f, c in zip(k_idx[neg], f_idx[neg], code[neg]):
        problems.append(f"tree {k} face {f}: negative face code {c}")
    ok = ~bad & ~neg
    k_idx, f_idx, k2, code = k_idx[ok], f_idx[ok], k2[ok], code[ok]
    orientation, f2 = np.divmod(code, nf)
    bad = f2 >= _NUM_FACES[eclass[k2]]
    for k, f, g in zip(k_idx[bad], f_idx[bad], f2[bad]):
        problems.append(f"tree {k} face {f}: neighbor face {g} out of range")
    ok = ~bad
    k_idx, f_idx, k2, f2, orientation = k_idx[ok], f_idx[ok], k2[ok], f2[ok], orientation[ok]

    boundary = (k2 == k_idx) & (f2 == f_idx)
    bad = boundary & (orientation != 0)
    for k, f, o in zip(k_idx[bad], f_idx[bad], orientation[bad]):
        problems.append(f"tree {k} face {f}: boundary with orientation {o}")
    inner = ~boundary
    k_idx, f_idx, k2, f2, orientation = (
        a[inner] for a in (k_idx, f_idx, k2, f2, orientation)
    )
    corners = _CORNERS[eclass[k_idx], f_idx]
    bad = corners != _CORNERS[eclass[k2], f2]
    for k, f, a, b in zip(k_idx[bad], f_idx[bad], k2[bad], f2[bad]):
        problems.append(f"tree {k} face {f} -> tree {a} face {b}: face mismatch")
    bad = ~bad & (orientation >= corners)
    for k, f, o in zip(k_idx[bad], f_idx[bad], orientation[bad]):
        problems.append(f"tree {k} face {f}: orientation {o} out of range")

    back_tree = t2t[k2, f2]
    back_code = t2f[k2, f2]
    mirrored = (back_tree == k_idx) & (back_code == orientation * nf + f_idx)
    reported = set()
    for k, f, a, b in zip(k_idx[~mirrored], f_idx[~mirrored], k2[~mirrored], f2[~mirrored]):
        pair = (min(k, a), max(k, a))
        if pair in reported:
            continue
        reported.add(pair)
        problems.append(
            f"tree {k} face {f} -> tree {a} face {b}: not mirrored by tree {a} "
            f"(lists tree {t2t[a, b]}, code {t2f[a, b]})"
        )
    return problems


def dump_connectivity(conn: Connectivity) -> str:
    """Render `conn` in the line-based ``cmesh v1`` text format."""
    lines = [f"cmesh v1 dim={conn.dim} K={conn.num_trees}"]
    for k in range(conn.num_trees):
        tc = TreeClass(int(conn.eclass[k]))
        faces = []
        for f in range(tc.num_faces):
            if conn.is_boundary(k, f):
                faces.append("B")
            else:
                faces.append(f"{conn.tree_to_tree[k, f]}:{conn.tree_to_face[k, f]}")
        lines.append(
            f"tree {k} {tc.name.lower()} ; {' '.join(faces)} ; data={conn.tree_data[k].hex()}"
        )
    return "\n".join(lines) + "\n"


def load_connectivity(text: str) -> Connectivity:
    """Parse the ``cmesh v1`` format written by :func:`dump_connectivity`."""
    lines = text.splitlines()
    if not lines:
        raise FormatError("empty mesh dump")
    head = lines[0].split()
    try:
        if head[:2] != ["cmesh", "v1"]:
            raise FormatError(f"bad header {lines[0]!r}")
        dim = int(head[2].removeprefix("dim="))
        K = int(head[3].removeprefix("K="))
    except (IndexError, ValueError) as err:
        raise FormatError(f"bad header {lines[0]!r}") from err
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != K:
        raise FormatError(f"header announces {K} trees, found {len(body)}")

    eclasses, rows, data = [], [], []
    for expect, line in enumerate(body):
        try:
            head, faces, payload = (part.strip() for part in line.split(";"))
            word, k, cname = head.split()
            if word != "tree" or int(k) != expect:
                raise FormatError(f"expected tree {expect}: {line!r}")
            tc = TreeClass[cname.upper()]
            entries = faces.split()
            if len(entries) != tc.num_faces:
                raise FormatError(f"tree {k}: {tc.name} needs {tc.num_faces} faces")
            if not payload.startswith("data="):
                raise FormatError(f"tree {k}: missing data field")
            data.append(bytes.fromhex(payload[5:]))
        except (KeyError, ValueError) as err:
            if isinstance(err, FormatError):
                raise
            raise FormatError(f"cannot parse {line!r}") from err
        eclasses.append(tc)
        rows.append(entries)

    conn = Connectivity.unconnected(eclasses, dim=dim, tree_data=data)
    for k, entries in enumerate(rows):
        for f, entry in enumerate(entries):
            if entry == "B":
                continue
            try:
                nbr, code = (int(x) for x in entry.split(":"))
            except ValueError as err:
                raise FormatError(f"tree {k} face {f}: bad entry {entry!r}") from err
            conn.tree_to_tree[k, f] = nbr
            conn.tree_to_face[k, f] = code
    return conn
