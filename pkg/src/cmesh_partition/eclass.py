r"""Tree classes, face numbering tables and face-connection codes.

Vertex numbering follows the p4est/t8code convention: quads and hexes use
z-order vertices and faces ordered -x, +x, -y, +y, -z, +z; for simplices
face ``i`` is opposite vertex ``i``. Face corners are the face's vertices
in ascending tree-vertex order.

::

    quad            hex (z=0 | z=1)       triangle      tet
    2 ---- 3        2 -- 3  6 -- 7        2             3 (apex)
    |      |        |    |  |    |        | \           |
    0 ---- 1        0 -- 1  4 -- 5        0 -- 1        0,1,2 (base)
"""
from __future__ import annotations

import enum


class TreeClass(enum.IntEnum):
    """Element class of a coarse-mesh tree (stored as one byte)."""

    POINT = 0
    LINE = 1
    QUAD = 2
    TRIANGLE = 3
    HEX = 4
    TET = 5
    PRISM = 6
    PYRAMID = 7

    @property
    def dimension(self) -> int:
        return _DIMENSION[self]

    @property
    def num_faces(self) -> int:
        return len(FACE_VERTICES[self])

    def face_corner_count(self, face: int) -> int:
        if not 0 <= face < self.num_faces:
            raise ValueError(f"{self.name} has no face {face}")
        return len(FACE_VERTICES[self][face])

    def face_vertices(self, face: int) -> tuple[int, ...]:
        return FACE_VERTICES[self][face]


_DIMENSION = {
    TreeClass.POINT: 0,
    TreeClass.LINE: 1,
    TreeClass.QUAD: 2,
    TreeClass.TRIANGLE: 2,
    TreeClass.HEX: 3,
    TreeClass.TET: 3,
    TreeClass.PRISM: 3,
    TreeClass.PYRAMID: 3,
}

# Swap this table to adopt a different numbering convention.
FACE_VERTICES: dict[TreeClass, tuple[tuple[int, ...], ...]] = {
    TreeClass.POINT: (),
    TreeClass.LINE: ((0,), (1,)),
    TreeClass.QUAD: ((0, 2), (1, 3), (0, 1), (2, 3)),
    TreeClass.TRIANGLE: ((1, 2), (0, 2), (0, 1)),
    TreeClass.HEX: (
        (0, 2, 4, 6), (1, 3, 5, 7),
        (0, 1, 4, 5), (2, 3, 6, 7),
        (0, 1, 2, 3), (4, 5, 6, 7),
    ),
    TreeClass.TET: ((1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2)),
    TreeClass.PRISM: ((1, 2, 4, 5), (0, 2, 3, 5), (0, 1, 3, 4), (0, 1, 2), (3, 4, 5)),
    TreeClass.PYRAMID: ((0, 2, 4), (1, 3, 4), (0, 1, 4), (2, 3, 4), (0, 1, 2, 3)),
}

# Position in the semiorder hex < prism < pyramid, tet < prism.
# hex and tet never share a face, so the tie between them is never consulted.
# In 2D all faces are lines with two corners, where both sides yield the same
# orientation; quad < triangle is an arbitrary but fixed choice.
_SEMIORDER = {
    TreeClass.POINT: 0,
    TreeClass.LINE: 0,
    TreeClass.QUAD: 0,
    TreeClass.TRIANGLE: 1,
    TreeClass.HEX: 0,
    TreeClass.TET: 0,
    TreeClass.PRISM: 1,
    TreeClass.PYRAMID: 2,
}


def max_faces(dim: int) -> int:
    """Largest face count over all classes of dimension `dim` (the ``F`` of a face code)."""
    return {0: 0, 1: 2, 2: 4, 3: 6}[dim]


def is_first_face(t: TreeClass, f: int, t_prime: TreeClass, f_prime: int) -> bool:
    """True if ``(t, f)`` is the side whose corner 0 defines the orientation."""
    rt, rt_prime = _SEMIORDER[t], _SEMIORDER[t_prime]
    if t != t_prime and rt != rt_prime:
        return rt < rt_prime
    return t < t_prime if t != t_prime else f <= f_prime


def compute_orientation(t, f, t_prime, f_prime, xi, xi_prime) -> int:
    """Orientation of the face connection ``(t, f) -- (t_prime, f_prime)``.

    Parameters
    ----------
    t, t_prime : TreeClass
        Classes of the two trees.
    f, f_prime : int
        Face numbers on either side.
    xi : int
        Face corner of `f_prime` matching corner 0 of `f`.
    xi_prime : int
        Face corner of `f` matching corner 0 of `f_prime`.

    Returns
    -------
    int
        `xi` if ``t < t_prime`` in the semiorder or (``t == t_prime`` and
        ``f <= f_prime``), otherwise `xi_prime`.
    """
    t, t_prime = TreeClass(t), TreeClass(t_prime)
    ncorners = t.face_corner_count(f)
    if ncorners != t_prime.face_corner_count(f_prime):
        raise ValueError(
            f"face mismatch: {t.name} face {f} vs {t_prime.name} face {f_prime}"
        )
    if not (0 <= xi < ncorners and 0 <= xi_prime < ncorners):
        raise ValueError("face corner out of range")
    return xi if is_first_face(t, f, t_prime, f_prime) else xi_prime


def encode_face(orientation: int, neighbor_face: int, dim: int) -> int:
    """Pack an orientation and the neighbor's face number as ``or * F + f'``."""
    nf = max_faces(dim)
    if not 0 <= neighbor_face < nf:
        raise ValueError(f"neighbor face {neighbor_face} out of range for dim={dim}")
    if orientation < 0:
        raise ValueError("negative orientation")
    return orientation * nf + neighbor_face


def decode_face(code: int, dim: int) -> tuple[int, int]:
    """Inverse of :func:`encode_face`; returns ``(orientation, neighbor_face)``."""
    return divmod(int(code), max_faces(dim))
