"""Benchmark triangulations: unit square, L-shape and cracked square.

All generators return an immutable :class:`Mesh` with counter-clockwise
triangles. Structured cells are split along the lower-left to upper-right
diagonal.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1


class DomainTag(str, enum.Enum):
    SQUARE = "square"
    LSHAPE = "lshape"
    CRACKED = "cracked"


class MeshError(ValueError):
    """Raised for invalid mesh arguments or inconsistent mesh data."""


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Mesh:
    """Triangulation with vertex coordinates and Dirichlet boundary vertices.

    Parameters
    ----------
    vertices : (V, 2) float array
    triangles : (T, 3) int array, counter-clockwise vertex indices
    boundary_vertices : sorted int array of vertices on the domain boundary
    domain_tag : DomainTag
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_vertices: np.ndarray
    domain_tag: DomainTag
    _edges: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "vertices", _frozen(self.vertices, float))
        object.__setattr__(self, "triangles", _frozen(self.triangles, np.int64))
        object.__setattr__(
            self, "boundary_vertices",
            _frozen(np.unique(np.asarray(self.boundary_vertices, dtype=np.int64)), np.int64))
        object.__setattr__(self, "domain_tag", DomainTag(self.domain_tag))
        v, t = self.vertices, self.triangles
        if v.ndim != 2 or v.shape[1] != 2 or not np.all(np.isfinite(v)):
            raise MeshError("vertices must be a finite (V, 2) array")
        if t.ndim != 2 or t.shape[1] != 3:
            raise MeshError("triangles must be a (T, 3) array")
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise MeshError("triangle vertex index out of range")
        if np.any((t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])):
            raise MeshError("triangle with repeated vertex")
        if np.any(signed_areas(v, t) <= 0.0):
            raise MeshError("triangles must be positively oriented with nonzero area")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def h_max(self) -> float:
        return float(self.element_diameters().max())

    def element_diameters(self) -> np.ndarray:
        """Longest edge length of every triangle."""
        p = self.vertices[self.triangles]
        e = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]], axis=1)
        return np.sqrt((e ** 2).sum(axis=2)).max(axis=1)

    def areas(self) -> np.ndarray:
        return signed_areas(self.vertices, self.triangles)

    def edges(self):
        """Unique edges and the triangle-to-edge table.

        Returns ``(edges, tri_edges, counts)`` where ``edges`` is an (E, 2)
        array of sorted vertex pairs in lexicographic order, ``tri_edges[t, k]``
        is the edge joining local vertices ``k`` and ``(k + 1) % 3``, and
        ``counts`` is how many triangles use each edge.
        """
        if self._edges is None:
            t = self.triangles
            local = np.stack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]], axis=1)
            keys = np.sort(local.reshape(-1, 2), axis=1)
            edges, inverse, counts = np.unique(
                keys, axis=0, return_inverse=True, return_counts=True)
            tri_edges = inverse.reshape(-1, 3)
            for a in (edges, tri_edges, counts):
                a.setflags(write=False)
            object.__setattr__(self, "_edges", (edges, tri_edges, counts))
        return self._edges

    def boundary_edges(self) -> np.ndarray:
        edges, _, counts = self.edges()
        return edges[counts == 1]


def signed_areas(vertices, triangles) -> np.ndarray:
    p = np.asarray(vertices)[np.asarray(triangles)]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def _structured_cells(index, cells):
    """Split each (i, j) cell along its lower-left to upper-right diagonal."""
    tris = []
    for i, j in cells:
        v00, v10 = index[(i, j)], index[(i + 1, j)]
        v01, v11 = index[(i, j + 1)], index[(i + 1, j + 1)]
        tris.append((v00, v10, v11))
        tris.append((v00, v11, v01))
    return np.array(tris, dtype=np.int64).reshape(-1, 3)


def _boundary_from_edges(triangles, n_vertices):
    t = np.asarray(triangles)
    keys = np.sort(np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
    edges, counts = np.unique(keys, axis=0, return_counts=True)
    return np.unique(edges[counts == 1])


def _check_divisions(n):
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise MeshError(f"number of divisions must be a positive integer, got {n!r}")
    return int(n)


def unit_square_mesh(n: int) -> Mesh:
    """Structured ``n x n`` triangulation of [0, 1]^2 with 2n^2 triangles."""
    n = _check_divisions(n)
    index = {}
    coords = []
    for j in range(n + 1):
        for i in range(n + 1):
            index[(i, j)] = len(coords)
            coords.append((i / n, j / n))
    cells = [(i, j) for j in range(n) for i in range(n)]
    tris = _structured_cells(index, cells)
    return Mesh(np.array(coords), tris, _boundary_from_edges(tris, len(coords)),
                DomainTag.SQUARE)


def l_shaped_mesh(n: int) -> Mesh:
    """Triangulation of [-1, 1]^2 minus [0, 1]^2 with ``n`` divisions per unit edge."""
    n = _check_divisions(n)
    m = 2 * n
    index = {}
    coords = []
    for j in range(m + 1):
        for i in range(m + 1):
            if i > n and j > n:
                continue
            index[(i, j)] = len(coords)
            coords.append((i / n - 1.0, j / n - 1.0))
    cells = [(i, j) for j in range(m) for i in range(m) if not (i >= n and j >= n)]
    tris = _structured_cells(index, cells)
    return Mesh(np.array(coords), tris, _boundary_from_edges(tris, len(coords)),
                DomainTag.LSHAPE)


# Crack layout on the unit square: a straight slit along the grid diagonal
# from CRACK_START to CRACK_TIP.
CRACK_START = (0.0, 0.0)
CRACK_TIP = (0.5, 0.5)
_JITTER = 0.12


def _cracked_divisions(target_vertices: int) -> int:
    """Even grid size whose cracked vertex count is closest to the target."""
    best = None
    for n in range(4, 4 * int(math.sqrt(target_vertices)) + 8, 2):
        count = (n + 1) ** 2 + n // 2 - 1
        if best is None or abs(count - target_vertices) < abs(best[1] - target_vertices):
            best = (n, count)
    return best[0]


def cracked_square_mesh(target_vertices: int, jitter: float = _JITTER) -> Mesh:
    """Unit square with a slit from ``CRACK_START`` to ``CRACK_TIP``.

    The base grid is structured with crack-conforming diagonals; interior
    vertices off the crack are then displaced by a deterministic
    pseudo-random amount (at most ``jitter`` times the grid spacing per
    coordinate) to break the regular pattern. Vertices strictly inside the
    slit are duplicated, one copy per flank; the tip is shared.
    """
    if isinstance(target_vertices, bool) or int(target_vertices) != target_vertices:
        raise MeshError("target_vertices must be an integer")
    target_vertices = int(target_vertices)
    if target_vertices < 20:
        raise MeshError("target_vertices must be at least 20 to resolve the crack")
    if not 0.0 <= jitter <= 0.2:
        raise MeshError("jitter must lie in [0, 0.2]")
    n = _cracked_divisions(target_vertices)
    mesh = unit_square_mesh(n)
    coords = np.array(mesh.vertices)
    tris = np.array(mesh.triangles)

    i_start = round(CRACK_START[0] * n)
    i_tip = round(CRACK_TIP[0] * n)
    crack = [j * (n + 1) + j for j in range(i_start + 1, i_tip)]
    tip = i_tip * (n + 1) + i_tip

    # slit-adjacent triangles below the diagonal get the duplicated copies
    centroids = coords[tris].mean(axis=1)
    below = centroids[:, 1] < centroids[:, 0]
    dup = {}
    for v in crack:
        dup[v] = len(coords) + len(dup)
    extra = coords[crack]
    for t in np.nonzero(below)[0]:
        for k in range(3):
            if tris[t, k] in dup:
                tris[t, k] = dup[tris[t, k]]
    coords = np.vstack([coords, extra])

    # deterministic jitter of interior vertices away from the slit line
    rng = np.random.default_rng(0x5EED + n)
    shift = rng.uniform(-jitter, jitter, size=coords.shape) / n
    x, y = coords[:, 0], coords[:, 1]
    eps = 1e-12
    on_boundary = (x < eps) | (x > 1 - eps) | (y < eps) | (y > 1 - eps)
    on_slit = np.abs(x - y) < eps
    movable = ~(on_boundary | on_slit)
    coords[movable] += shift[movable]

    boundary = _boundary_from_edges(tris, len(coords))
    out = Mesh(coords, tris, boundary, DomainTag.CRACKED)
    assert tip in set(out.boundary_vertices.tolist())
    return out


def build_mesh(domain: str, size: int) -> Mesh:
    """Dispatch on domain name: ``size`` is ``n`` or the target vertex count."""
    tag = DomainTag(domain)
    if tag is DomainTag.SQUARE:
        return unit_square_mesh(size)
    if tag is DomainTag.LSHAPE:
        return l_shaped_mesh(size)
    return cracked_square_mesh(size)


def domain_area(tag) -> float:
    return 3.0 if DomainTag(tag) is DomainTag.LSHAPE else 1.0


@dataclass(frozen=True)
class MeshStats:
    vertex_count: int
    triangle_count: int
    h_max: float
    min_angle: float

    def as_dict(self):
        return {"vertex_count": self.vertex_count, "triangle_count": self.triangle_count,
                "h_max": self.h_max, "min_angle": self.min_angle}


def mesh_stats(mesh: Mesh) -> MeshStats:
    """Counts, largest element diameter and smallest interior angle in degrees."""
    p = mesh.vertices[mesh.triangles]
    angles = []
    for k in range(3):
        a = p[:, (k + 1) % 3] - p[:, k]
        b = p[:, (k + 2) % 3] - p[:, k]
        cos = (a * b).sum(axis=1) / np.linalg.norm(a, axis=1) / np.linalg.norm(b, axis=1)
        angles.append(np.degrees(np.arccos(np.clip(cos, -1.0, 1.0))))
    return MeshStats(mesh.n_vertices, mesh.n_triangles, mesh.h_max,
                     float(np.min(angles)))


def mesh_to_dict(mesh: Mesh) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "domain_tag": mesh.domain_tag.value,
        "vertices": mesh.vertices.tolist(),
        "triangles": mesh.triangles.tolist(),
        "boundary_vertices": mesh.boundary_vertices.tolist(),
    }


def mesh_from_dict(data: dict) -> Mesh:
    if data.get("schema_version") != SCHEMA_VERSION:
        raise MeshError(f"unsupported mesh schema_version {data.get('schema_version')!r}")
    try:
        return Mesh(np.array(data["vertices"], dtype=float).reshape(-1, 2),
                    np.array(data["triangles"], dtype=np.int64).reshape(-1, 3),
                    np.array(data["boundary_vertices"], dtype=np.int64),
                    data["domain_tag"])
    except KeyError as exc:
        raise MeshError(f"mesh document missing key {exc}") from None


def write_mesh(mesh: Mesh, path) -> None:
    # json emits the shortest round-trip repr of each float
    Path(path).write_text(json.dumps(mesh_to_dict(mesh)) + "\n")


def read_mesh(path) -> Mesh:
    return mesh_from_dict(json.loads(Path(path).read_text()))
