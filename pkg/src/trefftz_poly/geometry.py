"""Polygon geometry, benchmark domains and Voronoi/Lloyd mesh generation.

Cells are built by clipping a convex enclosing polygon of the domain with the
perpendicular-bisector half-planes of neighbouring seeds.  Circular boundary
pieces are then cut away along chords whose end points lie exactly on the
circle, so every generated cell stays convex.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import kernels
from .exceptions import MeshError

log = logging.getLogger(__name__)

#: relative tolerance used for convexity checks (scaled by diameter squared)
CONVEX_EPS = 1e-12
#: node merge tolerance relative to the domain diameter
MERGE_RTOL = 1e-10


# ----------------------------------------------------------------------------
# Single polygons
# ----------------------------------------------------------------------------


def polygon_centroid_area(vertices) -> tuple[np.ndarray, float]:
    """Area centroid and signed area of a simple polygon (shoelace formula).

    Parameters
    ----------
    vertices : array_like, shape (n, 2)
        Polygon corners in counter-clockwise order.

    Returns
    -------
    centroid : ndarray, shape (2,)
    area : float
        Positive for counter-clockwise vertex order.
    """
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
        raise MeshError(f"polygon needs at least 3 vertices, got shape {v.shape}")
    origin = v[0]
    p = v - origin
    q = np.roll(p, -1, axis=0)
    cross = p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]
    twice_area = cross.sum()
    if twice_area == 0.0:
        return origin + p.mean(axis=0), 0.0
    cx = ((p[:, 0] + q[:, 0]) * cross).sum() / (3.0 * twice_area)
    cy = ((p[:, 1] + q[:, 1]) * cross).sum() / (3.0 * twice_area)
    return origin + np.array([cx, cy]), 0.5 * twice_area


def polygon_area(vertices) -> float:
    return polygon_centroid_area(vertices)[1]


def polygon_diameter(vertices) -> float:
    v = np.asarray(vertices, dtype=float)
    d = v[:, None, :] - v[None, :, :]
    return float(np.sqrt((d**2).sum(axis=-1)).max())


def polygon_perimeter(vertices) -> float:
    v = np.asarray(vertices, dtype=float)
    return float(np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1).sum())


def is_convex(vertices, eps: float = CONVEX_EPS) -> bool:
    """True if every turn is a left turn up to ``eps * diameter**2``."""
    v = np.asarray(vertices, dtype=float)
    e = np.roll(v, -1, axis=0) - v
    en = np.roll(e, -1, axis=0)
    cross = e[:, 0] * en[:, 1] - e[:, 1] * en[:, 0]
    return bool(np.all(cross >= -eps * polygon_diameter(v) ** 2))


def polygon_second_moment(vertices, point) -> float:
    """Polar moment ``int |x - point|^2 dA`` of a CCW polygon."""
    v = np.asarray(vertices, dtype=float) - np.asarray(point, dtype=float)
    w = np.roll(v, -1, axis=0)
    cross = v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]
    s = (
        v[:, 0] ** 2 + v[:, 0] * w[:, 0] + w[:, 0] ** 2
        + v[:, 1] ** 2 + v[:, 1] * w[:, 1] + w[:, 1] ** 2
    )
    return float((cross * s).sum() / 12.0)


def point_in_convex_polygon(vertices, points, tol: float = 0.0) -> np.ndarray:
    """Vectorised inside test for a CCW convex polygon (boundary counts as inside)."""
    v = np.asarray(vertices, dtype=float)
    p = np.atleast_2d(np.asarray(points, dtype=float))
    e = np.roll(v, -1, axis=0) - v
    rel = p[:, None, :] - v[None, :, :]
    cross = e[None, :, 0] * rel[:, :, 1] - e[None, :, 1] * rel[:, :, 0]
    return np.all(cross >= -tol, axis=1)


# ----------------------------------------------------------------------------
# Domains
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class Arc:
    """Circular boundary piece.

    ``keep`` is ``"outside"`` for a hole (material outside the circle) and
    ``"inside"`` for a convex outer boundary.
    """

    center: tuple[float, float]
    radius: float
    keep: str
    marker: str

    def level(self, pts: np.ndarray) -> np.ndarray:
        """Positive where material is kept, negative where it is cut away."""
        d2 = ((pts - np.asarray(self.center)) ** 2).sum(axis=-1) - self.radius**2
        return d2 if self.keep == "outside" else -d2

    def project(self, pts: np.ndarray) -> np.ndarray:
        c = np.asarray(self.center)
        d = pts - c
        r = np.linalg.norm(d, axis=-1, keepdims=True)
        return c + self.radius * d / r


class Domain:
    """Benchmark domain: convex enclosing polygon plus circular cut-outs."""

    kind = "domain"
    arcs: tuple[Arc, ...] = ()

    def box(self) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    @property
    def area(self) -> float:  # pragma: no cover - abstract
        raise NotImplementedError

    @property
    def diameter(self) -> float:
        return polygon_diameter(self.box())

    def signed_distance(self, pts) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def contains(self, pts, margin: float = 0.0) -> np.ndarray:
        """Strict interior test, optionally shrunk by ``margin``."""
        return self.signed_distance(np.atleast_2d(pts)) < -margin

    def lines(self) -> list[tuple[np.ndarray, np.ndarray, str]]:
        """Straight boundary pieces as ``(point, unit normal, marker)``."""
        return []

    def edge_marker(self, p, q) -> str | None:
        """Marker of the domain boundary containing segment ``p``-``q``."""
        tol = 1e-8 * self.diameter
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        for point, normal, marker in self.lines():
            if abs(np.dot(p - point, normal)) < tol and abs(np.dot(q - point, normal)) < tol:
                return marker
        for arc in self.arcs:
            c = np.asarray(arc.center)
            if (
                abs(np.linalg.norm(p - c) - arc.radius) < tol
                and abs(np.linalg.norm(q - c) - arc.radius) < tol
            ):
                return arc.marker
        return None

    def pieces_at(self, p) -> frozenset[str]:
        """Markers of every boundary piece passing through point ``p``."""
        tol = 1e-8 * self.diameter
        p = np.asarray(p, dtype=float)
        out = {m for point, normal, m in self.lines() if abs(np.dot(p - point, normal)) < tol}
        out |= {
            a.marker for a in self.arcs
            if abs(np.linalg.norm(p - np.asarray(a.center)) - a.radius) < tol
        }
        return frozenset(out)

    def snap(self, p, pieces) -> np.ndarray:
        """Project ``p`` onto the boundary pieces named in ``pieces``."""
        p = np.asarray(p, dtype=float).copy()
        for point, normal, m in self.lines():
            if m in pieces:
                p -= np.dot(p - point, normal) * normal
        for arc in self.arcs:
            if arc.marker in pieces:
                p = arc.project(p[None])[0]
        return p

    @property
    def markers(self) -> set[str]:
        return {m for _, _, m in self.lines()} | {a.marker for a in self.arcs}

    def describe(self) -> str:
        return self.kind


@dataclass(frozen=True)
class Rectangle(Domain):
    """Axis-aligned rectangle ``[x0, x0 + width] x [y0, y0 + height]``."""

    width: float = 1.0
    height: float = 1.0
    x0: float = 0.0
    y0: float = 0.0
    kind = "rectangle"

    def box(self):
        x0, y0, x1, y1 = self.x0, self.y0, self.x0 + self.width, self.y0 + self.height
        return np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]], dtype=float)

    @property
    def area(self):
        return self.width * self.height

    def signed_distance(self, pts):
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        c = np.array([self.x0 + 0.5 * self.width, self.y0 + 0.5 * self.height])
        half = np.array([0.5 * self.width, 0.5 * self.height])
        d = np.abs(p - c) - half
        outside = np.linalg.norm(np.maximum(d, 0.0), axis=1)
        inside = np.minimum(d.max(axis=1), 0.0)
        return outside + inside

    def lines(self):
        x1, y1 = self.x0 + self.width, self.y0 + self.height
        return [
            (np.array([self.x0, self.y0]), np.array([1.0, 0.0]), "left"),
            (np.array([x1, self.y0]), np.array([1.0, 0.0]), "right"),
            (np.array([self.x0, self.y0]), np.array([0.0, 1.0]), "bottom"),
            (np.array([self.x0, y1]), np.array([0.0, 1.0]), "top"),
        ]

    def describe(self):
        return f"rect:{self.width:g}x{self.height:g}@{self.x0:g},{self.y0:g}"


@dataclass(frozen=True)
class QuarterPlateWithHole(Domain):
    """Square ``[0, side]^2`` minus the disk of ``hole_radius`` at the origin."""

    side: float = 5.0
    hole_radius: float = 1.0
    kind = "quarter_plate_with_hole"

    def __post_init__(self):
        if not 0.0 < self.hole_radius < self.side:
            raise MeshError("hole radius must lie in (0, side)")

    @property
    def arcs(self):
        return (Arc((0.0, 0.0), self.hole_radius, "outside", "hole"),)

    def box(self):
        s = self.side
        return np.array([[0.0, 0.0], [s, 0.0], [s, s], [0.0, s]])

    @property
    def area(self):
        return self.side**2 - 0.25 * np.pi * self.hole_radius**2

    def signed_distance(self, pts):
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        box = Rectangle(self.side, self.side).signed_distance(p)
        return np.maximum(box, self.hole_radius - np.linalg.norm(p, axis=1))

    def lines(self):
        s = self.side
        return [
            (np.array([0.0, 0.0]), np.array([1.0, 0.0]), "symmetry_x"),
            (np.array([0.0, 0.0]), np.array([0.0, 1.0]), "symmetry_y"),
            (np.array([s, 0.0]), np.array([1.0, 0.0]), "right"),
            (np.array([0.0, s]), np.array([0.0, 1.0]), "top"),
        ]

    def describe(self):
        return f"plate_hole:{self.side:g},{self.hole_radius:g}"


@dataclass(frozen=True)
class QuarterAnnulus(Domain):
    """First-quadrant ring ``r_inner <= r <= r_outer``.

    The straight end on ``x = 0`` is marked ``fixed`` and the one on ``y = 0``
    is marked ``loaded``.
    """

    r_inner: float = 1.0
    r_outer: float = 2.0
    kind = "quarter_annulus"

    def __post_init__(self):
        if not 0.0 < self.r_inner < self.r_outer:
            raise MeshError("need 0 < r_inner < r_outer")

    @property
    def arcs(self):
        return (
            Arc((0.0, 0.0), self.r_inner, "outside", "inner"),
            Arc((0.0, 0.0), self.r_outer, "inside", "outer"),
        )

    def box(self):
        # polygon circumscribing the outer arc, closed by the inner chord
        nseg = 16
        ang = np.linspace(0.0, 0.5 * np.pi, nseg + 1)
        r_c = self.r_outer / np.cos(0.25 * np.pi / nseg)
        mid = 0.5 * (ang[:-1] + ang[1:])
        outer = np.column_stack([r_c * np.cos(mid), r_c * np.sin(mid)])
        b, a = self.r_outer, self.r_inner
        return np.vstack([[a, 0.0], [b, 0.0], outer, [0.0, b], [0.0, a]])

    @property
    def area(self):
        return 0.25 * np.pi * (self.r_outer**2 - self.r_inner**2)

    @property
    def diameter(self):
        return float(np.hypot(self.r_outer, self.r_outer))

    def signed_distance(self, pts):
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        r = np.linalg.norm(p, axis=1)
        return np.max(
            np.stack([-p[:, 0], -p[:, 1], r - self.r_outer, self.r_inner - r]), axis=0
        )

    def lines(self):
        return [
            (np.array([0.0, 0.0]), np.array([1.0, 0.0]), "fixed"),
            (np.array([0.0, 0.0]), np.array([0.0, 1.0]), "loaded"),
        ]

    def describe(self):
        return f"annulus:{self.r_inner:g},{self.r_outer:g}"


def parse_domain(text: str) -> Domain:
    """Parse ``rect:LxD[@x0,y0]``, ``plate_hole:side,radius`` or ``annulus:ri,ro``.

    Without ``@x0,y0`` a rectangle spans ``[0, L] x [-D/2, D/2]`` (beam axis on x).
    """
    try:
        kind, _, args = text.partition(":")
        if kind in ("rect", "rectangle"):
            dims, _, origin = args.partition("@")
            w, h = (float(s) for s in dims.lower().split("x"))
            x0, y0 = (float(s) for s in origin.split(",")) if origin else (0.0, -0.5 * h)
            if w <= 0 or h <= 0:
                raise ValueError("non-positive size")
            return Rectangle(w, h, x0, y0)
        if kind in ("plate_hole", "quarter_plate_with_hole"):
            side, radius = (float(s) for s in args.split(",")) if args else (5.0, 1.0)
            return QuarterPlateWithHole(side, radius)
        if kind in ("annulus", "quarter_annulus"):
            ri, ro = (float(s) for s in args.split(",")) if args else (1.0, 2.0)
            return QuarterAnnulus(ri, ro)
    except (ValueError, MeshError) as exc:
        raise MeshError(f"bad domain spec {text!r}: {exc}") from exc
    raise MeshError(f"unknown domain kind in {text!r}")


# ----------------------------------------------------------------------------
# Meshes
# ----------------------------------------------------------------------------


@dataclass
class PolygonMesh:
    """Conforming mesh of convex polygons.

    Attributes
    ----------
    nodes : ndarray, shape (N, 2)
    cells : list of int ndarrays
        Counter-clockwise node indices of each cell.
    boundary_edges : list of (int, int, str)
        Boundary edges oriented as in their (single) owning cell.
    """

    nodes: np.ndarray
    cells: list
    boundary_edges: list = field(default_factory=list)

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float).reshape(-1, 2)
        self.cells = [np.asarray(c, dtype=np.int64) for c in self.cells]
        self.boundary_edges = [(int(a), int(b), str(m)) for a, b, m in self.boundary_edges]

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_dof(self) -> int:
        return 2 * self.n_nodes

    @property
    def markers(self) -> set[str]:
        return {m for _, _, m in self.boundary_edges}

    def cell_coords(self, i: int) -> np.ndarray:
        return self.nodes[self.cells[i]]

    def areas(self) -> np.ndarray:
        return np.array([polygon_area(self.cell_coords(i)) for i in range(self.n_cells)])

    def quality(self) -> np.ndarray:
        """Isoperimetric ratio ``4 pi A / P^2`` of every cell (1 for a disk)."""
        out = np.empty(self.n_cells)
        for i in range(self.n_cells):
            xy = self.cell_coords(i)
            out[i] = 4.0 * np.pi * polygon_area(xy) / polygon_perimeter(xy) ** 2
        return out

    def boundary_nodes(self, marker: str) -> np.ndarray:
        ids = [n for a, b, m in self.boundary_edges if m == marker for n in (a, b)]
        return np.unique(np.asarray(ids, dtype=np.int64))

    def marked_edges(self) -> dict[tuple[int, int], str]:
        return {(a, b): m for a, b, m in self.boundary_edges}

    def cell_boundary_edges(self) -> list[list[tuple[int, str]]]:
        """For each cell, ``(local edge index, marker)`` of its boundary edges."""
        lookup = self.marked_edges()
        out = []
        for cell in self.cells:
            nxt = np.roll(cell, -1)
            out.append(
                [(k, lookup[(int(a), int(b))]) for k, (a, b) in enumerate(zip(cell, nxt))
                 if (int(a), int(b)) in lookup]
            )
        return out

    def mesh_size(self, area: float | None = None) -> float:
        """``sqrt(area / n_cells)``, the mesh parameter used for rate fits."""
        total = self.areas().sum() if area is None else area
        return float(np.sqrt(total / self.n_cells))

    def validate(self, domain: Domain | None = None) -> None:
        """Raise :class:`MeshError` if any structural invariant is violated."""
        nn = self.n_nodes
        if nn == 0 or self.n_cells == 0:
            raise MeshError("empty mesh")
        bbox = np.ptp(self.nodes, axis=0)
        diam = float(np.hypot(*bbox))
        for i, cell in enumerate(self.cells):
            if len(cell) < 3:
                raise MeshError(f"cell {i} has {len(cell)} vertices")
            if cell.min() < 0 or cell.max() >= nn:
                raise MeshError(f"cell {i} references a node index outside [0, {nn})")
            if len(set(cell.tolist())) != len(cell):
                raise MeshError(f"cell {i} repeats a node")
            xy = self.nodes[cell]
            area = polygon_area(xy)
            if area <= 0.0:
                raise MeshError(f"cell {i} is not counter-clockwise (signed area {area:.3e})")
            if not is_convex(xy):
                raise MeshError(f"cell {i} is not convex")
        tree = cKDTree(self.nodes)
        dup = tree.query_pairs(1e-12 * diam)
        if dup:
            a, b = sorted(dup)[0]
            raise MeshError(f"duplicate nodes {a} and {b}")
        count: dict[tuple[int, int], int] = {}
        for cell in self.cells:
            for a, b in zip(cell.tolist(), np.roll(cell, -1).tolist()):
                key = (min(a, b), max(a, b))
                count[key] = count.get(key, 0) + 1
        if any(c > 2 for c in count.values()):
            raise MeshError("an edge is shared by more than two cells")
        free = {k for k, c in count.items() if c == 1}
        listed = set()
        for a, b, m in self.boundary_edges:
            key = (min(a, b), max(a, b))
            if count.get(key) != 1:
                raise MeshError(f"boundary edge ({a}, {b}, {m}) does not belong to exactly one cell")
            listed.add(key)
        if self.boundary_edges and free != listed:
            raise MeshError(f"{len(free - listed)} unmatched free edges (non-conforming mesh)")
        if domain is not None:
            target = tiled_area(self, domain)
            total = self.areas().sum()
            if abs(total - target) > 1e-8 * target:
                raise MeshError(f"cells cover area {total!r}, expected {target!r}")


def tiled_area(mesh: PolygonMesh, domain: Domain) -> float:
    """Area a conforming mesh of ``domain`` must cover.

    Equals ``domain.area`` corrected by the circular segments between each
    arc-boundary chord and its arc.
    """
    area = domain.area
    for a, b, m in mesh.boundary_edges:
        for arc in domain.arcs:
            if arc.marker == m:
                chord = np.linalg.norm(mesh.nodes[b] - mesh.nodes[a])
                half = np.arcsin(min(1.0, 0.5 * chord / arc.radius))
                seg = 0.5 * arc.radius**2 * (2.0 * half - np.sin(2.0 * half))
                area += seg if arc.keep == "outside" else -seg
    return area


# ----------------------------------------------------------------------------
# Voronoi cells and Lloyd iteration
# ----------------------------------------------------------------------------


def _check_seeds(seeds: np.ndarray, domain: Domain) -> None:
    if seeds.ndim != 2 or seeds.shape[1] != 2 or len(seeds) == 0:
        raise MeshError("need at least one seed given as an (n, 2) array")
    if not np.all(np.isfinite(seeds)):
        raise MeshError("non-finite seed coordinates")
    inside = domain.contains(seeds)
    if not inside.all():
        bad = int(np.flatnonzero(~inside)[0])
        raise MeshError(f"seed {bad} at {seeds[bad].tolist()} is not inside the domain")
    pairs = cKDTree(seeds).query_pairs(1e-12 * domain.diameter)
    if pairs:
        a, b = sorted(pairs)[0]
        raise MeshError(f"seeds {a} and {b} coincide")


def _clip_to_arc(poly: np.ndarray, arc: Arc, tol: float) -> np.ndarray:
    """Cut the part of a convex polygon beyond ``arc`` away along chords."""
    g = arc.level(poly)
    if np.all(g >= 0.0):
        # an edge grazing a hole is left as is (its chord is the edge itself)
        return poly
    c = np.asarray(arc.center)
    out = []
    n = len(poly)
    for k in range(n):
        a, b = poly[k - 1], poly[k]
        ga, gb = g[k - 1], g[k]
        d = b - a
        qa = d @ d
        qb = 2.0 * (a - c) @ d
        qc = (a - c) @ (a - c) - arc.radius**2
        disc = qb * qb - 4.0 * qa * qc
        roots = []
        if qa > 0.0:
            # tangent edges give disc ~ 0 of either sign
            s = np.sqrt(max(disc, 0.0))
            roots = sorted(((-qb - s) / (2 * qa), (-qb + s) / (2 * qa)))
        if ga >= 0.0 and gb < 0.0:
            t = min(max(_pick_root(roots), 0.0), 1.0)
            out.append(a + t * d)
        elif ga < 0.0 and gb >= 0.0:
            t = min(max(_pick_root(roots), 0.0), 1.0)
            out.append(a + t * d)
        elif ga < 0.0 and gb < 0.0 and disc > 0.0:
            inner = [t for t in roots if 0.0 < t < 1.0]
            if len(inner) == 2:
                out.extend(a + t * d for t in inner)
        if gb >= 0.0:
            out.append(b)
    if len(out) < 3:
        return np.empty((0, 2))
    res = np.array(out)
    on_arc = np.abs(np.linalg.norm(res - c, axis=1) - arc.radius) < 1e3 * tol
    res[on_arc] = arc.project(res[on_arc])
    keep = np.linalg.norm(res - np.roll(res, 1, axis=0), axis=1) > tol
    return res[keep]


def _pick_root(roots) -> float:
    if not roots:
        return 0.0
    return min(roots, key=lambda t: abs(t - min(max(t, 0.0), 1.0)))


def raw_cells(seeds, domain: Domain) -> list[np.ndarray]:
    """Vertex arrays of the clipped Voronoi cell of every seed (seed order)."""
    seeds = np.ascontiguousarray(seeds, dtype=float)
    n = len(seeds)
    box = np.ascontiguousarray(domain.box(), dtype=float)
    tree = cKDTree(seeds)
    polys: list = [None] * n
    rows = np.arange(n, dtype=np.int64)
    k = min(n - 1, 24)
    while len(rows):
        if k > 0:
            dist, idx = tree.query(seeds[rows], k + 1)
            dist = np.ascontiguousarray(np.atleast_2d(dist)[:, 1:])
            idx = np.ascontiguousarray(np.atleast_2d(idx)[:, 1:], dtype=np.int64)
        else:
            dist = np.zeros((len(rows), 0))
            idx = np.zeros((len(rows), 0), dtype=np.int64)
        verts, offsets, complete = kernels.clip_cells(seeds, box, rows, idx, dist)
        for r, i in enumerate(rows):
            if complete[r]:
                polys[i] = verts[offsets[r]:offsets[r + 1]]
        rows = np.ascontiguousarray(rows[complete == 0])
        k = min(n - 1, 2 * k)
    tol = 1e-13 * domain.diameter
    for arc in domain.arcs:
        sizes = [len(p) for p in polys]
        flat = np.concatenate(polys) if sum(sizes) else np.empty((0, 2))
        bad = arc.level(flat) < 0.0
        hit = np.add.reduceat(bad, np.cumsum([0] + sizes[:-1])) if len(flat) else []
        for i in np.flatnonzero(np.asarray(hit) > 0):
            if sizes[i]:
                polys[i] = _clip_to_arc(polys[i], arc, tol)
    return polys


def _assemble(cells: Sequence[np.ndarray], domain: Domain) -> PolygonMesh:
    diam = domain.diameter
    sizes = [len(c) for c in cells]
    for i, n in enumerate(sizes):
        if n < 3:
            raise MeshError(f"cell {i} is empty after clipping to the domain")
    pts = np.concatenate(cells, axis=0)
    # union-find over near-coincident vertices
    parent = np.arange(len(pts))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a, b in cKDTree(pts).query_pairs(MERGE_RTOL * diam):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    roots = np.array([find(i) for i in range(len(pts))])
    uniq, node_of = np.unique(roots, return_inverse=True)
    bounds = np.cumsum([0] + sizes)
    return _finish(pts[uniq], [node_of[bounds[i]:bounds[i + 1]] for i in range(len(cells))], domain)


def _finish(nodes: np.ndarray, cells: list, domain: Domain) -> PolygonMesh:
    """Drop repeated/unused nodes and rebuild the marked boundary edges."""
    out_cells = []
    for i, ids in enumerate(cells):
        ids = np.asarray(ids)
        ids = ids[ids != np.roll(ids, 1)]
        if len(ids) < 3:
            raise MeshError(f"cell {i} collapsed to {len(ids)} nodes")
        out_cells.append(ids)
    used, inv = np.unique(np.concatenate(out_cells), return_inverse=True)
    nodes = nodes[used]
    bounds = np.cumsum([0] + [len(c) for c in out_cells])
    out_cells = [inv[bounds[i]:bounds[i + 1]] for i in range(len(out_cells))]
    owners: dict[tuple[int, int], list] = {}
    for cell in out_cells:
        for a, b in zip(cell.tolist(), np.roll(cell, -1).tolist()):
            owners.setdefault((min(a, b), max(a, b)), []).append((a, b))
    boundary = []
    for pairs in owners.values():
        if len(pairs) == 1:
            a, b = pairs[0]
            marker = domain.edge_marker(nodes[a], nodes[b])
            if marker is None:
                raise MeshError(
                    f"free edge {nodes[a].tolist()}-{nodes[b].tolist()} is not on the domain boundary"
                )
            boundary.append((a, b, marker))
    boundary.sort()
    return PolygonMesh(nodes, out_cells, boundary)


def collapse_short_edges(mesh: PolygonMesh, domain: Domain, rtol: float = 1e-2) -> PolygonMesh:
    """Merge the end nodes of edges shorter than ``rtol * sqrt(area / n_cells)``.

    A boundary node absorbs an interior neighbour; two nodes on the same
    boundary pieces merge at their (projected) midpoint; nodes on different
    pieces are never merged.  Cells that would lose convexity keep the edge.
    """
    if rtol <= 0.0:
        return mesh
    hmin = rtol * np.sqrt(domain.area / mesh.n_cells)
    nodes = mesh.nodes.copy()
    cells = [c.copy() for c in mesh.cells]
    for _ in range(10):
        edges = {}
        for cell in cells:
            for a, b in zip(cell.tolist(), np.roll(cell, -1).tolist()):
                edges[(min(a, b), max(a, b))] = np.linalg.norm(nodes[a] - nodes[b])
        short = sorted((length, e) for e, length in edges.items() if length < hmin)
        if not short:
            break
        target = np.arange(len(nodes))
        touched: set[int] = set()
        for _, (a, b) in short:
            if a in touched or b in touched:
                continue
            pa, pb = domain.pieces_at(nodes[a]), domain.pieces_at(nodes[b])
            if pa == pb:
                new = domain.snap(0.5 * (nodes[a] + nodes[b]), pa)
            elif pa > pb:
                new = nodes[a]
            elif pb > pa:
                new = nodes[b]
            else:
                continue
            trial = nodes.copy()
            trial[a] = trial[b] = new
            ok = all(
                is_convex(trial[_dedupe(np.where(c == b, a, c))])
                for c in cells if a in c or b in c
            )
            if not ok:
                continue
            nodes = trial
            target[b] = a
            touched.update((a, b))
        if not touched:
            break
        cells = [_dedupe(target[c]) for c in cells]
    return _finish(nodes, cells, domain)


def _dedupe(ids: np.ndarray) -> np.ndarray:
    return ids[ids != np.roll(ids, 1)]


def voronoi_cells(seeds, domain: Domain) -> PolygonMesh:
    """Voronoi mesh of ``domain`` generated by ``seeds`` (cell ``i`` <-> seed ``i``)."""
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
    _check_seeds(seeds, domain)
    return _assemble(raw_cells(seeds, domain), domain)


def _moments(cells: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    offsets = np.zeros(len(cells) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum([len(c) for c in cells])
    verts = np.ascontiguousarray(np.concatenate(cells, axis=0) if cells else np.empty((0, 2)))
    return kernels.polygon_moments(verts, offsets)


def cvt_energy(seeds, domain: Domain) -> float:
    """Sum over cells of ``int_{V_i} |x - p_i|^2 dx``."""
    seeds = np.asarray(seeds, dtype=float)
    return sum(
        polygon_second_moment(c, p) for c, p in zip(raw_cells(seeds, domain), seeds)
    )


def lloyd_iterate(seeds, domain: Domain, max_iters: int = 100, tol: float | None = None) -> np.ndarray:
    """Move every seed to its cell centroid until the largest step is below ``tol``.

    ``tol`` defaults to ``1e-6 * domain.diameter``.
    """
    seeds = np.atleast_2d(np.array(seeds, dtype=float))
    if max_iters <= 0:
        return seeds
    _check_seeds(seeds, domain)
    if tol is None:
        tol = 1e-6 * domain.diameter
    ref_area = domain.area / len(seeds)
    for it in range(max_iters):
        cells = raw_cells(seeds, domain)
        for i, c in enumerate(cells):
            if len(c) < 3:
                raise MeshError(f"Lloyd iteration {it}: cell {i} vanished")
        areas, cents = _moments(cells)
        bad = np.flatnonzero(areas <= 1e-14 * ref_area)
        if len(bad):
            raise MeshError(
                f"Lloyd iteration {it}: cell {int(bad[0])} has zero area "
                f"(seed {seeds[bad[0]].tolist()})"
            )
        step = np.linalg.norm(cents - seeds, axis=1).max()
        seeds = cents
        if step < tol:
            log.debug("Lloyd converged after %d iterations (step %.3e)", it + 1, step)
            break
    return seeds


def random_seeds(domain: Domain, n: int, seed: int = 0) -> np.ndarray:
    """``n`` reproducible uniformly random points strictly inside ``domain``."""
    if n < 1:
        raise MeshError("need at least one seed")
    rng = np.random.default_rng(seed)
    box = domain.box()
    lo, hi = box.min(axis=0), box.max(axis=0)
    margin = 1e-6 * domain.diameter
    out = []
    have = 0
    while have < n:
        cand = rng.uniform(lo, hi, size=(max(2 * (n - have), 16), 2))
        cand = cand[domain.contains(cand, margin)]
        out.append(cand)
        have += len(cand)
    return np.concatenate(out)[:n]


def generate_mesh(domain: Domain, n_cells: int, seed: int = 0, lloyd_iters: int = 100,
                  tol: float | None = None, collapse_rtol: float = 1e-2) -> PolygonMesh:
    """Random seeds, Lloyd smoothing, Voronoi mesh, then short-edge cleanup."""
    if n_cells < 1:
        raise MeshError("n_cells must be positive")
    seeds = lloyd_iterate(random_seeds(domain, n_cells, seed), domain, lloyd_iters, tol)
    mesh = collapse_short_edges(voronoi_cells(seeds, domain), domain, collapse_rtol)
    mesh.validate(domain)
    return mesh
