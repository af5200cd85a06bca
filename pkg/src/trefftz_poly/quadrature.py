"""Gauss-Legendre segment rules, Dunavant triangle rules, polygon fan cubature."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .geometry import polygon_centroid_area


@dataclass(frozen=True)
class SegmentRule:
    """Rule on ``[-1, 1]``; exact for polynomials up to ``order``."""

    points: np.ndarray
    weights: np.ndarray
    order: int

    def on_unit_interval(self):
        """Nodes mapped to ``[0, 1]`` with weights summing to one."""
        return 0.5 * (self.points + 1.0), 0.5 * self.weights


@dataclass(frozen=True)
class TriangleRule:
    """Rule in barycentric coordinates with weights summing to one."""

    barycentric: np.ndarray
    weights: np.ndarray
    order: int


@lru_cache(maxsize=None)
def gauss_segment(n_points: int) -> SegmentRule:
    """``n_points``-point Gauss-Legendre rule (exact to degree ``2n - 1``)."""
    if not 1 <= int(n_points) <= 30 or int(n_points) != n_points:
        raise ValueError(f"n_points must be an integer in [1, 30], got {n_points}")
    x, w = np.polynomial.legendre.leggauss(int(n_points))
    x.setflags(write=False)
    w.setflags(write=False)
    return SegmentRule(x, w, 2 * int(n_points) - 1)


# Dunavant (1985) symmetric rules, 15 significant digits, weights normalised
# to the reference area.  Orbits: ("s3", w) centroid; ("s21", w, a) for the
# three permutations of (a, a, 1 - 2a); ("s111", w, a, b) for the six
# permutations of (a, b, 1 - a - b).  Exactness is checked by monomial sweeps
# in the test suite.
_DUNAVANT = {
    1: [("s3", 1.0)],
    2: [("s21", 1.0 / 3.0, 1.0 / 6.0)],
    3: [("s3", -0.5625), ("s21", 0.520833333333333, 0.2)],
    4: [
        ("s21", 0.223381589678011, 0.445948490915965),
        ("s21", 0.109951743655322, 0.091576213509771),
    ],
    5: [
        ("s3", 0.225),
        ("s21", 0.132394152788506, 0.470142064105115),
        ("s21", 0.125939180544827, 0.101286507323456),
    ],
    6: [
        ("s21", 0.116786275726379, 0.249286745170910),
        ("s21", 0.050844906370207, 0.063089014491502),
        ("s111", 0.082851075618374, 0.053145049844817, 0.310352451033784),
    ],
    7: [
        ("s3", -0.149570044467682),
        ("s21", 0.175615257433208, 0.260345966079040),
        ("s21", 0.053347235608838, 0.065130102902216),
        ("s111", 0.077113760890257, 0.048690315425316, 0.312865496004874),
    ],
    8: [
        ("s3", 0.144315607677787),
        ("s21", 0.095091634267285, 0.459292588292723),
        ("s21", 0.103217370534718, 0.170569307751760),
        ("s21", 0.032458497623198, 0.050547228317031),
        ("s111", 0.027230314174435, 0.008394777409958, 0.263112829634638),
    ],
}


@lru_cache(maxsize=None)
def dunavant_triangle(order: int) -> TriangleRule:
    """Dunavant rule of polynomial exactness ``order`` (1 to 8)."""
    if order not in _DUNAVANT:
        raise ValueError(f"Dunavant rule of order {order} not available (1-8)")
    bary, wts = [], []
    for orbit in _DUNAVANT[order]:
        kind, w = orbit[0], orbit[1]
        if kind == "s3":
            pts = [(1 / 3, 1 / 3, 1 / 3)]
        elif kind == "s21":
            a = orbit[2]
            c = 1.0 - 2.0 * a
            pts = [(a, a, c), (a, c, a), (c, a, a)]
        else:
            a, b = orbit[2], orbit[3]
            c = 1.0 - a - b
            pts = [(a, b, c), (b, a, c), (a, c, b), (c, a, b), (b, c, a), (c, b, a)]
        bary.extend(pts)
        wts.extend([w] * len(pts))
    bary = np.array(bary)
    wts = np.array(wts)
    bary.setflags(write=False)
    wts.setflags(write=False)
    return TriangleRule(bary, wts, order)


def triangle_points(tri, rule: TriangleRule):
    """Physical points and weights (including the area) of ``rule`` on ``tri``."""
    tri = np.asarray(tri, dtype=float)
    pts = rule.barycentric @ tri
    e1, e2 = tri[1] - tri[0], tri[2] - tri[0]
    area = 0.5 * (e1[0] * e2[1] - e1[1] * e2[0])
    return pts, rule.weights * area


def polygon_points(vertices, rule: TriangleRule):
    """Fan-triangulate a convex CCW polygon from its centroid and map ``rule``.

    Returns ``(points, weights, triangle_index)``; slivers with area below
    ``1e-14`` of the polygon area are skipped with a warning.
    """
    v = np.asarray(vertices, dtype=float)
    c, total = polygon_centroid_area(v)
    nxt = np.roll(v, -1, axis=0)
    e1 = v - c
    e2 = nxt - c
    areas = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    keep = areas >= 1e-14 * abs(total)
    if not keep.all():
        warnings.warn(f"skipping {np.count_nonzero(~keep)} degenerate fan triangle(s)")
    idx = np.flatnonzero(keep)
    lam = rule.barycentric
    # barycentric order (centroid, v_k, v_k+1)
    pts = (
        lam[None, :, 0, None] * c[None, None, :]
        + lam[None, :, 1, None] * v[idx, None, :]
        + lam[None, :, 2, None] * nxt[idx, None, :]
    )
    wts = rule.weights[None, :] * areas[idx, None]
    tri = np.repeat(idx, len(rule.weights))
    return pts.reshape(-1, 2), wts.reshape(-1), tri


def integrate_polygon(vertices, f, rule: TriangleRule | None = None):
    """Integrate ``f`` (vectorised over an ``(n, 2)`` array) over a convex polygon."""
    if rule is None:
        rule = dunavant_triangle(6)
    pts, wts, _ = polygon_points(vertices, rule)
    vals = np.asarray(f(pts), dtype=float)
    return np.tensordot(wts, vals, axes=(0, 0))
