"""Wachspress polygonal finite element (displacement-based baseline)."""
from __future__ import annotations

import numpy as np

from .exceptions import ElementError
from .geometry import polygon_diameter
from .ht_element import _check_polygon, element_load_traction
from .material import Material
from .quadrature import dunavant_triangle, polygon_points

VERTEX_TOL = 1e-12
STIFFNESS_ORDER = 6


def _tri_area(p, q, x):
    return 0.5 * ((q[..., 0] - p[..., 0]) * (x[..., 1] - p[..., 1])
                  - (q[..., 1] - p[..., 1]) * (x[..., 0] - p[..., 0]))


def wachspress_eval(vertices, points):
    """Wachspress shape values and gradients.

    Parameters
    ----------
    vertices : (n, 2) array_like
        Convex CCW polygon.
    points : (2,) or (P, 2) array_like
        Points in the closed polygon.

    Returns
    -------
    values : (P, n) ndarray
    gradients : (P, n, 2) ndarray
        On an edge the values are the linear 1D limit; gradients there are
        taken a relative ``1e-9`` diameter inside the polygon.
    """
    v = np.asarray(vertices, dtype=float)
    x = np.atleast_2d(np.asarray(points, dtype=float))
    n = len(v)
    diam = polygon_diameter(v)
    tol = VERTEX_TOL * diam
    nxt = np.roll(v, -1, axis=0)
    prv = np.roll(v, 1, axis=0)
    d = nxt - v
    L = np.hypot(d[:, 0], d[:, 1])
    # a[:, i] = A(v_i, v_{i+1}, x) = (L_i / 2) * distance of x from edge i
    a = _tri_area(v[None], nxt[None], x[:, None, :])
    dist = 2.0 * a / L
    if np.any(dist < -tol):
        bad = x[np.any(dist < -tol, axis=1)][0]
        raise ElementError(f"point {bad.tolist()} lies outside the polygon")
    on_edge = dist <= tol
    C = _tri_area(prv, v, nxt)
    vals = np.zeros((len(x), n))
    grads = np.zeros((len(x), n, 2))

    inside = ~on_edge.any(axis=1)
    if inside.any():
        ai = a[inside]
        ap = np.roll(ai, 1, axis=1)  # a_{i-1}
        w = C / (ap * ai)
        # grad A(p, q, x) = 0.5 * (-(q_y - p_y), q_x - p_x)
        ga = 0.5 * np.column_stack([-d[:, 1], d[:, 0]])
        gp = np.roll(ga, 1, axis=0)
        R = gp[None] / ap[..., None] + ga[None] / ai[..., None]
        gw = -w[..., None] * R
        W = w.sum(axis=1, keepdims=True)
        phi = w / W
        vals[inside] = phi
        grads[inside] = (gw - phi[..., None] * gw.sum(axis=1, keepdims=True)) / W[..., None]

    idx = np.flatnonzero(~inside)
    if idx.size:
        centroid = v.mean(axis=0)
        for p in idx:
            xp = x[p]
            dv = np.hypot(*(v - xp).T)
            k = int(np.argmin(dv))
            if dv[k] <= tol:
                vals[p, k] = 1.0
            else:
                e = int(np.flatnonzero(on_edge[p])[0])
                t = float(np.dot(xp - v[e], d[e]) / L[e] ** 2)
                vals[p, e] = 1.0 - t
                vals[p, (e + 1) % n] = t
            inner = xp + 1e-9 * (centroid - xp)
            grads[p] = wachspress_eval(v, inner)[1][0]
    return vals, grads


def strain_displacement(grads: np.ndarray) -> np.ndarray:
    """``B`` matrices ``(P, 3, 2n)`` from shape gradients ``(P, n, 2)``."""
    P, n, _ = grads.shape
    B = np.zeros((P, 3, 2 * n))
    B[:, 0, 0::2] = grads[:, :, 0]
    B[:, 1, 1::2] = grads[:, :, 1]
    B[:, 2, 0::2] = grads[:, :, 1]
    B[:, 2, 1::2] = grads[:, :, 0]
    return B


def boundary_gradient_moments(vertices) -> np.ndarray:
    """Exact ``int_boundary phi_i n dGamma`` per vertex, shape ``(n, 2)``."""
    v = np.asarray(vertices, dtype=float)
    d = np.roll(v, -1, axis=0) - v
    Ln = np.column_stack([d[:, 1], -d[:, 0]])  # length times outward normal
    return 0.5 * (Ln + np.roll(Ln, 1, axis=0))


def gradient_correction(vertices, weights, grads) -> np.ndarray:
    """Constant shift making the cubature of each gradient match its boundary integral.

    With the shift, ``sum_p w_p grad phi_i(x_p) = int_boundary phi_i n`` holds
    exactly, which restores the linear patch test under inexact cubature of
    the rational Wachspress gradients.  It vanishes when the rule is exact.
    """
    area = weights.sum()
    return (boundary_gradient_moments(vertices) - np.einsum("p,pid->id", weights, grads)) / area


def element_gradients(vertices, order: int = STIFFNESS_ORDER, consistent: bool = True):
    """Cubature points, weights and (optionally corrected) Wachspress gradients."""
    v = np.ascontiguousarray(vertices, dtype=float)
    pts, wts, _ = polygon_points(v, dunavant_triangle(order))
    _, grads = wachspress_eval(v, pts)
    shift = gradient_correction(v, wts, grads) if consistent else np.zeros((len(v), 2))
    return pts, wts, grads + shift[None], shift


def pfem_stiffness(vertices, material: Material, order: int = STIFFNESS_ORDER,
                   consistent: bool = True, label: str = "element") -> np.ndarray:
    """``K = int B^T D B`` by Dunavant rule on the centroid fan.

    ``consistent=True`` applies :func:`gradient_correction`; ``False`` gives
    the uncorrected element.
    """
    v = np.ascontiguousarray(vertices, dtype=float)
    _check_polygon(v, label)
    _, wts, grads, _ = element_gradients(v, order, consistent)
    B = strain_displacement(grads)
    K = np.einsum("p,pai,ab,pbj->ij", wts, B, material.D, B)
    return 0.5 * (K + K.T)


class PfemField:
    """Wachspress interpolant of nodal displacements inside one element."""

    def __init__(self, vertices, q, material: Material, consistent: bool = True,
                 order: int = STIFFNESS_ORDER):
        self.vertices = np.asarray(vertices, dtype=float)
        self.q = np.asarray(q, dtype=float).reshape(-1, 2)
        self.material = material
        if consistent:
            self.shift = element_gradients(self.vertices, order, True)[3]
        else:
            self.shift = np.zeros((len(self.vertices), 2))

    def displacement(self, points) -> np.ndarray:
        phi, _ = wachspress_eval(self.vertices, points)
        return phi @ self.q

    def strain(self, points) -> np.ndarray:
        _, g = wachspress_eval(self.vertices, points)
        return strain_displacement(g + self.shift[None]) @ self.q.reshape(-1)

    def stress(self, points) -> np.ndarray:
        return self.strain(points) @ self.material.D.T


def pfem_load_traction(vertices, marked_edges, marker: str, traction_fn,
                       n_points: int = 8) -> np.ndarray:
    """Same as :func:`element_load_traction`; Wachspress is linear on edges."""
    return element_load_traction(vertices, marked_edges, marker, traction_fn, n_points)
