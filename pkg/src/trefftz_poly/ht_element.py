"""Hybrid Trefftz polygonal element with a linear displacement frame.

All integrals are over the element boundary:

    H = sum_edges int Q^T N  dGamma        (m x m)
    G = sum_edges int Q^T N~ dGamma        (m x N_dof)
    K = G^T H^-1 G

with ``N~`` the linear frame along each edge.  Interior coefficients follow
from ``H c = G q``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .exceptions import ElementError
from .geometry import is_convex, polygon_centroid_area, polygon_diameter
from .material import Material
from .quadrature import gauss_segment
from .trefftz import TrefftzModeSet, default_ordering

RANK_RTOL = 1e-10
RETRY_STEP = 4
MAX_RETRIES = 3
LOAD_POINTS = 8


def min_mode_count(n_nodes: int) -> int:
    """Smallest admissible mode count, ``N_dof - 1``."""
    return 2 * n_nodes - 1


def _edge_frames(verts: np.ndarray, rule):
    """Quadrature points, weights (times length), frame values and normals per edge."""
    t, w = rule.on_unit_interval()
    a = verts
    b = np.roll(verts, -1, axis=0)
    d = b - a
    L = np.hypot(d[:, 0], d[:, 1])
    nrm = np.column_stack([d[:, 1], -d[:, 0]]) / L[:, None]
    pts = a[:, None, :] + t[None, :, None] * d[:, None, :]
    wts = w[None, :] * L[:, None]
    return pts, wts, t, nrm


def _check_polygon(verts: np.ndarray, label: str):
    if verts.ndim != 2 or verts.shape[1] != 2 or len(verts) < 3:
        raise ElementError(f"{label}: need at least 3 vertices")
    if not np.all(np.isfinite(verts)):
        raise ElementError(f"{label}: non-finite coordinates")
    _, area = polygon_centroid_area(verts)
    if area <= 0.0:
        raise ElementError(f"{label}: polygon is not counter-clockwise")
    if not is_convex(verts):
        raise ElementError(f"{label}: polygon is not convex")


def boundary_matrices(verts: np.ndarray, modes: TrefftzModeSet, n_points: int | None = None):
    """``(H, G)`` by Gauss-Legendre on every edge (default ``k_max + 2`` points)."""
    if n_points is None:
        n_points = modes.k_max + 2
    pts, wts, t, nrm = _edge_frames(verts, gauss_segment(n_points))
    n = len(verts)
    P = pts.shape[1]
    ev = modes.evaluate(pts.reshape(-1, 2), np.repeat(nrm, P, axis=0))
    Q = ev.traction.reshape(n, P, 2, -1)
    N = ev.displacement.reshape(n, P, 2, -1)
    H = np.einsum("ep,epci,epcj->ij", wts, Q, N)
    # frame: (1 - t) at the edge start, t at its end
    Qa = np.einsum("ep,p,epci->eci", wts, 1.0 - t, Q)
    Qb = np.einsum("ep,p,epci->eci", wts, t, Q)
    G = np.zeros((modes.m, 2 * n))
    for e in range(n):
        f = (e + 1) % n
        G[:, 2 * e:2 * e + 2] += Qa[e].T
        G[:, 2 * f:2 * f + 2] += Qb[e].T
    return H, G


@dataclass
class ElementSystem:
    """Condensed HT element.

    Attributes
    ----------
    vertices : (n, 2) ndarray
    modes : TrefftzModeSet
    H, Gmat, K : ndarray
    chol : ndarray
        Lower Cholesky factor of the symmetrised ``H``.
    h_asymmetry : float
        ``||H - H^T|| / ||H||``.
    h_eig_min, h_eig_max : float
    retries : int
    """

    vertices: np.ndarray
    modes: TrefftzModeSet
    H: np.ndarray
    Gmat: np.ndarray
    K: np.ndarray
    chol: np.ndarray
    h_asymmetry: float
    h_eig_min: float
    h_eig_max: float
    retries: int = 0

    @property
    def m(self) -> int:
        return self.modes.m

    @property
    def n_dof(self) -> int:
        return 2 * len(self.vertices)

    @property
    def h_rank(self) -> int:
        ev = linalg.eigvalsh(0.5 * (self.H + self.H.T))
        return int(np.count_nonzero(ev > RANK_RTOL * ev.max()))

    @property
    def h_condition(self) -> float:
        return self.h_eig_max / self.h_eig_min

    def coefficients(self, q) -> np.ndarray:
        """Interior coefficients ``c = H^-1 G q``."""
        q = np.asarray(q, dtype=float)
        if q.shape != (self.n_dof,):
            raise ValueError(f"expected {self.n_dof} nodal values, got shape {q.shape}")
        if not np.all(np.isfinite(q)):
            raise ValueError("nodal displacements contain NaN or inf")
        return linalg.cho_solve((self.chol, True), self.Gmat @ q)

    def strain_energy(self, q) -> float:
        c = self.coefficients(q)
        return 0.5 * float(c @ self.H @ c)


def build_element(vertices, material: Material, m: int | None = None,
                  n_points: int | None = None, max_retries: int = MAX_RETRIES,
                  label: str = "element") -> ElementSystem:
    """Build ``H``, ``G`` and ``K`` for a convex CCW polygon.

    ``m`` defaults to ``N_dof - 1``.  When ``H`` has an eigenvalue below
    ``1e-10`` of its largest, four more modes are added and the build repeats.
    """
    verts = np.ascontiguousarray(vertices, dtype=float)
    _check_polygon(verts, label)
    centroid, _ = polygon_centroid_area(verts)
    scale = 0.5 * polygon_diameter(verts)
    if m is None:
        m = min_mode_count(len(verts))
    for attempt in range(max_retries + 1):
        modes = TrefftzModeSet(material, ordering=default_ordering(m), origin=centroid, scale=scale)
        H, G = boundary_matrices(verts, modes, n_points)
        nH = np.linalg.norm(H)
        asym = float(np.linalg.norm(H - H.T) / nH)
        Hs = 0.5 * (H + H.T)
        ev = linalg.eigvalsh(Hs)
        if ev[0] > RANK_RTOL * ev[-1]:
            try:
                L = linalg.cholesky(Hs, lower=True)
            except linalg.LinAlgError:
                pass
            else:
                Y = linalg.solve_triangular(L, G, lower=True)
                K = Y.T @ Y
                return ElementSystem(verts, modes, H, G, K, L, asym, float(ev[0]),
                                     float(ev[-1]), attempt)
        m += RETRY_STEP
    raise ElementError(
        f"{label}: H rank-deficient after {max_retries} retries "
        f"(m={m - RETRY_STEP}, eig ratio {ev[0] / ev[-1]:.3e}); vertices={verts.tolist()}"
    )


def rigid_fit(verts: np.ndarray, modes: TrefftzModeSet, c: np.ndarray, q: np.ndarray,
              n_points: int | None = None) -> np.ndarray:
    """Least-squares ``(a, b, omega)`` of ``q_frame - N c`` on the boundary.

    The Trefftz modes carry no translation or rotation, so the interior
    displacement is ``N c`` plus this rigid motion about the mode origin.
    """
    if n_points is None:
        n_points = modes.k_max + 2
    pts, wts, t, _ = _edge_frames(verts, gauss_segment(n_points))
    n = len(verts)
    qn = q.reshape(n, 2)
    frame = (1.0 - t)[None, :, None] * qn[:, None, :] + t[None, :, None] * np.roll(qn, -1, axis=0)[:, None, :]
    x = pts.reshape(-1, 2)
    r = frame.reshape(-1, 2) - modes.displacement(x) @ c
    w = wts.reshape(-1)
    dx = x - modes.origin
    # rows: u = a - omega * dy, v = b + omega * dx
    A = np.zeros((len(x), 2, 3))
    A[:, 0, 0] = 1.0
    A[:, 0, 2] = -dx[:, 1]
    A[:, 1, 1] = 1.0
    A[:, 1, 2] = dx[:, 0]
    M = np.einsum("p,pci,pcj->ij", w, A, A)
    rhs = np.einsum("p,pci,pc->i", w, A, r)
    return np.linalg.solve(M, rhs)


@dataclass
class InteriorField:
    """Trefftz expansion ``u = N c + rigid`` and ``sigma = T c`` inside one element."""

    modes: TrefftzModeSet
    c: np.ndarray
    rigid: np.ndarray

    def displacement(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        u = self.modes.displacement(p) @ self.c
        d = p - self.modes.origin
        u[:, 0] += self.rigid[0] - self.rigid[2] * d[:, 1]
        u[:, 1] += self.rigid[1] + self.rigid[2] * d[:, 0]
        return u

    def stress(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return self.modes.stress(p) @ self.c

    def strain(self, points) -> np.ndarray:
        return self.stress(points) @ self.modes.material.compliance.T


def recover_interior(system: ElementSystem, q) -> InteriorField:
    """Interior field from nodal frame displacements ``q`` (``N_dof`` vector)."""
    c = system.coefficients(q)
    rigid = rigid_fit(system.vertices, system.modes, c, np.asarray(q, dtype=float))
    return InteriorField(system.modes, c, rigid)


def element_load_traction(vertices, marked_edges, marker: str, traction_fn,
                          n_points: int = LOAD_POINTS) -> np.ndarray:
    """Consistent nodal forces ``int N~^T t dGamma`` over edges carrying ``marker``.

    Parameters
    ----------
    vertices : (n, 2) array_like
    marked_edges : iterable of (local_edge_index, marker)
        Edge ``k`` joins vertex ``k`` to vertex ``k + 1``.
    marker : str
    traction_fn : callable
        ``traction_fn(points, normals) -> (P, 2)`` with outward unit normals.
    """
    verts = np.asarray(vertices, dtype=float)
    n = len(verts)
    f = np.zeros(2 * n)
    edges = [k for k, mk in marked_edges if mk == marker]
    if not edges:
        return f
    t, w = gauss_segment(n_points).on_unit_interval()
    for k in edges:
        a, b = verts[k], verts[(k + 1) % n]
        d = b - a
        L = float(np.hypot(*d))
        nrm = np.array([d[1], -d[0]]) / L
        pts = a + t[:, None] * d
        tr = np.asarray(traction_fn(pts, np.broadcast_to(nrm, pts.shape)), dtype=float)
        j = (k + 1) % n
        f[2 * k:2 * k + 2] += L * (w * (1.0 - t)) @ tr
        f[2 * j:2 * j + 2] += L * (w * t) @ tr
    return f
