"""Analytical benchmark fields, error norms and convergence studies."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .assembly import BoundaryConditionSet, Solution, solve_problem
from .exceptions import TrefftzPolyError
from .geometry import Domain, PolygonMesh, QuarterAnnulus, QuarterPlateWithHole, Rectangle, generate_mesh
from .material import PLANE_STRAIN, PLANE_STRESS, Material
from .quadrature import dunavant_triangle, polygon_points

NORM_ORDER = 6


# ----------------------------------------------------------------------------
# Analytical fields
# ----------------------------------------------------------------------------


class AnalyticalField:
    """Exact displacement and stress; strain follows from the compliance."""

    material: Material
    exact_energy: float | None = None

    def displacement(self, points) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def stress(self, points) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def strain(self, points) -> np.ndarray:
        return self.stress(points) @ self.material.compliance.T

    def traction(self, points, normals) -> np.ndarray:
        s = self.stress(points)
        n = np.asarray(normals, dtype=float)
        return np.column_stack([s[:, 0] * n[:, 0] + s[:, 2] * n[:, 1],
                                s[:, 2] * n[:, 0] + s[:, 1] * n[:, 1]])


def _effective(material: Material) -> tuple[float, float]:
    """``(E_bar, nu_bar)``: plane stress uses ``E, nu``; plane strain the usual swap."""
    E, nu = material.E, material.nu
    if material.regime == PLANE_STRAIN:
        return E / (1.0 - nu**2), nu / (1.0 - nu)
    return E, nu


def _xy(points):
    p = np.atleast_2d(np.asarray(points, dtype=float))
    return p[:, 0], p[:, 1]


@dataclass(frozen=True)
class CantileverField(AnalyticalField):
    """End-loaded cantilever on ``[0, L] x [-D/2, D/2]`` with parabolic end shear."""

    L: float = 10.0
    D: float = 2.0
    P: float = 150.0
    material: Material = field(default_factory=lambda: Material(3e7, 0.25, PLANE_STRESS))

    @property
    def inertia(self) -> float:
        return self.D**3 / 12.0

    def displacement(self, points):
        x, y = _xy(points)
        E, nu = _effective(self.material)
        L, D, P, I = self.L, self.D, self.P, self.inertia
        u = P * y / (6 * E * I) * ((6 * L - 3 * x) * x + (2 + nu) * (y**2 - D**2 / 4))
        v = -P / (6 * E * I) * (3 * nu * y**2 * (L - x) + (4 + 5 * nu) * D**2 * x / 4
                               + (3 * L - x) * x**2)
        return np.column_stack([u, v])

    def stress(self, points):
        x, y = _xy(points)
        I = self.inertia
        sxx = self.P * (self.L - x) * y / I
        sxy = -self.P / (2 * I) * (self.D**2 / 4 - y**2)
        return np.column_stack([sxx, np.zeros_like(x), sxy])


@dataclass(frozen=True)
class KirschField(AnalyticalField):
    """Infinite plate with a traction-free circular hole under remote ``sigma_xx``."""

    a: float = 1.0
    sigma: float = 1.0
    material: Material = field(default_factory=lambda: Material(1e5, 0.3, PLANE_STRESS))
    # chord edges of a meshed hole dip below r = a; the closed form is
    # continued analytically into that sliver
    chord_rtol: float = 0.5

    def _polar(self, points):
        x, y = _xy(points)
        r = np.hypot(x, y)
        if np.any(r < self.a * (1 - self.chord_rtol)):
            raise ValueError("Kirsch field is defined only for r >= a")
        return r, np.arctan2(y, x)

    def stress(self, points):
        r, t = self._polar(points)
        q2 = (self.a / r) ** 2
        q4 = q2 * q2
        c2, c4, s2, s4 = np.cos(2 * t), np.cos(4 * t), np.sin(2 * t), np.sin(4 * t)
        sxx = 1 - q2 * (1.5 * c2 + c4) + 1.5 * q4 * c4
        syy = -q2 * (0.5 * c2 - c4) - 1.5 * q4 * c4
        sxy = -q2 * (0.5 * s2 + s4) + 1.5 * q4 * s4
        return self.sigma * np.column_stack([sxx, syy, sxy])

    def displacement(self, points):
        r, t = self._polar(points)
        mu = self.material.shear_modulus
        k = self.material.kolosov
        a = self.a
        c = self.sigma * a / (8 * mu)
        ux = c * ((r / a) * (k + 1) * np.cos(t)
                  + 2 * (a / r) * ((1 + k) * np.cos(t) + np.cos(3 * t))
                  - 2 * (a / r) ** 3 * np.cos(3 * t))
        uy = c * ((r / a) * (k - 3) * np.sin(t)
                  + 2 * (a / r) * ((1 - k) * np.sin(t) + np.sin(3 * t))
                  - 2 * (a / r) ** 3 * np.sin(3 * t))
        return np.column_stack([ux, uy])


@dataclass(frozen=True)
class CurvedBeamField(AnalyticalField):
    """Quarter annulus ``a <= r <= b``, ``0 <= theta <= pi/2``, bent by an end shift.

    The end ``theta = 0`` (on ``y = 0``) moves rigidly by ``u_o`` along ``x``
    and carries no normal traction; the end ``theta = pi/2`` has ``u_x = 0``
    and no shear; both arcs are free.  Airy function
    ``(A r^3 + B / r + D r log r) sin(theta)``.
    """

    a: float = 1.0
    b: float = 2.0
    u_o: float = -0.01
    material: Material = field(default_factory=lambda: Material(2e4, 0.3, PLANE_STRESS))

    def _constants(self):
        a, b = self.a, self.b
        E, nu = _effective(self.material)
        N = a * a - b * b + (a * a + b * b) * math.log(b / a)
        D = E * self.u_o / math.pi
        P = -D * N / (a * a + b * b)
        A = P / (2 * N)
        B = -P * a * a * b * b / (2 * N)
        return A, B, D, P, E, nu

    @property
    def end_force(self) -> float:
        """Resultant shear force on the moving end."""
        return self._constants()[3]

    @property
    def exact_energy(self) -> float:
        return 0.5 * abs(self.end_force * self.u_o)

    def _polar(self, points):
        x, y = _xy(points)
        return np.hypot(x, y), np.arctan2(y, x)

    def stress(self, points):
        A, B, D, *_ = self._constants()
        r, t = self._polar(points)
        g = 2 * A * r - 2 * B / r**3 + D / r
        sr = g * np.sin(t)
        st = (6 * A * r + 2 * B / r**3 + D / r) * np.sin(t)
        tr = -g * np.cos(t)
        c, s = np.cos(t), np.sin(t)
        sxx = sr * c * c + st * s * s - 2 * tr * s * c
        syy = sr * s * s + st * c * c + 2 * tr * s * c
        sxy = (sr - st) * s * c + tr * (c * c - s * s)
        return np.column_stack([sxx, syy, sxy])

    def displacement(self, points):
        A, B, D, _, E, nu = self._constants()
        r, t = self._polar(points)

        def F(rr):
            return (D * (1 - nu) * np.log(rr) + A * (1 - 3 * nu) * rr**2 + B * (1 + nu) / rr**2) / E

        # rigid part fixes u = (u_o, 0) at (r0, 0), r0 = mid radius
        K = -F(0.5 * (self.a + self.b))
        Lr = math.pi * D / E
        ur = -2 * D / E * t * np.cos(t) + np.sin(t) * F(r) + K * np.sin(t) + Lr * np.cos(t)
        ut = (2 * D / E * t * np.sin(t)
              - np.cos(t) / E * (A * (5 + nu) * r**2 + B * (1 + nu) / r**2 - D * (1 - nu) * np.log(r))
              + D * (1 + nu) / E * np.cos(t) + K * np.cos(t) - Lr * np.sin(t))
        c, s = np.cos(t), np.sin(t)
        return np.column_stack([ur * c - ut * s, ur * s + ut * c])


# ----------------------------------------------------------------------------
# Cases
# ----------------------------------------------------------------------------


@dataclass
class BenchmarkCase:
    """Domain, material, boundary conditions and reference solution of a benchmark.

    ``energy_reference`` selects how ``energy_error`` is computed: ``"norm"``
    integrates the strain error against the exact field, ``"energy"`` uses
    ``sqrt(|U_h - U| / U)`` with the exact strain energy ``U``.
    """

    name: str
    domain: Domain
    material: Material
    bcs: BoundaryConditionSet
    field: AnalyticalField | None
    sizes: tuple
    exact_energy: float | None = None
    energy_reference: str = "norm"


def cantilever_case(L: float = 10.0, D: float = 2.0, E: float = 3e7, nu: float = 0.25,
                    P: float = 150.0, regime: str = PLANE_STRESS) -> BenchmarkCase:
    """Exact displacements on ``x = 0``, exact parabolic shear on ``x = L``."""
    mat = Material(E, nu, regime)
    fld = CantileverField(L, D, P, mat)
    bcs = BoundaryConditionSet()
    bcs.add_dirichlet("left", fld.displacement)
    bcs.add_neumann("right", fld.traction)
    dom = Rectangle(L, D, 0.0, -D / 2)
    return BenchmarkCase("cantilever", dom, mat, bcs, fld, (80, 160, 320, 640))


def plate_hole_case(side: float = 5.0, a: float = 1.0, E: float = 1e5, nu: float = 0.3,
                    sigma: float = 1.0, regime: str = PLANE_STRESS) -> BenchmarkCase:
    """Quarter plate: symmetry on the axes, exact tractions outside, free hole."""
    mat = Material(E, nu, regime)
    fld = KirschField(a, sigma, mat)
    bcs = BoundaryConditionSet()
    bcs.add_dirichlet("symmetry_x", lambda p: np.zeros((len(p), 2)), components=(0,))
    bcs.add_dirichlet("symmetry_y", lambda p: np.zeros((len(p), 2)), components=(1,))
    bcs.add_neumann("right", fld.traction)
    bcs.add_neumann("top", fld.traction)
    dom = QuarterPlateWithHole(side, a)
    return BenchmarkCase("plate_hole", dom, mat, bcs, fld, (100, 200, 400, 800))


CURVED_DIRECTIONS = ("transverse", "normal")


def circular_beam_case(r_inner: float = 1.0, r_outer: float = 2.0, E: float = 2e4,
                       nu: float = 0.3, u_o: float = -0.01, regime: str = PLANE_STRESS,
                       direction: str = "transverse") -> BenchmarkCase:
    """Quarter annulus with one end held and the other end displaced by ``u_o``.

    ``direction="transverse"`` moves the ``loaded`` end along its face
    (``u_x = u_o``, no normal traction) and prescribes the exact displacement
    on the ``fixed`` end, reproducing :class:`CurvedBeamField`.
    ``direction="normal"`` clamps ``fixed`` and pushes ``loaded`` along its
    normal (``u_y = u_o``); no closed-form field is available then, and the
    energy error is measured against the same reference ``U``.
    """
    if direction not in CURVED_DIRECTIONS:
        raise ValueError(f"direction must be one of {CURVED_DIRECTIONS}")
    mat = Material(E, nu, regime)
    fld = CurvedBeamField(r_inner, r_outer, u_o, mat)
    bcs = BoundaryConditionSet()
    if direction == "transverse":
        bcs.add_dirichlet("fixed", fld.displacement)
        bcs.add_dirichlet("loaded", lambda p: np.tile([u_o, 0.0], (len(p), 1)), components=(0,))
        ref = fld
    else:
        bcs.add_dirichlet("fixed", lambda p: np.zeros((len(p), 2)))
        bcs.add_dirichlet("loaded", lambda p: np.tile([0.0, u_o], (len(p), 1)))
        ref = None
    dom = QuarterAnnulus(r_inner, r_outer)
    return BenchmarkCase("circular_beam", dom, mat, bcs, ref, (100, 200, 400, 800),
                         exact_energy=fld.exact_energy, energy_reference="energy")


CASES = {
    "cantilever": cantilever_case,
    "plate_hole": plate_hole_case,
    "circular_beam": circular_beam_case,
}


def get_case(name: str, **overrides) -> BenchmarkCase:
    try:
        factory = CASES[name]
    except KeyError:
        raise ValueError(f"unknown benchmark {name!r}; choose from {sorted(CASES)}") from None
    return factory(**overrides)


def circular_beam_reference_energy() -> float:
    """``(ln 2 - 0.6) / pi``."""
    return (math.log(2.0) - 0.6) / math.pi


# ----------------------------------------------------------------------------
# Error norms
# ----------------------------------------------------------------------------


def error_integrals(solution: Solution, exact: AnalyticalField, order: int = NORM_ORDER):
    """``(int |u - u_h|^2, int |u|^2, int e^T D e, int eps^T D eps)`` over the mesh."""
    rule = dunavant_triangle(order)
    D = solution.system.material.D
    acc = np.zeros(4)
    mesh = solution.mesh
    for i in range(mesh.n_cells):
        pts, w, _ = polygon_points(mesh.cell_coords(i), rule)
        fl = solution.field(i)
        u = exact.displacement(pts)
        eps = exact.strain(pts)
        du = u - fl.displacement(pts)
        de = eps - fl.strain(pts)
        acc[0] += w @ np.einsum("pi,pi->p", du, du)
        acc[1] += w @ np.einsum("pi,pi->p", u, u)
        acc[2] += w @ np.einsum("pi,ij,pj->p", de, D, de)
        acc[3] += w @ np.einsum("pi,ij,pj->p", eps, D, eps)
    return acc


def _ratio(num: float, den: float) -> float:
    if den <= 0.0:
        return float("nan") if num > 0.0 else 0.0
    return math.sqrt(max(num, 0.0) / den)


def l2_norm_error(solution: Solution, exact: AnalyticalField) -> float:
    """Relative displacement error ``||u - u_h|| / ||u||``."""
    acc = error_integrals(solution, exact)
    return _ratio(acc[0], acc[1])


def energy_norm_error(solution: Solution, exact: AnalyticalField) -> float:
    """Relative energy-norm error of the strain field."""
    acc = error_integrals(solution, exact)
    return _ratio(acc[2], acc[3])


def energy_gap_error(strain_energy: float, exact_energy: float) -> float:
    """``sqrt(|U_h - U| / U)``; zero when both energies vanish."""
    return _ratio(abs(strain_energy - exact_energy), exact_energy)


# ----------------------------------------------------------------------------
# Runs and convergence
# ----------------------------------------------------------------------------

CSV_HEADER = "benchmark,method,n_elements,n_dof,h,l2_error,energy_error,strain_energy"


@dataclass
class RunResult:
    benchmark: str
    method: str
    n_elements: int
    n_dof: int
    h: float
    l2_error: float
    energy_error: float
    strain_energy: float
    residual: float = 0.0
    energy_identity: float | None = None

    def csv_row(self) -> str:
        return (f"{self.benchmark},{self.method},{self.n_elements},{self.n_dof},"
                f"{self.h:.10e},{self.l2_error:.10e},{self.energy_error:.10e},"
                f"{self.strain_energy:.10e}")


def run_case(case: BenchmarkCase, mesh: PolygonMesh, method: str, m: int | None = None,
             threads: int | None = None, consistent: bool = True):
    """Solve ``case`` on ``mesh``; returns ``(RunResult, Solution)``."""
    method = method.lower()
    sol = solve_problem(mesh, case.material, method, case.bcs, m, threads, consistent)
    U = sol.strain_energy()
    if case.field is not None:
        acc = error_integrals(sol, case.field)
        l2 = _ratio(acc[0], acc[1])
        en = _ratio(acc[2], acc[3])
    else:
        l2 = en = float("nan")
    if case.energy_reference == "energy":
        en = energy_gap_error(U, case.exact_energy)
    ident = None
    if method == "ht":
        ut = sol.trefftz_energy()
        ident = abs(U - ut) / max(abs(U), abs(ut), np.finfo(float).tiny)
    h = mesh.mesh_size(case.domain.area)
    res = RunResult(case.name, method, mesh.n_cells, mesh.n_dof, h, l2, en, U,
                    sol.info.residual, ident)
    return res, sol


def fit_slope(h: Sequence[float], err: Sequence[float]) -> float | None:
    """Least-squares slope of ``log(err)`` against ``log(h)``; ``None`` below two points."""
    h = np.asarray(h, dtype=float)
    e = np.asarray(err, dtype=float)
    ok = np.isfinite(e) & (e > 0)
    if np.count_nonzero(ok) < 2:
        return None
    return float(np.polyfit(np.log(h[ok]), np.log(e[ok]), 1)[0])


@dataclass
class ConvergenceRecord:
    benchmark: str
    method: str
    rows: list = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    def slope(self, name: str) -> float | None:
        return fit_slope(self.column("h"), self.column(name))

    @property
    def l2_slope(self) -> float | None:
        return self.slope("l2_error")

    @property
    def energy_slope(self) -> float | None:
        return self.slope("energy_error")


class ConvergenceError(TrefftzPolyError):
    """A convergence run failed; ``record`` holds the rows completed so far."""

    def __init__(self, message, record):
        super().__init__(message)
        self.record = record


def build_meshes(case: BenchmarkCase, sizes: Sequence[int], seed: int = 0,
                 lloyd_iters: int = 100) -> list[PolygonMesh]:
    return [generate_mesh(case.domain, int(n), seed=seed, lloyd_iters=lloyd_iters) for n in sizes]


def run_convergence(case: BenchmarkCase, method: str, meshes: Sequence[PolygonMesh] | None = None,
                    sizes: Sequence[int] | None = None, seed: int = 0, lloyd_iters: int = 100,
                    m: int | None = None, threads: int | None = None,
                    consistent: bool = True) -> ConvergenceRecord:
    """Run ``case`` on a refinement sequence (given meshes, or generated from ``sizes``)."""
    if meshes is None:
        meshes = build_meshes(case, sizes or case.sizes, seed, lloyd_iters)
    rec = ConvergenceRecord(case.name, method.lower())
    last_h = math.inf
    for k, mesh in enumerate(meshes):
        try:
            res, _ = run_case(case, mesh, method, m, threads, consistent)
        except TrefftzPolyError as exc:
            raise ConvergenceError(f"mesh {k} ({mesh.n_cells} cells): {exc}", rec) from exc
        if not res.h < last_h:
            raise ConvergenceError(f"mesh {k}: h must decrease along the sequence", rec)
        last_h = res.h
        rec.rows.append(res)
    return rec


def write_csv(records, fh, header: bool = True) -> None:
    """Write rows of one or more records (or bare :class:`RunResult` objects)."""
    if header:
        fh.write(CSV_HEADER + "\n")
    for rec in records:
        rows = rec.rows if isinstance(rec, ConvergenceRecord) else [rec]
        for r in rows:
            fh.write(r.csv_row() + "\n")


def write_plot_data(record: ConvergenceRecord, column: str, fh) -> None:
    """``log10(h) log10(error)`` pairs preceded by a slope comment."""
    s = record.slope(column)
    slope = "n/a" if s is None else f"{s:.4f}"
    fh.write(f"# {record.benchmark} {record.method} {column} slope: {slope}\n")
    for r in record.rows:
        e = getattr(r, column)
        if np.isfinite(e) and e > 0:
            fh.write(f"{math.log10(r.h):.10f} {math.log10(e):.10f}\n")

