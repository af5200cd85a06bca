"""Global assembly, Dirichlet elimination and sparse direct solve."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla

from .exceptions import BoundaryConditionError, ElementError, SolverError
from .geometry import PolygonMesh
from .ht_element import build_element, element_load_traction, recover_interior
from .material import Material
from .pfem import PfemField, pfem_stiffness

METHODS = ("ht", "pfem")
THREADS_ENV = "TREFFTZ_POLY_THREADS"
RESIDUAL_TOL = 1e-10


def thread_count() -> int:
    """Worker cap from ``TREFFTZ_POLY_THREADS`` (default: CPU count, at most 8)."""
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
        return max(1, n)
    return max(1, min(8, os.cpu_count() or 1))


def parallel_map(fn, items, threads: int | None = None) -> list:
    """Order-preserving map over a thread pool (serial for one worker)."""
    items = list(items)
    n = thread_count() if threads is None else max(1, threads)
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class DirichletBC:
    """Prescribed displacement ``value_fn(points) -> (P, 2)`` on ``components``."""

    marker: str
    value_fn: Callable
    components: tuple = (0, 1)


@dataclass(frozen=True)
class NeumannBC:
    """Traction ``traction_fn(points, normals) -> (P, 2)`` on ``components``."""

    marker: str
    traction_fn: Callable
    components: tuple = (0, 1)


@dataclass
class BoundaryConditionSet:
    dirichlet: list = field(default_factory=list)
    neumann: list = field(default_factory=list)

    def add_dirichlet(self, marker: str, value_fn, components=(0, 1)):
        self.dirichlet.append(DirichletBC(marker, value_fn, tuple(components)))
        return self

    def add_neumann(self, marker: str, traction_fn, components=(0, 1)):
        self.neumann.append(NeumannBC(marker, traction_fn, tuple(components)))
        return self

    def check(self, mesh: PolygonMesh) -> None:
        known = mesh.markers
        seen_u, seen_t = set(), set()
        for bc in self.dirichlet:
            if bc.marker not in known:
                raise BoundaryConditionError(f"unknown marker {bc.marker!r}; mesh has {sorted(known)}")
            seen_u.update((bc.marker, c) for c in bc.components)
        for bc in self.neumann:
            if bc.marker not in known:
                raise BoundaryConditionError(f"unknown marker {bc.marker!r}; mesh has {sorted(known)}")
            seen_t.update((bc.marker, c) for c in bc.components)
        both = seen_u & seen_t
        if both:
            m, c = sorted(both)[0]
            raise BoundaryConditionError(
                f"marker {m!r} component {c} has both a displacement and a traction condition")

    def constraints(self, mesh: PolygonMesh) -> dict[int, float]:
        """``{dof: value}`` with conflicts reported by node."""
        out: dict[int, float] = {}
        for bc in self.dirichlet:
            nodes = mesh.boundary_nodes(bc.marker)
            vals = np.asarray(bc.value_fn(mesh.nodes[nodes]), dtype=float).reshape(len(nodes), 2)
            for node, v in zip(nodes.tolist(), vals):
                for c in bc.components:
                    set_constraint(out, node, c, float(v[c]))
        return out


def set_constraint(cons: dict, node: int, comp: int, value: float) -> None:
    dof = 2 * node + comp
    old = cons.get(dof)
    if old is not None and abs(old - value) > 1e-12 * max(1.0, abs(old), abs(value)):
        raise BoundaryConditionError(
            f"node {node} component {comp} constrained to both {old!r} and {value!r}")
    cons[dof] = value


@dataclass
class GlobalSystem:
    mesh: PolygonMesh
    material: Material
    method: str
    K: sparse.csr_matrix
    f: np.ndarray
    constraints: dict
    elements: list
    consistent: bool = True

    @property
    def n_dof(self) -> int:
        return self.mesh.n_dof


def _dofs(cell) -> np.ndarray:
    c = np.asarray(cell, dtype=np.int64)
    return np.column_stack([2 * c, 2 * c + 1]).reshape(-1)


def element_matrices(mesh: PolygonMesh, material: Material, method: str,
                     m: int | None = None, threads: int | None = None,
                     consistent: bool = True) -> list:
    """HT :class:`ElementSystem` objects or PFEM stiffness arrays, one per cell."""
    method = method.lower()
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")

    def one(i):
        label = f"cell {i}"
        xy = mesh.cell_coords(i)
        try:
            if method == "ht":
                return build_element(xy, material, m=m, label=label)
            return pfem_stiffness(xy, material, consistent=consistent, label=label)
        except ElementError:
            raise
        except Exception as exc:  # pragma: no cover - defensive
            raise ElementError(f"{label}: {exc}") from exc

    return parallel_map(one, range(mesh.n_cells), threads)


def assemble(mesh: PolygonMesh, material: Material, method: str,
             bcs: BoundaryConditionSet | None = None, m: int | None = None,
             threads: int | None = None, consistent: bool = True) -> GlobalSystem:
    """Scatter-add element stiffness and Neumann loads into a sparse system.

    ``m`` overrides the HT mode count; ``consistent`` selects the PFEM
    gradient correction.
    """
    method = method.lower()
    bcs = bcs or BoundaryConditionSet()
    bcs.check(mesh)
    elems = element_matrices(mesh, material, method, m, threads, consistent)
    rows, cols, vals = [], [], []
    for cell, el in zip(mesh.cells, elems):
        Ke = el.K if method == "ht" else el
        d = _dofs(cell)
        rows.append(np.repeat(d, len(d)))
        cols.append(np.tile(d, len(d)))
        vals.append(Ke.reshape(-1))
    n = mesh.n_dof
    K = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsr()
    K.sum_duplicates()
    f = np.zeros(n)
    edges = mesh.cell_boundary_edges()
    for bc in bcs.neumann:
        for cell, marked in zip(mesh.cells, edges):
            if not any(mk == bc.marker for _, mk in marked):
                continue
            fe = element_load_traction(mesh.nodes[cell], marked, bc.marker, bc.traction_fn)
            mask = np.zeros(2, dtype=bool)
            mask[list(bc.components)] = True
            fe = fe.reshape(-1, 2) * mask
            np.add.at(f, _dofs(cell), fe.reshape(-1))
    return GlobalSystem(mesh, material, method, K, f, bcs.constraints(mesh), elems, consistent)


@dataclass
class ReducedSystem:
    """``K_ff d_f = f_f - K_fc d_c`` plus the data to rebuild the full vector."""

    K: sparse.csc_matrix
    rhs: np.ndarray
    free: np.ndarray
    fixed: np.ndarray
    fixed_values: np.ndarray
    n_dof: int

    def reconstruct(self, d_free) -> np.ndarray:
        d = np.zeros(self.n_dof)
        d[self.free] = d_free
        d[self.fixed] = self.fixed_values
        return d


def apply_dirichlet(system: GlobalSystem, constraints: dict | None = None) -> ReducedSystem:
    """Symmetric elimination of prescribed dofs."""
    cons = system.constraints if constraints is None else constraints
    n = system.n_dof
    fixed = np.array(sorted(cons), dtype=np.int64)
    for dof in fixed:
        if not 0 <= dof < n:
            raise BoundaryConditionError(f"constrained dof {dof} out of range [0, {n})")
    vals = np.array([cons[d] for d in fixed], dtype=float)
    mask = np.ones(n, dtype=bool)
    mask[fixed] = False
    free = np.flatnonzero(mask)
    K = system.K.tocsr()
    Kff = K[free][:, free].tocsc()
    rhs = system.f[free] - K[free][:, fixed] @ vals
    return ReducedSystem(Kff, rhs, free, fixed, vals, n)


@dataclass
class SolveInfo:
    residual: float
    min_pivot: float
    max_pivot: float


def solve(reduced: ReducedSystem, check_residual: bool = True):
    """Sparse LU with diagonal pivoting on the symmetric reduced matrix.

    Returns ``(d, info)``.  Non-positive or vanishing pivots raise
    :class:`SolverError` with the smallest pivot in the message.
    """
    nf = len(reduced.free)
    if nf == 0:
        return reduced.reconstruct(np.zeros(0)), SolveInfo(0.0, np.inf, np.inf)
    A = reduced.K
    try:
        lu = spla.splu(A, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                       options={"SymmetricMode": True})
    except RuntimeError as exc:
        raise SolverError(f"factorization failed ({exc}); system is singular, smallest pivot 0") from exc
    piv = lu.U.diagonal()
    pmin = float(np.min(piv))
    pmax = float(np.max(np.abs(piv)))
    if not pmin > 1e-13 * pmax:
        raise SolverError(
            f"reduced stiffness is not positive definite: smallest pivot {pmin:.3e} "
            f"(largest {pmax:.3e}); check that rigid-body motions are constrained")
    x = lu.solve(reduced.rhs)
    r = A @ x - reduced.rhs
    nb = np.linalg.norm(reduced.rhs)
    res = float(np.linalg.norm(r) / nb) if nb > 0 else float(np.linalg.norm(r))
    if check_residual and res >= RESIDUAL_TOL:
        raise SolverError(f"relative residual {res:.3e} exceeds {RESIDUAL_TOL:g}")
    return reduced.reconstruct(x), SolveInfo(res, pmin, pmax)


@dataclass
class Solution:
    """Solved problem with element-wise interior evaluators."""

    system: GlobalSystem
    d: np.ndarray
    info: SolveInfo

    @property
    def mesh(self) -> PolygonMesh:
        return self.system.mesh

    @property
    def method(self) -> str:
        return self.system.method

    def nodal(self) -> np.ndarray:
        return self.d.reshape(-1, 2)

    def element_dofs(self, i: int) -> np.ndarray:
        return self.d[_dofs(self.mesh.cells[i])]

    def field(self, i: int):
        """Interior evaluator of cell ``i`` (``displacement``, ``strain``, ``stress``)."""
        q = self.element_dofs(i)
        if self.method == "ht":
            return recover_interior(self.system.elements[i], q)
        return PfemField(self.mesh.cell_coords(i), q, self.system.material,
                         consistent=self.system.consistent)

    def strain_energy(self) -> float:
        """``0.5 d^T K d`` of the global system."""
        return 0.5 * float(self.d @ (self.system.K @ self.d))

    def trefftz_energy(self) -> float:
        """``0.5 sum_e c_e^T H_e c_e`` (HT only)."""
        if self.method != "ht":
            raise ValueError("Trefftz energy is defined for HT solutions only")
        return sum(el.strain_energy(self.element_dofs(i))
                   for i, el in enumerate(self.system.elements))


def solve_problem(mesh: PolygonMesh, material: Material, method: str,
                  bcs: BoundaryConditionSet, m: int | None = None,
                  threads: int | None = None, consistent: bool = True) -> Solution:
    """Assemble, eliminate Dirichlet dofs and solve."""
    system = assemble(mesh, material, method, bcs, m, threads, consistent)
    d, info = solve(apply_dirichlet(system))
    return Solution(system, d, info)
