"""T-complete displacement, stress and traction modes for plane elasticity.

Modes come from the complex potentials ``phi = i z^k`` (J=1), ``phi = z^k``
(J=2), ``psi = i z^k`` (J=3) and ``psi = z^k`` (J=4) in a local frame
``z = ((x - x0) + i (y - y0)) / scale``.  For each mode

    2G (u + i v)           = Z
    sigma_xx + sigma_yy    = 2 Re R
    sigma_yy - sigma_xx    = 2 Re S,   sigma_xy = Im S

with stresses carrying a ``1/scale`` factor from the chain rule.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .material import Material, kolosov_constants


def default_ordering(m: int) -> list[tuple[int, int]]:
    """First ``m`` pairs ``(J, k)``: k ascending, J = 1..4, skipping (1, 1)."""
    if int(m) != m or m < 1:
        raise ValueError(f"mode count must be a positive integer, got {m}")
    out = []
    k = 1
    while len(out) < m:
        for J in (1, 2, 3, 4):
            if (J, k) == (1, 1):
                continue
            out.append((J, k))
            if len(out) == m:
                break
        k += 1
    return out


@dataclass(frozen=True)
class ModeEvaluation:
    """Mode columns at one or many points.

    ``displacement`` is ``(..., 2, m)``, ``stress`` ``(..., 3, m)`` in Voigt
    order, ``traction`` ``(..., 2, m)`` or ``None`` without a normal.
    """

    displacement: np.ndarray
    stress: np.ndarray
    traction: np.ndarray | None = None


def traction_operator(normals) -> np.ndarray:
    """``A = [[n1, 0, n2], [0, n2, n1]]`` for each normal, shape ``(..., 2, 3)``."""
    n = np.asarray(normals, dtype=float)
    A = np.zeros(n.shape[:-1] + (2, 3))
    A[..., 0, 0] = n[..., 0]
    A[..., 0, 2] = n[..., 1]
    A[..., 1, 1] = n[..., 1]
    A[..., 1, 2] = n[..., 0]
    return A


class TrefftzModeSet:
    """Ordered T-complete modes in a scaled local frame (immutable).

    Parameters
    ----------
    material : Material
    m : int, optional
        Mode count under :func:`default_ordering`; ignored if ``ordering`` given.
    ordering : sequence of (J, k), optional
    origin : (2,) array_like
    scale : float
    """

    def __init__(self, material: Material, m: int | None = None, ordering=None,
                 origin=(0.0, 0.0), scale: float = 1.0):
        if ordering is None:
            if m is None:
                raise ValueError("give m or ordering")
            ordering = default_ordering(m)
        ordering = [(int(J), int(k)) for J, k in ordering]
        if not ordering:
            raise ValueError("mode set must contain at least one mode")
        for J, k in ordering:
            if J not in (1, 2, 3, 4):
                raise ValueError(f"J must be 1..4, got {J}")
            if k < 1:
                raise ValueError(f"k must be >= 1, got {k}")
        if len(set(ordering)) != len(ordering):
            raise ValueError("duplicate (J, k) in ordering")
        if not scale > 0.0:
            raise ValueError(f"scale must be positive, got {scale}")
        self.material = material
        self.ordering = tuple(ordering)
        self.origin = np.array(origin, dtype=float)
        self.origin.setflags(write=False)
        self.scale = float(scale)
        self._J = np.array([J for J, _ in ordering])
        self._k = np.array([k for _, k in ordering])

    @property
    def m(self) -> int:
        return len(self.ordering)

    @property
    def k_max(self) -> int:
        return int(self._k.max())

    def __repr__(self):
        return (f"TrefftzModeSet(m={self.m}, k_max={self.k_max}, "
                f"origin={tuple(self.origin)}, scale={self.scale:g})")

    def local(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        return ((p[..., 0] - self.origin[0]) + 1j * (p[..., 1] - self.origin[1])) / self.scale

    def _complex_parts(self, z: np.ndarray):
        """``(Z, R, S)`` of every mode at local points ``z``, each ``(P, m)``."""
        _, kappa = kolosov_constants(self.material)
        kmax = self.k_max
        P = z.shape[0]
        zp = np.ones((P, kmax + 1), dtype=complex)
        zb = np.ones((P, kmax + 1), dtype=complex)
        zc = np.conj(z)
        for j in range(1, kmax + 1):
            zp[:, j] = zp[:, j - 1] * z
            zb[:, j] = zb[:, j - 1] * zc
        J, k = self._J, self._k
        zk = zp[:, k]
        zbk = zb[:, k]
        zk1 = zp[:, k - 1]
        zzb = z[:, None] * zb[:, k - 1]
        # z^(k-2) zbar vanishes through the k(k-1) factor when k = 1
        zk2 = np.where(k >= 2, zp[:, np.maximum(k - 2, 0)], 0.0) * zc[:, None]
        Z = np.empty((P, len(k)), dtype=complex)
        R = np.zeros((P, len(k)), dtype=complex)
        S = np.empty((P, len(k)), dtype=complex)
        for j, (Jj, kj) in enumerate(self.ordering):
            if Jj == 1:
                Z[:, j] = 1j * kappa * zk[:, j] + 1j * kj * zzb[:, j]
                R[:, j] = 2j * kj * zk1[:, j]
                S[:, j] = 1j * kj * (kj - 1) * zk2[:, j]
            elif Jj == 2:
                Z[:, j] = kappa * zk[:, j] - kj * zzb[:, j]
                R[:, j] = 2 * kj * zk1[:, j]
                S[:, j] = kj * (kj - 1) * zk2[:, j]
            elif Jj == 3:
                Z[:, j] = 1j * zbk[:, j]
                S[:, j] = 1j * kj * zk1[:, j]
            else:
                Z[:, j] = -zbk[:, j]
                S[:, j] = kj * zk1[:, j]
        return Z, R, S

    def evaluate(self, points, normals=None) -> ModeEvaluation:
        """Mode columns at ``points`` of shape ``(2,)`` or ``(P, 2)``."""
        p = np.asarray(points, dtype=float)
        single = p.ndim == 1
        p = np.atleast_2d(p)
        Z, R, S = self._complex_parts(self.local(p))
        G = self.material.shear_modulus
        N = np.stack([Z.real, Z.imag], axis=1) / (2.0 * G)
        T = np.stack([(R - S).real, (R + S).real, S.imag], axis=1) / self.scale
        Q = None
        if normals is not None:
            nrm = np.broadcast_to(np.asarray(normals, dtype=float), p.shape)
            Q = traction_operator(nrm) @ T
        if single:
            N, T = N[0], T[0]
            Q = None if Q is None else Q[0]
        return ModeEvaluation(N, T, Q)

    def displacement(self, points) -> np.ndarray:
        return self.evaluate(points).displacement

    def stress(self, points) -> np.ndarray:
        return self.evaluate(points).stress


def eval_modes(mode_set: TrefftzModeSet, point, normal=None) -> ModeEvaluation:
    """Displacement ``N``, stress ``T`` and, given a normal, traction ``Q = A T``."""
    return mode_set.evaluate(point, normal)


@dataclass(frozen=True)
class ModeCheck:
    J: int
    k: int
    equilibrium: float
    consistency: float
    stress_magnitude: float
    passed: bool


@dataclass(frozen=True)
class VerificationReport:
    """Per-mode relative residuals of equilibrium and of ``sigma = D sym grad u``."""

    checks: list[ModeCheck] = field(default_factory=list)
    threshold: float = 1e-5

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[ModeCheck]:
        return [c for c in self.checks if not c.passed]

    def table(self) -> str:
        lines = [f"{'J':>2} {'k':>3} {'equilibrium':>12} {'consistency':>12}  status"]
        for c in self.checks:
            lines.append(f"{c.J:>2} {c.k:>3} {c.equilibrium:12.3e} {c.consistency:12.3e}  "
                         f"{'pass' if c.passed else 'FAIL'}")
        return "\n".join(lines)


def verify_mode_set(mode_set: TrefftzModeSet, sample_points: int = 20, h_fd: float = 1e-5,
                    threshold: float = 1e-5, seed: int = 0) -> VerificationReport:
    """Finite-difference check of every mode at random points of the local unit disk.

    ``h_fd`` is measured in local coordinates; residuals are relative to the
    largest stress of the mode over the samples (equilibrium residuals are
    multiplied by ``scale`` to make them stress-like).
    """
    if sample_points < 1:
        raise ValueError("sample_points must be positive")
    rng = np.random.default_rng(seed)
    r = np.sqrt(rng.uniform((3 * h_fd) ** 2, 1.0, sample_points))
    t = rng.uniform(0.0, 2.0 * np.pi, sample_points)
    s = mode_set.scale
    pts = mode_set.origin + s * np.column_stack([r * np.cos(t), r * np.sin(t)])
    h = h_fd * s
    ex = np.array([h, 0.0])
    ey = np.array([0.0, h])
    stencil = np.concatenate([pts, pts + ex, pts - ex, pts + ey, pts - ey])
    ev = mode_set.evaluate(stencil)
    P = sample_points
    U = ev.displacement.reshape(5, P, 2, -1)
    T = ev.stress.reshape(5, P, 3, -1)
    dT_dx = (T[1] - T[2]) / (2 * h)
    dT_dy = (T[3] - T[4]) / (2 * h)
    eq = np.stack([dT_dx[:, 0] + dT_dy[:, 2], dT_dx[:, 2] + dT_dy[:, 1]], axis=1)
    dU_dx = (U[1] - U[2]) / (2 * h)
    dU_dy = (U[3] - U[4]) / (2 * h)
    strain = np.stack([dU_dx[:, 0], dU_dy[:, 1], dU_dx[:, 1] + dU_dy[:, 0]], axis=1)
    sig_fd = np.einsum("ij,pjm->pim", mode_set.material.D, strain)
    mag = np.abs(T[0]).max(axis=(0, 1))
    checks = []
    for j, (J, k) in enumerate(mode_set.ordering):
        denom = mag[j] if mag[j] > 0 else 1.0
        e = float(np.abs(eq[:, :, j]).max() * s / denom)
        c = float(np.abs(sig_fd[:, :, j] - T[0][:, :, j]).max() / denom)
        ok = mag[j] > 0 and e < threshold and c < threshold
        checks.append(ModeCheck(J, k, e, c, float(mag[j]), bool(ok)))
    return VerificationReport(checks, threshold)
