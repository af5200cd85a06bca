"""Isotropic linear-elastic material in plane stress or plane strain."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

PLANE_STRESS = "plane_stress"
PLANE_STRAIN = "plane_strain"


@dataclass(frozen=True)
class Material:
    """Young's modulus ``E``, Poisson ratio ``nu`` and the 2D regime.

    Voigt order is ``(xx, yy, xy)`` with engineering shear strain.
    """

    E: float
    nu: float
    regime: str = PLANE_STRESS

    def __post_init__(self):
        if not self.E > 0.0:
            raise ValueError(f"E must be positive, got {self.E}")
        if not 0.0 <= self.nu < 0.5:
            raise ValueError(f"nu must lie in [0, 0.5), got {self.nu}")
        if self.regime not in (PLANE_STRESS, PLANE_STRAIN):
            raise ValueError(f"unknown regime {self.regime!r}")

    @property
    def shear_modulus(self) -> float:
        return self.E / (2.0 * (1.0 + self.nu))

    @property
    def kolosov(self) -> float:
        if self.regime == PLANE_STRAIN:
            return 3.0 - 4.0 * self.nu
        return (3.0 - self.nu) / (1.0 + self.nu)

    @cached_property
    def D(self) -> np.ndarray:
        E, nu = self.E, self.nu
        if self.regime == PLANE_STRESS:
            c = E / (1.0 - nu**2)
            return c * np.array([[1.0, nu, 0.0], [nu, 1.0, 0.0], [0.0, 0.0, 0.5 * (1.0 - nu)]])
        c = E / ((1.0 + nu) * (1.0 - 2.0 * nu))
        return c * np.array(
            [[1.0 - nu, nu, 0.0], [nu, 1.0 - nu, 0.0], [0.0, 0.0, 0.5 - nu]]
        )

    @cached_property
    def compliance(self) -> np.ndarray:
        return np.linalg.inv(self.D)

    def with_(self, **changes) -> "Material":
        data = {"E": self.E, "nu": self.nu, "regime": self.regime}
        data.update(changes)
        return Material(**data)


def kolosov_constants(material: Material) -> tuple[float, float]:
    """Shear modulus ``G`` and Kolosov constant ``kappa``."""
    return material.shear_modulus, material.kolosov
