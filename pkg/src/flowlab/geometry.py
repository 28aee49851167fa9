"""Milnor-frame structure data for the six unimodular 3D Lie geometries.

Every left-invariant metric on these groups diagonalizes in a Milnor frame
F1, F2, F3 with brackets

    [F2, F3] = 2*lam*F1,   [F3, F1] = 2*mu*F2,   [F1, F2] = 2*nu*F3,

where (lam, mu, nu) take values in {-1, 0, 1}, are sorted lam <= mu <= nu,
and identify the group uniquely.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class Geometry(enum.Enum):
    """The six simply-connected homogeneous 3-geometries with a Milnor frame."""

    SU2 = "su2"
    ISOM_R2 = "isom_r2"
    SL2R = "sl2r"
    HEISENBERG = "heisenberg"
    ISOM_R11 = "isom_r11"
    R3 = "r3"


SIGNATURES: dict[Geometry, tuple[int, int, int]] = {
    Geometry.SU2: (-1, -1, -1),
    Geometry.ISOM_R2: (-1, -1, 0),
    Geometry.SL2R: (-1, 1, 1),
    Geometry.HEISENBERG: (-1, 0, 0),
    Geometry.ISOM_R11: (-1, 0, 1),
    Geometry.R3: (0, 0, 0),
}

_BY_SIGNATURE = {sig: geo for geo, sig in SIGNATURES.items()}


@dataclass(frozen=True)
class StructureTriple:
    """Bracket coefficients (lam, mu, nu) plus the geometry they identify."""

    lam: int
    mu: int
    nu: int
    geometry: Geometry

    def __post_init__(self):
        for name, value in (("lam", self.lam), ("mu", self.mu), ("nu", self.nu)):
            if value not in (-1, 0, 1):
                raise ValueError(f"structure constant {name}={value} not in {{-1, 0, 1}}")
        if not (self.lam <= self.mu <= self.nu):
            raise ValueError(
                f"structure constants must be sorted lam <= mu <= nu, "
                f"got ({self.lam}, {self.mu}, {self.nu})"
            )
        expected = SIGNATURES[self.geometry]
        if (self.lam, self.mu, self.nu) != expected:
            raise ValueError(
                f"triple ({self.lam}, {self.mu}, {self.nu}) does not match "
                f"{self.geometry.value}, expected {expected}"
            )

    @classmethod
    def for_geometry(cls, geometry: Geometry) -> "StructureTriple":
        lam, mu, nu = SIGNATURES[geometry]
        return cls(lam, mu, nu, geometry)

    @classmethod
    def from_signature(cls, lam: int, mu: int, nu: int) -> "StructureTriple":
        for name, value in (("lam", lam), ("mu", mu), ("nu", nu)):
            if value not in (-1, 0, 1):
                raise ValueError(f"structure constant {name}={value} not in {{-1, 0, 1}}")
        if not (lam <= mu <= nu):
            raise ValueError(
                f"structure constants must be sorted lam <= mu <= nu, got ({lam}, {mu}, {nu})"
            )
        geometry = _BY_SIGNATURE.get((lam, mu, nu))
        if geometry is None:
            raise ValueError(f"({lam}, {mu}, {nu}) is not one of the six admitted triples")
        return cls(lam, mu, nu, geometry)

    def signature(self) -> tuple[int, int, int]:
        return (self.lam, self.mu, self.nu)


@dataclass(frozen=True)
class DiagonalMetric:
    """Diagonal frame metric g = a w1@w1 + b w2@w2 + c w3@w3, all coefficients > 0."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        for name, value in (("a", self.a), ("b", self.b), ("c", self.c)):
            if not np.isfinite(value):
                raise ValueError(f"metric coefficient {name}={value} is not finite")
            if value <= 0.0:
                raise ValueError(f"metric coefficient {name}={value} must be positive")

    @property
    def diag(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c])

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.diag)

    @property
    def inverse(self) -> np.ndarray:
        return np.diag(1.0 / self.diag)

    @property
    def det(self) -> float:
        return self.a * self.b * self.c

    @property
    def sqrt_det(self) -> float:
        return float(np.sqrt(self.det))

    def scaled(self, s: float) -> "DiagonalMetric":
        return DiagonalMetric(s * self.a, s * self.b, s * self.c)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.a, self.b, self.c)

    @classmethod
    def from_array(cls, y) -> "DiagonalMetric":
        y = np.asarray(y, dtype=float)
        return cls(float(y[0]), float(y[1]), float(y[2]))


def structure_constants(triple: StructureTriple) -> np.ndarray:
    """Bracket table c with [F_i, F_j] = sum_k c[i, j, k] F_k.

    Only the three cyclic pairs (and their antisymmetric mirrors) are
    populated, with coefficients 2*lam, 2*mu, 2*nu.
    """
    c = np.zeros((3, 3, 3))
    c[1, 2, 0] = 2.0 * triple.lam
    c[2, 1, 0] = -2.0 * triple.lam
    c[2, 0, 1] = 2.0 * triple.mu
    c[0, 2, 1] = -2.0 * triple.mu
    c[0, 1, 2] = 2.0 * triple.nu
    c[1, 0, 2] = -2.0 * triple.nu
    return c
