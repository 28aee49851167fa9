"""Tabulated per-geometry component formulas for Ricci, Cotton-York and L1 density.

These are the closed-form expressions the frame-calculus oracle is checked
against.  The SU(2) and SL(2,R) Cotton-York and density formulas require
b == c; the other geometries are general.

The Heisenberg density constant is a known oddity: the tabulated value is
2*sqrt(6)*a^2/(b*c), while the density implied by the tabulated Cotton-York
components (and by the oracle) is 4*sqrt(6)*a^2/(b*c).  Both are exposed;
``heisenberg_density_ratio`` records the constant between them.
"""

from __future__ import annotations

import math

import numpy as np

from .geometry import DiagonalMetric, Geometry

_SQRT6 = math.sqrt(6.0)


class UnsupportedBranchError(ValueError):
    """Closed form not tabulated for this input; use the frame-calculus oracle."""


def _require_b_equals_c(geometry: Geometry, metric: DiagonalMetric, rel: float = 1e-12):
    if abs(metric.b - metric.c) > rel * max(metric.b, metric.c):
        raise UnsupportedBranchError(
            f"{geometry.value}: closed forms are tabulated only for b == c "
            f"(got b={metric.b}, c={metric.c}); use the frame-calculus oracle"
        )


def ricci_closed(geometry: Geometry, metric: DiagonalMetric) -> np.ndarray:
    """Tabulated diagonal Ricci components (general a, b, c for every geometry)."""
    a, b, c = metric.as_tuple()
    if geometry is Geometry.SU2:
        d = [4 - 2 * (b * b + c * c - a * a) / (b * c),
             4 - 2 * (c * c + a * a - b * b) / (c * a),
             4 - 2 * (b * b + a * a - c * c) / (b * a)]
    elif geometry is Geometry.ISOM_R2:
        d = [-2 * (b * b - a * a) / (b * c),
             -2 * (a * a - b * b) / (a * c),
             -2 * (a - b) ** 2 / (a * b)]
    elif geometry is Geometry.SL2R:
        d = [-2 * ((b - c) ** 2 - a * a) / (b * c),
             -2 * ((a + c) ** 2 - b * b) / (a * c),
             -2 * ((a + b) ** 2 - c * c) / (a * b)]
    elif geometry is Geometry.HEISENBERG:
        d = [2 * a * a / (b * c), -2 * a / c, -2 * a / b]
    elif geometry is Geometry.ISOM_R11:
        d = [-2 * (c * c - a * a) / (b * c),
             -2 * (a + c) ** 2 / (a * c),
             -2 * (a * a - c * c) / (a * b)]
    elif geometry is Geometry.R3:
        d = [0.0, 0.0, 0.0]
    else:
        raise ValueError(f"unknown geometry {geometry}")
    return np.diag(np.array(d, dtype=float))


def scalar_curvature_closed(geometry: Geometry, metric: DiagonalMetric) -> float:
    ric = ricci_closed(geometry, metric)
    return float(np.sum(np.diag(ric) / metric.diag))


def cotton_york_closed(geometry: Geometry, metric: DiagonalMetric) -> np.ndarray:
    """Tabulated diagonal Cotton-York components.

    SU2 and SL2R are tabulated on the b == c branch only and raise
    UnsupportedBranchError otherwise.
    """
    a, b, c = metric.as_tuple()
    if geometry is Geometry.SU2:
        _require_b_equals_c(geometry, metric)
        d = [8 * a ** 1.5 / (b * b) * (a / b - 1),
             4 * math.sqrt(a) / b * (1 - a / b),
             4 * math.sqrt(a) / c * (1 - a / c)]
    elif geometry is Geometry.ISOM_R2:
        v = (a * b * c) ** 1.5
        d = [4 * a * (2 * a ** 3 - b ** 3 - a * a * b) / v,
             4 * b * (2 * b ** 3 - a ** 3 - a * b * b) / v,
             -4 * c * (a + b) * (a - b) ** 2 / v]
    elif geometry is Geometry.SL2R:
        _require_b_equals_c(geometry, metric)
        v = (a * b * b) ** 1.5
        d = [8 * a ** 3 * (a + b) / v,
             -4 * a * a * b * (a + b) / v,
             -4 * a * a * c * (a + c) / (a * c * c) ** 1.5]
    elif geometry is Geometry.HEISENBERG:
        v = math.sqrt(a * b * c)
        d = [8 * a * a / (b * c) * math.sqrt(a / (b * c)),
             -4 * a * a / (c * v),
             -4 * a * a / (b * v)]
    elif geometry is Geometry.ISOM_R11:
        v = math.sqrt(a * b * c)
        d = [4 * a * (a + c) / (b * v) * (2 * a / c + c / a - 1),
             4 * (a + c) / v * (c / a - a / c),
             -4 * c * (a + c) / (b * v) * (2 * c / a + a / c - 1)]
    elif geometry is Geometry.R3:
        d = [0.0, 0.0, 0.0]
    else:
        raise ValueError(f"unknown geometry {geometry}")
    return np.diag(np.array(d, dtype=float))


def l1_density_closed(geometry: Geometry, metric: DiagonalMetric) -> float:
    """Tabulated L1-norm density |C2|_g sqrt(det g) per unit reference volume.

    For the Heisenberg geometry this returns the tabulated constant
    2*sqrt(6)*a^2/(b*c); see module docstring.
    """
    a, b, c = metric.as_tuple()
    if geometry is Geometry.SU2:
        _require_b_equals_c(geometry, metric)
        return 4 * _SQRT6 * (a / b) * abs(a / b - 1)
    if geometry is Geometry.ISOM_R2:
        x = a / b
        y = b / a
        cubic = 6 * x ** 3 - 6 * x * x + 2 * x + 6 * y ** 3 - 6 * y * y + 2 * y - 4
        return 4 * math.sqrt(a * b) / c * math.sqrt(max(cubic, 0.0))
    if geometry is Geometry.SL2R:
        _require_b_equals_c(geometry, metric)
        return 4 * _SQRT6 * (a / b) * (1 + a / b)
    if geometry is Geometry.HEISENBERG:
        return 2 * _SQRT6 * a * a / (b * c)
    if geometry is Geometry.ISOM_R11:
        x = a / c
        y = c / a
        return 4 * (a + c) / b * math.sqrt(6 * x * (x - 1) + 6 * y * (y - 1) + 8)
    if geometry is Geometry.R3:
        return 0.0
    raise ValueError(f"unknown geometry {geometry}")


HEISENBERG_DENSITY_RATIO_EXPECTED = 2.0


def heisenberg_density_ratio(metric: DiagonalMetric, oracle_density: float) -> float:
    """Ratio oracle density / tabulated density for the Heisenberg geometry."""
    return oracle_density / l1_density_closed(Geometry.HEISENBERG, metric)
