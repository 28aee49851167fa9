"""L1-norm densities of the Cotton-York tensor and their behavior along the flow.

The density is |C2|_g * sqrt(det g): the L1 integrand per unit volume of the
reference metric w1@w1 + w2@w2 + w3@w3.  Total norms on a compact set are the
density times the set's reference volume (`vol_factor`; 2*pi^2 for the unit
round 3-sphere carrying the SU(2) frame).

Two routes are provided: the tabulated closed forms (`closed_forms`) and the
frame-calculus oracle.  For the Heisenberg geometry they disagree by a
constant factor (recorded, expected 2); the oracle is authoritative.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import closed_forms, frame_calculus as fc
from .flow import FlowTrajectory, state_at
from .geometry import DiagonalMetric, Geometry


class MultipleExtremaError(RuntimeError):
    """The density slope changed sign more than once: integration is suspect."""


class ExtremumKind(enum.Enum):
    NONE = "none"
    INTERIOR_MAX = "interior_max"


class Verdict(enum.Enum):
    STRICTLY_DECREASING = "strictly_decreasing"
    HAS_INTERIOR_MAX = "has_interior_max"
    IDENTICALLY_ZERO = "identically_zero"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class NormSeries:
    times: np.ndarray
    density: np.ndarray
    vol_factor: float = 1.0

    def __post_init__(self):
        if len(self.times) != len(self.density):
            raise ValueError("times and density lengths differ")
        if np.any(np.diff(self.times) <= 0.0):
            raise ValueError("times must be strictly increasing")
        if np.any(self.density < 0.0):
            raise ValueError("densities must be nonnegative")
        if self.vol_factor <= 0.0:
            raise ValueError("vol_factor must be positive")

    @property
    def total(self) -> np.ndarray:
        return self.vol_factor * self.density


@dataclass(frozen=True)
class ExtremumReport:
    kind: ExtremumKind
    t0: float | None = None
    ratio_at_t0: float | None = None
    density_at_t0: float | None = None


SPHERE_VOLUME = 2.0 * math.pi ** 2  # unit round 3-sphere


def l1_density_closed(geometry: Geometry, metric: DiagonalMetric) -> float:
    """Tabulated density; raises UnsupportedBranchError off the b == c branch
    for SU2 / SL2R."""
    return closed_forms.l1_density_closed(geometry, metric)


def l1_density_oracle(metric: DiagonalMetric, sc: np.ndarray, orientation: int = 1) -> float:
    """|C2|_g sqrt(det g) via the frame-calculus oracle; scale invariant."""
    c2_sq = fc.invariant_scalars(metric, sc, orientation).c2_sq
    return math.sqrt(max(c2_sq, 0.0)) * metric.sqrt_det


def _density(geometry: Geometry, sc: np.ndarray, metric: DiagonalMetric, source: str) -> float:
    if source == "closed":
        return closed_forms.l1_density_closed(geometry, metric)
    if source == "oracle":
        return l1_density_oracle(metric, sc)
    raise ValueError(f"source must be 'closed' or 'oracle', got {source!r}")


def norm_series(trajectory: FlowTrajectory, source: str = "oracle",
                vol_factor: float = 1.0) -> NormSeries:
    """Density at every trajectory sample (closed-form branch errors propagate)."""
    sc = fc.frame_data(trajectory.geometry)
    density = np.array([
        _density(trajectory.geometry, sc, s.metric, source) for s in trajectory.samples
    ])
    return NormSeries(times=trajectory.times.copy(), density=density, vol_factor=vol_factor)


def trim_to_signal(series: NormSeries, trajectory: FlowTrajectory | None = None,
                   floor_rel: float = 1e-6,
                   component_floor_rel: float = 1e-3) -> NormSeries:
    """Restrict a density series to its signal-dominated prefix.

    Two noise floors apply.  Densities below floor_rel of the peak are
    indistinguishable from the cancellation noise of their own evaluation
    (tensor components cancel to roundoff as the flow approaches a
    conformally flat state).  And once the smallest metric component falls
    below component_floor_rel of its initial size (collapsing trajectories),
    the absolute integration error dominates ratios like a/b, so densities
    built from them are noise as well.  The series is cut at the first sample
    hitting either floor (that sample is kept as the terminal one); a zero
    series passes through unchanged.
    """
    peak = float(np.max(series.density)) if len(series.density) else 0.0
    if peak <= 0.0:
        return series
    cut = len(series.density)
    below = np.nonzero(series.density < floor_rel * peak)[0]
    if len(below):
        cut = min(cut, int(below[0]) + 1)
    if trajectory is not None:
        mins = np.min(trajectory.values, axis=1)
        collapsed = np.nonzero(mins < component_floor_rel * mins[0])[0]
        if len(collapsed):
            # unlike the density floor, a collapsed state yields garbage (not
            # merely small) densities, so the first such sample is dropped
            cut = min(cut, int(collapsed[0]))
    cut = max(cut, 2)
    if cut >= len(series.density):
        return series
    return NormSeries(times=series.times[:cut], density=series.density[:cut],
                      vol_factor=series.vol_factor)


def _density_slope(trajectory: FlowTrajectory, source: str, t: float, delta: float) -> float:
    """d(density)/dt by centered differences with one Richardson sweep."""
    sc = fc.frame_data(trajectory.geometry)

    def rho(tt: float) -> float:
        return _density(trajectory.geometry, sc, state_at(trajectory, tt), source)

    d1 = (rho(t + delta) - rho(t - delta)) / (2 * delta)
    d2 = (rho(t + delta / 2) - rho(t - delta / 2)) / delta
    return (4.0 * d2 - d1) / 3.0


def _slope_signs(density: np.ndarray, slack: float) -> np.ndarray:
    diffs = np.diff(density)
    signs = np.zeros(diffs.shape, dtype=int)
    signs[diffs > slack] = 1
    signs[diffs < -slack] = -1
    return signs


def find_extremum(series: NormSeries, trajectory: FlowTrajectory,
                  source: str = "oracle") -> ExtremumReport:
    """Locate the unique interior maximum of the density series, if any.

    Scans sample-to-sample slopes for a single rise-to-fall sign change, then
    bisects the sign of d(density)/dt (evaluated on sub-stepped states, not on
    the coarse samples) down to a time bracket of 1e-10.
    """
    peak = float(np.max(series.density))
    slack = 1e-12 * peak
    if peak <= 0.0:
        return ExtremumReport(kind=ExtremumKind.NONE)

    signs = _slope_signs(series.density, slack)
    nonzero = signs[signs != 0]
    flips = int(np.sum(np.abs(np.diff(nonzero)) > 0)) if len(nonzero) > 1 else 0
    if flips > 1 or (flips == 1 and not (nonzero[0] > 0 > nonzero[-1])):
        raise MultipleExtremaError(
            f"density slope changes sign {flips} times; expected a single maximum"
        )
    if flips == 0:
        return ExtremumReport(kind=ExtremumKind.NONE)

    up = np.nonzero(signs > 0)[0]
    down = np.nonzero(signs < 0)[0]
    lo = float(series.times[up[-1]])
    hi = float(series.times[down[0] + 1])
    delta = 1e-4 * max(1.0, abs(hi))
    for _ in range(60):
        if hi - lo <= 1e-10:
            break
        mid = 0.5 * (lo + hi)
        if _density_slope(trajectory, source, mid, delta) > 0.0:
            lo = mid
        else:
            hi = mid
    t0 = 0.5 * (lo + hi)
    m0 = state_at(trajectory, t0)
    return ExtremumReport(
        kind=ExtremumKind.INTERIOR_MAX,
        t0=t0,
        ratio_at_t0=m0.a / m0.b,
        density_at_t0=series.vol_factor
        * _density(trajectory.geometry, fc.frame_data(trajectory.geometry), m0, source),
    )


def monotonicity_verdict(series: NormSeries, slack: float | None = None) -> Verdict:
    """Classify the density series; slack defaults to 1e-12 of the peak."""
    peak = float(np.max(series.density)) if len(series.density) else 0.0
    if slack is None:
        slack = 1e-12 * peak
    if peak <= slack:
        return Verdict.IDENTICALLY_ZERO
    signs = _slope_signs(series.density, slack)
    nonzero = signs[signs != 0]
    if len(nonzero) == 0:
        return Verdict.INDETERMINATE
    diffs = np.diff(series.density)
    if np.all(diffs < -slack):
        return Verdict.STRICTLY_DECREASING
    flips = np.nonzero(np.diff(nonzero))[0]
    if len(flips) == 1 and nonzero[0] > 0 > nonzero[-1]:
        return Verdict.HAS_INTERIOR_MAX
    return Verdict.INDETERMINATE
