"""Ricci flow on the homogeneous 3-geometries as ODE systems in a Milnor frame.

The flow keeps a diagonal metric diagonal, so each geometry reduces to a
3-dimensional autonomous ODE for the coefficients (a, b, c).  Integration
uses an embedded Cash-Karp 5(4) pair with PI step-size control, a positivity
floor with bisected crossing-time estimation, and stride sampling via
high-order sub-steps inside accepted steps.
"""

from __future__ import annotations

import bisect
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import DiagonalMetric, Geometry


def flow_rhs(geometry: Geometry, metric: DiagonalMetric) -> tuple[float, float, float]:
    """Right-hand side (da/dt, db/dt, dc/dt) of the Ricci flow ODE system.

    Equals -2 * Ric(F_i, F_i) componentwise, written out per geometry.
    """
    da, db, dc = _rhs(geometry, np.array(metric.as_tuple()))
    return (float(da), float(db), float(dc))


def _rhs(geometry: Geometry, y: np.ndarray) -> np.ndarray:
    a, b, c = y
    if geometry is Geometry.SU2:
        return np.array([
            -8.0 + 4.0 * (b * b + c * c - a * a) / (b * c),
            -8.0 + 4.0 * (c * c + a * a - b * b) / (c * a),
            -8.0 + 4.0 * (b * b + a * a - c * c) / (b * a),
        ])
    if geometry is Geometry.ISOM_R2:
        return np.array([
            4.0 * (b * b - a * a) / (b * c),
            4.0 * (a * a - b * b) / (a * c),
            4.0 * (a - b) ** 2 / (a * b),
        ])
    if geometry is Geometry.SL2R:
        return np.array([
            4.0 * ((b - c) ** 2 - a * a) / (b * c),
            4.0 * ((a + c) ** 2 - b * b) / (a * c),
            4.0 * ((a + b) ** 2 - c * c) / (a * b),
        ])
    if geometry is Geometry.HEISENBERG:
        return np.array([-4.0 * a * a / (b * c), 4.0 * a / c, 4.0 * a / b])
    if geometry is Geometry.ISOM_R11:
        return np.array([
            4.0 * (c * c - a * a) / (b * c),
            4.0 * (a + c) ** 2 / (a * c),
            4.0 * (a * a - c * c) / (a * b),
        ])
    if geometry is Geometry.R3:
        return np.zeros(3)
    raise ValueError(f"unknown geometry {geometry}")


_NAN3 = np.full(3, np.nan)


def _rhs_guarded(geometry: Geometry, y: np.ndarray) -> np.ndarray:
    # Outside the positive octant the systems are meaningless; poison the
    # stage so the step controller rejects and shrinks.
    if not np.all(np.isfinite(y)) or np.any(y <= 0.0):
        return _NAN3
    return _rhs(geometry, y)


class StopReason(enum.Enum):
    REACHED_T_END = "reached_t_end"
    BLOWUP_FLOOR = "blowup_floor"
    STEP_UNDERFLOW = "step_underflow"


@dataclass(frozen=True)
class FlowState:
    t: float
    metric: DiagonalMetric


@dataclass(frozen=True)
class FlowParams:
    """Integration controls; defaults favor accuracy over speed."""

    t_end: float
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    dt_init: float = 1e-4
    dt_min: float = 1e-12
    dt_max: float = 0.1
    min_component: float = 1e-8
    sample_stride: float = 0.01

    def __post_init__(self):
        if not (0.0 < self.dt_min <= self.dt_init <= self.dt_max):
            raise ValueError(
                f"need 0 < dt_min <= dt_init <= dt_max, got "
                f"({self.dt_min}, {self.dt_init}, {self.dt_max})"
            )
        for name, tol in (("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)):
            if not (0.0 < tol <= 1e-2):
                raise ValueError(f"{name}={tol} outside (0, 1e-2]")
        if not (np.isfinite(self.t_end) and self.t_end > 0.0):
            raise ValueError(f"t_end={self.t_end} must be positive and finite")
        if self.min_component <= 0.0 or self.sample_stride <= 0.0:
            raise ValueError("min_component and sample_stride must be positive")


@dataclass
class FlowTrajectory:
    geometry: Geometry
    samples: list[FlowState]
    stop_reason: StopReason
    t_estimate: float | None = None
    _times: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        times = np.array([s.t for s in self.samples])
        if len(times) == 0:
            raise ValueError("trajectory has no samples")
        if np.any(np.diff(times) <= 0.0):
            raise ValueError("sample times must be strictly increasing")
        if self.stop_reason is StopReason.BLOWUP_FLOOR and self.t_estimate is None:
            raise ValueError("blowup stop requires a crossing-time estimate")
        self._times = times

    @property
    def times(self) -> np.ndarray:
        return self._times

    @property
    def values(self) -> np.ndarray:
        return np.array([s.metric.as_tuple() for s in self.samples])

    @property
    def t_first(self) -> float:
        return float(self._times[0])

    @property
    def t_last(self) -> float:
        return float(self._times[-1])


# Cash-Karp 5(4) tableau; the 5th-order solution is propagated and the
# embedded 4th-order one supplies the error estimate.
_CK_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (3 / 10, -9 / 10, 6 / 5),
    (-11 / 54, 5 / 2, -70 / 27, 35 / 27),
    (1631 / 55296, 175 / 512, 575 / 13824, 44275 / 110592, 253 / 4096),
)
_CK_B5 = np.array([37 / 378, 0.0, 250 / 621, 125 / 594, 0.0, 512 / 1771])
_CK_ERR = _CK_B5 - np.array(
    [2825 / 27648, 0.0, 18575 / 48384, 13525 / 55296, 277 / 14336, 1 / 4]
)
_CK_A_ARR = [np.array(row) for row in _CK_A]


def _dp_step(geometry: Geometry, y: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """One embedded step; returns (5th-order solution, error vector)."""
    k = np.empty((6, 3))
    k[0] = _rhs_guarded(geometry, y)
    for i in range(1, 6):
        yi = y + h * (_CK_A_ARR[i] @ k[:i])
        k[i] = _rhs_guarded(geometry, yi)
    y5 = y + h * (_CK_B5 @ k)
    return y5, h * (_CK_ERR @ k)


def advance_fixed(geometry: Geometry, y, dt: float, n_steps: int = 8) -> np.ndarray:
    """Advance the flow by dt with n fixed Dormand-Prince steps (dt of either sign)."""
    y = np.asarray(y, dtype=float).copy()
    if dt == 0.0:
        return y
    h = dt / n_steps
    for _ in range(n_steps):
        y, _ = _dp_step(geometry, y, h)
    return y


def _err_norm(err: np.ndarray, y: np.ndarray, y_new: np.ndarray, params: FlowParams) -> float:
    scale = params.abs_tol + params.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def _find_floor_crossing(
    geometry: Geometry, y_left: np.ndarray, h: float, floor: float
) -> tuple[float, np.ndarray, float]:
    """Bisect the first crossing of min-component = floor inside a step of size h.

    Returns (theta_mid * h, state just above the floor, bracket width in time).
    Non-finite trial states count as beyond the crossing: the floor is
    strictly positive, so the flow crosses it before any component can reach
    zero and poison the arithmetic.
    """
    lo, hi = 0.0, 1.0
    y_lo = y_left.copy()
    for _ in range(80):
        if (hi - lo) * h < 1e-12:
            break
        mid = 0.5 * (lo + hi)
        y_mid = advance_fixed(geometry, y_left, mid * h)
        if np.all(np.isfinite(y_mid)) and np.min(y_mid) > floor:
            lo, y_lo = mid, y_mid
        else:
            hi = mid
    return 0.5 * (lo + hi) * h, y_lo, (hi - lo) * h


def integrate(geometry: Geometry, initial: DiagonalMetric, params: FlowParams) -> FlowTrajectory:
    """Integrate the flow from t=0, sampling every params.sample_stride.

    Stops at t_end, at the positivity floor (with a bisected crossing-time
    estimate), or on step underflow.  Emitted samples always have all metric
    components above the floor.
    """
    y = np.array(initial.as_tuple())
    if np.min(y) <= params.min_component:
        raise ValueError("initial metric already at or below the positivity floor")

    t = 0.0
    h = params.dt_init
    err_old = 1e-4
    samples = [FlowState(0.0, initial)]
    k_sample = 1
    stop = None
    t_estimate = None
    tiny = 1e-12 * max(1.0, abs(params.t_end))

    def emit_until(t_left: float, y_left: np.ndarray, t_limit: float):
        nonlocal k_sample
        while True:
            ts = k_sample * params.sample_stride
            if ts > t_limit + tiny:
                break
            if ts > t_left + tiny:
                ys = advance_fixed(geometry, y_left, ts - t_left)
                samples.append(FlowState(ts, DiagonalMetric.from_array(ys)))
            k_sample += 1

    while True:
        remaining = params.t_end - t
        if remaining <= tiny:
            stop = StopReason.REACHED_T_END
            break
        h = min(h, params.dt_max, remaining)
        final_step = h >= remaining - tiny

        y_new, err_vec = _dp_step(geometry, y, h)
        clean = bool(np.all(np.isfinite(y_new)) and np.all(np.isfinite(err_vec)))
        err = _err_norm(err_vec, y, y_new, params) if clean else math.inf

        if not clean or err > 1.0:
            if h <= params.dt_min * (1.0 + 1e-9):
                if not clean:
                    # Poisoned stages mean a component crossed zero inside
                    # even the minimal step, so the floor was crossed first.
                    dt_cross, y_cross, _width = _find_floor_crossing(
                        geometry, y, h, params.min_component
                    )
                    emit_until(t, y, t + dt_cross)
                    t_estimate = t + dt_cross
                    if samples[-1].t < t_estimate - tiny:
                        samples.append(
                            FlowState(t_estimate, DiagonalMetric.from_array(y_cross))
                        )
                    stop = StopReason.BLOWUP_FLOOR
                    break
                stop = StopReason.STEP_UNDERFLOW
                break
            shrink = 0.5 if not clean else max(0.2, 0.9 * err ** -0.2)
            h = max(params.dt_min, h * shrink)
            continue

        if np.min(y_new) <= params.min_component:
            dt_cross, y_cross, _width = _find_floor_crossing(
                geometry, y, h, params.min_component
            )
            emit_until(t, y, t + dt_cross)
            t_estimate = t + dt_cross
            if samples[-1].t < t_estimate - tiny:
                samples.append(FlowState(t_estimate, DiagonalMetric.from_array(y_cross)))
            stop = StopReason.BLOWUP_FLOOR
            break

        emit_until(t, y, t + h)
        t = params.t_end if final_step else t + h
        y = y_new

        err_eff = max(err, 1e-10)
        factor = 0.9 * err_eff ** -0.14 * err_old ** 0.08
        h = h * min(10.0, max(0.2, factor))
        err_old = err_eff

    if stop is StopReason.REACHED_T_END and samples[-1].t < params.t_end - tiny:
        samples.append(FlowState(params.t_end, DiagonalMetric.from_array(y)))

    return FlowTrajectory(geometry=geometry, samples=samples, stop_reason=stop,
                          t_estimate=t_estimate)


def state_at(trajectory: FlowTrajectory, t: float) -> DiagonalMetric:
    """Metric at an arbitrary time inside the trajectory (sub-stepped from samples)."""
    times = trajectory.times
    if t < times[0] - 1e-12 or t > times[-1] + 1e-12:
        raise ValueError(f"t={t} outside trajectory range [{times[0]}, {times[-1]}]")
    idx = min(max(bisect.bisect_right(times, t) - 1, 0), len(times) - 1)
    base = trajectory.samples[idx]
    dt = t - base.t
    if dt == 0.0:
        return base.metric
    n = max(8, int(math.ceil(abs(dt) / 5e-4)))
    y = advance_fixed(trajectory.geometry, np.array(base.metric.as_tuple()), dt, n)
    return DiagonalMetric.from_array(y)


def heisenberg_closed_form(initial: DiagonalMetric, t: float) -> DiagonalMetric:
    """Exact Heisenberg solution: power laws in (12 t + b0 c0 / a0).

    Defined for t > -b0*c0/a0.
    """
    a0, b0, c0 = initial.as_tuple()
    k = 12.0 * t + b0 * c0 / a0
    if k <= 0.0:
        raise ValueError(
            f"t={t} outside the existence interval (-b0*c0/a0, inf) = ({-b0 * c0 / a0}, inf)"
        )
    a = a0 ** (2 / 3) * b0 ** (1 / 3) * c0 ** (1 / 3) * k ** (-1 / 3)
    b = a0 ** (1 / 3) * b0 ** (2 / 3) * c0 ** (-1 / 3) * k ** (1 / 3)
    c = a0 ** (1 / 3) * b0 ** (-1 / 3) * c0 ** (2 / 3) * k ** (1 / 3)
    return DiagonalMetric(a, b, c)


def conserved_quantities(geometry: Geometry, metric: DiagonalMetric) -> list[tuple[str, float]]:
    """Quantities constant along the flow for this geometry (may be empty)."""
    a, b, c = metric.as_tuple()
    if geometry is Geometry.ISOM_R2:
        return [("a*b", a * b), ("c*(a+b)", c * (a + b))]
    if geometry is Geometry.ISOM_R11:
        return [("a*c", a * c), ("b*(c-a)", b * (c - a))]
    if geometry is Geometry.HEISENBERG:
        return [("a*b", a * b), ("a*c", a * c)]
    return []


def asymptote_probe(trajectory: FlowTrajectory) -> dict:
    """Late-time diagnostics appropriate to the trajectory's geometry.

    SU2: the a/b ratio series and its terminal value (the flow becomes round).
    Isom(R2): deviations from the known limits sqrt(a0 b0) and
        c0/2 (sqrt(a0/b0)+sqrt(b0/a0)).
    SL2R: terminal a with its drift over the last decade of time (the limit
        has no closed form), and db/dt, dc/dt against 8.
    Isom(R1,1): deviations from sqrt(a0 c0) and db/dt against 16.
    """
    geometry = trajectory.geometry
    first = trajectory.samples[0].metric
    last = trajectory.samples[-1].metric
    a0, b0, c0 = first.as_tuple()
    a, b, c = last.as_tuple()
    out: dict = {"geometry": geometry.value, "t_last": trajectory.t_last}

    if geometry is Geometry.SU2:
        ratio = trajectory.values[:, 0] / trajectory.values[:, 1]
        out["ratio_series"] = ratio
        out["ratio_limit_estimate"] = float(ratio[-1])
        d = np.diff(ratio)
        out["ratio_monotone"] = (
            "increasing" if np.all(d > 0) else "decreasing" if np.all(d < 0)
            else "constant" if np.all(d == 0) else "mixed"
        )
    elif geometry is Geometry.ISOM_R2:
        lim_ab = math.sqrt(a0 * b0)
        lim_c = 0.5 * c0 * (math.sqrt(a0 / b0) + math.sqrt(b0 / a0))
        out.update(
            a_limit=lim_ab, b_limit=lim_ab, c_limit=lim_c,
            dev_a=abs(a - lim_ab), dev_b=abs(b - lim_ab), dev_c=abs(c - lim_c),
        )
    elif geometry is Geometry.SL2R:
        t_probe = trajectory.t_last / 10.0
        idx = int(np.searchsorted(trajectory.times, t_probe))
        idx = min(max(idx, 0), len(trajectory.samples) - 1)
        a_then = trajectory.samples[idx].metric.a
        rhs = flow_rhs(geometry, last)
        out.update(
            a_limit_estimate=a, a_drift_last_decade=abs(a - a_then),
            db_dt_minus_8=rhs[1] - 8.0, dc_dt_minus_8=rhs[2] - 8.0,
        )
    elif geometry is Geometry.ISOM_R11:
        lim = math.sqrt(a0 * c0)
        rhs = flow_rhs(geometry, last)
        out.update(
            ac_limit=lim, dev_a=abs(a - lim), dev_c=abs(c - lim),
            db_dt_minus_16=rhs[1] - 16.0,
        )
    return out
