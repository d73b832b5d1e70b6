"""
Integrator core module for the LRL laboratory.

This module provides:
- Adaptive Dormand-Prince 5(4) integration of any ForceModel with dense output
- The unwrapped polar angle and the z-pair accumulators carried as extra state
- Period and apsis events located on the dense output
- Invariant-drift reports and the CSV table of a trajectory
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy import optimize
from scipy.integrate import RK45, OdeSolution

from .base import PhaseState, OrbitContext, TWO_PI, polar_angle
from .models import ForceModel
from ..utils.constants import DEFAULT_VALUES
from ..utils.exceptions import (ZeroRadius, StepUnderflow, MaxSteps, NotPeriodic, BadParameter,
                                InsufficientSamples)

logger = logging.getLogger("lrl-lab.integrator")

_DEFAULTS = DEFAULT_VALUES["integration"]
_EVENT_ITER = DEFAULT_VALUES["events"]["max_iter"]


@dataclass(frozen=True)
class IntegrationConfig:
    t_span: Tuple[float, float]
    rel_tol: float = _DEFAULTS["rel_tol"]
    abs_tol: float = _DEFAULTS["abs_tol"]
    max_steps: int = _DEFAULTS["max_steps"]

    def __post_init__(self):
        t0, t1 = (float(x) for x in self.t_span)
        object.__setattr__(self, "t_span", (t0, t1))
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise BadParameter(f"Tolerances must be positive, got rel_tol={self.rel_tol}, abs_tol={self.abs_tol}")
        if not t1 > t0:
            raise BadParameter(f"t_span must satisfy t1 > t0, got ({t0}, {t1})")
        if int(self.max_steps) < 1:
            raise BadParameter(f"max_steps must be at least 1, got {self.max_steps}")

    @property
    def span(self) -> float:
        return self.t_span[1] - self.t_span[0]


def integrate_ode(fun: Callable[[float, np.ndarray], np.ndarray], t0: float, y0, t1: float,
                  rel_tol: float = _DEFAULTS["rel_tol"], abs_tol: float = _DEFAULTS["abs_tol"],
                  max_steps: int = _DEFAULTS["max_steps"],
                  watch: Optional[Callable[[float, np.ndarray], None]] = None):
    """Step scipy's RK45 from t0 to t1, keeping every step's interpolant.

    watch, when given, sees every accepted step and may abort with StepUnderflow.

    Returns:
        (t, y, sol): sample times, samples of shape (n, dim) and an OdeSolution

    Raises:
        StepUnderflow: If the step falls below 1e-14 of the span or the right side hits r_min;
            also raised by watch
        MaxSteps: If more than max_steps steps are needed
    """
    y0 = np.asarray(y0, dtype=float)
    min_step = _DEFAULTS["underflow_factor"] * abs(t1 - t0)
    solver = RK45(fun, t0, y0, t1, rtol=rel_tol, atol=abs_tol)
    ts: List[float] = [t0]
    ys: List[np.ndarray] = [y0.copy()]
    interpolants = []

    while solver.status == "running":
        if len(interpolants) >= max_steps:
            raise MaxSteps(f"Integration needed more than {max_steps} steps (reached t = {solver.t:.6g})",
                           details={"t": float(solver.t), "max_steps": int(max_steps)})
        try:
            message = solver.step()
        except ZeroRadius as e:
            raise StepUnderflow(f"Trajectory reached the collision guard near t = {solver.t:.6g}: {str(e)}",
                                details={"t": float(solver.t)})
        if solver.status == "failed":
            raise StepUnderflow(f"Step size underflow near t = {solver.t:.6g}: {message}",
                                details={"t": float(solver.t)})
        if solver.status == "running" and solver.step_size < min_step:
            raise StepUnderflow(f"Step size {solver.step_size:.3e} fell below {min_step:.3e} near t = {solver.t:.6g}",
                                details={"t": float(solver.t), "step": float(solver.step_size)})
        ts.append(solver.t)
        ys.append(solver.y.copy())
        interpolants.append(solver.dense_output())
        if watch is not None:
            watch(solver.t, solver.y)

    logger.debug("integration finished after %d steps (%d evaluations)", len(interpolants), solver.nfev)
    return np.array(ts), np.array(ys), OdeSolution(ts, interpolants)


class _ScaledSolution:
    """Dense output of a trajectory mapped through t -> a t, y -> scale * y."""

    def __init__(self, sol, time_factor: float, scale: np.ndarray):
        self.sol = sol
        self.time_factor = time_factor
        self.scale = scale

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = self.sol(t / self.time_factor)
        return out * self.scale.reshape((-1,) + (1,) * t.ndim)


class Trajectory:
    """Time-ordered samples of one model's solution with dense output.

    Columns of y are x, y, z, vx, vy, vz, the unwrapped polar angle about
    ``axis`` and, for families carrying a z-pair, z and z'.
    """

    def __init__(self, model: ForceModel, t: np.ndarray, y: np.ndarray, sol, axis: np.ndarray):
        self.model = model
        self.t = np.asarray(t, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.sol = sol
        self.axis = np.asarray(axis, dtype=float)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def r(self) -> np.ndarray:
        return self.y[:, 0:3]

    @property
    def v(self) -> np.ndarray:
        return self.y[:, 3:6]

    @property
    def theta(self) -> np.ndarray:
        return self.y[:, 6]

    @property
    def theta0(self) -> float:
        return float(self.y[0, 6])

    @property
    def radius(self) -> np.ndarray:
        return np.linalg.norm(self.r, axis=1)

    @property
    def phi(self) -> np.ndarray:
        """Unwrapped azimuth about the z-axis."""
        return np.unwrap(np.arctan2(self.y[:, 1], self.y[:, 0]))

    @property
    def has_z(self) -> bool:
        return self.y.shape[1] > 7

    def state(self, i: int) -> PhaseState:
        return PhaseState(self.t[i], self.y[i, 0:3], self.y[i, 3:6])

    def context(self, i: int) -> OrbitContext:
        if self.has_z:
            return OrbitContext(float(self.y[i, 6]), self.theta0, float(self.y[i, 7]), float(self.y[i, 8]))
        return OrbitContext(float(self.y[i, 6]), self.theta0)

    def dense(self, t: float) -> np.ndarray:
        return np.asarray(self.sol(float(t)), dtype=float)

    def states_at(self, t) -> np.ndarray:
        """Dense-output rows at the requested times, shape (len(t), columns)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.asarray(self.sol(t), dtype=float).T

    def rescaled(self, time_factor: float, length_factor: float) -> "Trajectory":
        """Image under t -> a t, r -> c r, v -> (c/a) v; angles are unchanged."""
        scale = np.ones(self.y.shape[1])
        scale[0:3] = length_factor
        scale[3:6] = length_factor / time_factor
        return Trajectory(self.model, self.t * time_factor, self.y * scale,
                          _ScaledSolution(self.sol, time_factor, scale), self.axis)


class _CollapseWatch:
    """Flags an orbit that winds inwards onto the origin.

    The peak radius of each full turn of the unwrapped angle is recorded. A
    collapse is reported once the peaks have fallen for collapse_turns turns in
    a row and the radius is below collapse_ratio of the largest radius reached.
    """

    def __init__(self, theta0: float, r0: float):
        self.theta0 = theta0
        self.turns = int(_DEFAULTS["collapse_turns"])
        self.ratio = float(_DEFAULTS["collapse_ratio"])
        self.turn = 0
        self.turn_peak = r0
        self.r_peak = r0
        self.peaks: List[float] = []

    def __call__(self, t: float, y: np.ndarray) -> None:
        rad = math.sqrt(float(y[0] * y[0] + y[1] * y[1] + y[2] * y[2]))
        self.r_peak = max(self.r_peak, rad)
        turn = int(abs(y[6] - self.theta0) // TWO_PI)
        if turn == self.turn:
            self.turn_peak = max(self.turn_peak, rad)
            return
        self.peaks.append(self.turn_peak)
        self.turn = turn
        self.turn_peak = rad
        recent = self.peaks[-(self.turns + 1):]
        falling = len(recent) == self.turns + 1 and all(b < a for a, b in zip(recent, recent[1:]))
        if falling and rad < self.ratio * self.r_peak:
            raise StepUnderflow(f"Orbit spirals onto the origin: r = {rad:.3e} after {turn} turns near t = {t:.6g}",
                                details={"t": float(t), "r": rad, "turns": turn})


def _rhs(m: ForceModel, axis: np.ndarray) -> Callable[[float, np.ndarray], np.ndarray]:
    n = axis
    uses_z = m.uses_z

    def fun(t, y):
        r = y[0:3]
        v = y[3:6]
        s = PhaseState.trusted(t, r, v)
        out = np.empty_like(y)
        out[0:3] = v
        out[3:6] = m.acceleration(s, theta=y[6])
        Ln = (n[0] * (r[1] * v[2] - r[2] * v[1]) + n[1] * (r[2] * v[0] - r[0] * v[2])
              + n[2] * (r[0] * v[1] - r[1] * v[0]))
        rn = r @ n
        rho2 = r @ r - rn * rn
        thetadot = Ln / rho2 if rho2 > 1e-300 else 0.0
        out[6] = thetadot
        if uses_z:
            out[7] = y[8] * thetadot
            out[8] = (m.z_source(s, y[6]) - y[7]) * thetadot
        return out

    return fun


def integrate(m: ForceModel, s0: PhaseState, cfg: IntegrationConfig) -> Trajectory:
    """Integrate model m from s0 over cfg.t_span.

    Raises:
        StepUnderflow: Approach to a singularity (collapse onto the origin)
        MaxSteps: Step budget exhausted
        ZeroAngularMomentum, BadParameter: If s0 is not valid for m
    """
    m.validate_state(s0)
    if abs(s0.t - cfg.t_span[0]) > 0:
        s0 = PhaseState(cfg.t_span[0], s0.r, s0.v)
    axis = m.angle_axis(s0)
    y0 = [*s0.r, *s0.v, polar_angle(s0.r, axis)]
    if m.uses_z:
        y0 += [0.0, 0.0]
    t, y, sol = integrate_ode(_rhs(m, axis), cfg.t_span[0], y0, cfg.t_span[1],
                              cfg.rel_tol, cfg.abs_tol, int(cfg.max_steps),
                              _CollapseWatch(y0[6], s0.radius))
    logger.info("integrated %s over [%g, %g]: %d samples", m.family, cfg.t_span[0], cfg.t_span[1], len(t))
    return Trajectory(m, t, y, sol, axis)


# ---------------------------------------------------------------- events

def find_period(traj: Trajectory) -> float:
    """Time for the unwrapped angle to advance by 2*pi from its initial value.

    Raises:
        NotPeriodic: If the angle turns by less than 2*pi over the span
    """
    th = traj.theta
    th0 = th[0]
    hits = np.nonzero(np.abs(th - th0) >= TWO_PI)[0]
    if hits.size == 0:
        swept = float(np.max(np.abs(th - th0)))
        raise NotPeriodic(f"Angle advanced by {swept:.6g} < 2*pi over the span",
                          details={"swept": swept})
    i = int(hits[0])
    lo, hi = float(traj.t[i - 1]), float(traj.t[i])

    def crossing(t):
        return abs(traj.dense(t)[6] - th0) - TWO_PI

    t_cross = optimize.bisect(crossing, lo, hi, xtol=1e-12 * max(1.0, abs(hi)),
                              maxiter=_EVENT_ITER, disp=False)
    period = float(t_cross - traj.t[0])
    logger.debug("period located at %.15g", period)
    return period


@dataclass(frozen=True)
class Apsides:
    r_min: float
    r_max: float
    t_min: float
    t_max: float


def find_apsides(traj: Trajectory) -> Apsides:
    """Smallest and largest distance, refined at the sign changes of r . v.

    Raises:
        InsufficientSamples: For fewer than 2 samples
    """
    if len(traj) < 2:
        raise InsufficientSamples("find_apsides needs at least 2 samples")
    radial = np.einsum("ij,ij->i", traj.r, traj.v)
    rad = traj.radius
    candidates = [(float(rad[0]), float(traj.t[0])), (float(rad[-1]), float(traj.t[-1]))]

    def rv(t):
        row = traj.dense(t)
        return float(row[0:3] @ row[3:6])

    for i in np.nonzero(np.sign(radial[:-1]) * np.sign(radial[1:]) < 0)[0]:
        tc = optimize.brentq(rv, traj.t[i], traj.t[i + 1], xtol=1e-14, maxiter=100)
        candidates.append((float(np.linalg.norm(traj.dense(tc)[0:3])), float(tc)))
    lo = min(candidates)
    hi = max(candidates)
    return Apsides(lo[0], hi[0], lo[1], hi[1])


# ---------------------------------------------------------------- invariant drift

@dataclass(frozen=True)
class InvariantReport:
    family: str
    values: Dict[str, np.ndarray]
    max_abs_drift: Dict[str, float]
    max_rel_drift: Dict[str, float]

    def to_dict(self) -> Dict[str, Any]:
        initial = {k: (v[0].tolist() if v.ndim > 1 else float(v[0])) for k, v in self.values.items()}
        return {
            "family": self.family,
            "initial": initial,
            "max_abs_drift": dict(self.max_abs_drift),
            "max_rel_drift": dict(self.max_rel_drift),
        }


def _drift(series: np.ndarray) -> Tuple[float, float]:
    q0 = series[0]
    if series.ndim > 1:
        diff = float(np.max(np.abs(series - q0)))
        size = float(np.linalg.norm(q0))
    else:
        diff = float(np.max(np.abs(series - q0)))
        size = abs(float(q0))
    return diff, (diff / size if size > 0 else diff)


def drift_report(m: ForceModel, traj: Trajectory) -> InvariantReport:
    """Max |Q(t) - Q(t0)| and its relative form for each invariant of m's family."""
    from .invariants import invariant_series

    values = invariant_series(m, traj)
    abs_drift: Dict[str, float] = {}
    rel_drift: Dict[str, float] = {}
    for name, series in values.items():
        abs_drift[name], rel_drift[name] = _drift(series)
    return InvariantReport(m.family, values, abs_drift, rel_drift)


def trajectory_table(traj: Trajectory) -> Tuple[List[str], np.ndarray]:
    """Column names and rows of the trajectory CSV.

    Columns: t, x, y, z, vx, vy, vz, theta_unwrapped, phi_unwrapped for spatial
    families, then one column per scalar invariant and three per vector invariant.
    """
    from .invariants import invariant_series

    header = ["t", "x", "y", "z", "vx", "vy", "vz", "theta_unwrapped"]
    columns = [traj.t[:, None], traj.y[:, 0:7]]
    if not traj.model.planar:
        header.append("phi_unwrapped")
        columns.append(traj.phi[:, None])
    for name, series in invariant_series(traj.model, traj).items():
        if series.ndim > 1:
            header += [f"{name}_x", f"{name}_y", f"{name}_z"]
            columns.append(series)
        else:
            header.append(name)
            columns.append(series[:, None])
    return header, np.hstack(columns)


def characteristic_time(m: ForceModel, s0: PhaseState) -> float:
    """Rough orbital time scale 2*pi*r0/|v0| used to size default spans."""
    speed = float(np.linalg.norm(s0.v))
    if speed == 0:
        return TWO_PI * math.sqrt(s0.radius)
    return TWO_PI * s0.radius / speed


__all__ = [
    "IntegrationConfig", "Trajectory", "integrate", "integrate_ode", "find_period", "find_apsides",
    "Apsides", "InvariantReport", "drift_report", "trajectory_table", "characteristic_time",
]
