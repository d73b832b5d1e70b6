"""
Reduction core module for the LRL laboratory.

This module provides:
- The reduced variables (y, u1, u1', u2 [, u3]) of integrated trajectories, with
  y the orbital angle (or the azimuth for three-dimensional motion)
- Resampling on a uniform y grid through the dense output
- The oscillator residual of u1 and the Ermanno-Bernoulli constants
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from .base import OrbitContext, PhaseState, check_radius, cross, norm, unwrap_angle
from .integrator import Trajectory
from .invariants import evaluate, l_of_theta
from .models import (ForceModel, Kepler, CentralAngle, DirectionOnly, Drag, KeplerOrbitFamily, PowerLaw,
                     MagnitudeConserved, signed_l)
from ..utils.constants import DEFAULT_VALUES
from ..utils.exceptions import (BadParameter, InsufficientSamples, LabError, NonMonotoneAngle,
                                NumericalBreakdown, UnsupportedFamily)

logger = logging.getLogger("lrl-lab.reduction")

MIN_SAMPLES = 7


@dataclass(frozen=True)
class ReducedTrajectory:
    family: str
    variable: str
    t: np.ndarray
    y: np.ndarray
    u1: np.ndarray
    u1prime: np.ndarray
    extra: Dict[str, np.ndarray] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.y)

    @property
    def dy(self) -> float:
        return float(self.y[1] - self.y[0]) if len(self.y) > 1 else 0.0

    def drift(self) -> Dict[str, float]:
        """Largest relative departure of each conserved reduced variable from its first value."""
        out = {}
        for name, series in self.extra.items():
            ref = max(abs(float(series[0])), 1e-300)
            out[name] = float(np.max(np.abs(series - series[0]))) / ref
        return out

    def table(self) -> Tuple[List[str], np.ndarray]:
        header = ["y", "u1", "u1prime", *self.extra]
        return header, np.column_stack([self.y, self.u1, self.u1prime, *self.extra.values()])


@dataclass(frozen=True)
class EBConstants:
    J_plus: complex
    J_minus: complex
    scatter: float

    @property
    def modulus(self) -> float:
        return abs(self.J_plus)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "J_plus": [self.J_plus.real, self.J_plus.imag],
            "J_minus": [self.J_minus.real, self.J_minus.imag],
            "modulus": self.modulus,
            "scatter": self.scatter,
        }


# ---------------------------------------------------------------- per-family variables

Reducer = Callable[[np.ndarray, float], Tuple[float, float, Dict[str, float]]]


def _planar(row: np.ndarray) -> Tuple[float, float, float, float]:
    """|r|, r-dot, signed L and theta-dot of a planar dense-output row."""
    r, v = row[0:3], row[3:6]
    rad = check_radius(r)
    L = float(r[0] * v[1] - r[1] * v[0])
    return rad, float(r @ v) / rad, L, L / rad ** 2


def _kepler(m: Kepler) -> Reducer:
    def reduce_row(row, y):
        r, v = row[0:3], row[3:6]
        rad = check_radius(r)
        L = norm(cross(r, v))
        rdot = float(r @ v) / rad
        return m.mu - L ** 2 / rad, L * rdot, {"u2": L}
    return reduce_row


def _central_angle(m: CentralAngle) -> Reducer:
    def reduce_row(row, y):
        rad, rdot, L, thetadot = _planar(row)
        return L / rad - row[7], -L * rdot / (rad ** 2 * thetadot) - row[8], {"u2": L}
    return reduce_row


def _drag(m: Drag) -> Reducer:
    def reduce_row(row, y):
        rad, rdot, L, thetadot = _planar(row)
        u1 = 1.0 / rad - row[7]
        u1prime = -rdot / (rad ** 2 * thetadot) - row[8]
        return u1, u1prime, {"u2": m.angular_law(L, y)}
    return reduce_row


def _kepler_orbit_family(m: KeplerOrbitFamily) -> Reducer:
    power = isinstance(m, PowerLaw)
    c = m.mu if power else 1.0

    def reduce_row(row, y):
        rad, rdot, L, thetadot = _planar(row)
        s = PhaseState.trusted(0.0, row[0:3], row[3:6])
        u2 = m.k_constant(s) if power else m.kappa(s)
        return c - u2 ** 2 / rad, u2 ** 2 * rdot / (rad ** 2 * thetadot), {"u2": u2}
    return reduce_row


def _direction_only(m: DirectionOnly, traj: Trajectory) -> Reducer:
    s0 = traj.state(0)
    y0 = traj.theta0
    L0 = signed_l(s0)
    J = evaluate(m, s0, OrbitContext(y0, y0))["J"]

    def reduce_row(row, y):
        rad, rdot, L, thetadot = _planar(row)
        _, transverse = m.radial_transverse(rad, y)
        Ldot = rad * transverse
        u1 = L ** 2 / rad - m.U(y)
        u1prime = (2.0 * L * Ldot / thetadot) / rad - L ** 2 * rdot / (rad ** 2 * thetadot) - m.dU(y)
        # 1/L less the growth predicted by the quadrature
        u2 = 1.0 / L - (1.0 / l_of_theta(m, L0, J, y0, y) - 1.0 / L0)
        return u1, u1prime, {"u2": u2}
    return reduce_row


def _magnitude_conserved(m: MagnitudeConserved) -> Reducer:
    def reduce_row(row, y):
        r, v = row[0:3], row[3:6]
        rad = check_radius(r)
        theta = math.acos(max(-1.0, min(1.0, r[2] / rad)))
        sin_t, cos_t = math.sin(theta), math.cos(theta)
        that = np.array([cos_t * math.cos(y), cos_t * math.sin(y), -sin_t])
        phat = np.array([-math.sin(y), math.cos(y), 0.0])
        rdot = float(r @ v) / rad
        thetadot = float(v @ that) / rad
        phidot = float(v @ phat) / (rad * sin_t)
        L2 = float(np.dot(cross(r, v), cross(r, v)))
        h = m.h(rad)
        Jr = L2 / rad - m.k
        Jtheta = -rad ** 2 * (rdot * thetadot - h * phidot * sin_t)
        Jphi = -rad ** 2 * (rdot * phidot * sin_t + h * thetadot)
        return Jr * sin_t + Jtheta * cos_t, Jphi, {"u2": L2, "u3": Jr * cos_t - Jtheta * sin_t}
    return reduce_row


def _reducer(m: ForceModel, traj: Trajectory) -> Tuple[Reducer, str]:
    if isinstance(m, Kepler):
        return _kepler(m), "theta"
    if isinstance(m, CentralAngle):
        return _central_angle(m), "theta"
    if isinstance(m, Drag):
        return _drag(m), "theta"
    if isinstance(m, KeplerOrbitFamily):
        return _kepler_orbit_family(m), "theta"
    if isinstance(m, DirectionOnly):
        return _direction_only(m, traj), "theta"
    if isinstance(m, MagnitudeConserved):
        return _magnitude_conserved(m), "phi"
    raise UnsupportedFamily(f"No reduction known for {m.family}")


# ---------------------------------------------------------------- resampling

def _angle_of(traj: Trajectory, variable: str) -> Tuple[np.ndarray, Callable[[np.ndarray, float], float]]:
    if variable == "theta":
        return traj.theta, lambda row, prev: float(row[6])
    return traj.phi, lambda row, prev: unwrap_angle(math.atan2(row[1], row[0]), prev)


def _resample(traj: Trajectory, variable: str, dy: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Times, y values and dense rows on a uniform y grid."""
    ys, angle = _angle_of(traj, variable)
    steps = np.diff(ys)
    if ys.size < 2 or not (np.all(steps > 0) or np.all(steps < 0)):
        raise NonMonotoneAngle(f"The angle {variable} is not strictly monotone along the trajectory",
                               details={"samples": int(ys.size)})
    direction = 1.0 if steps[0] > 0 else -1.0
    count = int(math.floor(abs(ys[-1] - ys[0]) / dy)) + 1
    targets = ys[0] + direction * dy * np.arange(count)

    times = np.empty(count)
    rows = []
    i = 0
    for n, target in enumerate(targets):
        while i < ys.size - 2 and direction * (ys[i + 1] - target) < 0:
            i += 1
        lo, hi = float(traj.t[i]), float(traj.t[i + 1])
        prev = float(ys[i])
        f = lambda t: angle(traj.dense(t), prev) - target
        flo, fhi = f(lo), f(hi)
        if flo == 0.0:
            tn = lo
        elif fhi == 0.0:
            tn = hi
        else:
            try:
                tn = optimize.brentq(f, lo, hi, xtol=1e-14 * max(1.0, abs(hi)), rtol=4 * np.finfo(float).eps)
            except ValueError as e:
                raise NonMonotoneAngle(f"Failed to locate {variable} = {target:.6g}: {str(e)}")
        times[n] = tn
        rows.append(traj.dense(tn))
    return times, targets, np.asarray(rows)


def reduce(m: ForceModel, traj: Trajectory, dy: Optional[float] = None) -> ReducedTrajectory:
    """Reduced variables of traj on a uniform grid in the new independent variable.

    Args:
        m: The model traj was integrated with
        traj: Integrated trajectory with dense output
        dy: Grid spacing in y; defaults to DEFAULT_VALUES["reduction"]["dy"]

    Raises:
        NonMonotoneAngle: If y does not advance monotonically
        UnsupportedFamily: For families without a reduction
    """
    dy = DEFAULT_VALUES["reduction"]["dy"] if dy is None else float(dy)
    if dy <= 0:
        raise BadParameter(f"dy must be positive, got {dy}")
    reduce_row, variable = _reducer(m, traj)
    t, y, rows = _resample(traj, variable, dy)
    u1 = np.empty(len(y))
    u1prime = np.empty(len(y))
    extra: Dict[str, List[float]] = {}
    try:
        for n, (row, yn) in enumerate(zip(rows, y)):
            a, b, rest = reduce_row(row, float(yn))
            u1[n], u1prime[n] = a, b
            for key, value in rest.items():
                extra.setdefault(key, []).append(float(value))
    except LabError:
        raise
    except (OverflowError, ZeroDivisionError, ValueError) as e:
        raise NumericalBreakdown(f"Failed to reduce {m.family} trajectory: {str(e)}")
    logger.info("reduced %s trajectory to %d samples in %s", m.family, len(y), variable)
    return ReducedTrajectory(m.family, variable, t, y, u1, u1prime,
                             {k: np.asarray(v) for k, v in extra.items()})


def reduce_many(m: ForceModel, trajectories: Sequence[Trajectory], dy: Optional[float] = None,
                workers: Optional[int] = None) -> List[ReducedTrajectory]:
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda traj: reduce(m, traj, dy), trajectories))


def harmonic_residual(rt: ReducedTrajectory) -> float:
    """max |u1'' + u1| over interior samples, u1'' from a five-point stencil on u1'.

    Raises:
        InsufficientSamples: Below seven samples
    """
    if len(rt) < MIN_SAMPLES:
        raise InsufficientSamples(f"harmonic_residual needs at least {MIN_SAMPLES} samples, got {len(rt)}")
    f = rt.u1prime
    h = rt.dy
    second = (-f[4:] + 8.0 * f[3:-1] - 8.0 * f[1:-3] + f[:-4]) / (12.0 * h)
    return float(np.max(np.abs(second + rt.u1[2:-2])))


def eb_series(rt: ReducedTrajectory) -> np.ndarray:
    """Per-sample J+ = exp(i y) (u1 + i u1')."""
    return np.exp(1j * rt.y) * (rt.u1 + 1j * rt.u1prime)


def eb_constants(rt: ReducedTrajectory) -> EBConstants:
    """Mean Ermanno-Bernoulli constants; J- is the conjugate series."""
    series = eb_series(rt)
    mean = complex(np.mean(series))
    minus = complex(np.mean(np.exp(-1j * rt.y) * (rt.u1 - 1j * rt.u1prime)))
    scatter = float(np.max(np.abs(series - mean)))
    return EBConstants(mean, minus, scatter)


__all__ = [
    "ReducedTrajectory", "EBConstants", "reduce", "reduce_many", "harmonic_residual", "eb_series",
    "eb_constants",
]
