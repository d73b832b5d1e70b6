"""
Base core module for the LRL laboratory.

This module provides the vector algebra, coordinate conversions and phase-space
state types shared by every other core module. Mass is scaled to unity throughout,
so velocity and momentum coincide.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..utils.constants import DEFAULT_VALUES
from ..utils.exceptions import ZeroRadius, BadParameter

R_MIN = DEFAULT_VALUES["geometry"]["r_min"]
TWO_PI = 2.0 * np.pi
Z_HAT = np.array([0.0, 0.0, 1.0])


def vec3(values) -> np.ndarray:
    """Coerce a 3-sequence into a finite float vector.

    Raises:
        BadParameter: If the input is not three finite numbers
    """
    arr = np.asarray(values, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise BadParameter(f"Expected 3 components, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise BadParameter(f"Non-finite vector components: {arr.tolist()}")
    return arr


def cross(a, b) -> np.ndarray:
    """Right-handed cross product a x b."""
    return np.cross(np.asarray(a, dtype=float), np.asarray(b, dtype=float))


def norm(a) -> float:
    return float(np.linalg.norm(a))


def unit(a) -> np.ndarray:
    n = norm(a)
    if n == 0.0:
        raise BadParameter("Cannot normalize the zero vector")
    return np.asarray(a, dtype=float) / n


def check_radius(r) -> float:
    """Return |r|, raising ZeroRadius inside the collision guard."""
    rad = norm(r)
    if rad < R_MIN:
        raise ZeroRadius(f"|r| = {rad:.3e} is below r_min = {R_MIN:.0e}")
    return rad


def orthonormal_frame(axis) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Build (e1, e2, n) with n along axis and e1 as close to the x-axis as possible.

    For axis = z this is the standard (x, y, z) frame, so polar angles in the
    xy-plane are measured from the x-axis.
    """
    n = unit(axis)
    ref = np.array([1.0, 0.0, 0.0])
    if abs(float(np.dot(ref, n))) > 0.9:
        ref = np.array([0.0, 1.0, 0.0])
    e1 = unit(ref - np.dot(ref, n) * n)
    e2 = np.cross(n, e1)
    return e1, e2, n


def unwrap_angle(angle: float, prev: Optional[float]) -> float:
    """Shift angle by a multiple of 2*pi to the branch nearest prev."""
    if prev is None:
        return float(angle)
    return float(angle + TWO_PI * np.round((prev - angle) / TWO_PI))


def branch_arctan(k: float, x):
    """Continuous branch of arctan(k tan x) for k > 0.

    Agrees with x at every multiple of pi, so it advances by pi per half-turn of x
    instead of jumping at the poles of tan.
    """
    x = np.asarray(x, dtype=float)
    principal = np.arctan2(k * np.sin(x), np.cos(x))
    out = principal + TWO_PI * np.round((x - principal) / TWO_PI)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PhaseState:
    """Cartesian position-velocity state at time t."""

    t: float
    r: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "r", vec3(self.r))
        object.__setattr__(self, "v", vec3(self.v))

    @property
    def radius(self) -> float:
        return norm(self.r)

    @property
    def angular_momentum(self) -> np.ndarray:
        return cross(self.r, self.v)

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.r, self.v])

    @classmethod
    def from_array(cls, t: float, y) -> "PhaseState":
        y = np.asarray(y, dtype=float)
        return cls(t, y[0:3], y[3:6])

    @classmethod
    def trusted(cls, t: float, r: np.ndarray, v: np.ndarray) -> "PhaseState":
        """Build without validation; for integrator inner loops only."""
        s = object.__new__(cls)
        object.__setattr__(s, "t", t)
        object.__setattr__(s, "r", r)
        object.__setattr__(s, "v", v)
        return s


@dataclass(frozen=True)
class PolarState:
    t: float
    r: float
    theta: float
    rdot: float
    thetadot: float


@dataclass(frozen=True)
class SphericalState:
    t: float
    r: float
    theta: float
    phi: float
    rdot: float
    thetadot: float
    phidot: float


def plane_axis(s: PhaseState) -> np.ndarray:
    """Unit angular-momentum direction, or z for purely radial motion."""
    L = s.angular_momentum
    Lmag = norm(L)
    if Lmag <= 1e-300 or Lmag < 1e-14 * max(s.radius * norm(s.v), 1e-300):
        return Z_HAT.copy()
    return L / Lmag


def polar_angle(r, axis=Z_HAT) -> float:
    """Angle of r about axis, measured from the frame's e1 direction."""
    e1, e2, _ = orthonormal_frame(axis)
    return float(np.arctan2(np.dot(r, e2), np.dot(r, e1)))


def cartesian_to_polar(s: PhaseState, prev_theta: Optional[float] = None,
                       axis: Optional[np.ndarray] = None) -> PolarState:
    """Convert a planar state to polar coordinates.

    Args:
        s: Phase state (motion assumed confined to a plane through the origin)
        prev_theta: Previous unwrapped angle; theta is continued onto its branch
        axis: Plane normal; defaults to the direction of r x v (z for radial motion)

    Returns:
        PolarState with unwrapped theta

    Raises:
        ZeroRadius: If |r| < r_min
    """
    rad = check_radius(s.r)
    n = plane_axis(s) if axis is None else unit(axis)
    rhat = s.r / rad
    theta = unwrap_angle(polar_angle(s.r, n), prev_theta)
    rdot = float(np.dot(rhat, s.v))
    thetadot = float(np.dot(np.cross(rhat, s.v), n) / rad)
    return PolarState(s.t, rad, theta, rdot, thetadot)


def polar_to_cartesian(p: PolarState, axis=Z_HAT) -> PhaseState:
    e1, e2, _ = orthonormal_frame(axis)
    rhat = np.cos(p.theta) * e1 + np.sin(p.theta) * e2
    that = -np.sin(p.theta) * e1 + np.cos(p.theta) * e2
    return PhaseState(p.t, p.r * rhat, p.rdot * rhat + p.r * p.thetadot * that)


def cartesian_to_spherical(s: PhaseState, prev_phi: Optional[float] = None) -> SphericalState:
    """Convert to spherical coordinates about the z-axis with unwrapped azimuth.

    Raises:
        ZeroRadius: If |r| < r_min
    """
    rad = check_radius(s.r)
    x, y, z = s.r
    theta = float(np.arccos(np.clip(z / rad, -1.0, 1.0)))
    phi = unwrap_angle(float(np.arctan2(y, x)), prev_phi)
    rhat = s.r / rad
    that = np.array([np.cos(theta) * np.cos(phi), np.cos(theta) * np.sin(phi), -np.sin(theta)])
    phat = np.array([-np.sin(phi), np.cos(phi), 0.0])
    sin_t = np.sin(theta)
    phidot = float(np.dot(s.v, phat) / (rad * sin_t)) if sin_t > 0 else 0.0
    return SphericalState(s.t, rad, theta, phi, float(np.dot(rhat, s.v)),
                          float(np.dot(s.v, that) / rad), phidot)


def local_frame(r, axis=Z_HAT) -> Tuple[np.ndarray, np.ndarray]:
    """Unit radial and in-plane transverse vectors (r_hat, theta_hat) about axis."""
    rhat = unit(r)
    n = unit(axis)
    that = np.cross(n, rhat)
    tn = norm(that)
    if tn == 0.0:
        raise BadParameter("Position is parallel to the plane normal")
    return rhat, that / tn



@dataclass(frozen=True)
class OrbitContext:
    """Per-trajectory quantities some invariants need beyond the phase state.

    theta is the unwrapped polar angle, theta0 its value at the start of the
    trajectory, and (z, zprime) the z-pair accumulators integrated alongside.
    """

    theta: Optional[float] = None
    theta0: float = 0.0
    z: float = 0.0
    zprime: float = 0.0
