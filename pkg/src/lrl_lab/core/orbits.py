"""
Orbits core module for the LRL laboratory.

This module provides:
- Orbit constants captured once at the start of a trajectory
- The closed-form orbit equation r(theta) of every family that has one
- Azimuth and time quadratures along the orbit
- Kepler's closed-form time relations, Kepler's equation and the anomalies
- The geometry of the MICZ orbit (cone, plane and the angles between them)
- Conic fitting and the areal law
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy import optimize

from .base import (PhaseState, Z_HAT, TWO_PI, branch_arctan, check_radius, norm, unit,
                   orthonormal_frame, polar_angle)
from .invariants import InvariantSet, evaluate, z_pair, danby_z, l_of_theta
from .models import (ForceModel, Kepler, CentralAngle, TimeDependent, DirectionOnly, Drag,
                     KeplerOrbitFamily, PowerLaw, MagnitudeConserved, MICZ, signed_l)
from .specialfn import quad_adaptive
from ..utils.constants import VALIDATION_RULES
from ..utils.exceptions import (BadParameter, DomainError, UnboundedOrbit, UnsupportedFamily,
                                ZoneBoundary, SingularOrbit, InsufficientSamples, LabError)

logger = logging.getLogger("lrl-lab.orbits")

_ODE_RTOL = 1e-12
_ODE_ATOL = 1e-14
_ZONE_GRID = 257
_APSIS_SNAP = 1e-13


@dataclass(frozen=True)
class ConicParams:
    """r = scale / (1 + ecc cos(theta - theta_ref))."""

    scale: float
    ecc: float
    theta_ref: float = 0.0

    def __post_init__(self):
        if not self.scale > 0:
            raise BadParameter(f"Conic scale must be positive, got {self.scale}")

    def radius(self, theta: float) -> float:
        d = 1.0 + self.ecc * math.cos(theta - self.theta_ref)
        if d <= 0:
            raise UnboundedOrbit(f"Conic escapes at theta = {theta:.6g}")
        return self.scale / d


@dataclass(frozen=True)
class OrbitConstants:
    """Everything the closed forms need, fixed at the initial state.

    theta0 is measured in the family's own angle: the polar angle about the
    plane normal for planar motion and Kepler, the angle from J for the
    magnitude-conserved family and MICZ. direction is the sign of theta-dot there.
    """

    model: ForceModel
    state: PhaseState
    invariants: InvariantSet
    axis: np.ndarray
    theta0: float
    L0: float
    direction: float = 1.0
    phi0: float = 0.0

    @property
    def t0(self) -> float:
        return self.state.t

    def j_components(self) -> Tuple[float, float]:
        """In-plane components of J in the frame the angle is measured in."""
        J = np.asarray(self.invariants["J"], dtype=float)
        e1, e2, _ = orthonormal_frame(self.axis)
        return float(J @ e1), float(J @ e2)

    def j_along(self, theta: float) -> float:
        j1, j2 = self.j_components()
        return j1 * math.cos(theta) + j2 * math.sin(theta)


def _polar_from(axis: np.ndarray, r: np.ndarray) -> float:
    """Angle between r and axis."""
    return float(np.arccos(np.clip(float(unit(r) @ unit(axis)), -1.0, 1.0)))


def orbit_constants(m: ForceModel, s0: PhaseState) -> OrbitConstants:
    """Capture the invariants and reference angle of the orbit through s0.

    Raises:
        UnsupportedFamily: For families without an orbit equation
        ZeroAngularMomentum: Where the family divides by L
    """
    inv = evaluate(m, s0)
    if isinstance(m, (MagnitudeConserved, MICZ)):
        J = np.asarray(inv["J"], dtype=float)
        if norm(J) == 0:
            raise BadParameter("J = 0: the orbit has no polar axis")
        axis = unit(J)
        theta0 = _polar_from(axis, s0.r)
        r = check_radius(s0.r)
        cos_dot = (float(axis @ s0.v) - float(axis @ s0.r) * float(s0.r @ s0.v) / r ** 2) / r
        direction = -1.0 if cos_dot > 0 else 1.0
        return OrbitConstants(m, s0, inv, axis, theta0, norm(s0.angular_momentum), direction,
                              polar_angle(s0.r, axis))
    if isinstance(m, Kepler):
        axis = unit(s0.angular_momentum)
        return OrbitConstants(m, s0, inv, axis, polar_angle(s0.r, axis), norm(s0.angular_momentum))
    if m.planar:
        return OrbitConstants(m, s0, inv, Z_HAT.copy(), polar_angle(s0.r, Z_HAT),
                              signed_l(s0, required=not isinstance(m, (CentralAngle, TimeDependent))))
    raise UnsupportedFamily(f"No orbit equation for family {m.family!r}")


# ---------------------------------------------------------------- z along the orbit

def _angle_ode(fun: Callable[[float, np.ndarray], np.ndarray], y0, theta0: float, theta: float) -> np.ndarray:
    from .integrator import integrate_ode

    y0 = np.asarray(y0, dtype=float)
    if theta == theta0:
        return y0
    _, ys, _ = integrate_ode(fun, theta0, y0, theta, _ODE_RTOL, _ODE_ATOL)
    return ys[-1]


def _drag_l(m: Drag, consts: OrbitConstants, theta: float) -> float:
    c = m.angular_law(consts.L0, consts.theta0)
    return m.l_from_law(c, theta, math.copysign(1.0, consts.L0))


def _drag_source(m: Drag, consts: OrbitConstants) -> Callable[[float], float]:
    def v(th):
        L = _drag_l(m, consts, th)
        g = m.mu if m.g_kind == "kepler" else m.w(th)
        return g / L ** 2

    return v


def _z_of(m: ForceModel, consts: OrbitConstants, theta: float) -> float:
    if isinstance(m, Drag):
        if m.f_kind == "danby" and m.g_kind == "kepler" and m.alpha != 0:
            c = m.angular_law(consts.L0, consts.theta0)
            return danby_z(c, m.alpha, m.mu, consts.theta0, theta).z
        return z_pair(_drag_source(m, consts), consts.theta0, theta).z
    return z_pair(m.v, consts.theta0, theta).z


def _positive_radius(numerator: float, denominator: float, theta: float) -> float:
    if denominator == 0 or numerator / denominator <= 0:
        raise UnboundedOrbit(f"The orbit denominator has the wrong sign at theta = {theta:.6g}",
                             details={"theta": theta, "denominator": denominator})
    return numerator / denominator


# ---------------------------------------------------------------- orbit equation

def orbit_radius(m: ForceModel, consts: OrbitConstants, theta: float) -> float:
    """Closed-form r(theta) of the orbit described by consts.

    For the z-pair families z(theta) is solved from theta0; the direction-only
    families integrate L(theta) and the time-dependent family composes with
    time_of_angle.

    Raises:
        UnboundedOrbit: If the denominator is not positive at theta
        UnsupportedFamily: For FLGR and Monopole
    """
    theta = float(theta)
    try:
        if isinstance(m, Kepler):
            return _positive_radius(consts.L0 ** 2, m.mu + consts.j_along(theta), theta)
        if isinstance(m, PowerLaw):
            A = m.mu / float(consts.invariants["k"]) ** 2
            return _positive_radius(1.0, A + consts.j_along(theta), theta)
        if isinstance(m, KeplerOrbitFamily):
            A = 1.0 / float(consts.invariants["kappa"]) ** 2
            return _positive_radius(1.0, A + consts.j_along(theta), theta)
        if isinstance(m, CentralAngle):
            return _positive_radius(consts.L0, _z_of(m, consts, theta) + consts.j_along(theta), theta)
        if isinstance(m, TimeDependent):
            t = time_of_angle(m, consts, theta)
            return _positive_radius(m.g(t) * consts.L0, _z_of(m, consts, theta) + consts.j_along(theta), theta)
        if isinstance(m, DirectionOnly):
            J = consts.j_components()
            L = l_of_theta(m, consts.L0, J, consts.theta0, theta)
            return _positive_radius(L ** 2, m.U(theta) + consts.j_along(theta), theta)
        if isinstance(m, Drag):
            return _positive_radius(1.0, _z_of(m, consts, theta) + consts.j_along(theta), theta)
        if isinstance(m, MagnitudeConserved):
            J = norm(consts.invariants["J"])
            return _positive_radius(consts.L0 ** 2, m.k + J * math.cos(theta), theta)
        if isinstance(m, MICZ):
            return micz_radius(m.mu, consts.invariants, theta, convention="chi")
    except SingularOrbit as e:
        raise UnboundedOrbit(f"Failed to evaluate the orbit at theta = {theta:.6g}: {e.message}",
                             details=e.details)
    raise UnsupportedFamily(f"No orbit equation for family {m.family!r}")


def orbit_table(m: ForceModel, consts: OrbitConstants, thetas) -> Tuple[List[str], np.ndarray]:
    """Rows of (theta, r) and, for the magnitude-conserved family, phi."""
    thetas = np.asarray(thetas, dtype=float)
    rows = []
    with_phi = isinstance(m, MagnitudeConserved)
    for th in thetas:
        row = [float(th), orbit_radius(m, consts, float(th))]
        if with_phi:
            row.append(azimuth_of_polar(m, consts, float(th)).phi)
        rows.append(row)
    header = ["theta", "r"] + (["phi"] if with_phi else [])
    return header, np.array(rows, dtype=float).reshape(len(rows), len(header))


def orbit_angle(consts: OrbitConstants, traj, i: int) -> float:
    """The family's orbit angle at sample i of a trajectory started from consts.state."""
    if isinstance(consts.model, (MagnitudeConserved, MICZ)):
        return _polar_from(consts.axis, traj.r[i])
    return float(traj.theta[i])


def orbit_residual(m: ForceModel, consts: OrbitConstants, traj, samples: int = 200) -> float:
    """Largest relative gap between the closed-form r(theta) and the integrated |r|.

    Evaluated at up to ``samples`` evenly spaced trajectory samples.
    """
    if len(traj) < 2:
        raise InsufficientSamples("orbit_residual needs at least 2 samples")
    idx = np.unique(np.linspace(0, len(traj) - 1, min(samples, len(traj))).astype(int))
    rad = traj.radius
    worst = 0.0
    for i in idx:
        closed = orbit_radius(m, consts, orbit_angle(consts, traj, int(i)))
        worst = max(worst, abs(closed - rad[i]) / rad[i])
    logger.debug("orbit residual over %d samples: %.3g", idx.size, worst)
    return worst


# ---------------------------------------------------------------- azimuth

@dataclass(frozen=True)
class AzimuthResult:
    theta: float
    phi: float
    closed_form: Optional[float] = None
    residual: Optional[float] = None


def monopole_lambda(m: MagnitudeConserved, radii=(0.5, 1.0, 2.0, 4.0)) -> Optional[float]:
    """lambda when h(r) = -lambda/r exactly, else None (also None for h = 0)."""
    try:
        values = np.array([r * m.h(r) for r in radii])
    except LabError:
        return None
    lam = -float(np.mean(values))
    if lam == 0 or np.ptp(values) > 1e-12 * max(1.0, abs(lam)):
        return None
    return lam


def _arcsec(x: float) -> float:
    if abs(x) < 1.0:
        if abs(x) > 1.0 - 1e-12:
            x = math.copysign(1.0, x)
        else:
            raise ZoneBoundary(f"arcsec argument {x:.6g} lies inside (-1, 1)")
    return math.acos(1.0 / x)


def monopole_azimuth(lam: float, k: float, L: float, J: float, theta0: float, theta: float) -> float:
    """Closed-form azimuth increment for h = -lambda/r along an arc where theta increases.

    k = 0 gives the arcsec form; otherwise two arctan terms, each dropped when
    its coefficient k + J or k - J vanishes. J may be given with either sign.

    Raises:
        ZoneBoundary: If theta or theta0 lies outside the accessible zone
        BadParameter: For lambda = 0
    """
    if lam == 0:
        raise BadParameter("monopole_azimuth needs lambda != 0")
    sgn = math.copysign(1.0, lam)
    if k == 0:
        c = math.sqrt(1.0 + L ** 2 / lam ** 2)
        return sgn * (_arcsec(c * math.sin(theta)) - _arcsec(c * math.sin(theta0)))

    a2 = (J * L / lam) ** 2

    def phi_of(x: float) -> float:
        q = a2 * (1.0 - x * x) - (k + J * x) ** 2
        if q < 0:
            if q < -1e-12 * max(1.0, a2):
                raise ZoneBoundary(f"cos(theta) = {x:.6g} lies outside the accessible zone",
                                   details={"radicand": q})
            q = 0.0
        sq = math.sqrt(q)
        out = 0.0
        if k + J != 0:
            n1 = a2 - k * k - J * k - (a2 + J * J + J * k) * x
            out += 0.5 * math.atan2(n1 * math.copysign(1.0, k + J), abs(k + J) * sq)
        if k - J != 0:
            n2 = a2 - k * k + J * k + (a2 + J * J - J * k) * x
            out -= 0.5 * math.atan2(n2 * math.copysign(1.0, k - J), abs(k - J) * sq)
        return out

    return sgn * (phi_of(math.cos(theta)) - phi_of(math.cos(theta0)))


def azimuth_of_polar(m: MagnitudeConserved, consts: OrbitConstants, theta: float,
                     tol: float = 1e-11) -> AzimuthResult:
    """Azimuth about J at polar angle theta, along the arc leaving theta0.

    The increment is -sign(theta-dot) times the integral of
    h L / (sin theta (J^2 sin^2 theta - h^2 L^2)^(1/2)) from theta0 to theta,
    with h evaluated on the orbit r(theta). For h = -lambda/r the closed form
    is evaluated too and the disagreement returned.

    Raises:
        ZoneBoundary: If the radicand vanishes strictly inside the range
        UnboundedOrbit: From orbit_radius
    """
    if not isinstance(m, MagnitudeConserved):
        raise UnsupportedFamily(f"azimuth_of_polar applies to magnitude_conserved, not {m.family!r}")
    theta = float(theta)
    L = consts.L0
    J = norm(consts.invariants["J"])

    def radicand(th: float) -> Tuple[float, float]:
        h = m.h(orbit_radius(m, consts, th))
        return (J * math.sin(th)) ** 2 - (h * L) ** 2, h

    interior = np.linspace(consts.theta0, theta, _ZONE_GRID)[1:-1]
    for th in interior:
        rad, _ = radicand(float(th))
        if rad <= 0:
            raise ZoneBoundary(f"theta = {th:.6g} lies outside the zone reached from theta0 = {consts.theta0:.6g}",
                               details={"theta": float(th), "radicand": rad})

    def integrand(th: float) -> float:
        rad, h = radicand(th)
        if rad <= 0:
            return 0.0
        return h * L / (math.sin(th) * math.sqrt(rad))

    increment = -quad_adaptive(integrand, consts.theta0, theta, tol=tol, limit=200).value
    phi = consts.phi0 + consts.direction * increment

    closed = residual = None
    lam = monopole_lambda(m)
    if lam is not None:
        cf = monopole_azimuth(lam, m.k, L, J, consts.theta0, theta)
        closed = consts.phi0 + consts.direction * cf
        residual = abs(cf - increment)
        logger.debug("azimuth closed-form residual %.3e at theta = %g", residual, theta)
    return AzimuthResult(theta, phi, closed, residual)


# ---------------------------------------------------------------- time along the orbit

def _time_dependent_tau(m: TimeDependent, consts: OrbitConstants, theta: float) -> float:
    j1, j2 = consts.j_components()
    L = consts.L0

    def fun(th, y):
        d = y[0] + j1 * math.cos(th) + j2 * math.sin(th)
        return np.array([y[1], m.v(th) - y[0], L / d ** 2])

    return float(_angle_ode(fun, [0.0, 0.0, 0.0], consts.theta0, theta)[2])


def _invert_time_dependent(m: TimeDependent, t0: float, tau: float) -> float:
    """Solve integral of dt/g^2 from t0 to t = tau for t."""
    if tau == 0:
        return t0

    def inv_g2(t):
        g = m.g(t)
        if g == 0:
            raise DomainError(f"g(t) vanishes at t = {t}")
        return 1.0 / g ** 2

    def excess(t):
        return quad_adaptive(inv_g2, t0, t, tol=1e-13, limit=200).value - tau

    step = math.copysign(1.0, tau)
    for _ in range(60):
        if excess(t0 + step) * math.copysign(1.0, tau) >= 0:
            break
        step *= 2.0
    else:
        raise UnboundedOrbit(f"The time integral never reaches {tau:.6g}")
    lo, hi = sorted((t0, t0 + step))
    return float(optimize.brentq(excess, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200))


def time_of_angle(m: ForceModel, consts: OrbitConstants, theta: float) -> float:
    """Time at which the orbit reaches angle theta, t0 at theta0.

    Quadrature of r^2/L for the families with a closed-form orbit; the z-pair and
    direction-only families carry z or 1/L alongside t in one ODE in theta.

    Raises:
        UnboundedOrbit: If the orbit escapes before theta
        UnsupportedFamily: For MICZ, FLGR and Monopole
    """
    theta = float(theta)
    t0 = consts.t0
    if theta == consts.theta0:
        return t0
    try:
        if isinstance(m, Kepler):
            L = consts.L0
            return t0 + quad_adaptive(lambda th: orbit_radius(m, consts, th) ** 2 / L,
                                      consts.theta0, theta, tol=1e-13, limit=200).value
        if isinstance(m, PowerLaw):
            k = float(consts.invariants["k"])
            exponent = -(m.alpha - 1.0) / 2.0
            return t0 + quad_adaptive(lambda th: orbit_radius(m, consts, th) ** exponent / k,
                                      consts.theta0, theta, tol=1e-13, limit=200).value
        if isinstance(m, KeplerOrbitFamily):
            kappa = float(consts.invariants["kappa"])

            def dt_family(th):
                r = orbit_radius(m, consts, th)
                return math.sqrt(r / m.g_of(r)) / kappa

            return t0 + quad_adaptive(dt_family, consts.theta0, theta, tol=1e-13, limit=200).value
        if isinstance(m, TimeDependent):
            return _invert_time_dependent(m, t0, _time_dependent_tau(m, consts, theta))
        if isinstance(m, (CentralAngle, Drag)):
            j1, j2 = consts.j_components()
            if isinstance(m, Drag):
                source = _drag_source(m, consts)

                def l_at(th):
                    return _drag_l(m, consts, th)
            else:
                source = m.v

                def l_at(th):
                    return consts.L0

            def fun(th, y):
                d = y[0] + j1 * math.cos(th) + j2 * math.sin(th)
                if isinstance(m, Drag):
                    dt = 1.0 / (l_at(th) * d ** 2)
                else:
                    dt = l_at(th) / d ** 2
                return np.array([y[1], source(th) - y[0], dt])

            return t0 + float(_angle_ode(fun, [0.0, 0.0, 0.0], consts.theta0, theta)[2])
        if isinstance(m, DirectionOnly):
            j1, j2 = consts.j_components()
            sgn = math.copysign(1.0, consts.L0)

            def fun(th, y):
                d = m.U(th) + j1 * math.cos(th) + j2 * math.sin(th)
                if d <= 0:
                    raise UnboundedOrbit(f"U + J.r_hat vanishes at theta = {th:.6g}")
                return np.array([sgn * m.V(th) / d ** 1.5, 1.0 / (y[0] ** 3 * d ** 2)])

            return t0 + float(_angle_ode(fun, [1.0 / consts.L0, 0.0], consts.theta0, theta)[1])
        if isinstance(m, MagnitudeConserved):
            J = norm(consts.invariants["J"])
            L = consts.L0

            def dt_magnitude(th):
                h = m.h(orbit_radius(m, consts, th))
                rad = (J * math.sin(th)) ** 2 - (h * L) ** 2
                if rad <= 0:
                    raise ZoneBoundary(f"theta = {th:.6g} lies outside the accessible zone")
                return J * L ** 3 * math.sin(th) / ((m.k + J * math.cos(th)) ** 2 * math.sqrt(rad))

            return t0 + consts.direction * quad_adaptive(dt_magnitude, consts.theta0, theta,
                                                         tol=1e-12, limit=200).value
    except SingularOrbit as e:
        raise UnboundedOrbit(f"Failed to time the orbit up to theta = {theta:.6g}: {e.message}",
                             details=e.details)
    raise UnsupportedFamily(f"time_of_angle does not support family {m.family!r}")


def areal(L: float, t: float) -> float:
    """Area swept in time t at constant angular momentum L."""
    return 0.5 * L * t


def swept_areas(traj, slices: int, subdivisions: int = 200) -> np.ndarray:
    """Polygonal area swept by the radius vector over equal time slices.

    Raises:
        InsufficientSamples: For fewer than one slice
    """
    if slices < 1:
        raise InsufficientSamples("swept_areas needs at least one slice")
    t = np.linspace(traj.t[0], traj.t[-1], slices * subdivisions + 1)
    r = traj.states_at(t)[:, 0:3]
    tri = 0.5 * np.linalg.norm(np.cross(r[:-1], r[1:]), axis=1)
    return tri.reshape(slices, subdivisions).sum(axis=1)


# ---------------------------------------------------------------- Kepler closed forms

@dataclass(frozen=True)
class KeplerElements:
    mu: float
    E: float
    L: float
    J: float
    e: float
    l: float
    R: Optional[float]
    T: Optional[float]
    conic: ConicParams

    def to_dict(self) -> Dict[str, Any]:
        return {"mu": self.mu, "E": self.E, "L": self.L, "J": self.J, "e": self.e,
                "l": self.l, "R": self.R, "T": self.T, "theta_ref": self.conic.theta_ref}


def kepler_orbit_elements(mu: float, E: float, L: float, J: float, theta_ref: float = 0.0) -> KeplerElements:
    """Eccentricity, semilatus rectum and, for E < 0, semimajor axis and period.

    Raises:
        BadParameter: For mu <= 0 or L = 0
    """
    if mu <= 0:
        raise BadParameter(f"mu must be positive, got {mu}")
    if L == 0:
        raise BadParameter("Kepler elements need L != 0")
    L, J = abs(L), abs(J)
    R = T = None
    if E < 0:
        R = mu / (-2.0 * E)
        T = TWO_PI * mu / (-2.0 * E) ** 1.5
    return KeplerElements(mu, E, L, J, J / mu, L ** 2 / mu, R, T, ConicParams(L ** 2 / mu, J / mu, theta_ref))


def kepler_elements_of(consts: OrbitConstants) -> KeplerElements:
    m = consts.model
    if not isinstance(m, Kepler):
        raise UnsupportedFamily("Kepler elements need a Kepler orbit")
    inv = consts.invariants
    J = np.asarray(inv["J"], dtype=float)
    j1, j2 = consts.j_components()
    ref = math.atan2(j2, j1) if norm(J) > 0 else 0.0
    return kepler_orbit_elements(m.mu, float(inv["E"]), consts.L0, norm(J), ref)


def _time_by_radius(el: KeplerElements, r: float) -> float:
    """Time since perihelion on the outgoing half, from the eccentric anomaly.

    cos psi = (1 - r/a) / e within rounding of +-1 is snapped to the apsis.
    """
    e, l = el.e, el.l
    if el.J == 0:
        raise DomainError("A circular orbit cannot be timed by its radius")
    if e >= 1.0:
        raise DomainError(f"Radius timing needs an ellipse, got e = {e}")
    r_peri, r_apo = l / (1.0 + e), l / (1.0 - e)
    slack = 1e-12 * r_apo
    if not (r_peri - slack <= r <= r_apo + slack):
        raise DomainError(f"r = {r:.6g} lies outside the radial range [{r_peri:.6g}, {r_apo:.6g}] of the orbit")
    a = l / (1.0 - e * e)
    c = (1.0 - r / a) / e
    if abs(c) > 1.0 - _APSIS_SNAP:
        c = math.copysign(1.0, c)
    psi = math.acos(c)
    n = math.sqrt(el.mu / a ** 3)
    return (psi - e * math.sin(psi)) / n


def _time_by_angle(el: KeplerElements, theta: float) -> float:
    E, mu, L, J = el.E, el.mu, el.L, el.J
    w = L * math.sqrt(-2.0 * E)
    ratio = w / (mu + J)
    return (L / (2.0 * E)) * (J * math.sin(theta) / (mu + J * math.cos(theta))
                              - (2.0 * mu / w) * branch_arctan(ratio, 0.5 * theta))


def kepler_time_closed(el: KeplerElements, r: Optional[float] = None, theta: Optional[float] = None,
                       r0: Optional[float] = None, theta0: Optional[float] = None) -> float:
    """Closed-form Kepler time between two points of a bound orbit.

    By radius the outgoing half (perihelion to aphelion) is assumed; by angle,
    theta is measured from J (perihelion at 0) and the arctan is unwound so
    full revolutions accumulate. The lower limit defaults to perihelion.

    Raises:
        DomainError: For E >= 0 or a radius outside [r_peri, r_apo]
        BadParameter: If neither or both of r and theta are given
    """
    if el.E >= 0:
        raise DomainError(f"The closed forms assume a bound orbit, got E = {el.E}")
    if (r is None) == (theta is None):
        raise BadParameter("Give exactly one of r or theta")
    if r is not None:
        lower = el.l / (1.0 + el.e) if r0 is None else r0
        return _time_by_radius(el, float(r)) - _time_by_radius(el, float(lower))
    lower = 0.0 if theta0 is None else theta0
    return _time_by_angle(el, float(theta)) - _time_by_angle(el, float(lower))


def _check_eccentricity(e: float) -> None:
    rule = VALIDATION_RULES["kepler_solve"]["e"]
    if not (rule["min"] <= e < rule["max"]) or not math.isfinite(e):
        raise BadParameter(f"{rule['message']}, got e = {e}")


def kepler_solve(e: float, M: float, max_iter: int = 50) -> float:
    """Solve psi - e sin psi = M by Newton's method, falling back to bisection.

    Raises:
        BadParameter: For e outside [0, 1) or non-finite M
    """
    _check_eccentricity(e)
    if not math.isfinite(M):
        raise BadParameter(f"Mean anomaly must be finite, got {M}")
    n = round(M / TWO_PI)
    Mr = M - TWO_PI * n
    if e == 0:
        return float(M)

    def f(psi):
        return psi - e * math.sin(psi) - Mr

    psi = math.pi if e > 0.8 else Mr + e * math.sin(Mr)
    for _ in range(max_iter):
        step = f(psi) / (1.0 - e * math.cos(psi))
        psi -= step
        if abs(step) < 1e-16 * max(1.0, abs(psi)):
            break
    if not (-math.pi <= psi <= math.pi) or abs(f(psi)) > 1e-13:
        logger.debug("Newton failed for e=%g, M=%g; bisecting", e, M)
        psi = optimize.brentq(f, -math.pi, math.pi, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=200)
    return float(psi + TWO_PI * n)


def anomalies(e: float, R: float, psi: float) -> Tuple[float, float]:
    """Radius and true anomaly from the eccentric anomaly.

    Raises:
        BadParameter: For e outside [0, 1) or R <= 0
    """
    _check_eccentricity(e)
    if not R > 0:
        raise BadParameter(f"Semimajor axis must be positive, got {R}")
    r = R * (1.0 - e * math.cos(psi))
    theta = 2.0 * branch_arctan(math.sqrt((1.0 + e) / (1.0 - e)), 0.5 * psi)
    return r, theta


# ---------------------------------------------------------------- MICZ geometry

@dataclass(frozen=True)
class MICZGeometry:
    cone_half_angle: float
    normal: np.ndarray
    plane_offset: float
    gamma: float
    beta: float
    eta: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "cone_half_angle": self.cone_half_angle,
            "normal": self.normal.tolist(),
            "plane_offset": self.plane_offset,
            "gamma": self.gamma,
            "beta": self.beta,
            "eta": self.eta,
        }


def _clip_cos(x: float) -> float:
    return min(1.0, max(-1.0, x))


def micz_geometry(lam: float, mu: float, inv: InvariantSet) -> MICZGeometry:
    """Cone, orbital plane and angles of a MICZ orbit from its integrals.

    The plane has normal N = P - (lambda/mu) J and N_hat . r = -lambda L^2/(mu |N|).

    Raises:
        BadParameter: For mu = 0
    """
    if mu == 0:
        raise BadParameter("micz_geometry needs mu != 0")
    P = np.asarray(inv["P"], dtype=float)
    J = np.asarray(inv["J"], dtype=float)
    L = float(inv["L_mag"])
    H = float(inv["H"])
    Pm, Jm = norm(P), norm(J)
    N = P - (lam / mu) * J
    Nm = norm(N)
    if Nm == 0:
        raise BadParameter("N vanishes: the orbital plane is undefined")
    alpha = math.acos(_clip_cos(lam / Pm))
    beta = math.acos(_clip_cos(lam * mu / (Pm * Jm))) if Jm > 0 else 0.5 * math.pi
    gamma = 0.5 * math.pi - math.acos(_clip_cos(float(P @ N) / (Pm * Nm)))
    eta = math.acos(_clip_cos(float(J @ N) / (Jm * Nm))) if Jm > 0 else 0.5 * math.pi
    return MICZGeometry(alpha, N / Nm, -lam * L ** 2 / (mu * Nm), gamma, beta, eta)


def micz_psi(inv: InvariantSet, r) -> float:
    """psi, the supplement of the angle between J and r."""
    return math.pi - _polar_from(np.asarray(inv["J"], dtype=float), np.asarray(r, dtype=float))


def micz_psi_of_phi(lam: float, mu: float, inv: InvariantSet, phi: float) -> float:
    """psi at azimuth phi about P, with phi = 0 on the major axis toward -J's side."""
    P2 = float(np.asarray(inv["P"]) @ np.asarray(inv["P"]))
    L = float(inv["L_mag"])
    H = float(inv["H"])
    J = norm(inv["J"])
    root = math.sqrt(max(2.0 * H * P2 + mu ** 2, 0.0))
    cos_psi = (lam ** 2 * mu - math.copysign(1.0, lam) * L ** 2 * root * math.cos(phi)) / (P2 * J)
    return math.acos(_clip_cos(cos_psi))


def micz_radius(mu: float, inv: InvariantSet, angle: float, convention: str = "psi") -> float:
    """r = L^2/(mu - J cos psi), or L^2/(mu + J cos chi) with chi the angle from J.

    Raises:
        UnboundedOrbit: If the denominator is not positive
        BadParameter: Unknown convention
    """
    L = float(inv["L_mag"])
    J = norm(inv["J"])
    if convention == "psi":
        d = mu - J * math.cos(angle)
    elif convention == "chi":
        d = mu + J * math.cos(angle)
    else:
        raise BadParameter(f"Unknown convention {convention!r}; expected 'psi' or 'chi'")
    return _positive_radius(L ** 2, d, angle)


# ---------------------------------------------------------------- conic fitting

@dataclass(frozen=True)
class EllipseFit:
    center: np.ndarray
    semi_major: float
    semi_minor: float
    angle: float
    residual: float

    @property
    def eccentricity(self) -> float:
        return math.sqrt(max(0.0, 1.0 - (self.semi_minor / self.semi_major) ** 2))


def fit_ellipse(points) -> EllipseFit:
    """Least-squares conic through planar points, reduced to centre and semi-axes.

    Raises:
        InsufficientSamples: For fewer than 5 points
        BadParameter: If the best conic is not an ellipse
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 5:
        raise InsufficientSamples("fit_ellipse needs at least 5 planar points")
    scale = float(np.max(np.abs(pts)))
    x, y = pts[:, 0] / scale, pts[:, 1] / scale
    design = np.column_stack([x * x, x * y, y * y, x, y, np.ones_like(x)])
    _, _, vt = np.linalg.svd(design, full_matrices=False)
    A, B, C, D, E, F = vt[-1]
    if B * B - 4.0 * A * C >= 0:
        raise BadParameter("The fitted conic is not an ellipse")
    center = np.linalg.solve(np.array([[2 * A, B], [B, 2 * C]]), np.array([-D, -E]))
    f0 = F + 0.5 * (D * center[0] + E * center[1])
    quad = np.array([[A, B / 2], [B / 2, C]])
    eigvals, eigvecs = np.linalg.eigh(quad)
    axes_sq = -f0 / eigvals
    if np.any(axes_sq <= 0):
        raise BadParameter("The fitted conic is imaginary")
    axes = np.sqrt(axes_sq)
    major = int(np.argmax(axes))
    rel = np.column_stack([x, y]) - center
    level = np.einsum("ij,jk,ik->i", rel, quad, rel) / (-f0)
    angle = float(math.atan2(eigvecs[1, major], eigvecs[0, major]))
    return EllipseFit(center * scale, float(axes[major]) * scale, float(axes[1 - major]) * scale,
                      angle, float(np.max(np.abs(level - 1.0))))


__all__ = [
    "ConicParams", "OrbitConstants", "orbit_constants", "orbit_radius", "orbit_table", "orbit_angle",
    "orbit_residual",
    "AzimuthResult", "azimuth_of_polar", "monopole_azimuth", "monopole_lambda",
    "time_of_angle", "areal", "swept_areas",
    "KeplerElements", "kepler_orbit_elements", "kepler_elements_of", "kepler_time_closed",
    "kepler_solve", "anomalies",
    "MICZGeometry", "micz_geometry", "micz_psi", "micz_psi_of_phi", "micz_radius",
    "EllipseFit", "fit_ellipse",
]
