"""
Models core module for the LRL laboratory.

This module provides the catalog of equations of motion. Every model maps a
phase state (and, where the force depends on it, the unwrapped polar angle)
to the acceleration r''. Planar families live in the z = 0 plane and use the
signed angular momentum L = (r x v)_z with the polar angle measured about z.
"""

import logging
import math
from dataclasses import dataclass, field, fields
from typing import Any, ClassVar, Dict, Mapping, Optional, TYPE_CHECKING

import numpy as np

from .base import (PhaseState, Z_HAT, check_radius, cross, norm, unit, polar_angle,
                   local_frame)
from .exprlang import Expr, parse
from ..utils.constants import FAMILIES, DRAG_F_KINDS, DRAG_G_KINDS
from ..utils.exceptions import (ZeroAngularMomentum, BadParameter, UnsupportedFamily,
                                InsufficientSamples, LabError)

if TYPE_CHECKING:
    from .integrator import Trajectory

logger = logging.getLogger("lrl-lab.models")

PLANE_TOL = 1e-12


class ForceModel:
    """Base class of the model catalog."""

    family: ClassVar[str] = ""
    planar: ClassVar[bool] = False
    needs_l: ClassVar[bool] = False
    uses_z: ClassVar[bool] = False

    def acceleration(self, s: PhaseState, theta: Optional[float] = None) -> np.ndarray:
        raise NotImplementedError

    def angle_axis(self, s0: PhaseState) -> np.ndarray:
        """Axis about which the trajectory's unwrapped angle is measured."""
        if self.planar:
            return Z_HAT.copy()
        L = s0.angular_momentum
        return unit(L) if norm(L) > 0 else Z_HAT.copy()

    def z_source(self, s: PhaseState, theta: float) -> float:
        """Right side v of z'' + z = v for families carrying a z-pair."""
        raise UnsupportedFamily(f"{self.family} has no z-pair")

    def validate_state(self, s: PhaseState) -> None:
        check_radius(s.r)
        if self.planar and (abs(s.r[2]) > PLANE_TOL * max(1.0, s.radius)
                            or abs(s.v[2]) > PLANE_TOL * max(1.0, norm(s.v))):
            raise BadParameter(f"{self.family} is planar: initial state must lie in z = 0")
        if self.needs_l:
            signed_l(s)

    def describe(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"family": self.family}
        for f in fields(self):
            if f.repr:
                value = getattr(self, f.name)
                out[f.name] = str(value) if isinstance(value, Expr) else value
        return out


def signed_l(s: PhaseState, required: bool = True) -> float:
    """z-component of r x v; raises ZeroAngularMomentum when it vanishes."""
    L = float(s.r[0] * s.v[1] - s.r[1] * s.v[0])
    if required and abs(L) <= 1e-14 * max(s.radius * norm(s.v), 1e-300):
        raise ZeroAngularMomentum("Angular momentum vanishes for a family that divides by L")
    return L


def planar_angle(s: PhaseState, theta: Optional[float]) -> float:
    return float(np.arctan2(s.r[1], s.r[0])) if theta is None else float(theta)


def _in_plane(a: np.ndarray) -> np.ndarray:
    a[2] = 0.0
    return a


@dataclass(frozen=True)
class Kepler(ForceModel):
    mu: float = 1.0
    family: ClassVar[str] = "kepler"

    def acceleration(self, s, theta=None):
        r = check_radius(s.r)
        return -self.mu * s.r / r ** 3


@dataclass(frozen=True)
class CentralAngle(ForceModel):
    """r'' = -v(theta) L r / r^3, from f r = v(theta) theta-dot with theta-dot = L/r^2."""

    v: Expr
    family: ClassVar[str] = "central_angle"
    planar: ClassVar[bool] = True
    uses_z: ClassVar[bool] = True

    def acceleration(self, s, theta=None):
        r = check_radius(s.r)
        L = signed_l(s, required=False)
        return _in_plane(-self.v(planar_angle(s, theta)) * L * s.r / r ** 3)

    def z_source(self, s, theta):
        return self.v(theta)


@dataclass(frozen=True)
class TimeDependent(ForceModel):
    g: Expr
    v: Expr
    family: ClassVar[str] = "time_dependent"
    planar: ClassVar[bool] = True
    uses_z: ClassVar[bool] = True
    g_ddot: Expr = field(init=False, repr=False, compare=False)
    g_dot: Expr = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "g_dot", self.g.diff())
        object.__setattr__(self, "g_ddot", self.g_dot.diff())

    def acceleration(self, s, theta=None):
        r = check_radius(s.r)
        L = signed_l(s, required=False)
        g = self.g(s.t)
        if g == 0:
            raise BadParameter(f"g(t) vanishes at t = {s.t}")
        th = planar_angle(s, theta)
        return _in_plane(-L * self.v(th) / (g * r ** 3) * s.r + self.g_ddot(s.t) / g * s.r)

    def z_source(self, s, theta):
        return self.v(theta)


@dataclass(frozen=True)
class DirectionOnly(ForceModel):
    """Direction of L conserved; U(theta), V(theta) shape the radial and transverse force."""

    U: Expr
    V: Expr
    family: ClassVar[str] = "direction_only"
    planar: ClassVar[bool] = True
    dU: Expr = field(init=False, repr=False, compare=False)
    d2U: Expr = field(init=False, repr=False, compare=False)
    dV: Expr = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "dU", self.U.diff())
        object.__setattr__(self, "d2U", self.dU.diff())
        object.__setattr__(self, "dV", self.V.diff())

    def radial_transverse(self, r: float, th: float):
        radial = -((self.d2U(th) + self.U(th)) / r ** 2 + 2.0 * self.dV(th) / r ** 1.5)
        transverse = -self.V(th) / r ** 1.5
        return radial, transverse

    def acceleration(self, s, theta=None):
        r = check_radius(s.r)
        th = planar_angle(s, theta)
        rhat, that = local_frame(s.r)
        ar, at = self.radial_transverse(r, th)
        return _in_plane(ar * rhat + at * that)


@dataclass(frozen=True)
class HamiltonianAngle(DirectionOnly):
    """DirectionOnly with U = mu and V = (alpha/2) sin((theta - beta)/2).

    The half-angle makes the force double valued; the unwrapped theta selects the sheet.
    """

    mu: float = 1.0
    alpha: float = 0.0
    beta: float = 0.0
    U: Expr = field(init=False, repr=False)
    V: Expr = field(init=False, repr=False)
    family: ClassVar[str] = "hamiltonian_angle"

    def __post_init__(self):
        object.__setattr__(self, "U", Expr.constant(self.mu, "th"))
        object.__setattr__(self, "V", parse("alpha/2*sin((th-beta)/2)", "th",
                                            {"alpha": self.alpha, "beta": self.beta}))
        super().__post_init__()

    def radial_transverse(self, r, th):
        half = 0.5 * (th - self.beta)
        radial = -(self.mu / r ** 2 + self.alpha * math.cos(half) / (2.0 * r ** 1.5))
        transverse = -self.alpha * math.sin(half) / (2.0 * r ** 1.5)
        return radial, transverse

    def describe(self):
        return {"family": self.family, "mu": self.mu, "alpha": self.alpha, "beta": self.beta}


@dataclass(frozen=True)
class Drag(ForceModel):
    """r'' + f r' + g r = 0 with f eliminated through the instantaneous L.

    f kinds: danby (alpha/r^2), angle_linear ((a cos th + b)/r^2),
    angle_over_l ((a cos th + b)/(L r^2)), exp_cubic (-a exp(-(th-theta0)) L^3/(2 r^2)).
    g kinds: kepler (mu/r^3), angular (w(th)/r^3).
    """

    f_kind: str = "danby"
    g_kind: str = "kepler"
    alpha: float = 0.0
    mu: float = 1.0
    a: float = 0.0
    b: float = 0.0
    theta0: float = 0.0
    w: Optional[Expr] = None
    family: ClassVar[str] = "drag"
    planar: ClassVar[bool] = True
    needs_l: ClassVar[bool] = True
    uses_z: ClassVar[bool] = True

    def __post_init__(self):
        if self.f_kind not in DRAG_F_KINDS:
            raise BadParameter(f"Unknown drag kind {self.f_kind!r}; expected one of {DRAG_F_KINDS}")
        if self.g_kind not in DRAG_G_KINDS:
            raise BadParameter(f"Unknown g kind {self.g_kind!r}; expected one of {DRAG_G_KINDS}")
        if self.g_kind == "angular" and self.w is None:
            raise BadParameter("g_kind 'angular' needs the function w(th)")

    def f_coefficient(self, r: float, th: float, L: float) -> float:
        if self.f_kind == "danby":
            return self.alpha / r ** 2
        if self.f_kind == "angle_linear":
            return (self.a * math.cos(th) + self.b) / r ** 2
        if self.f_kind == "angle_over_l":
            return (self.a * math.cos(th) + self.b) / (L * r ** 2)
        return -self.a * math.exp(-(th - self.theta0)) * L ** 3 / (2.0 * r ** 2)

    def g_coefficient(self, r: float, th: float) -> float:
        if self.g_kind == "kepler":
            return self.mu / r ** 3
        return self.w(th) / r ** 3

    def acceleration(self, s, theta=None):
        r = check_radius(s.r)
        L = signed_l(s)
        th = planar_angle(s, theta)
        return _in_plane(-self.f_coefficient(r, th, L) * s.v - self.g_coefficient(r, th) * s.r)

    def z_source(self, s, theta):
        r = check_radius(s.r)
        L = signed_l(s)
        return self.g_coefficient(r, theta) * r ** 3 / L ** 2

    def angular_law(self, L: float, th: float) -> float:
        """Closed-form integral combining L and theta for the chosen f kind."""
        if self.f_kind == "danby":
            return L + self.alpha * th
        if self.f_kind == "angle_linear":
            return L + self.a * math.sin(th) + self.b * th
        if self.f_kind == "angle_over_l":
            return 0.5 * L ** 2 + self.a * math.sin(th) + self.b * th
        return 1.0 / L ** 2 - self.a * math.exp(-(th - self.theta0))

    def l_from_law(self, c: float, th: float, sign: float = 1.0) -> float:
        """Invert angular_law = c for L at angle th."""
        if self.f_kind == "danby":
            return c - self.alpha * th
        if self.f_kind == "angle_linear":
            return c - self.a * math.sin(th) - self.b * th
        if self.f_kind == "angle_over_l":
            sq = 2.0 * (c - self.a * math.sin(th) - self.b * th)
            if sq <= 0:
                raise ZeroAngularMomentum(f"L reaches zero before theta = {th}")
            return math.copysign(math.sqrt(sq), sign)
        inv_sq = c + self.a * math.exp(-(th - self.theta0))
        if inv_sq <= 0:
            raise BadParameter(f"No real L at theta = {th}")
        return math.copysign(inv_sq ** -0.5, sign)


@dataclass(frozen=True)
class KeplerOrbitFamily(ForceModel):
    """Most general r'' - (g'/g + 3 r'/r) r'/2 + g r = 0 keeping Keplerian orbits."""

    g: Expr
    family: ClassVar[str] = "kepler_orbit_family"
    planar: ClassVar[bool] = True
    needs_l: ClassVar[bool] = True
    dg: Expr = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "dg", self.g.diff())

    def g_of(self, r: float) -> float:
        return self.g(r)

    def dg_of(self, r: float) -> float:
        return self.dg(r)

    def acceleration(self, s, theta=None):
        r = check_radius(s.r)
        signed_l(s)
        g = self.g_of(r)
        if g <= 0:
            raise BadParameter(f"g(r) must be positive, got {g} at r = {r}")
        rdot = float(np.dot(s.r, s.v)) / r
        gdot = self.dg_of(r) * rdot
        return _in_plane(0.5 * (gdot / g + 3.0 * rdot / r) * s.v - g * s.r)

    def kappa(self, s: PhaseState) -> float:
        """(r/g)^(1/2) theta-dot, constant along every orbit."""
        r = check_radius(s.r)
        return math.sqrt(r / self.g_of(r)) * signed_l(s) / r ** 2


@dataclass(frozen=True)
class PowerLaw(KeplerOrbitFamily):
    mu: float = 1.0
    alpha: float = -3.0
    g: Expr = field(init=False, repr=False)
    family: ClassVar[str] = "power_law"

    def __post_init__(self):
        if self.mu <= 0:
            raise BadParameter(f"power_law needs mu > 0, got {self.mu}")
        object.__setattr__(self, "g", parse("mu*r^alpha", "r", {"mu": self.mu, "alpha": self.alpha}))
        super().__post_init__()

    def g_of(self, r):
        return self.mu * r ** self.alpha

    def dg_of(self, r):
        return self.mu * self.alpha * r ** (self.alpha - 1.0)

    def k_constant(self, s: PhaseState) -> float:
        """r^(-(alpha-1)/2) theta-dot."""
        r = check_radius(s.r)
        return r ** (-(self.alpha - 1.0) / 2.0) * signed_l(s) / r ** 2

    def describe(self):
        return {"family": self.family, "mu": self.mu, "alpha": self.alpha}


@dataclass(frozen=True)
class MagnitudeConserved(ForceModel):
    h: Expr
    k: float = 1.0
    family: ClassVar[str] = "magnitude_conserved"
    dh: Expr = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "dh", self.h.diff())

    def acceleration(self, s, theta=None):
        r = check_radius(s.r)
        hp = self.dh(r)
        return -(hp / r) * cross(s.r, s.v) - (self.h(r) * hp + self.k / r ** 2) * s.r / r


@dataclass(frozen=True)
class FLGR(ForceModel):
    f: Expr
    g: Expr
    family: ClassVar[str] = "flgr"

    def acceleration(self, s, theta=None):
        r = check_radius(s.r)
        return -self.f(r) * cross(s.r, s.v) - self.g(r) * s.r


@dataclass(frozen=True)
class MICZ(ForceModel):
    lam: float = 0.0
    mu: float = 1.0
    family: ClassVar[str] = "micz"

    def acceleration(self, s, theta=None):
        r = check_radius(s.r)
        L = cross(s.r, s.v)
        return -(self.lam / r ** 3) * L - (self.mu / r ** 2 - self.lam ** 2 / r ** 3) * s.r / r

    def poincare_vector(self, s: PhaseState) -> np.ndarray:
        return cross(s.r, s.v) - self.lam * s.r / check_radius(s.r)

    def angle_axis(self, s0):
        P = self.poincare_vector(s0)
        return unit(P) if norm(P) > 0 else super().angle_axis(s0)

    def describe(self):
        return {"family": self.family, "lambda": self.lam, "mu": self.mu}


@dataclass(frozen=True)
class Monopole(ForceModel):
    mu: float = 1.0
    family: ClassVar[str] = "monopole"

    def acceleration(self, s, theta=None):
        r = check_radius(s.r)
        return -self.mu * cross(s.r, s.v) / r ** 3

    def angle_axis(self, s0):
        P = cross(s0.r, s0.v) - self.mu * s0.r / check_radius(s0.r)
        return unit(P) if norm(P) > 0 else super().angle_axis(s0)


def acceleration(m: ForceModel, s: PhaseState, theta: Optional[float] = None) -> np.ndarray:
    """Evaluate r'' for model m at state s.

    Raises:
        ZeroRadius: If |r| < r_min
        ZeroAngularMomentum: For families that require L != 0
        DomainError: From the model's functions
    """
    return m.acceleration(s, theta)


# ---------------------------------------------------------------- construction

def _function(functions: Mapping[str, str], name: str, family: str, params: Dict[str, float],
              default: Optional[str] = None) -> Expr:
    var = FAMILIES[family]["functions"][name]
    text = functions.get(name, default)
    if text is None:
        raise BadParameter(f"Family {family!r} requires function {name!r} (variable {var!r})")
    return parse(str(text), var, params)


def build_model(family: str, params: Optional[Mapping[str, Any]] = None,
                functions: Optional[Mapping[str, str]] = None,
                s0: Optional[PhaseState] = None) -> ForceModel:
    """Construct a ForceModel from a JSON-style specification.

    Numeric params may be referenced by name inside function strings; when an
    initial state is given, L is bound to its angular momentum (signed z-component
    for planar families, magnitude otherwise).

    Raises:
        UnsupportedFamily: Unknown family name
        BadParameter: Missing or malformed parameters
    """
    if family not in FAMILIES:
        raise UnsupportedFamily(f"Unknown model family {family!r}",
                                details={"known": sorted(FAMILIES)})
    params = dict(params or {})
    functions = dict(functions or {})
    numeric = {k: float(v) for k, v in params.items() if isinstance(v, (int, float)) and not isinstance(v, bool)}
    if s0 is not None and "L" not in numeric:
        planar = FAMILIES[family]["planar"]
        numeric["L"] = signed_l(s0, required=False) if planar else norm(s0.angular_momentum)
    for name in functions:
        if name not in FAMILIES[family]["functions"]:
            raise BadParameter(f"Family {family!r} has no function slot {name!r}")

    def num(key: str, default: Optional[float] = None) -> float:
        if key in params:
            try:
                return float(params[key])
            except (TypeError, ValueError):
                raise BadParameter(f"Parameter {key!r} must be a number, got {params[key]!r}")
        if default is None:
            raise BadParameter(f"Family {family!r} requires parameter {key!r}")
        return default

    try:
        if family == "kepler":
            return Kepler(num("mu", 1.0))
        if family == "central_angle":
            return CentralAngle(_function(functions, "v", family, numeric))
        if family == "time_dependent":
            return TimeDependent(_function(functions, "g", family, numeric),
                                 _function(functions, "v", family, numeric))
        if family == "direction_only":
            return DirectionOnly(_function(functions, "U", family, numeric),
                                 _function(functions, "V", family, numeric, default="0"))
        if family == "hamiltonian_angle":
            return HamiltonianAngle(mu=num("mu", 1.0), alpha=num("alpha"), beta=num("beta", 0.0))
        if family == "drag":
            g_kind = str(params.get("g_kind", "kepler"))
            w = _function(functions, "w", family, numeric) if g_kind == "angular" else None
            return Drag(f_kind=str(params.get("f_kind", "danby")), g_kind=g_kind,
                        alpha=num("alpha", 0.0), mu=num("mu", 1.0), a=num("a", 0.0),
                        b=num("b", 0.0), theta0=num("theta0", 0.0), w=w)
        if family == "kepler_orbit_family":
            return KeplerOrbitFamily(_function(functions, "g", family, numeric))
        if family == "power_law":
            return PowerLaw(mu=num("mu", 1.0), alpha=num("alpha"))
        if family == "magnitude_conserved":
            return MagnitudeConserved(_function(functions, "h", family, numeric), k=num("k", 0.0))
        if family == "flgr":
            return FLGR(_function(functions, "f", family, numeric, default="0"),
                        _function(functions, "g", family, numeric, default="0"))
        if family == "micz":
            return MICZ(lam=num("lambda", 0.0), mu=num("mu", 1.0))
        return Monopole(num("mu", 1.0))
    except LabError:
        raise
    except Exception as e:
        raise BadParameter(f"Failed to build model {family!r}: {str(e)}")


# ---------------------------------------------------------------- trajectory-level operations

def _five_point_second(w: np.ndarray, dt: float) -> np.ndarray:
    """Fourth-order central second derivative on interior samples."""
    return (-w[4:] + 16.0 * w[3:-1] - 30.0 * w[2:-2] + 16.0 * w[1:-3] - w[:-4]) / (12.0 * dt ** 2)


def poincare_project(traj: "Trajectory", lam: float, samples: int = 2001) -> float:
    """Residual of the Newton-Cotes form obeyed by w = r x P.

    The trajectory must come from FLGR with f = lam/r^3 and g = mu/r^4; then
    w'' = -(lam^2 + mu) L^4/|w|^4 w. The residual is the largest deviation
    with w'' estimated by five-point finite differences on a uniform time grid.

    Raises:
        InsufficientSamples: If fewer than 5 points are available
    """
    if len(traj) < 5:
        raise InsufficientSamples(f"poincare_project needs at least 5 samples, got {len(traj)}")
    n = max(int(samples), 5)
    m = traj.model
    if not isinstance(m, FLGR):
        raise UnsupportedFamily("poincare_project applies to the FLGR family")
    r_ref = float(traj.r[0] @ traj.r[0]) ** 0.5
    # mu recovered from g(r) = mu / r^4
    mu = m.g(r_ref) * r_ref ** 4

    t = np.linspace(traj.t[0], traj.t[-1], n)
    dt = t[1] - t[0]
    y = traj.states_at(t)
    r, v = y[:, 0:3], y[:, 3:6]
    L = np.cross(r, v)
    P = L - lam * r / np.linalg.norm(r, axis=1)[:, None]
    w = np.cross(r, P)
    wdd = _five_point_second(w, dt)
    Lmag = np.linalg.norm(L, axis=1)[2:-2]
    wmag = np.linalg.norm(w, axis=1)[2:-2]
    predicted = -(lam ** 2 + mu) * (Lmag ** 4 / wmag ** 4)[:, None] * w[2:-2]
    return float(np.max(np.linalg.norm(wdd - predicted, axis=1)))


def rescale_similarity(m: PowerLaw, traj: "Trajectory", gamma: float) -> "Trajectory":
    """Map a PowerLaw trajectory through the similarity t -> gamma t, r -> gamma^(-2/alpha) r.

    Velocities scale by gamma^(-2/alpha - 1). The image solves the same equation
    of motion and has the same eccentricity.

    Raises:
        BadParameter: For gamma <= 0 or alpha = 0
    """
    if gamma <= 0:
        raise BadParameter(f"gamma must be positive, got {gamma}")
    if m.alpha == 0:
        raise BadParameter("The similarity is undefined for alpha = 0")
    c = gamma ** (-2.0 / m.alpha)
    return traj.rescaled(time_factor=gamma, length_factor=c)


__all__ = [
    "ForceModel", "Kepler", "CentralAngle", "TimeDependent", "DirectionOnly", "HamiltonianAngle",
    "Drag", "KeplerOrbitFamily", "PowerLaw", "MagnitudeConserved", "FLGR", "MICZ", "Monopole",
    "acceleration", "build_model", "signed_l", "poincare_project", "rescale_similarity",
]
