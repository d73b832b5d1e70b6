"""
Invariants core module for the LRL laboratory.

This module provides:
- The conserved vectors and scalars of every model family
- The z-pair machinery solving z'' + z = v(theta) from z = z' = 0
- The angular-momentum quadrature of the direction-only family
- The closed-form Danby z-pair through sine and cosine integrals
- Residuals of the algebraic relations between the integrals
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional, Union

import numpy as np

from .base import (PhaseState, OrbitContext, Z_HAT, check_radius, cross, norm, local_frame)
from .models import (ForceModel, Kepler, CentralAngle, TimeDependent, DirectionOnly, HamiltonianAngle,
                     Drag, KeplerOrbitFamily, PowerLaw, MagnitudeConserved, FLGR, MICZ, Monopole, signed_l)
from .specialfn import quad_adaptive, si, ci
from ..utils.exceptions import (BadParameter, SingularOrbit, UnsupportedFamily, ZeroAngularMomentum,
                                LabError, DomainError)

logger = logging.getLogger("lrl-lab.invariants")

Value = Union[float, np.ndarray]

# closed-form Danby z-pair is used while u0 stays in the range where si/Ci cancel benignly
DANBY_CLOSED_FORM_MAX_U = 1e3


@dataclass(frozen=True)
class InvariantSet:
    family: str
    values: Dict[str, Value]

    def __getitem__(self, name: str) -> Value:
        return self.values[name]

    def __contains__(self, name: str) -> bool:
        return name in self.values

    def names(self):
        return list(self.values)

    def to_dict(self) -> Dict[str, Any]:
        return {k: (v.tolist() if isinstance(v, np.ndarray) else float(v)) for k, v in self.values.items()}


@dataclass(frozen=True)
class ZPair:
    theta0: float
    theta: float
    z: float
    zprime: float
    method: str = "ivp"
    convolution_residual: Optional[float] = None


# ---------------------------------------------------------------- z-pair

def z_pair(v: Callable[[float], float], theta0: float, theta: float, check: bool = False,
           rel_tol: float = 1e-12, abs_tol: float = 1e-14) -> ZPair:
    """Solve z'' + z = v(theta) with z(theta0) = z'(theta0) = 0.

    Args:
        v: Source function of the angle (an Expr or any callable)
        theta0: Angle of the initial conditions
        theta: Query angle (may lie below theta0)
        check: Also evaluate the convolution integrals of v(eta) sin(theta - eta)
            and v(eta) cos(theta - eta) and store the larger disagreement

    Raises:
        DomainError: From v
    """
    from .integrator import integrate_ode

    if theta == theta0:
        return ZPair(theta0, theta, 0.0, 0.0, "ivp", 0.0 if check else None)

    def fun(th, y):
        return np.array([y[1], v(th) - y[0]])

    _, ys, _ = integrate_ode(fun, theta0, [0.0, 0.0], theta, rel_tol, abs_tol)
    z, zp = float(ys[-1, 0]), float(ys[-1, 1])
    residual = None
    if check:
        zc, zpc = z_convolution(v, theta0, theta)
        residual = max(abs(z - zc), abs(zp - zpc))
        logger.debug("z-pair convolution residual %.3e on [%g, %g]", residual, theta0, theta)
    return ZPair(theta0, theta, z, zp, "ivp", residual)


def z_convolution(v: Callable[[float], float], theta0: float, theta: float, tol: float = 1e-13):
    """z and z' as the convolution quadratures of v against sin and cos."""
    points = list(np.arange(math.ceil(min(theta0, theta) / math.pi), math.floor(max(theta0, theta) / math.pi) + 1)
                  * math.pi)
    z = quad_adaptive(lambda eta: v(eta) * math.sin(theta - eta), theta0, theta, tol=tol, limit=200, points=points)
    zp = quad_adaptive(lambda eta: v(eta) * math.cos(theta - eta), theta0, theta, tol=tol, limit=200, points=points)
    return z.value, zp.value


def danby_z(k: float, alpha: float, mu: float, theta0: float, theta: float) -> ZPair:
    """Closed-form z-pair of the Danby drag problem, L(theta) = k - alpha*theta.

    With u = k/alpha - theta the pair is written through si and Ci; for large u0
    the cancellation between the terms is avoided by the equivalent kernel
    quadrature of mu sin(theta - eta)/(k - alpha*eta)^2.

    Raises:
        BadParameter: If alpha = 0 or u <= 0 somewhere on the range
    """
    if alpha == 0:
        raise BadParameter("danby_z needs alpha != 0; use the Kepler z-pair for alpha = 0")
    u0 = k / alpha - theta0
    u = k / alpha - theta
    if u0 <= 0 or u <= 0:
        raise BadParameter(f"u = k/alpha - theta must stay positive, got u0={u0:.6g}, u={u:.6g}")
    if theta == theta0:
        return ZPair(theta0, theta, 0.0, 0.0, "closed_form")

    if max(u0, u) > DANBY_CLOSED_FORM_MAX_U:
        zc, zpc = z_convolution(lambda eta: mu / (k - alpha * eta) ** 2, theta0, theta)
        return ZPair(theta0, theta, zc, zpc, "quadrature")

    c = mu / alpha ** 2
    delta = theta0 - theta  # u - u0
    d_si = si(u) - si(u0)
    d_ci = ci(u) - ci(u0)
    su, cu = math.sin(u), math.cos(u)
    z = c * (math.sin(delta) / u0 - su * d_si - cu * d_ci)
    zp = -c * (math.cos(delta) / u0 - 1.0 / u + su * d_ci - cu * d_si)
    return ZPair(theta0, theta, z, zp, "closed_form")


# ---------------------------------------------------------------- direction-only angular momentum

def l_of_theta(m: DirectionOnly, L0: float, J, theta0: float, theta: float, tol: float = 1e-12) -> float:
    """Angular momentum at theta for the direction-only family.

    1/L = 1/L0 + sign(L0) * integral from theta0 to theta of V / (U + J . r_hat)^(3/2),
    with J the conserved in-plane vector and L0 the signed value at theta0.

    Raises:
        SingularOrbit: If U + J . r_hat reaches zero on the range
    """
    J = np.asarray(J, dtype=float)
    if L0 == 0:
        raise ZeroAngularMomentum("l_of_theta needs L0 != 0")
    if m.V.is_constant and m.V(theta0) == 0.0:
        return float(L0)

    def denominator(eta):
        return m.U(eta) + J[0] * math.cos(eta) + J[1] * math.sin(eta)

    grid = np.linspace(theta0, theta, 257)
    worst = min(denominator(float(eta)) for eta in grid)
    if worst <= 0:
        raise SingularOrbit(f"U + J.r_hat vanishes between theta = {theta0:.6g} and {theta:.6g}",
                            details={"min_denominator": worst})

    def integrand(eta):
        d = denominator(eta)
        if d <= 0:
            raise SingularOrbit(f"U + J.r_hat vanishes at theta = {eta:.6g}")
        return m.V(eta) / d ** 1.5

    res = quad_adaptive(integrand, theta0, theta, tol=tol, limit=200)
    inv = 1.0 / L0 + math.copysign(1.0, L0) * res.value
    if inv == 0:
        raise SingularOrbit(f"Angular momentum diverges at theta = {theta:.6g}")
    return 1.0 / inv


# ---------------------------------------------------------------- family evaluation

def _polar(s: PhaseState, axis=Z_HAT):
    r = check_radius(s.r)
    rhat, that = local_frame(s.r, axis)
    return r, rhat, that


def _angle(s: PhaseState, ctx: Optional[OrbitContext]) -> float:
    if ctx is not None and ctx.theta is not None:
        return float(ctx.theta)
    return float(math.atan2(s.r[1], s.r[0]))


def _zz(ctx: Optional[OrbitContext]):
    if ctx is None:
        return 0.0, 0.0
    return ctx.z, ctx.zprime


def _kepler(m: Kepler, s: PhaseState) -> Dict[str, Value]:
    r = check_radius(s.r)
    L = cross(s.r, s.v)
    J = cross(s.v, L) - m.mu * s.r / r
    L2 = float(L @ L)
    if L2 == 0:
        raise ZeroAngularMomentum("Hamilton's vector divides by L^2")
    return {
        "E": 0.5 * float(s.v @ s.v) - m.mu / r,
        "L": L,
        "J": J,
        "K": cross(L, J) / L2,
    }


def _central_angle(m: CentralAngle, s, ctx) -> Dict[str, Value]:
    _, rhat, that = _polar(s)
    z, zp = _zz(ctx)
    K = s.v + zp * rhat - z * that
    J = cross(s.v, Z_HAT) - z * rhat - zp * that
    return {"L": cross(s.r, s.v), "K": K, "J": J}


def _time_dependent(m: TimeDependent, s, ctx) -> Dict[str, Value]:
    r, rhat, that = _polar(s)
    z, zp = _zz(ctx)
    g, gdot = m.g(s.t), m.g_dot(s.t)
    w = g * s.v - gdot * s.r
    L = cross(s.r, s.v)
    out: Dict[str, Value] = {
        "L": L,
        "K": w + zp * rhat - z * that,
        "J": cross(w, Z_HAT) - z * rhat - zp * that,
    }
    if m.v.is_constant:
        c = m.v(0.0)
        out["I"] = 0.5 * float(w @ w) - c * float(L[2]) * g / r
    return out


def _direction_only(m: DirectionOnly, s, ctx) -> Dict[str, Value]:
    r, rhat, that = _polar(s)
    th = _angle(s, ctx)
    Lz = signed_l(s, required=False)
    L = cross(s.r, s.v)
    Lmag = norm(L)
    if Lmag == 0:
        raise ZeroAngularMomentum("The direction of L is undefined for radial motion")
    U = m.U(th)
    side = m.dU(th) + 2.0 * math.sqrt(r) * m.V(th)
    return {
        "L_dir": L / Lmag,
        "J": Lz * cross(s.v, Z_HAT) - U * rhat - side * that,
        "K": Lz * s.v + side * rhat - U * that,
    }


def _hamiltonian_angle(m: HamiltonianAngle, s, ctx) -> Dict[str, Value]:
    out = _direction_only(m, s, ctx)
    r = check_radius(s.r)
    th = _angle(s, ctx)
    half = 0.5 * (th - m.beta)
    pr = float(s.r @ s.v) / r
    ptheta = signed_l(s, required=False)
    H = 0.5 * float(s.v @ s.v) - m.mu / r - m.alpha * math.cos(half) / math.sqrt(r)
    I0 = pr * m.alpha * math.sqrt(r) * math.sin(half) + ptheta * m.alpha * math.cos(half) / math.sqrt(r)
    J = out["J"]
    out.update({
        "J1": float(J[0]),
        "J2": float(J[1]),
        "H": H,
        "I": 2.0 * ptheta * H + I0,
        "I0": I0,
    })
    return out


def _drag(m: Drag, s, ctx) -> Dict[str, Value]:
    _, rhat, that = _polar(s)
    z, zp = _zz(ctx)
    L = signed_l(s)
    th = _angle(s, ctx)
    J = cross(s.v, Z_HAT) / L - z * rhat - zp * that
    return {
        "K": s.v / L + zp * rhat - z * that,
        "J": J,
        "I": 0.5 * float(J @ J),
        "angular_law": m.angular_law(L, th),
    }


def _kepler_orbit_family(m: KeplerOrbitFamily, s) -> Dict[str, Value]:
    r, rhat, that = _polar(s)
    L = signed_l(s)
    g = m.g_of(r)
    if g <= 0:
        raise BadParameter(f"g(r) must be positive, got {g} at r = {r}")
    kappa = m.kappa(s)
    A = 1.0 / kappa ** 2
    Lvec = cross(s.r, s.v)
    J = cross(s.v, Lvec) / L ** 2 - A * rhat
    E = 0.5 * float(s.v @ s.v) / (g * r ** 3) - 1.0 / r
    return {
        "kappa": kappa,
        "J": J,
        "K": s.v / L - A * that,
        "E": E,
        "I": 0.5 * float(J @ J),
    }


def _power_law(m: PowerLaw, s) -> Dict[str, Value]:
    r, rhat, that = _polar(s)
    L = signed_l(s)
    k = m.k_constant(s)
    A = m.mu / k ** 2
    Lvec = cross(s.r, s.v)
    return {
        "k": k,
        "J": cross(s.v, Lvec) / L ** 2 - A * rhat,
        "K": s.v / L - A * that,
        "E": 0.5 * float(s.v @ s.v) / r ** (m.alpha + 3.0) - m.mu / r,
    }


def _magnitude_conserved(m: MagnitudeConserved, s) -> Dict[str, Value]:
    r = check_radius(s.r)
    L = cross(s.r, s.v)
    h = m.h(r)
    return {
        "L_mag": norm(L),
        "J": cross(s.v, L) - h * L - m.k * s.r / r,
        "I": 0.5 * float(s.v @ s.v) + 0.5 * h ** 2 - m.k / r,
    }


def flgr_potential(m: FLGR, r: float) -> float:
    """Integral of g(s) s from 1 to r."""
    return quad_adaptive(lambda x: m.g(x) * x, 1.0, r, tol=1e-13, limit=200).value


def _flgr(m: FLGR, s) -> Dict[str, Value]:
    r = check_radius(s.r)
    return {
        "L_mag": norm(cross(s.r, s.v)),
        "E": 0.5 * float(s.v @ s.v) + flgr_potential(m, r),
    }


def _micz(m: MICZ, s) -> Dict[str, Value]:
    r = check_radius(s.r)
    L = cross(s.r, s.v)
    P = L - m.lam * s.r / r
    J = cross(s.v, L) + (m.lam / r) * L - m.mu * s.r / r
    out: Dict[str, Value] = {
        "L_mag": norm(L),
        "P": P,
        "J": J,
        "K": cross(J, P),
        "H": 0.5 * (float(s.v @ s.v) + m.lam ** 2 / r ** 2) - m.mu / r,
    }
    if m.mu != 0:
        out["N"] = P - (m.lam / m.mu) * J
    return out


def _monopole(m: Monopole, s) -> Dict[str, Value]:
    r = check_radius(s.r)
    L = cross(s.r, s.v)
    return {
        "L_mag": norm(L),
        "P": L - m.mu * s.r / r,
        "E": 0.5 * float(s.v @ s.v),
    }


def evaluate(m: ForceModel, s: PhaseState, aux: Optional[OrbitContext] = None) -> InvariantSet:
    """Evaluate every invariant of m's family at state s.

    Args:
        m: Force model
        s: Phase state
        aux: Unwrapped angle and z-pair accumulators of the trajectory; when omitted
            the state is treated as the start of a trajectory (z = z' = 0)

    Raises:
        ZeroAngularMomentum: Where the formulas divide by L
        DomainError: From the model's functions
    """
    try:
        if isinstance(m, HamiltonianAngle):
            values = _hamiltonian_angle(m, s, aux)
        elif isinstance(m, DirectionOnly):
            values = _direction_only(m, s, aux)
        elif isinstance(m, PowerLaw):
            values = _power_law(m, s)
        elif isinstance(m, KeplerOrbitFamily):
            values = _kepler_orbit_family(m, s)
        elif isinstance(m, Kepler):
            values = _kepler(m, s)
        elif isinstance(m, CentralAngle):
            values = _central_angle(m, s, aux)
        elif isinstance(m, TimeDependent):
            values = _time_dependent(m, s, aux)
        elif isinstance(m, Drag):
            values = _drag(m, s, aux)
        elif isinstance(m, MagnitudeConserved):
            values = _magnitude_conserved(m, s)
        elif isinstance(m, FLGR):
            values = _flgr(m, s)
        elif isinstance(m, MICZ):
            values = _micz(m, s)
        elif isinstance(m, Monopole):
            values = _monopole(m, s)
        else:
            raise UnsupportedFamily(f"No invariants known for {type(m).__name__}")
    except LabError:
        raise
    except (OverflowError, ZeroDivisionError, ValueError) as e:
        raise DomainError(f"Failed to evaluate invariants of {m.family}: {str(e)}")
    return InvariantSet(m.family, values)


def invariant_series(m: ForceModel, traj) -> Dict[str, np.ndarray]:
    """Invariants at every sample of a trajectory, stacked per name."""
    rows = [evaluate(m, traj.state(i), traj.context(i)).values for i in range(len(traj))]
    return {name: np.array([row[name] for row in rows], dtype=float) for name in rows[0]}


# ---------------------------------------------------------------- HamiltonianAngle extras

def hamiltonian_from_integrals(m: HamiltonianAngle, J1: float, J2: float, I: float) -> float:
    """H = [I^2 - alpha^2 (J1 cos beta + J2 sin beta + mu)] / (2 (J^2 - mu^2))."""
    denom = 2.0 * (J1 ** 2 + J2 ** 2 - m.mu ** 2)
    if denom == 0:
        raise SingularOrbit("J^2 = mu^2: H cannot be recovered from the integrals")
    return (I ** 2 - m.alpha ** 2 * (J1 * math.cos(m.beta) + J2 * math.sin(m.beta) + m.mu)) / denom


def rescaled_integrals(m: HamiltonianAngle, J1: float, J2: float, I: float, H: float) -> Dict[str, float]:
    """A, B, C normalised by |2H| and the matching mu; the sign of H selects the algebra."""
    if H == 0:
        raise BadParameter("The rescaled integrals need H != 0; use the zero-energy set")
    scale = abs(2.0 * H) ** -0.5
    shift = m.alpha ** 2 / (4.0 * H)
    return {
        "A": scale * (J1 + shift * math.cos(m.beta)),
        "B": scale * (J2 + shift * math.sin(m.beta)),
        "C": I / (2.0 * H),
        "mu_pm": scale * (m.mu - shift),
    }


def weyl_integrals(m: HamiltonianAngle, J1: float, J2: float, I0: float) -> Dict[str, float]:
    if m.alpha == 0:
        raise BadParameter("The zero-energy integrals need alpha != 0")
    return {
        "A0": -J1 * math.sin(m.beta) + J2 * math.cos(m.beta),
        "B0": 2.0 * I0 / m.alpha ** 2,
        "C0": 1.0,
    }


# ---------------------------------------------------------------- relations

def _vec(inv: InvariantSet, name: str) -> np.ndarray:
    return np.asarray(inv[name], dtype=float)


def relations_check(m: ForceModel, inv: InvariantSet, s: Optional[PhaseState] = None) -> Dict[str, float]:
    """Residual of every algebraic relation between the integrals of m's family.

    Args:
        m: Force model
        inv: Result of evaluate for m
        s: The state inv was evaluated at; needed by the MICZ plane relation
    """
    out: Dict[str, float] = {}
    if isinstance(m, Kepler):
        L, J, K = _vec(inv, "L"), _vec(inv, "J"), _vec(inv, "K")
        E = float(inv["E"])
        L2 = float(L @ L)
        out["J2_vs_energy"] = abs(float(J @ J) - (2.0 * L2 * E + m.mu ** 2))
        out["K2_vs_energy"] = abs(float(K @ K) - (2.0 * E + m.mu ** 2 / L2))
        out["J_dot_L"] = abs(float(J @ L))
        out["K_dot_L"] = abs(float(K @ L))
        out["J_dot_K"] = abs(float(J @ K))
        out["K_vs_LxJ"] = norm(K - cross(L, J) / L2)
    elif isinstance(m, (CentralAngle, TimeDependent, Drag, DirectionOnly)):
        J, K = _vec(inv, "J"), _vec(inv, "K")
        out["J2_vs_K2"] = abs(float(J @ J) - float(K @ K))
        out["J_dot_K"] = abs(float(J @ K))
        if isinstance(m, HamiltonianAngle):
            J1, J2, I, H = float(inv["J1"]), float(inv["J2"]), float(inv["I"]), float(inv["H"])
            if H != 0:
                lhs = ((J1 + m.alpha ** 2 * math.cos(m.beta) / (4 * H)) ** 2
                       + (J2 + m.alpha ** 2 * math.sin(m.beta) / (4 * H)) ** 2
                       - (m.mu - m.alpha ** 2 / (4 * H)) ** 2) / (2 * H)
                out["integrals_quadric"] = abs(lhs - (I / (2 * H)) ** 2)
                out["H_from_integrals"] = abs(hamiltonian_from_integrals(m, J1, J2, I) - H)
    elif isinstance(m, PowerLaw):
        J, K = _vec(inv, "J"), _vec(inv, "K")
        k, E = float(inv["k"]), float(inv["E"])
        out["J2_vs_energy"] = abs(float(J @ J) - (2.0 * E / k ** 2 + m.mu ** 2 / k ** 4))
        out["J2_vs_K2"] = abs(float(J @ J) - float(K @ K))
    elif isinstance(m, KeplerOrbitFamily):
        J = _vec(inv, "J")
        A = 1.0 / float(inv["kappa"]) ** 2
        E = float(inv["E"])
        out["J2_vs_energy"] = abs(float(J @ J) - (2.0 * A * E + A ** 2))
        out["I_vs_energy"] = abs(float(inv["I"]) - (A * E + 0.5 * A ** 2))
    elif isinstance(m, MagnitudeConserved):
        J = _vec(inv, "J")
        Lm, I = float(inv["L_mag"]), float(inv["I"])
        out["J2_vs_energy"] = abs(float(J @ J) - (2.0 * Lm ** 2 * I + m.k ** 2))
    elif isinstance(m, MICZ):
        P, J = _vec(inv, "P"), _vec(inv, "J")
        Lm, H = float(inv["L_mag"]), float(inv["H"])
        out["P2_vs_L2"] = abs(float(P @ P) - (Lm ** 2 + m.lam ** 2))
        out["J2_vs_energy"] = abs(float(J @ J) - (2.0 * Lm ** 2 * H + m.mu ** 2))
        out["J_dot_P"] = abs(float(J @ P) - m.lam * m.mu)
        if s is not None and "N" in inv:
            out["plane_offset"] = abs(float(_vec(inv, "N") @ s.r) + m.lam * Lm ** 2 / m.mu)
    elif isinstance(m, Monopole):
        P = _vec(inv, "P")
        Lm = float(inv["L_mag"])
        out["P2_vs_L2"] = abs(float(P @ P) - (Lm ** 2 + m.mu ** 2))
    return out


__all__ = [
    "InvariantSet", "ZPair", "z_pair", "z_convolution", "danby_z", "l_of_theta", "evaluate",
    "invariant_series", "relations_check", "hamiltonian_from_integrals", "rescaled_integrals",
    "weyl_integrals", "flgr_potential",
]
