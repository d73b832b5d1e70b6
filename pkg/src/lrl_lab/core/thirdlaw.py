"""
Third-law core module for the LRL laboratory.

This module provides:
- The Kepler period and the generalised period of the power-law family,
  by quadrature and through Legendre functions
- Third-law residuals measured on integrated trajectories
- The explicit time solutions of the power-law family for alpha = -1 and 1
- The MICZ third law on the orbital plane
- Sweeps of the generalised law over (alpha, e) grids
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict
from typing import Any, Dict, Iterable, List, Optional, Tuple

import numpy as np

from .base import PhaseState, PolarState, TWO_PI, branch_arctan, norm, unit, orthonormal_frame
from .integrator import IntegrationConfig, Trajectory, integrate, find_period, find_apsides
from .invariants import evaluate
from .models import PowerLaw, MICZ
from .orbits import orbit_constants, time_of_angle, fit_ellipse
from .specialfn import legendre_p, quad_adaptive
from ..utils.exceptions import BadParameter, NotPeriodic, UnsupportedFamily

logger = logging.getLogger("lrl-lab.thirdlaw")

FOUR_PI_SQ = 4.0 * math.pi ** 2


@dataclass(frozen=True)
class PeriodReport:
    T: float
    R: float
    l: float
    e: float
    law_residual: float
    T_quadrature: Optional[float] = None
    cross_check: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def kepler_period(mu: float, E: float) -> float:
    """T = 2 pi mu / (-2E)^(3/2).

    Raises:
        BadParameter: For E >= 0 or mu <= 0
    """
    if mu <= 0:
        raise BadParameter(f"mu must be positive, got {mu}")
    if E >= 0:
        raise BadParameter(f"A period needs a bound orbit, got E = {E}")
    return TWO_PI * mu / (-2.0 * E) ** 1.5


def power_law_elements(mu: float, k: float, E: float, J: float) -> Tuple[float, float, float]:
    """Semimajor axis, semilatus rectum and eccentricity of a power-law orbit.

    Raises:
        BadParameter: Outside the elliptical regime
    """
    if mu <= 0 or k == 0:
        raise BadParameter(f"Need mu > 0 and k != 0, got mu={mu}, k={k}")
    if E >= 0:
        raise BadParameter(f"The orbit is not elliptical: E = {E}")
    l = k ** 2 / mu
    e = abs(J) * k ** 2 / mu
    if e >= 1:
        raise BadParameter(f"The orbit is not elliptical: e = {e}")
    return mu / (-2.0 * E), l, e


def law_rhs(alpha: float, mu: float, e: float) -> float:
    """(4 pi^2/mu) (1-e^2)^(-(alpha+1)/2) P^2_{(alpha-1)/2}((1-e^2)^(-1/2))."""
    w = 1.0 - e ** 2
    P = legendre_p(0.5 * (alpha - 1.0), w ** -0.5)
    return FOUR_PI_SQ / mu * w ** (-0.5 * (alpha + 1.0)) * P ** 2


def generalized_period(alpha: float, mu: float, k_const: float, E: float, J: float) -> PeriodReport:
    """Period of the power-law family in closed form, cross-checked by quadrature.

    The closed form is (2 pi/|k|) (-2E/k^2)^((alpha-1)/4) P_{(alpha-1)/2}(z) with
    z = mu/(|k| (-2E)^(1/2)); the quadrature is (2/|k|) times the integral over
    [0, pi] of (mu/k^2 + J cos)^((alpha-1)/2).

    Raises:
        BadParameter: Outside the elliptical regime
    """
    R, l, e = power_law_elements(mu, k_const, E, J)
    k = abs(k_const)
    z = mu / (k * math.sqrt(-2.0 * E))
    if z < 1.0:
        if z < 1.0 - 1e-12:
            raise BadParameter(f"Legendre argument z = {z} < 1: E, k and J are inconsistent")
        z = 1.0
    nu = 0.5 * (alpha - 1.0)
    closed = TWO_PI / k * (-2.0 * E / k ** 2) ** (0.5 * nu) * legendre_p(nu, z)
    A = mu / k ** 2
    quad = 2.0 / k * quad_adaptive(lambda th: (A + abs(J) * math.cos(th)) ** nu, 0.0, math.pi,
                                   tol=1e-13, limit=200).value
    cross = abs(closed - quad) / closed
    if cross > 1e-8:
        logger.warning("period closed form and quadrature disagree: %.3e (alpha=%g, e=%g)", cross, alpha, e)
    residual = abs(closed ** 2 * R ** alpha - law_rhs(alpha, mu, e))
    return PeriodReport(closed, R, l, e, residual, quad, cross)


def period_report(m, s0: PhaseState) -> PeriodReport:
    """PeriodReport of the orbit through s0 (Kepler or power-law family).

    Raises:
        UnsupportedFamily: For other families
        BadParameter: For unbound orbits
    """
    inv = evaluate(m, s0)
    if isinstance(m, PowerLaw):
        return generalized_period(m.alpha, m.mu, float(inv["k"]), float(inv["E"]), norm(inv["J"]))
    if m.family == "kepler":
        E = float(inv["E"])
        T = kepler_period(m.mu, E)
        L2 = float(np.asarray(inv["L"]) @ np.asarray(inv["L"]))
        R = m.mu / (-2.0 * E)
        e = norm(inv["J"]) / m.mu
        return PeriodReport(T, R, L2 / m.mu, e, abs(T ** 2 / R ** 3 - FOUR_PI_SQ / m.mu))
    raise UnsupportedFamily(f"No period law for family {m.family!r}")


# ---------------------------------------------------------------- measured laws

@dataclass(frozen=True)
class ThirdLawCheck:
    T: float
    R: float
    e: float
    lhs: float
    rhs: float
    residual: float

    @property
    def relative(self) -> float:
        return self.residual / abs(self.lhs) if self.lhs else self.residual

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["relative"] = self.relative
        return out


def third_law_residual(alpha: float, mu: float, e: Optional[float], trajectory: Trajectory) -> ThirdLawCheck:
    """|T^2 R^alpha - rhs(e)| with T from the trajectory and R from its apsides.

    When e is None the eccentricity fitted from the apsides is used.

    Raises:
        NotPeriodic: If the trajectory does not complete a revolution
    """
    T = find_period(trajectory)
    aps = find_apsides(trajectory)
    R = 0.5 * (aps.r_max + aps.r_min)
    e_fit = (aps.r_max - aps.r_min) / (aps.r_max + aps.r_min)
    e = e_fit if e is None else e
    lhs = T ** 2 * R ** alpha
    rhs = law_rhs(alpha, mu, e)
    logger.debug("third law alpha=%g: T=%.12g R=%.12g e=%.6g", alpha, T, R, e)
    return ThirdLawCheck(T, R, e, lhs, rhs, abs(lhs - rhs))


# ---------------------------------------------------------------- explicit solutions

@dataclass(frozen=True)
class ExplicitConstants:
    """Power-law orbit with perihelion at angle theta0 and time t0."""

    mu: float
    k: float
    E: float
    J: float
    theta0: float = 0.0
    t0: float = 0.0


@dataclass(frozen=True)
class ExplicitPoint:
    state: PolarState
    S: float


def _signed_arctan(c: float, x: float) -> float:
    return math.copysign(1.0, c) * branch_arctan(abs(c), x) if c != 0 else 0.0


def explicit_constants(m: PowerLaw, s0: PhaseState) -> ExplicitConstants:
    """Constants of the explicit solutions, with the perihelion passage preceding s0."""
    consts = orbit_constants(m, s0)
    inv = consts.invariants
    k = float(inv["k"])
    j1, j2 = consts.j_components()
    J = math.hypot(j1, j2)
    peri = math.atan2(j2, j1) if J > 0 else consts.theta0
    # perihelion angle on the branch reached before theta0 in the direction of motion
    if k > 0:
        peri += TWO_PI * math.floor((consts.theta0 - peri) / TWO_PI)
    else:
        peri += TWO_PI * math.ceil((consts.theta0 - peri) / TWO_PI)
    t_peri = time_of_angle(m, consts, peri)
    return ExplicitConstants(m.mu, k, float(inv["E"]), J, peri, t_peri)


def explicit_solution(alpha: float, consts: ExplicitConstants, t: float) -> ExplicitPoint:
    """Closed-form r(t), theta(t) and swept area S(t) for alpha = -1 or 1.

    Raises:
        BadParameter: For any other alpha or an unbound orbit
    """
    mu, k, E, J = consts.mu, consts.k, consts.E, consts.J
    if E >= 0:
        raise BadParameter(f"The explicit solutions need E < 0, got {E}")
    dt = t - consts.t0
    w = math.sqrt(-2.0 * E)
    if alpha == -1:
        phase = w * dt
        r = (mu - k ** 2 * J * math.cos(phase)) / w ** 2
        theta = consts.theta0 + 2.0 * _signed_arctan(k * w / (mu - k ** 2 * J), 0.5 * phase)
        S = 0.5 * (mu * k * dt / w ** 2 - k ** 3 * J * math.sin(phase) / w ** 3)
        rdot = k ** 2 * J * math.sin(phase) / w
        thetadot = k / r
    elif alpha == 1:
        tau = k * dt
        d = mu / k ** 2 + J * math.cos(tau)
        r = 1.0 / d
        theta = consts.theta0 + tau
        S = 0.5 * (2.0 * mu * abs(k) / w ** 3 * _signed_arctan(abs(k) * w / (mu + k ** 2 * J), 0.5 * tau)
                   - k ** 2 * J * math.sin(tau) / (w ** 2 * d))
        rdot = J * k * math.sin(tau) * r ** 2
        thetadot = k
    else:
        raise BadParameter(f"Explicit solutions exist for alpha = -1 and 1 only, got {alpha}")
    return ExplicitPoint(PolarState(t, r, theta, rdot, thetadot), S)


# ---------------------------------------------------------------- MICZ

@dataclass(frozen=True)
class MICZThirdLaw:
    T: float
    R: float
    plane_semi_major: float
    residual: float
    plane_residual: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def micz_third_law(trajectory: Trajectory, samples: int = 721) -> MICZThirdLaw:
    """Third law of a bound MICZ orbit.

    R is the mean of the apsidal distances, for which T^2/R^3 = 4 pi^2/mu. The
    orbit projected onto its plane (normal N) is fitted by an ellipse whose
    semimajor axis a obeys T^2/a^3 = 4 pi^2 mu^2/(mu^2 + 2 H lambda^2)^(3/2);
    both residuals are reported.

    Raises:
        NotPeriodic: For H >= 0 or an incomplete revolution
        UnsupportedFamily: For trajectories of other families
    """
    m = trajectory.model
    if not isinstance(m, MICZ):
        raise UnsupportedFamily("micz_third_law needs a MICZ trajectory")
    inv = evaluate(m, trajectory.state(0))
    H = float(inv["H"])
    if H >= 0:
        raise NotPeriodic(f"A MICZ orbit with H = {H} >= 0 is not bound", details={"H": H})
    T = find_period(trajectory)
    aps = find_apsides(trajectory)
    R = 0.5 * (aps.r_min + aps.r_max)
    residual = abs(T ** 2 / R ** 3 - FOUR_PI_SQ / m.mu)

    N = np.asarray(inv["N"], dtype=float)
    e1, e2, _ = orthonormal_frame(unit(N))
    t = np.linspace(trajectory.t[0], trajectory.t[0] + T, samples)
    r = trajectory.states_at(t)[:, 0:3]
    fit = fit_ellipse(np.column_stack([r @ e1, r @ e2]))
    a = fit.semi_major
    predicted = FOUR_PI_SQ * m.mu ** 2 / (m.mu ** 2 + 2.0 * H * m.lam ** 2) ** 1.5
    plane_residual = abs(T ** 2 / a ** 3 - predicted)
    logger.info("MICZ third law: T=%.12g R=%.12g a=%.12g", T, R, a)
    return MICZThirdLaw(T, R, a, residual, plane_residual)


# ---------------------------------------------------------------- sweeps

@dataclass(frozen=True)
class LawScanRow:
    alpha: float
    e: float
    T: float
    R: float
    residual: float


def power_law_orbit(alpha: float, e: float, mu: float = 1.0, l: float = 1.0) -> Tuple[PowerLaw, PhaseState]:
    """Model and perihelion state of the power-law orbit with semilatus rectum l.

    Raises:
        BadParameter: For e outside [0, 1) or l <= 0
    """
    if not (0.0 <= e < 1.0) or l <= 0:
        raise BadParameter(f"Need 0 <= e < 1 and l > 0, got e={e}, l={l}")
    m = PowerLaw(mu=mu, alpha=alpha)
    k = math.sqrt(mu * l)
    rp = l / (1.0 + e)
    speed = rp * k * rp ** (0.5 * (alpha - 1.0))
    return m, PhaseState(0.0, [rp, 0.0, 0.0], [0.0, speed, 0.0])


def _scan_one(alpha: float, e: float, mu: float, rel_tol: float) -> LawScanRow:
    m, s0 = power_law_orbit(alpha, e, mu)
    predicted = period_report(m, s0).T
    traj = integrate(m, s0, IntegrationConfig((0.0, 1.1 * predicted), rel_tol=rel_tol, abs_tol=rel_tol * 1e-2))
    check = third_law_residual(alpha, mu, e, traj)
    return LawScanRow(alpha, e, check.T, check.R, check.relative)


def lawscan(alphas: Iterable[float], eccentricities: Iterable[float], mu: float = 1.0,
            rel_tol: float = 1e-11, workers: Optional[int] = None) -> List[LawScanRow]:
    """Measured relative third-law residual over an (alpha, e) grid.

    Orbits are independent and run on a thread pool; rows come back in grid order.
    """
    grid = [(float(a), float(e)) for a in alphas for e in eccentricities]
    logger.info("lawscan over %d orbits", len(grid))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_scan_one, a, e, mu, rel_tol) for a, e in grid]
        return [f.result() for f in futures]


__all__ = [
    "PeriodReport", "kepler_period", "power_law_elements", "law_rhs", "generalized_period",
    "period_report", "ThirdLawCheck", "third_law_residual", "ExplicitConstants", "ExplicitPoint",
    "explicit_constants", "explicit_solution", "MICZThirdLaw", "micz_third_law", "LawScanRow",
    "power_law_orbit", "lawscan",
]
