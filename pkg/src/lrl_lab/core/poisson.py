"""
Poisson-bracket core module for the LRL laboratory.

This module provides:
- Observables over 2N-dimensional phase space
- The canonical bracket and the MICZ bracket with its magnetic term, by
  Richardson-extrapolated central differences
- Algebra suites checking the bracket relations of the first integrals
  of the Kepler, HamiltonianAngle and MICZ systems at sampled points
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from .base import PhaseState, cross, norm, unit
from .invariants import evaluate, hamiltonian_from_integrals, rescaled_integrals, weyl_integrals
from .models import Kepler, MICZ, HamiltonianAngle
from ..utils.constants import DEFAULT_VALUES, VALIDATION_RULES
from ..utils.exceptions import (BadParameter, DomainError, LabError, NumericalBreakdown, RegimeViolation)

logger = logging.getLogger("lrl-lab.poisson")

Point = Tuple[np.ndarray, np.ndarray]

CYCLIC = ((0, 1, 2), (1, 2, 0), (2, 0, 1))


def levi_civita(i: int, j: int, k: int) -> int:
    return (i - j) * (j - k) * (k - i) // 2


@dataclass(frozen=True)
class Observable:
    """A smooth function of (q, p) on a phase space with dim positions."""

    name: str
    evaluator: Callable[[np.ndarray, np.ndarray], float]
    dim: int = 3

    def __call__(self, q: np.ndarray, p: np.ndarray) -> float:
        try:
            return float(self.evaluator(q, p))
        except LabError:
            raise
        except (OverflowError, ZeroDivisionError, ValueError) as e:
            raise DomainError(f"Failed to evaluate {self.name}: {str(e)}")


def constant(name: str, value: float, dim: int) -> Observable:
    return Observable(name, lambda q, p: value, dim)


@dataclass(frozen=True)
class BracketStructure:
    kind: str = "canonical"
    lam: float = 0.0

    def __post_init__(self):
        if self.kind not in ("canonical", "micz"):
            raise BadParameter(f"Unknown bracket structure '{self.kind}'")

    @classmethod
    def micz(cls, lam: float) -> "BracketStructure":
        return cls("micz", float(lam))


CANONICAL = BracketStructure()


def _split(point, dim: int) -> Point:
    if isinstance(point, tuple) and len(point) == 2:
        q, p = point
    else:
        flat = np.asarray(point, dtype=float).ravel()
        if flat.size != 2 * dim:
            raise BadParameter(f"Expected a point with {2 * dim} coordinates, got {flat.size}")
        q, p = flat[:dim], flat[dim:]
    q = np.asarray(q, dtype=float).ravel()
    p = np.asarray(p, dtype=float).ravel()
    if q.size != dim or p.size != dim:
        raise BadParameter(f"Expected {dim} positions and {dim} momenta")
    return q, p


def _central(F: Observable, x: np.ndarray, dim: int, i: int, h: float) -> float:
    up, down = x.copy(), x.copy()
    up[i] += h
    down[i] -= h
    return (F(up[:dim], up[dim:]) - F(down[:dim], down[dim:])) / (2.0 * h)


def gradient(F: Observable, point, step: Optional[float] = None,
             tol: Optional[float] = None) -> np.ndarray:
    """Gradient of F over (q, p) by central differences, extrapolated once.

    The step for coordinate x_i is step * (1 + |x_i|).

    Raises:
        NumericalBreakdown: When the h and h/2 estimates disagree by more than tol
            relative to the size of the gradient
    """
    dim = F.dim
    step = DEFAULT_VALUES["poisson"]["step"] if step is None else step
    tol = DEFAULT_VALUES["poisson"]["richardson_tol"] if tol is None else tol
    q, p = _split(point, dim)
    x = np.concatenate([q, p])
    coarse = np.empty(x.size)
    fine = np.empty(x.size)
    for i in range(x.size):
        h = step * (1.0 + abs(x[i]))
        coarse[i] = _central(F, x, dim, i, h)
        fine[i] = _central(F, x, dim, i, 0.5 * h)
    grad = (4.0 * fine - coarse) / 3.0
    scale = max(float(np.max(np.abs(grad))), abs(F(q, p)))
    gap = np.abs(fine - coarse)
    worst = int(np.argmax(gap))
    if gap[worst] > tol * scale:
        raise NumericalBreakdown(
            f"Finite-difference estimates of d{F.name}/dx{worst} disagree",
            details={"observable": F.name, "coordinate": worst, "gap": float(gap[worst]), "scale": scale})
    return grad


def bracket(F: Observable, G: Observable, point, structure: BracketStructure = CANONICAL) -> float:
    """{F, G} at a phase-space point.

    canonical: sum_i dF/dq_i dG/dp_i - dF/dp_i dG/dq_i.
    micz: adds lam eps_ijk x_k / r^3 dF/dp_i dG/dp_j.

    Swapping F and G negates every term, so {F, G} = -{G, F} exactly.
    """
    if F.dim != G.dim:
        raise BadParameter(f"{F.name} and {G.name} live on different phase spaces")
    dim = F.dim
    q, p = _split(point, dim)
    gF = gradient(F, (q, p))
    gG = gradient(G, (q, p))
    value = float(np.dot(gF[:dim], gG[dim:]) - np.dot(gF[dim:], gG[:dim]))
    if structure.kind == "micz":
        if dim != 3:
            raise BadParameter("The MICZ bracket needs a 3-dimensional configuration space")
        r = norm(q)
        value += structure.lam * float(q @ cross(gF[dim:], gG[dim:])) / r ** 3
    return value


def bracket_observable(F: Observable, G: Observable, structure: BracketStructure = CANONICAL) -> Observable:
    """{F, G} as an observable, for nested brackets."""
    return Observable(f"{{{F.name},{G.name}}}", lambda q, p: bracket(F, G, (q, p), structure), F.dim)


# ---------------------------------------------------------------- suites

@dataclass(frozen=True)
class Relation:
    left: Observable
    right: Observable
    rhs: Callable[[np.ndarray, np.ndarray], float]

    @property
    def name(self) -> str:
        return f"{{{self.left.name},{self.right.name}}}"


@dataclass(frozen=True)
class Suite:
    name: str
    dim: int
    structure: BracketStructure
    hamiltonian: Observable
    relations: List[Relation]
    integrals: List[Observable]
    identities: Dict[str, Callable[[np.ndarray, np.ndarray], float]]
    sampler: Callable[[np.random.Generator], Point]
    regime: Callable[[np.ndarray, np.ndarray], bool]
    regime_text: str


@dataclass(frozen=True)
class AlgebraReport:
    suite: str
    points: int
    params: Dict[str, float]
    residuals: Dict[str, float] = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values()) if self.residuals else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {"suite": self.suite, "points": self.points, "params": dict(self.params),
                "residuals": dict(self.residuals), "max_residual": self.max_residual}


def _random_direction(rng: np.random.Generator) -> np.ndarray:
    while True:
        d = rng.normal(size=3)
        n = norm(d)
        if n > 1e-3:
            return d / n


def _spatial_sampler(mu: float, lo: float, hi: float) -> Callable[[np.random.Generator], Point]:
    """Random (r, p) with |r| in [0.5, 2] and p^2 = u 2 mu / |r|, u drawn from [lo, hi]."""

    def sample(rng: np.random.Generator) -> Point:
        q = _random_direction(rng) * rng.uniform(0.5, 2.0)
        while True:
            d = _random_direction(rng)
            if norm(cross(unit(q), d)) > 0.2:
                break
        u = lo if lo == hi else rng.uniform(lo, hi)
        return q, d * math.sqrt(u * 2.0 * mu / norm(q))

    return sample


def _kepler_suite(name: str, params: Mapping[str, float]) -> Suite:
    mu = float(params.get("mu", 1.0))
    if mu <= 0:
        raise BadParameter(f"The Kepler suites need mu > 0, got {mu}")
    m = Kepler(mu=mu)

    def energy(q, p):
        return 0.5 * float(p @ p) - mu / norm(q)

    H = Observable("H", energy, 3)
    L = [Observable(f"L{i + 1}", lambda q, p, i=i: cross(q, p)[i], 3) for i in range(3)]
    J = [Observable(f"J{i + 1}", lambda q, p, i=i: evaluate(m, PhaseState(0.0, q, p))["J"][i], 3)
         for i in range(3)]

    relations = [Relation(L[i], L[j], lambda q, p, k=k: L[k](q, p)) for i, j, k in CYCLIC]
    if name == "kepler_zero":
        vec = J
        relations += [Relation(J[i], J[j], lambda q, p: 0.0) for i, j, _ in CYCLIC]
        sampler = _spatial_sampler(mu, 1.0, 1.0)
        regime = lambda q, p: abs(energy(q, p)) <= 1e-9 * mu / norm(q)
        regime_text = "E = 0"
    else:
        vec = [Observable(f"Js{i + 1}", lambda q, p, i=i: J[i](q, p) / math.sqrt(abs(2.0 * energy(q, p))), 3)
               for i in range(3)]
        # so(4) below the escape energy, so(3,1) above it
        relations += [Relation(vec[i], vec[j], lambda q, p, k=k: -math.copysign(1.0, energy(q, p)) * L[k](q, p))
                      for i, j, k in CYCLIC]
        if name == "kepler_negative":
            sampler = _spatial_sampler(mu, 0.2, 0.8)
            regime = lambda q, p: energy(q, p) < 0
            regime_text = "E < 0"
        else:
            sampler = _spatial_sampler(mu, 1.2, 2.0)
            regime = lambda q, p: energy(q, p) > 0
            regime_text = "E > 0"
    relations += [Relation(vec[i], L[j], lambda q, p, i=i, j=j: sum(levi_civita(i, j, k) * vec[k](q, p)
                                                                     for k in range(3)))
                  for i in range(3) for j in range(3)]

    def j2_vs_energy(q, p):
        inv = evaluate(m, PhaseState(0.0, q, p))
        Lv, Jv = inv["L"], inv["J"]
        return float(Jv @ Jv) - (2.0 * float(Lv @ Lv) * inv["E"] + mu ** 2)

    return Suite(name, 3, CANONICAL, H, relations, L + J + (vec if vec is not J else []),
                 {"J2_vs_energy": j2_vs_energy}, sampler, regime, regime_text)


class _AngleObservables:
    """J1, J2, I and H of the HamiltonianAngle system in polar canonical coordinates.

    q = (r, theta), p = (p_r, p_theta) with p_theta the signed angular momentum.
    """

    def __init__(self, m: HamiltonianAngle):
        self.m = m

    def H(self, q, p) -> float:
        r, th = q
        half = 0.5 * (th - self.m.beta)
        return (0.5 * (p[0] ** 2 + p[1] ** 2 / r ** 2) - self.m.mu / r
                - self.m.alpha * math.cos(half) / math.sqrt(r))

    def _parts(self, q, p) -> Tuple[float, float]:
        r, th = q
        half = 0.5 * (th - self.m.beta)
        radial = p[1] ** 2 / r - self.m.mu
        transverse = p[1] * p[0] + self.m.alpha * math.sqrt(r) * math.sin(half)
        return radial, transverse

    def J1(self, q, p) -> float:
        radial, transverse = self._parts(q, p)
        return radial * math.cos(q[1]) + transverse * math.sin(q[1])

    def J2(self, q, p) -> float:
        radial, transverse = self._parts(q, p)
        return radial * math.sin(q[1]) - transverse * math.cos(q[1])

    def I0(self, q, p) -> float:
        r, th = q
        half = 0.5 * (th - self.m.beta)
        a = self.m.alpha
        return p[0] * a * math.sqrt(r) * math.sin(half) + p[1] * a * math.cos(half) / math.sqrt(r)

    def I(self, q, p) -> float:
        return 2.0 * p[1] * self.H(q, p) + self.I0(q, p)

    def rescaled(self, q, p) -> Dict[str, float]:
        return rescaled_integrals(self.m, self.J1(q, p), self.J2(q, p), self.I(q, p), self.H(q, p))

    def weyl(self, q, p) -> Dict[str, float]:
        return weyl_integrals(self.m, self.J1(q, p), self.J2(q, p), self.I0(q, p))


def _polar_sample(rng: np.random.Generator) -> Tuple[np.ndarray, float]:
    q = np.array([rng.uniform(0.5, 2.0), rng.uniform(-math.pi, math.pi)])
    return q, rng.uniform(-math.pi, math.pi)


def _polar_momentum(q: np.ndarray, psi: float, speed: float) -> np.ndarray:
    return np.array([speed * math.cos(psi), q[0] * speed * math.sin(psi)])


def _zero_energy_speed(obs: _AngleObservables, q: np.ndarray, psi: float) -> float:
    """|p| putting (q, p) on H = 0, by bisection."""
    f = lambda s: obs.H(q, _polar_momentum(q, psi, s))
    hi = 1.0
    while f(hi) <= 0:
        hi *= 2.0
    return optimize.bisect(f, 0.0, hi, xtol=1e-15, rtol=4.0 * np.finfo(float).eps,
                           maxiter=DEFAULT_VALUES["events"]["max_iter"] * 5)


def _angle_suite(name: str, params: Mapping[str, float]) -> Suite:
    m = HamiltonianAngle(mu=float(params.get("mu", 1.0)), alpha=float(params.get("alpha", 0.5)),
                         beta=float(params.get("beta", 0.3)))
    o = _AngleObservables(m)
    H = Observable("H", o.H, 2)
    J1, J2 = Observable("J1", o.J1, 2), Observable("J2", o.J2, 2)
    a2 = m.alpha ** 2
    cb, sb = math.cos(m.beta), math.sin(m.beta)

    def any_sample(rng):
        q, psi = _polar_sample(rng)
        return q, _polar_momentum(q, psi, rng.uniform(0.3, 2.0))

    if name == "hamiltonian_angle_raw":
        I = Observable("I", o.I, 2)
        relations = [
            Relation(J1, J2, lambda q, p: -o.I(q, p)),
            Relation(J1, I, lambda q, p: -2.0 * o.H(q, p) * o.J2(q, p) - 0.5 * a2 * sb),
            Relation(J2, I, lambda q, p: 2.0 * o.H(q, p) * o.J1(q, p) + 0.5 * a2 * cb),
        ]
        identities = {"H_from_integrals": lambda q, p: hamiltonian_from_integrals(
            m, o.J1(q, p), o.J2(q, p), o.I(q, p)) - o.H(q, p)}
        return Suite(name, 2, CANONICAL, H, relations, [J1, J2, I], identities,
                     any_sample, lambda q, p: True, "any energy")

    if name == "hamiltonian_angle_rescaled":
        A = Observable("A", lambda q, p: o.rescaled(q, p)["A"], 2)
        B = Observable("B", lambda q, p: o.rescaled(q, p)["B"], 2)
        C = Observable("C", lambda q, p: o.rescaled(q, p)["C"], 2)
        sign = lambda q, p: math.copysign(1.0, o.H(q, p))
        relations = [
            Relation(A, B, lambda q, p: -sign(q, p) * C(q, p)),
            Relation(B, C, lambda q, p: A(q, p)),
            Relation(C, A, lambda q, p: B(q, p)),
        ]

        def quadric(q, p):
            v = o.rescaled(q, p)
            return v["A"] ** 2 + v["B"] ** 2 - sign(q, p) * v["C"] ** 2 - v["mu_pm"] ** 2

        def sample(rng):
            while True:
                q, p = any_sample(rng)
                if abs(o.H(q, p)) >= 0.05:
                    return q, p

        return Suite(name, 2, CANONICAL, H, relations, [A, B, C], {"quadric": quadric},
                     sample, lambda q, p: o.H(q, p) != 0, "H != 0")

    if m.alpha == 0:
        raise BadParameter("The zero-energy suite needs alpha != 0")
    A0 = Observable("A0", lambda q, p: o.weyl(q, p)["A0"], 2)
    B0 = Observable("B0", lambda q, p: o.weyl(q, p)["B0"], 2)
    C0 = constant("C0", 1.0, 2)
    relations = [
        Relation(A0, B0, lambda q, p: 1.0),
        Relation(B0, C0, lambda q, p: 0.0),
        Relation(C0, A0, lambda q, p: 0.0),
    ]

    def parabolic(q, p):
        return o.J1(q, p) * cb + o.J2(q, p) * sb - (o.I0(q, p) ** 2 / a2 - m.mu)

    def sample(rng):
        while True:
            q, psi = _polar_sample(rng)
            if m.mu / q[0] + m.alpha * math.cos(0.5 * (q[1] - m.beta)) / math.sqrt(q[0]) > 0.05:
                return q, _polar_momentum(q, psi, _zero_energy_speed(o, q, psi))

    return Suite(name, 2, CANONICAL, H, relations, [A0, B0], {"parabolic": parabolic},
                 sample, lambda q, p: abs(o.H(q, p)) <= 1e-9, "H = 0")


def _micz_suite(name: str, params: Mapping[str, float]) -> Suite:
    lam = float(params.get("lambda", 0.3))
    mu = float(params.get("mu", 1.0))
    if mu <= 0:
        raise BadParameter(f"The MICZ suite needs mu > 0, got {mu}")
    m = MICZ(lam=lam, mu=mu)
    inv = lambda q, p: evaluate(m, PhaseState(0.0, q, p))

    def energy(q, p):
        r = norm(q)
        return 0.5 * (float(p @ p) + lam ** 2 / r ** 2) - mu / r

    H = Observable("H", energy, 3)
    P = [Observable(f"P{i + 1}", lambda q, p, i=i: inv(q, p)["P"][i], 3) for i in range(3)]
    J = [Observable(f"J{i + 1}", lambda q, p, i=i: inv(q, p)["J"][i], 3) for i in range(3)]
    relations = [Relation(P[i], P[j], lambda q, p, k=k: P[k](q, p)) for i, j, k in CYCLIC]
    relations += [Relation(P[i], J[j], lambda q, p, i=i, j=j: sum(levi_civita(i, j, k) * J[k](q, p)
                                                                   for k in range(3)))
                  for i in range(3) for j in range(3)]
    relations += [Relation(J[i], J[j], lambda q, p, k=k: -2.0 * energy(q, p) * P[k](q, p))
                  for i, j, k in CYCLIC]

    def identity(key):
        def check(q, p):
            s = PhaseState(0.0, q, p)
            return _micz_relations(m, s)[key]
        return check

    identities = {key: identity(key) for key in ("P2_vs_L2", "J2_vs_energy", "J_dot_P")}
    return Suite(name, 3, BracketStructure.micz(lam), H, relations, P + J, identities,
                 _spatial_sampler(mu, 0.2, 0.8), lambda q, p: True, "any energy")


def _micz_relations(m: MICZ, s: PhaseState) -> Dict[str, float]:
    v = evaluate(m, s)
    P, J, Lm, H = v["P"], v["J"], float(v["L_mag"]), float(v["H"])
    return {
        "P2_vs_L2": float(P @ P) - (Lm ** 2 + m.lam ** 2),
        "J2_vs_energy": float(J @ J) - (2.0 * Lm ** 2 * H + m.mu ** 2),
        "J_dot_P": float(J @ P) - m.lam * m.mu,
    }


_BUILDERS = {
    "kepler_negative": _kepler_suite,
    "kepler_positive": _kepler_suite,
    "kepler_zero": _kepler_suite,
    "hamiltonian_angle_raw": _angle_suite,
    "hamiltonian_angle_rescaled": _angle_suite,
    "hamiltonian_angle_weyl": _angle_suite,
    "micz": _micz_suite,
}


def build_suite(suite: str, params: Optional[Mapping[str, float]] = None) -> Suite:
    rule = VALIDATION_RULES["pbcheck"]["suite"]
    if suite not in rule["values"]:
        raise BadParameter(f"{rule['message']}: '{suite}'", details={"allowed": rule["values"]})
    return _BUILDERS[suite](suite, dict(params or {}))


def _point_residuals(s: Suite, point: Point) -> Dict[str, float]:
    q, p = point
    out: Dict[str, float] = {}
    for rel in s.relations:
        out[rel.name] = abs(bracket(rel.left, rel.right, point, s.structure) - rel.rhs(q, p))
    for Q in s.integrals:
        out[f"{{{Q.name},H}}"] = abs(bracket(Q, s.hamiltonian, point, s.structure))
    for key, fn in s.identities.items():
        out[key] = abs(fn(q, p))
    return out


def algebra_check(suite: str, params: Optional[Mapping[str, float]] = None, points: Optional[int] = None,
                  samples: Optional[Sequence] = None, seed: Optional[int] = None,
                  workers: Optional[int] = None) -> AlgebraReport:
    """Max residual of every bracket relation of a suite over sample points.

    Args:
        suite: One of VALIDATION_RULES["pbcheck"]["suite"]["values"]
        params: mu, alpha, beta, lambda as the suite needs them
        points: Number of random points drawn in the suite's energy regime
        samples: Explicit (q, p) points used instead of random ones
        seed: Random seed; defaults to DEFAULT_VALUES["poisson"]["seed"]
        workers: Thread-pool size for the per-point evaluation

    Raises:
        RegimeViolation: When a sample point lies outside the suite's energy regime
        NumericalBreakdown: From the finite differences
    """
    s = build_suite(suite, params)
    if samples is None:
        count = DEFAULT_VALUES["poisson"]["points"] if points is None else int(points)
        if count < 1:
            raise BadParameter(f"points must be positive, got {count}")
        rng = np.random.default_rng(DEFAULT_VALUES["poisson"]["seed"] if seed is None else seed)
        pts = [s.sampler(rng) for _ in range(count)]
    else:
        pts = [_split(x, s.dim) for x in samples]
        if not pts:
            raise BadParameter("No sample points given")
    for n, (q, p) in enumerate(pts):
        if not s.regime(q, p):
            raise RegimeViolation(f"Sample point {n} violates the regime {s.regime_text} of suite {suite}",
                                  details={"point": n, "energy": s.hamiltonian(q, p)})

    logger.info("Checking suite %s at %d points", suite, len(pts))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        per_point = list(pool.map(lambda x: _point_residuals(s, x), pts))
    residuals = {key: max(r[key] for r in per_point) for key in per_point[0]}
    used = {k: float(v) for k, v in (params or {}).items()}
    return AlgebraReport(suite, len(pts), used, residuals)


__all__ = [
    "Observable", "BracketStructure", "CANONICAL", "levi_civita", "constant", "gradient", "bracket",
    "bracket_observable", "Relation", "Suite", "AlgebraReport", "build_suite", "algebra_check",
]
