"""Classical two-mode SU(2) Yang-Mills-Higgs system.

    H = (p1^2 + p2^2)/2 + g^2 v^2 (q1^2 + q2^2) + g^2 q1^2 q2^2 / 2

State vectors are ordered (q1, q2, p1, p2). Long integrations go through
compiled kernels (fourth-order Yoshida composition of kick-drift-kick
leapfrog); :func:`make_flow` exposes the same system to the generic
:mod:`chaoscope.dynsys` machinery.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from . import _ymh_kernels as kern
from .dynsys import SYMPLECTIC_WEIGHTS, FlowSystem, LyapunovResult, Trajectory
from .errors import DegenerateVacuum, IntegrationDiverged, InvalidSeed

__all__ = [
    "CHAOS_THRESHOLD",
    "CROSSING_RULE",
    "YmhParams",
    "CurvatureReport",
    "PoincareSection",
    "SeedSurvey",
    "potential",
    "energy",
    "force",
    "force_jacobian",
    "make_flow",
    "gaussian_curvature_sign",
    "critical_energy",
    "critical_vacuum",
    "section_seed",
    "seed_grid",
    "integrate",
    "poincare_section",
    "lyapunov_spectrum",
    "seed_survey",
    "chaotic_fraction",
]

# Largest finite-time exponent (horizon 1e3) above which an orbit counts as chaotic.
# Regular orbits sit near ln(t)/t ~ 1e-2 at that horizon.
CHAOS_THRESHOLD = 0.05
CROSSING_RULE = "q1=0, p1>0"
CROSSING_TOL = 1e-10


def _weights(order: int):
    kick, drift = SYMPLECTIC_WEIGHTS[order]
    return np.array(kick), np.array(drift)


@dataclass(frozen=True)
class YmhParams:
    g: float
    v: float

    def __post_init__(self):
        if not self.g >= 0:
            raise ValueError("g must be non-negative")
        if not self.v >= 0:
            raise ValueError("v must be non-negative")

    @property
    def omega_sq(self) -> float:
        """Yang-Mills mass term 2 g^2 v^2."""
        return 2.0 * self.g**2 * self.v**2

    @property
    def _mc(self) -> tuple[float, float]:
        return self.g**2 * self.v**2, self.g**2


def potential(params: YmhParams, q1, q2):
    g2 = params.g**2
    return g2 * params.v**2 * (q1 * q1 + q2 * q2) + 0.5 * g2 * q1 * q1 * q2 * q2


def energy(params: YmhParams, state) -> float:
    q1, q2, p1, p2 = state
    return float(0.5 * (p1 * p1 + p2 * p2) + potential(params, q1, q2))


def force(params: YmhParams, q) -> np.ndarray:
    q1, q2 = q
    g2, w2 = params.g**2, params.omega_sq
    return np.array([-(w2 * q1 + g2 * q1 * q2 * q2), -(w2 * q2 + g2 * q2 * q1 * q1)])


def force_jacobian(params: YmhParams, q) -> np.ndarray:
    q1, q2 = q
    g2, w2 = params.g**2, params.omega_sq
    off = -2.0 * g2 * q1 * q2
    return np.array([[-(w2 + g2 * q2 * q2), off], [off, -(w2 + g2 * q1 * q1)]])


def make_flow(params: YmhParams) -> FlowSystem:
    def rhs(z, t=0.0):
        return np.concatenate((z[2:], force(params, z[:2])))

    def jacobian(z, t=0.0):
        jac = np.zeros((4, 4))
        jac[0, 2] = jac[1, 3] = 1.0
        jac[2:, :2] = force_jacobian(params, z[:2])
        return jac

    return FlowSystem(
        4,
        rhs,
        jacobian,
        hamiltonian=lambda z: energy(params, z),
        force=lambda q: force(params, q),
        force_jacobian=lambda q: force_jacobian(params, q),
        name="ymh",
    )


# ---------------------------------------------------------------- curvature criterion


def gaussian_curvature_sign(params: YmhParams, q1, q2):
    """Numerator of the Gaussian curvature of V; negative where motion destabilises."""
    g2, v2 = params.g**2, params.v**2
    return (2 * g2 * v2 + g2 * q2 * q2) * (2 * g2 * v2 + g2 * q1 * q1) - 4 * g2 * g2 * q1 * q1 * q2 * q2


def critical_vacuum(energy: float, g: float) -> float:
    """Vacuum value below which energy ``energy`` reaches the zero-curvature line."""
    return (energy / (6.0 * g * g)) ** 0.25


@dataclass(frozen=True)
class CurvatureReport:
    E_c: float
    E_c_numeric: float
    minimizer: tuple[float, float]
    g: float
    v: float

    def v_c_of_E(self, energy: float) -> float:
        return critical_vacuum(energy, self.g)


def _locus_q2_sq(q1_sq, v2):
    # zero-curvature line solved for q2^2 (g cancels); needs q1^2 > 2 v^2 / 3
    return (4 * v2 * v2 + 2 * v2 * q1_sq) / (3 * q1_sq - 2 * v2)


def critical_energy(params: YmhParams) -> CurvatureReport:
    """Minimum of V on the zero-curvature line, closed form and numerical."""
    if params.v == 0:
        raise DegenerateVacuum("v=0: the zero-curvature line passes through the origin at E=0")
    if params.g <= 0:
        raise ValueError("g must be positive")
    v2 = params.v**2
    lo = 2.0 * v2 / 3.0

    def on_locus(a):
        return potential(params, math.sqrt(a), math.sqrt(_locus_q2_sq(a, v2)))

    res = minimize_scalar(
        on_locus, bounds=(lo * (1 + 1e-9), 30.0 * v2), method="bounded", options={"xatol": 1e-12 * v2}
    )
    a = float(res.x)
    return CurvatureReport(
        E_c=6.0 * params.g**2 * params.v**4,
        E_c_numeric=float(res.fun),
        minimizer=(math.sqrt(a), math.sqrt(_locus_q2_sq(a, v2))),
        g=params.g,
        v=params.v,
    )


# ---------------------------------------------------------------- seeds and integration


def section_seed(params: YmhParams, energy: float, q2: float, p2: float, index: int = 0) -> np.ndarray:
    """Full state on the q1=0 section with p1 > 0 fixed by the energy."""
    p1_sq = 2.0 * (energy - 0.5 * p2 * p2 - potential(params, 0.0, q2))
    if not p1_sq > 0:
        raise InvalidSeed(index, (q2, p2), f"p1^2 = {p1_sq:.6g} < 0 at E={energy!r}")
    return np.array([0.0, q2, math.sqrt(p1_sq), p2])


def seed_grid(params: YmhParams, energy: float, n_radial: int = 8, n_angular: int = 8, r_max: float = 0.94):
    """Polar grid of (q2, p2) seeds inside the accessible ellipse of the section.

    The ellipse is p2^2/2 + g^2 v^2 q2^2 = E. Radii are cell centres of
    (0, r_max]; angles are offset by half a cell so no seed sits on an axis.
    """
    if n_radial < 1 or n_angular < 1:
        raise ValueError("grid must be nonempty")
    m = params.g**2 * params.v**2
    q_max = math.sqrt(energy / m) if m > 0 else math.sqrt(2 * energy)
    p_max = math.sqrt(2.0 * energy)
    seeds = []
    for i in range(n_radial):
        r = r_max * (i + 0.5) / n_radial
        for j in range(n_angular):
            th = 2.0 * math.pi * (j + 0.5) / n_angular
            seeds.append((r * q_max * math.cos(th), r * p_max * math.sin(th)))
    return seeds


def integrate(params: YmhParams, state, t_end: float, step: float = 1e-3, *, order: int = 4, record_every: int = 1) -> Trajectory:
    """Compiled symplectic integration; same contract as :func:`dynsys.integrate`."""
    if not t_end > 0 or not step > 0:
        raise ValueError("t_end and step must be positive")
    n = max(1, int(round(t_end / step)))
    h = t_end / n
    m, c = params._mc
    kick, drift = _weights(order)
    states, idx, _, status = kern.run_trajectory(np.array(state, dtype=float), h, n, record_every, m, c, kick, drift)
    if status:
        raise IntegrationDiverged(idx[-1] * h)
    return Trajectory(idx * h, states, "symplectic_leapfrog", h, order)


@dataclass(frozen=True)
class PoincareSection:
    energy: float
    params: YmhParams
    points: np.ndarray  # (M, 2) columns q2, p2
    seed_index: np.ndarray
    crossing_index: np.ndarray
    states: np.ndarray  # (M, 4) full states at the crossings
    seeds: tuple
    energy_drift: float
    crossing_rule: str = CROSSING_RULE

    def reconstructed_p1(self) -> np.ndarray:
        q2, p2 = self.points[:, 0], self.points[:, 1]
        p1_sq = 2.0 * (self.energy - 0.5 * p2 * p2 - potential(self.params, 0.0, q2))
        return np.sqrt(np.maximum(p1_sq, 0.0))

    def rows(self):
        for s, k, (q2, p2) in zip(self.seed_index, self.crossing_index, self.points):
            yield int(s), int(k), float(q2), float(p2)


def _as_states(params: YmhParams, energy: float, seeds) -> list[np.ndarray]:
    return [section_seed(params, energy, float(q2), float(p2), i) for i, (q2, p2) in enumerate(seeds)]


def poincare_section(
    params: YmhParams,
    energy: float,
    seeds: Sequence[tuple[float, float]],
    t_end: float,
    step: float = 1e-3,
    *,
    max_points: int = 100_000,
) -> PoincareSection:
    """Upward q1 = 0 crossings for every seed, ordered seed-major then by time.

    Seeds are (q2, p2) pairs on the section; p1 > 0 follows from ``energy``.
    Crossings whose reconstructed p1^2 would be negative (grazing points
    spoiled by integration error) are dropped.
    """
    if not energy > 0:
        raise ValueError("energy must be positive")
    states0 = _as_states(params, energy, seeds)
    n = max(1, int(round(t_end / step)))
    h = t_end / n
    m, c = params._mc
    kick, drift = _weights(4)
    pts, sidx, cidx, drift_max = [], [], [], 0.0
    for i, s0 in enumerate(states0):
        cross, _, err, status = kern.run_section(s0, h, n, m, c, kick, drift, max_points, CROSSING_TOL)
        if status:
            raise IntegrationDiverged(t_end, f"seed #{i} diverged")
        drift_max = max(drift_max, err)
        p1_sq = 2.0 * (energy - 0.5 * cross[:, 3] ** 2 - potential(params, 0.0, cross[:, 1]))
        cross = cross[p1_sq >= 0]
        pts.append(cross)
        sidx.append(np.full(len(cross), i, dtype=int))
        cidx.append(np.arange(len(cross)))
    states = np.concatenate(pts) if pts else np.empty((0, 4))
    return PoincareSection(
        energy=energy,
        params=params,
        points=states[:, [1, 3]].copy(),
        seed_index=np.concatenate(sidx),
        crossing_index=np.concatenate(cidx),
        states=states,
        seeds=tuple((float(a), float(b)) for a, b in seeds),
        energy_drift=drift_max,
    )


# ---------------------------------------------------------------- Lyapunov


def _run_lyapunov(params, state, horizon, renorm_interval, step, n_vectors, order=4):
    if horizon < 100 * renorm_interval:
        raise ValueError("horizon must be at least 100 renormalisation intervals")
    n_sub = max(1, int(round(renorm_interval / step)))
    h = renorm_interval / n_sub
    n_renorm = int(round(horizon / renorm_interval))
    m, c = params._mc
    kick, drift = _weights(order)
    frame = np.eye(4)[:, :n_vectors].copy()
    hist, _, err, status, done = kern.run_lyapunov(
        np.array(state, dtype=float), frame, h, n_sub, n_renorm, m, c, kick, drift
    )
    if status:
        raise IntegrationDiverged(done * h)
    return hist, err, n_renorm


def lyapunov_spectrum(
    params: YmhParams,
    state,
    horizon: float = 1e3,
    renorm_interval: float = 1.0,
    step: float = 1e-3,
    n_vectors: int = 4,
) -> LyapunovResult:
    """Finite-time spectrum through the exact tangent map of the symplectic step."""
    hist, _, n_renorm = _run_lyapunov(params, state, horizon, renorm_interval, step, n_vectors)
    i_dec = max(0, int(round(n_renorm / 10)) - 1)
    drift = abs(np.max(hist[-1]) - np.max(hist[i_dec]))
    return LyapunovResult(
        exponents=np.sort(hist[-1])[::-1],
        horizon=n_renorm * renorm_interval,
        renorm_interval=renorm_interval,
        converged=bool(drift < 5e-3),
        history_times=renorm_interval * np.arange(1, n_renorm + 1),
        history=hist,
    )


@dataclass(frozen=True)
class SeedSurvey:
    params: YmhParams
    energy: float
    seeds: tuple
    max_exponents: np.ndarray
    energy_drifts: np.ndarray
    threshold: float = CHAOS_THRESHOLD

    @property
    def chaotic(self) -> np.ndarray:
        return self.max_exponents > self.threshold

    @property
    def fraction(self) -> float:
        return float(np.mean(self.chaotic))


def _survey_one(args):
    params, s0, horizon, renorm_interval, step = args
    hist, err, _ = _run_lyapunov(params, s0, horizon, renorm_interval, step, 1)
    return float(hist[-1, 0]), float(err)


def seed_survey(
    params: YmhParams,
    energy: float,
    seeds: Iterable[tuple[float, float]],
    horizon: float = 1e3,
    step: float = 1e-3,
    renorm_interval: float = 1.0,
    jobs: int = 1,
) -> SeedSurvey:
    """Largest finite-time exponent and energy drift for each seed."""
    seeds = tuple((float(a), float(b)) for a, b in seeds)
    if not seeds:
        raise ValueError("seed grid is empty")
    states0 = _as_states(params, energy, seeds)
    tasks = [(params, s0, horizon, renorm_interval, step) for s0 in states0]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_survey_one, tasks))
    else:
        results = [_survey_one(t) for t in tasks]
    lam, err = map(np.array, zip(*results))
    return SeedSurvey(params, energy, seeds, lam, err)


def chaotic_fraction(
    params: YmhParams,
    energy: float,
    seeds: Iterable[tuple[float, float]],
    horizon: float = 1e3,
    step: float = 1e-3,
    jobs: int = 1,
) -> float:
    """Fraction of seeds whose largest exponent exceeds :data:`CHAOS_THRESHOLD`."""
    return seed_survey(params, energy, seeds, horizon, step, jobs=jobs).fraction
