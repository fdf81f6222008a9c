"""Homogeneous inflaton field with a double-well potential.

State is ``z = (phi, chi)`` with ``chi = dphi/dt``::

    dphi/dt = chi
    dchi/dt = -3 H_u(phi) chi - lambda phi (phi^2 - v^2)

``H_u`` is one of four field-dependent Hubble functions. The absolute
variants damp everywhere except at phi = +-v (point attractors); the plain
variants anti-damp inside |phi| < v and sustain a Lienard limit cycle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from . import dynsys
from .dynsys import FixedPointClass, FixedPointReport, FlowSystem
from .errors import NondifferentiablePoint, RootNotFound

__all__ = [
    "HubbleVariant",
    "InflatonParams",
    "LienardForm",
    "LimitCycleReport",
    "potential",
    "potential_slope",
    "potential_curvature",
    "hubble",
    "hubble_slope",
    "make_flow",
    "stability_eigenvalues",
    "is_locally_unstable",
    "instability_band",
    "bendixson_excludes_cycles",
    "fixed_points",
    "is_stable_fixed_point",
    "lienard_form",
    "period_estimate",
    "upward_crossings",
    "detect_limit_cycle",
    "nearest_attractor",
]


class HubbleVariant(str, Enum):
    abs_plus = "abs_plus"
    abs_minus = "abs_minus"
    plain_plus = "plain_plus"
    plain_minus = "plain_minus"

    @property
    def is_abs(self) -> bool:
        return self in (HubbleVariant.abs_plus, HubbleVariant.abs_minus)

    @property
    def sign(self) -> float:
        return 1.0 if self in (HubbleVariant.abs_plus, HubbleVariant.plain_plus) else -1.0


def coupled_gamma(G: float, lam: float) -> float:
    """Dissipation parameter implied by Newton's constant: sqrt(2 pi G lambda / 3)."""
    return math.sqrt(2.0 * math.pi * G * lam / 3.0)


def coupled_G(gamma: float, lam: float) -> float:
    return 3.0 * gamma**2 / (2.0 * math.pi * lam)


@dataclass(frozen=True)
class InflatonParams:
    lam: float
    v: float
    gamma: float
    hubble_variant: HubbleVariant = HubbleVariant.abs_plus
    G: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "hubble_variant", HubbleVariant(self.hubble_variant))
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if not self.v >= 0:
            raise ValueError("v must be non-negative")
        if not self.gamma >= 0:
            raise ValueError("gamma must be non-negative")
        if self.G is not None:
            if not self.G > 0:
                raise ValueError("G must be positive")
            expected = coupled_gamma(self.G, self.lam)
            if abs(self.gamma - expected) > 1e-12 * max(1.0, expected):
                raise ValueError(
                    f"gamma={self.gamma!r} inconsistent with G={self.G!r}: expected {expected!r}"
                )

    @classmethod
    def from_G(cls, lam: float, v: float, G: float, hubble_variant="plain_plus") -> "InflatonParams":
        return cls(lam, v, coupled_gamma(G, lam), hubble_variant, G)

    @property
    def anti_damped(self) -> bool:
        """Negative Hubble variants pump energy in; trajectories usually diverge."""
        return self.hubble_variant.sign < 0


# ---------------------------------------------------------------- potential


def potential(params: InflatonParams, phi):
    return 0.25 * params.lam * (phi * phi - params.v**2) ** 2


def potential_slope(params: InflatonParams, phi):
    return params.lam * phi * (phi * phi - params.v**2)


def potential_curvature(params: InflatonParams, phi):
    return params.lam * (3.0 * phi * phi - params.v**2)


def hubble(params: InflatonParams, phi):
    u = phi * phi - params.v**2
    if params.hubble_variant.is_abs:
        u = abs(u) if np.isscalar(u) else np.abs(u)
    return params.hubble_variant.sign * params.gamma * u


def _hubble_slope(params: InflatonParams, phi):
    # the |.| kink at phi = +-v gets the mean of the one-sided slopes (zero)
    d = 2.0 * phi
    if params.hubble_variant.is_abs:
        d = d * np.sign(phi * phi - params.v**2)
    return params.hubble_variant.sign * params.gamma * d


def hubble_slope(params: InflatonParams, phi: float) -> float:
    if params.hubble_variant.is_abs and phi * phi == params.v**2 and params.gamma != 0:
        raise NondifferentiablePoint(f"|phi^2 - v^2| has a kink at phi={phi!r}")
    return float(_hubble_slope(params, phi))


def make_flow(params: InflatonParams) -> FlowSystem:
    lam, v2 = params.lam, params.v**2

    def rhs(z, t=0.0):
        phi, chi = z[0], z[1]
        return np.array([chi, -3.0 * hubble(params, phi) * chi - lam * phi * (phi * phi - v2)])

    def jacobian(z, t=0.0):
        phi, chi = z[0], z[1]
        return np.array(
            [
                [0.0, 1.0],
                [
                    -potential_curvature(params, phi) - 3.0 * chi * _hubble_slope(params, phi),
                    -3.0 * hubble(params, phi),
                ],
            ]
        )

    return FlowSystem(2, rhs, jacobian, name=f"inflaton[{params.hubble_variant.value}]")


# ---------------------------------------------------------------- local stability


def stability_eigenvalues(params: InflatonParams, phi: float, chi: float) -> tuple[complex, complex]:
    """Closed-form eigenvalues of the 2x2 stability matrix at (phi, chi)."""
    h = hubble(params, phi)
    dh = hubble_slope(params, phi)
    disc = 9.0 * h * h - 4.0 * potential_curvature(params, phi) - 12.0 * chi * dh
    root = np.emath.sqrt(disc)
    return complex(-1.5 * h + 0.5 * root), complex(-1.5 * h - 0.5 * root)


def is_locally_unstable(params: InflatonParams, phi: float, chi: float = 0.0) -> bool:
    """Real eigenvalue pair with exponential separation: V'' + 3 chi H_u' < 0."""
    return bool(potential_curvature(params, phi) + 3.0 * chi * _hubble_slope(params, phi) < 0)


def instability_band(params: InflatonParams) -> tuple[float, float]:
    """Open phi-interval where V'' < 0, i.e. (-v/sqrt3, v/sqrt3)."""
    w = params.v / math.sqrt(3.0)
    return -w, w


def bendixson_excludes_cycles(params: InflatonParams, interval: tuple[float, float], samples: int = 2001) -> bool:
    """True if div f = -3 H_u is nonzero with constant sign on the open strip.

    The sign of ``phi^2 - v^2`` can only change or vanish at +-v, so the
    check is exact; a dense sample of the interior guards the analysis.
    """
    a, b = sorted(map(float, interval))
    if a == b or params.gamma == 0:
        return False
    v = params.v
    if any(a < r < b for r in {-v, v}):
        return False
    phi = np.linspace(a, b, samples)[1:-1]
    div = -3.0 * hubble(params, phi)
    return bool(np.all(div > 0) or np.all(div < 0))


def fixed_points(params: InflatonParams, span: float | None = None, n_guess: int = 41) -> list[FixedPointReport]:
    """All fixed points found by a Newton scan over a grid of guesses.

    Roots closer than 1e-8 are merged; the result is sorted by phi.
    """
    flow = make_flow(params)
    if span is None:
        span = 2.0 * params.v + 1.0
    found: list[FixedPointReport] = []
    for phi in np.linspace(-span, span, n_guess):
        for chi in (-0.5, 0.0, 0.5):
            try:
                rep = dynsys.classify_fixed_point(flow, (phi, chi))
            except RootNotFound:
                continue
            if not any(np.linalg.norm(rep.location - r.location) < 1e-8 for r in found):
                found.append(rep)
    return sorted(found, key=lambda r: r.location[0])


def is_stable_fixed_point(params: InflatonParams, report: FixedPointReport) -> bool:
    """Stability of a fixed point.

    Hyperbolic points follow their eigenvalues. Non-hyperbolic points
    (centers at phi = +-v where H_u vanishes, the degenerate v = 0 origin)
    are stable when the potential has a local minimum there, which holds
    for the positive Hubble variants.
    """
    cls = report.classification
    if report.hyperbolic:
        return cls in (FixedPointClass.stable_node, FixedPointClass.stable_spiral)
    phi = float(report.location[0])
    eps = 1e-4 * max(1.0, params.v)
    v0 = potential(params, phi)
    minimum = potential(params, phi - eps) > v0 and potential(params, phi + eps) > v0
    return bool(minimum and not params.anti_damped)


# ---------------------------------------------------------------- Lienard form


@dataclass(frozen=True)
class LienardForm:
    F: Callable[[float], float]
    G_force: Callable[[float], float]
    alpha: float


def lienard_form(params: InflatonParams) -> LienardForm:
    v2 = params.v**2
    return LienardForm(
        F=lambda phi: phi * (phi * phi - 3.0 * v2),
        G_force=lambda phi: phi * (phi * phi - v2),
        alpha=params.v,
    )


def period_estimate(params: InflatonParams) -> float:
    """Relaxation-oscillation period 2 ln2 sqrt(6 pi G / lambda)."""
    G = params.G if params.G is not None else coupled_G(params.gamma, params.lam)
    return 2.0 * math.log(2.0) * math.sqrt(6.0 * math.pi * G / params.lam)


@dataclass(frozen=True)
class LimitCycleReport:
    found: bool
    period: float
    amplitude: float
    period_estimate: float
    periods: tuple[float, ...] = ()

    @property
    def period_spread(self) -> float:
        """Relative spread (max - min) / mean of the last five return periods."""
        if len(self.periods) < 5:
            return math.inf
        last = np.asarray(self.periods[-5:])
        return float(np.ptp(last) / np.mean(last))


def upward_crossings(flow: FlowSystem, traj: dynsys.Trajectory, t_min: float = 0.0) -> np.ndarray:
    """Refined times where phi crosses zero going up, after ``t_min``."""
    phi = traj.states[:, 0]
    idx = np.nonzero((phi[:-1] < 0) & (phi[1:] >= 0))[0]
    out = []
    for k in idx:
        t = traj.times[k]
        if t < t_min:
            continue
        h = traj.times[k + 1] - t
        tc, _ = dynsys.locate_crossing(flow, traj.states[k], t, h, lambda z: z[0], traj.integrator)
        out.append(tc)
    return np.asarray(out)


def detect_limit_cycle(
    params: InflatonParams,
    z0,
    settle_time: float,
    observe_time: float,
    step: float = 1e-2,
    rel_tol: float = 1e-4,
) -> LimitCycleReport:
    """Look for a self-sustained oscillation through upward phi crossings.

    After ``settle_time`` the upward zero crossings of phi are located; a
    cycle is reported when the last five inter-crossing intervals agree to
    ``rel_tol`` relative. Trajectories that settle onto a point attractor
    stop crossing and yield ``found=False``.
    """
    flow = make_flow(params)
    traj = dynsys.integrate(flow, z0, settle_time + observe_time, "rk4", step)
    est = period_estimate(params)
    crossings = upward_crossings(flow, traj, settle_time)
    late = traj.times >= settle_time
    amplitude = float(np.max(np.abs(traj.states[late, 0])))
    if crossings.size < 2:
        return LimitCycleReport(False, math.nan, amplitude, est)
    periods = tuple(float(x) for x in np.diff(crossings))
    rep = LimitCycleReport(False, float(np.mean(periods[-5:])), amplitude, est, periods)
    found = rep.period_spread < rel_tol
    return LimitCycleReport(found, rep.period, amplitude, est, periods)


def nearest_attractor(params: InflatonParams, z) -> tuple[float, float]:
    """(attractor phi, distance) for the closer of (+v, 0) and (-v, 0)."""
    z = np.asarray(z, dtype=float)
    target = math.copysign(params.v, z[0]) if params.v > 0 else 0.0
    return target, float(np.hypot(z[0] - target, z[1]))
