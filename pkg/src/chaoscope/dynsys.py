"""Integration and stability machinery for N-dimensional flows.

The module works on plain callables wrapped in a :class:`FlowSystem`:

* fixed-step RK4 for general (typically dissipative) flows,
* kick-drift-kick leapfrog, optionally Yoshida-composed to fourth order,
  for separable Hamiltonians ``H = p.p/2 + V(q)``,
* Benettin-style finite-time Lyapunov spectra with periodic QR
  re-orthonormalisation of the tangent frame,
* Newton search for fixed points and eigenvalue classification.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .errors import IntegrationDiverged, RootNotFound

__all__ = [
    "FlowSystem",
    "Trajectory",
    "LyapunovResult",
    "FixedPointClass",
    "FixedPointReport",
    "integrate",
    "locate_crossing",
    "lyapunov_spectrum",
    "newton_root",
    "classify_eigenvalues",
    "classify_fixed_point",
    "finite_difference_jacobian",
]

BLOWUP = 1e12
ZERO_TOL = 1e-10

# Kick/drift weights (fractions of the step) for the symplectic schemes.
# Order 2 is plain kick-drift-kick; order 4 is Yoshida's triple jump of it.
_CBRT2 = 2.0 ** (1.0 / 3.0)
_Y1 = 1.0 / (2.0 - _CBRT2)
_Y0 = -_CBRT2 / (2.0 - _CBRT2)
SYMPLECTIC_WEIGHTS = {
    2: ((0.5, 0.5), (1.0,)),
    4: ((0.5 * _Y1, 0.5 * (_Y0 + _Y1), 0.5 * (_Y0 + _Y1), 0.5 * _Y1), (_Y1, _Y0, _Y1)),
}

SCHEMES = ("rk4", "symplectic_leapfrog")

Vector = np.ndarray
RhsFn = Callable[[Vector, float], Vector]
JacFn = Callable[[Vector, float], np.ndarray]


@dataclass(frozen=True)
class FlowSystem:
    """First-order vector field ``dz/dt = rhs(z, t)`` with its Jacobian.

    For separable Hamiltonians the state is ``z = (q, p)`` with ``n = N/2``
    coordinates, ``force(q) = -dV/dq`` and ``force_jacobian(q) = -d2V/dq2``.
    Supplying ``force`` enables the symplectic integrator.
    """

    dimension: int
    rhs: RhsFn
    jacobian: JacFn
    hamiltonian: Optional[Callable[[Vector], float]] = None
    force: Optional[Callable[[Vector], Vector]] = None
    force_jacobian: Optional[Callable[[Vector], np.ndarray]] = None
    name: str = "flow"

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        if self.force is not None and self.dimension % 2:
            raise ValueError("a separable Hamiltonian needs an even dimension")

    @property
    def is_hamiltonian(self) -> bool:
        return self.force is not None

    def divergence(self, state, t: float = 0.0) -> float:
        return float(np.trace(self.jacobian(np.asarray(state, dtype=float), t)))


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    integrator: str
    step: float
    order: int = 4

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def final_time(self) -> float:
        return float(self.times[-1])

    def energy_drift(self, hamiltonian: Callable[[Vector], float]) -> float:
        """Largest relative deviation of ``hamiltonian`` from its initial value."""
        e = np.array([hamiltonian(z) for z in self.states])
        scale = abs(e[0]) if e[0] != 0 else 1.0
        return float(np.max(np.abs(e - e[0])) / scale)


@dataclass(frozen=True)
class LyapunovResult:
    exponents: np.ndarray
    horizon: float
    renorm_interval: float
    converged: bool
    history_times: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))
    history: np.ndarray = field(repr=False, default_factory=lambda: np.empty((0, 0)))

    @property
    def max_exponent(self) -> float:
        return float(self.exponents[0])

    @property
    def positive_sum(self) -> float:
        """Sum of positive exponents; a per-orbit proxy for the KS entropy."""
        return float(np.sum(self.exponents[self.exponents > 0]))


class FixedPointClass(str, Enum):
    stable_node = "stable_node"
    stable_spiral = "stable_spiral"
    saddle = "saddle"
    unstable_node = "unstable_node"
    unstable_spiral = "unstable_spiral"
    center = "center"
    degenerate = "degenerate"


@dataclass(frozen=True)
class FixedPointReport:
    location: np.ndarray
    eigenvalues: np.ndarray
    classification: FixedPointClass

    @property
    def hyperbolic(self) -> bool:
        return self.classification not in (FixedPointClass.center, FixedPointClass.degenerate)


# ---------------------------------------------------------------- stepping


def _check(z: np.ndarray, t_prev: float) -> None:
    m = np.max(np.abs(z))
    if not m <= BLOWUP:  # also catches NaN
        raise IntegrationDiverged(t_prev)


def _rk4_step(f: RhsFn, z: np.ndarray, t: float, h: float) -> np.ndarray:
    k1 = f(z, t)
    k2 = f(z + 0.5 * h * k1, t + 0.5 * h)
    k3 = f(z + 0.5 * h * k2, t + 0.5 * h)
    k4 = f(z + h * k3, t + h)
    return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _symplectic_step(system: FlowSystem, z: np.ndarray, h: float, order: int) -> np.ndarray:
    kicks, drifts = SYMPLECTIC_WEIGHTS[order]
    n = system.dimension // 2
    q = z[:n].copy()
    p = z[n:].copy()
    for c, d in zip(kicks, drifts):
        p += (c * h) * system.force(q)
        q += (d * h) * p
    p += (kicks[-1] * h) * system.force(q)
    return np.concatenate((q, p))


def _stepper(system: FlowSystem, scheme: str, order: int):
    if scheme == "rk4":
        return lambda z, t, h: _rk4_step(system.rhs, z, t, h)
    if scheme == "symplectic_leapfrog":
        if not system.is_hamiltonian:
            raise ValueError("symplectic_leapfrog needs a separable Hamiltonian system (force)")
        if order not in SYMPLECTIC_WEIGHTS:
            raise ValueError(f"unsupported symplectic order {order}")
        return lambda z, t, h: _symplectic_step(system, z, h, order)
    raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


def integrate(
    system: FlowSystem,
    z0,
    t_end: float,
    scheme: str = "rk4",
    step: float = 1e-3,
    *,
    order: int = 4,
    record_every: int = 1,
) -> Trajectory:
    """Integrate from t=0 to ``t_end`` with a fixed step.

    The step is adjusted down so that an integer number of steps lands
    exactly on ``t_end``. Every ``record_every``-th state is stored, and
    the final state always is.
    """
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    if not step > 0:
        raise ValueError("step must be positive")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    z = np.array(z0, dtype=float)
    if z.shape != (system.dimension,):
        raise ValueError(f"initial state must have shape ({system.dimension},)")
    _check(z, 0.0)

    n = max(1, int(round(t_end / step)))
    h = t_end / n
    advance = _stepper(system, scheme, order)

    n_rec = n // record_every + 1 + (1 if n % record_every else 0)
    times = np.empty(n_rec)
    states = np.empty((n_rec, system.dimension))
    times[0], states[0] = 0.0, z
    r = 1
    for k in range(n):
        t = k * h
        z = advance(z, t, h)
        _check(z, t)
        if (k + 1) % record_every == 0 or k + 1 == n:
            times[r] = (k + 1) * h
            states[r] = z
            r += 1
    return Trajectory(times[:r], states[:r], scheme, h, order)


def locate_crossing(
    system: FlowSystem,
    z: np.ndarray,
    t: float,
    h: float,
    event: Callable[[np.ndarray], float],
    scheme: str = "rk4",
    *,
    order: int = 4,
    tol: float = 1e-12,
    max_iter: int = 80,
) -> tuple[float, np.ndarray]:
    """Bisect on a partial step from ``z`` to find where ``event`` changes sign.

    ``event(z)`` and ``event(step(z, h))`` must have opposite signs. Each
    trial point is produced by one integrator step of the trial size, so
    the located state carries the integrator's local accuracy.
    """
    advance = _stepper(system, scheme, order)
    g0 = event(z)
    lo, hi = 0.0, h
    z_hi = advance(z, t, h)
    z_mid = z_hi
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        z_mid = advance(z, t, mid)
        g = event(z_mid)
        if abs(g) < tol:
            return t + mid, z_mid
        if (g < 0) == (g0 < 0):
            lo = mid
        else:
            hi = mid
    return t + 0.5 * (lo + hi), z_mid


# ---------------------------------------------------------------- Lyapunov


def _renormalize(frame: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """QR-orthonormalise the tangent frame (columns); returns (Q, |diag R|)."""
    q, r = np.linalg.qr(frame)
    d = np.diag(r)
    signs = np.where(d < 0, -1.0, 1.0)
    return q * signs, np.abs(d)


def _rk4_tangent_step(system: FlowSystem, z, frame, t, h):
    f, jac = system.rhs, system.jacobian
    k1 = f(z, t)
    m1 = jac(z, t) @ frame
    z2 = z + 0.5 * h * k1
    k2 = f(z2, t + 0.5 * h)
    m2 = jac(z2, t + 0.5 * h) @ (frame + 0.5 * h * m1)
    z3 = z + 0.5 * h * k2
    k3 = f(z3, t + 0.5 * h)
    m3 = jac(z3, t + 0.5 * h) @ (frame + 0.5 * h * m2)
    z4 = z + h * k3
    k4 = f(z4, t + h)
    m4 = jac(z4, t + h) @ (frame + h * m3)
    return (
        z + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4),
        frame + (h / 6.0) * (m1 + 2 * m2 + 2 * m3 + m4),
    )


def _symplectic_tangent_step(system: FlowSystem, z, frame, t, h, order):
    # exact linearisation of the discrete symplectic map
    kicks, drifts = SYMPLECTIC_WEIGHTS[order]
    n = system.dimension // 2
    q, p = z[:n].copy(), z[n:].copy()
    dq, dp = frame[:n].copy(), frame[n:].copy()
    for c, d in zip(kicks, drifts):
        p += (c * h) * system.force(q)
        dp += (c * h) * (system.force_jacobian(q) @ dq)
        q += (d * h) * p
        dq += (d * h) * dp
    p += (kicks[-1] * h) * system.force(q)
    dp += (kicks[-1] * h) * (system.force_jacobian(q) @ dq)
    return np.concatenate((q, p)), np.vstack((dq, dp))


def lyapunov_spectrum(
    system: FlowSystem,
    z0,
    horizon: float = 1e4,
    renorm_interval: float = 1.0,
    *,
    step: float | None = None,
    scheme: str | None = None,
    order: int = 4,
    transient: float = 0.0,
) -> LyapunovResult:
    """Finite-time Lyapunov spectrum by joint flow/tangent integration.

    The tangent frame starts as the identity and is re-orthonormalised
    every ``renorm_interval``; logs of the stretching factors accumulate
    over ``horizon`` (after discarding ``transient`` time units of
    reference-orbit evolution). Hamiltonian systems default to the
    symplectic tangent map, others to RK4.

    ``converged`` is set when the largest exponent moved by less than
    5e-3 over the last decade of the horizon.
    """
    if not renorm_interval > 0:
        raise ValueError("renorm_interval must be positive")
    if horizon < 100 * renorm_interval:
        raise ValueError("horizon must be at least 100 renormalisation intervals")
    if scheme is None:
        scheme = "symplectic_leapfrog" if system.is_hamiltonian else "rk4"
    if step is None:
        step = renorm_interval / 100.0
    n_sub = max(1, int(round(renorm_interval / step)))
    h = renorm_interval / n_sub
    n_dim = system.dimension

    z = np.array(z0, dtype=float)
    if transient > 0:
        z = integrate(system, z, transient, scheme, h, order=order, record_every=10**9).final_state

    if scheme == "rk4":
        tangent = lambda z, fr, t: _rk4_tangent_step(system, z, fr, t, h)  # noqa: E731
    elif scheme == "symplectic_leapfrog":
        if not system.is_hamiltonian or system.force_jacobian is None:
            raise ValueError("symplectic tangent map needs force and force_jacobian")
        tangent = lambda z, fr, t: _symplectic_tangent_step(system, z, fr, t, h, order)  # noqa: E731
    else:
        raise ValueError(f"unknown scheme {scheme!r}")

    n_renorm = int(round(horizon / renorm_interval))
    frame = np.eye(n_dim)
    sums = np.zeros(n_dim)
    hist = np.empty((n_renorm, n_dim))
    hist_t = np.empty(n_renorm)
    t = 0.0
    for k in range(n_renorm):
        for _ in range(n_sub):
            z, frame = tangent(z, frame, t)
            t += h
        _check(z, t - h)
        frame, stretch = _renormalize(frame)
        sums += np.log(stretch)
        elapsed = (k + 1) * renorm_interval
        hist[k] = sums / elapsed
        hist_t[k] = elapsed

    # exponents carry no intrinsic ordering between QR columns at finite time
    exponents = np.sort(hist[-1])[::-1]
    i_dec = max(0, int(round(n_renorm / 10)) - 1)
    drift = abs(np.max(hist[-1]) - np.max(hist[i_dec]))
    return LyapunovResult(
        exponents=exponents,
        horizon=n_renorm * renorm_interval,
        renorm_interval=renorm_interval,
        converged=bool(drift < 5e-3),
        history_times=hist_t,
        history=hist,
    )


# ---------------------------------------------------------------- fixed points


def _newton_step(system: FlowSystem, z, f):
    jac = system.jacobian(z, 0.0)
    try:
        dz = np.linalg.solve(jac, -f)
    except np.linalg.LinAlgError:
        dz = np.linalg.lstsq(jac, -f, rcond=None)[0]
    if not np.all(np.isfinite(dz)):
        dz = np.linalg.lstsq(jac, -f, rcond=None)[0]
    return dz


def newton_root(
    system: FlowSystem,
    guess,
    *,
    tol: float = 1e-12,
    max_iter: int = 50,
    polish: int = 200,
) -> np.ndarray:
    """Newton iteration for ``rhs(z) = 0``.

    Must reach ``|rhs| < tol`` within ``max_iter`` steps. It then keeps
    polishing while the residual keeps shrinking, so roots of higher
    multiplicity (linear Newton convergence) still land near machine
    precision in location.
    """
    z = np.array(guess, dtype=float)
    f = system.rhs(z, 0.0)
    for k in range(max_iter + 1):
        if np.linalg.norm(f) < tol:
            break
        if k == max_iter:
            raise RootNotFound(f"Newton did not converge from {list(np.atleast_1d(guess))}")
        dz = _newton_step(system, z, f)
        z = z + dz
        if not np.all(np.isfinite(z)) or np.max(np.abs(z)) > BLOWUP:
            raise RootNotFound(f"Newton diverged from {list(np.atleast_1d(guess))}")
        f = system.rhs(z, 0.0)

    res = np.linalg.norm(f)
    for _ in range(polish):
        if res == 0.0:
            break
        dz = _newton_step(system, z, f)
        z_new = z + dz
        f_new = system.rhs(z_new, 0.0)
        res_new = np.linalg.norm(f_new)
        if res_new > res:
            break
        z, f, res = z_new, f_new, res_new
        if np.linalg.norm(dz) <= 1e-15 * max(1.0, np.linalg.norm(z)):
            break
    return z


def classify_eigenvalues(eigenvalues, zero_tol: float = ZERO_TOL) -> FixedPointClass:
    """Map linearisation eigenvalues to a fixed-point class.

    Real and imaginary parts with magnitude below ``zero_tol`` count as
    zero; any zero real part gives ``center`` (all purely imaginary,
    nonzero) or ``degenerate``.
    """
    ev = np.asarray(eigenvalues, dtype=complex)
    re = np.where(np.abs(ev.real) < zero_tol, 0.0, ev.real)
    oscillating = bool(np.any(np.abs(ev.imag) >= zero_tol))
    if np.any(re == 0.0):
        if np.all(re == 0.0) and np.all(np.abs(ev.imag) >= zero_tol):
            return FixedPointClass.center
        return FixedPointClass.degenerate
    if np.all(re < 0):
        return FixedPointClass.stable_spiral if oscillating else FixedPointClass.stable_node
    if np.all(re > 0):
        return FixedPointClass.unstable_spiral if oscillating else FixedPointClass.unstable_node
    return FixedPointClass.saddle


def classify_fixed_point(system: FlowSystem, guess) -> FixedPointReport:
    root = newton_root(system, guess)
    eig = np.linalg.eigvals(system.jacobian(root, 0.0))
    eig = eig[np.lexsort((eig.imag, eig.real))]
    return FixedPointReport(root, eig, classify_eigenvalues(eig))


def finite_difference_jacobian(rhs: RhsFn, z, t: float = 0.0, eps: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian, used as an independent check."""
    z = np.asarray(z, dtype=float)
    n = z.size
    out = np.empty((n, n))
    for j in range(n):
        dz = np.zeros(n)
        dz[j] = eps * max(1.0, abs(z[j]))
        out[:, j] = (rhs(z + dz, t) - rhs(z - dz, t)) / (2 * dz[j])
    return out
