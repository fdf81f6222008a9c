"""Nearest-neighbour level statistics: unfolding, spacing histograms, Brody fits."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import xlogy

from .errors import FitDegenerate, UnfoldingFailed

__all__ = [
    "UnfoldedSpectrum",
    "SpacingDistribution",
    "BrodyFit",
    "SpacingAnalysis",
    "unfold",
    "spacings",
    "spacing_distribution",
    "poisson_pdf",
    "wigner_pdf",
    "brody_alpha",
    "brody_pdf",
    "brody_cdf",
    "sample_brody",
    "golden_section",
    "fit_brody",
    "analyze_levels",
    "analyze_spectrum",
]

BIN_WIDTH = 0.25
S_MAX = 4.0
UNFOLD_DEGREE = 6


@dataclass(frozen=True)
class UnfoldedSpectrum:
    raw: np.ndarray
    unfolded: np.ndarray
    coefficients: np.ndarray  # power-basis coefficients in the scaled variable
    domain: tuple[float, float]
    degree: int

    @property
    def mean_spacing(self) -> float:
        return float(np.mean(np.diff(self.unfolded)))


def unfold(levels, degree: int = UNFOLD_DEGREE) -> UnfoldedSpectrum:
    """Map levels to unit mean density through a polynomial staircase fit.

    The staircase N(E) is sampled at the middle of every step, (E_i, i + 1/2),
    and fitted by least squares; the unfolded levels are the fit at E_i.
    """
    raw = np.asarray(levels, dtype=float)
    if raw.ndim != 1 or raw.size < 20:
        raise ValueError("unfolding needs at least 20 levels")
    if degree < 3:
        raise ValueError("unfolding degree must be >= 3")
    if np.any(np.diff(raw) < 0):
        raise ValueError("levels must be ascending")
    counts = np.arange(raw.size) + 0.5
    fit = np.polynomial.Polynomial.fit(raw, counts, degree)
    grid = np.linspace(raw[0], raw[-1], 20 * raw.size)
    if np.any(fit.deriv()(grid) <= 0):
        raise UnfoldingFailed(f"degree-{degree} staircase fit is not monotone; try a lower degree")
    unfolded = fit(raw)
    if np.any(np.diff(unfolded) < 0):
        raise UnfoldingFailed("unfolded sequence is not ascending")
    return UnfoldedSpectrum(raw, unfolded, fit.coef.copy(), tuple(fit.domain), degree)


def spacings(unfolded) -> np.ndarray:
    return np.diff(np.asarray(unfolded, dtype=float))


@dataclass(frozen=True)
class SpacingDistribution:
    spacings: np.ndarray
    edges: np.ndarray
    density: np.ndarray

    @property
    def sample_count(self) -> int:
        return int(self.spacings.size)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])


def spacing_distribution(s, bin_width: float = BIN_WIDTH, s_max: float = S_MAX) -> SpacingDistribution:
    """Histogram of spacings on [0, s_max], normalised to unit area over the range."""
    s = np.asarray(s, dtype=float)
    edges = np.arange(0.0, s_max + 0.5 * bin_width, bin_width)
    density, edges = np.histogram(s, bins=edges, density=True)
    return SpacingDistribution(s, edges, density)


# ---------------------------------------------------------------- reference laws


def poisson_pdf(s):
    return np.exp(-np.asarray(s, dtype=float))


def wigner_pdf(s):
    s = np.asarray(s, dtype=float)
    return 0.5 * np.pi * s * np.exp(-0.25 * np.pi * s * s)


def brody_alpha(omega: float) -> float:
    return float(gamma_fn((omega + 2.0) / (omega + 1.0)) ** (omega + 1.0))


def brody_pdf(s, omega: float):
    s = np.asarray(s, dtype=float)
    a = brody_alpha(omega)
    return a * (omega + 1.0) * s**omega * np.exp(-a * s ** (omega + 1.0))


def brody_cdf(s, omega: float):
    s = np.asarray(s, dtype=float)
    return 1.0 - np.exp(-brody_alpha(omega) * s ** (omega + 1.0))


def sample_brody(omega: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF draws: s = (-ln u / alpha)^(1/(omega+1))."""
    u = rng.random(n)
    u = np.where(u == 0.0, np.nextafter(0.0, 1.0), u)
    return (-np.log(u) / brody_alpha(omega)) ** (1.0 / (omega + 1.0))


# ---------------------------------------------------------------- fitting


def golden_section(f: Callable[[float], float], a: float, b: float, tol: float = 1e-4) -> float:
    """Minimise a unimodal ``f`` on [a, b] to an interval narrower than ``tol``.

    The endpoints are compared with the interior optimum so that minima
    sitting on the boundary are returned exactly.
    """
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    lo, hi = a, b
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = f(d)
    x = 0.5 * (lo + hi)
    return min((a, x, b), key=f)


@dataclass(frozen=True)
class BrodyFit:
    omega: float
    alpha: float
    fit_method: str
    goodness: float  # negative log-likelihood (mle) or SSE (histogram_lsq)
    n: int

    def pdf(self, s):
        return brody_pdf(s, self.omega)

    def record(self) -> dict:
        return {"omega": self.omega, "alpha": self.alpha, "method": self.fit_method, "n": self.n, "goodness": self.goodness}


def _neg_log_likelihood(s: np.ndarray, omega: float) -> float:
    # xlogy keeps 0 * log(0) = 0 at omega = 0; exact degeneracies give +inf for omega > 0
    a = brody_alpha(omega)
    with np.errstate(divide="ignore"):
        return -float(np.sum(math.log(a * (omega + 1.0)) + xlogy(omega, s) - a * s ** (omega + 1.0)))


def fit_brody(s, method: str = "mle", tol: float = 1e-4) -> BrodyFit:
    """Best Brody parameter in [0, 1] by golden-section search.

    ``mle`` maximises the likelihood of the raw spacings; ``histogram_lsq``
    minimises the squared error between the pdf at bin centres and the
    histogram densities (width 0.25 on [0, 4]).
    """
    if method not in ("mle", "histogram_lsq"):
        raise ValueError(f"unknown fit method {method!r}")
    s = np.asarray(s, dtype=float)
    if s.size < 50:
        raise ValueError("Brody fit needs at least 50 spacings")
    if np.any(s < 0) or not np.all(np.isfinite(s)):
        raise ValueError("spacings must be finite and non-negative")
    if np.ptp(s) <= 1e-12 * max(np.mean(s), 1e-300):
        raise FitDegenerate("all spacings are equal")
    if method == "mle":
        objective = lambda w: _neg_log_likelihood(s, w)  # noqa: E731
    else:
        dist = spacing_distribution(s)
        centers = dist.centers
        objective = lambda w: float(np.sum((brody_pdf(centers, w) - dist.density) ** 2))  # noqa: E731
    omega = float(np.clip(golden_section(objective, 0.0, 1.0, tol), 0.0, 1.0))
    return BrodyFit(omega, brody_alpha(omega), method, objective(omega), int(s.size))


# ---------------------------------------------------------------- pipeline


@dataclass(frozen=True)
class SpacingAnalysis:
    unfolded: dict  # block label -> UnfoldedSpectrum
    spacings: np.ndarray  # pooled, block-major
    distribution: SpacingDistribution
    fit: BrodyFit
    cross_check: BrodyFit  # the other fit method on the same spacings


def analyze_levels(
    blocks: Mapping[object, np.ndarray], L: int = 100, degree: int = UNFOLD_DEGREE, method: str = "mle"
) -> SpacingAnalysis:
    """Unfold each symmetry block on its own, then pool spacings and fit.

    Pooling only after unfolding keeps independent sectors from being
    interleaved, which would push the statistics toward Poisson.
    """
    unfolded, pooled = {}, []
    for label, lv in blocks.items():
        lv = np.sort(np.asarray(lv, dtype=float))[:L]
        try:
            u = unfold(lv, degree)
        except (UnfoldingFailed, ValueError) as exc:
            raise type(exc)(f"block {getattr(label, 'value', label)}: {exc}") from exc
        unfolded[label] = u
        pooled.append(spacings(u.unfolded))
    s = np.concatenate(pooled)
    other = "histogram_lsq" if method == "mle" else "mle"
    return SpacingAnalysis(unfolded, s, spacing_distribution(s), fit_brody(s, method), fit_brody(s, other))


def analyze_spectrum(spectrum, L: int = 100, degree: int = UNFOLD_DEGREE, method: str = "mle") -> SpacingAnalysis:
    """Level statistics of a converged YMH spectrum (first L levels of each block)."""
    return analyze_levels(spectrum.levels, L, degree, method)
