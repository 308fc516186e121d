"""Empirical distances to the standard Gaussian and log-log rate fits."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy.special import ndtr, ndtri
from scipy.stats import linregress

BOOTSTRAP_RESAMPLES = 200
BOOTSTRAP_SEED = 20240611


@dataclass(frozen=True)
class DistanceEstimate:
    d_W: float
    d_K: float
    m: int
    se_proxy: float  # bootstrap standard error of d_W

    def to_json(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RateFit:
    points: tuple[tuple[float, float], ...]
    slope: float
    intercept: float
    slope_se: float

    def predict(self, N) -> np.ndarray:
        return np.exp(self.intercept) * np.asarray(N, dtype=float) ** self.slope

    def to_json(self) -> dict:
        return {
            "points": [list(p) for p in self.points],
            "slope": self.slope,
            "intercept": self.intercept,
            "slope_se": self.slope_se,
        }


def _as_samples(samples, minimum: int) -> np.ndarray:
    x = np.asarray(samples, dtype=float).ravel()
    if len(x) == 0:
        raise ValueError("no samples")
    if len(x) < minimum:
        raise ValueError(f"need at least {minimum} samples, got {len(x)}")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")
    return x


def gaussian_quantile(u):
    """Standard normal quantile; accepts scalars or arrays with entries in (0, 1)."""
    arr = np.asarray(u, dtype=float)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise ValueError("probabilities must lie strictly inside (0, 1)")
    out = ndtri(arr)
    return float(out) if out.ndim == 0 else out


def _midpoint_grid(m: int) -> np.ndarray:
    return ndtri((np.arange(1, m + 1) - 0.5) / m)


def _wasserstein_sorted(xs: np.ndarray, grid: np.ndarray) -> float:
    return float(np.mean(np.abs(xs - grid)))


def wasserstein_gaussian(samples) -> float:
    """(1/m) sum_i |X_(i) - Phi^{-1}((i - 1/2)/m)| over the sorted sample."""
    x = np.sort(_as_samples(samples, 2))
    return _wasserstein_sorted(x, _midpoint_grid(len(x)))


def kolmogorov_gaussian(samples) -> float:
    """sup_t |F_m(t) - Phi(t)|, evaluated at both one-sided limits of each jump."""
    x = np.sort(_as_samples(samples, 1))
    m = len(x)
    cdf = ndtr(x)
    above = np.arange(1, m + 1) / m - cdf
    below = cdf - np.arange(m) / m
    return float(min(1.0, max(above.max(), below.max(), 0.0)))


def bootstrap_se(samples, resamples: int = BOOTSTRAP_RESAMPLES, seed: int = BOOTSTRAP_SEED) -> float:
    """Standard deviation of d_W over nonparametric bootstrap resamples."""
    x = _as_samples(samples, 2)
    m = len(x)
    grid = _midpoint_grid(m)
    rng = np.random.default_rng(seed)
    vals = np.empty(resamples)
    for b in range(resamples):
        idx = rng.integers(0, m, size=m)
        vals[b] = _wasserstein_sorted(np.sort(x[idx]), grid)
    return float(np.std(vals, ddof=1))


def distance_estimate(samples, resamples: int = BOOTSTRAP_RESAMPLES,
                      seed: int = BOOTSTRAP_SEED) -> DistanceEstimate:
    x = _as_samples(samples, 2)
    return DistanceEstimate(
        wasserstein_gaussian(x), kolmogorov_gaussian(x), len(x), bootstrap_se(x, resamples, seed)
    )


def standardize(values, mean: float, variance: float) -> np.ndarray:
    if not variance > 0:
        raise ValueError("variance must be positive to standardize")
    return (np.asarray(values, dtype=float) - mean) / math.sqrt(variance)


def fit_rate(points: Sequence[tuple[float, float]]) -> RateFit:
    """OLS of ln d on ln N."""
    pts = tuple((float(N), float(d)) for N, d in points)
    if len(pts) < 3:
        raise ValueError(f"need at least 3 points, got {len(pts)}")
    if any(not (N > 0 and d > 0) for N, d in pts):
        raise ValueError("rate fit needs positive N and d")
    lx = np.log([N for N, _ in pts])
    ly = np.log([d for _, d in pts])
    if np.ptp(lx) == 0:
        raise ValueError("rate fit needs at least two distinct N")
    res = linregress(lx, ly)
    return RateFit(pts, float(res.slope), float(res.intercept), float(res.stderr))
