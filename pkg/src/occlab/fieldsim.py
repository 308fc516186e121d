"""Exact Monte-Carlo draws of the occupation field and its observables.

Particles are unlabeled, so a site holding c particles sends Binomial(c, 1/2)
of them right and the rest left; this has the same joint law as moving each
particle independently.  Because particles move at speed one, simulating the
light cone of the observable (e.g. ``[min A - N, max A + N]`` at time 0,
shrinking by one site per side per step) involves no truncation error.

Single draws take a :class:`~occlab.rng.CounterRNG` for the replicate;
``run_batch`` derives replicate ``i`` from ``(master_seed, i)``, so
``run_batch(job, m, seed).values[i]`` equals the single draw with
``CounterRNG.for_replicate(seed, i)`` regardless of thread count.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np
from scipy.special import gammaln

from . import _core
from .charlier import PolynomialObservable, as_observable
from .kernels import StepLaw, as_sites, ssrw_table
from .rng import FIELD, WALK, CounterRNG

OBSERVABLES = ("W", "D", "Y", "sigma")
_SIGMA_TABLE_MAX = 4096
_U64 = 0xFFFFFFFFFFFFFFFF


@dataclass
class FieldWindow:
    """Counts on sites ``lo..hi`` at time ``time``."""

    lo: int
    hi: int
    counts: np.ndarray
    time: int = 0

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.hi < self.lo or len(self.counts) != self.hi - self.lo + 1:
            raise ValueError("counts must cover lo..hi exactly")
        if np.any(self.counts < 0):
            raise ValueError("counts must be nonnegative")

    def __getitem__(self, x: int) -> int:
        return int(self.counts[x - self.lo])

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def _key(rng: CounterRNG) -> np.uint64:
    return np.uint64(rng.key)


def initial_window(lo: int, hi: int, lam: float, rng: CounterRNG) -> FieldWindow:
    """i.i.d. Poisson(lam) counts on ``lo..hi`` at time 0 (``rng`` is the field stream)."""
    counts = np.empty(hi - lo + 1, dtype=np.int64)
    _core.init_counts(counts, lo, len(counts), float(lam), _key(rng))
    return FieldWindow(lo, hi, counts, 0)


def evolve_window(state: FieldWindow, rng: CounterRNG) -> FieldWindow:
    """One step of every particle; those leaving ``lo..hi`` are lost.

    ``rng`` is the field stream; the draw used at each site depends only on
    the stream, the step index and the site.
    """
    width = len(state.counts)
    out = np.empty(width, dtype=np.int64)
    _core.split_step(state.counts, state.lo, width, out, state.lo, width, _key(rng), state.time + 1)
    return FieldWindow(state.lo, state.hi, out, state.time + 1)


def _sites_array(A) -> np.ndarray:
    return np.asarray(as_sites(A).sites, dtype=np.int64)


def _check_N(N: int) -> int:
    N = int(N)
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    return N


def _check_lam(lam: float) -> float:
    lam = float(lam)
    if not (lam >= 0.0 and math.isfinite(lam)):
        raise ValueError(f"intensity must be finite and >= 0, got {lam!r}")
    return lam


def sample_WN(N: int, A, lam: float, rng: CounterRNG) -> float:
    """One draw of W_N(A) = sum_{n=1}^N xi(n, A)."""
    fkey = _key(rng.child(FIELD))
    return float(_core.draw_region(fkey, _check_N(N), _sites_array(A), _check_lam(lam), False))


def sample_DN(N: int, A, lam: float, rng: CounterRNG) -> float:
    """One draw of D_N(A): particles are counted and removed on first landing in A."""
    fkey = _key(rng.child(FIELD))
    return float(_core.draw_region(fkey, _check_N(N), _sites_array(A), _check_lam(lam), True))


def sample_Y(N: int, phi, lam: float, law: StepLaw, rng: CounterRNG) -> float:
    """One annealed draw of Y_{N,phi}; field and walk use disjoint sub-streams."""
    coeffs = np.asarray(as_observable(phi).coeffs, dtype=np.float64)
    return float(
        _core.draw_path(
            _key(rng.child(FIELD)),
            _key(rng.child(WALK)),
            _check_N(N),
            coeffs,
            _check_lam(lam),
            law.p_up,
        )
    )


def _qq_table(N: int, q: int) -> np.ndarray:
    T = max(N - 1, 1)
    return ssrw_table(T) ** q


def _logfact(N: int) -> np.ndarray:
    return gammaln(np.arange(N + 1) + 1.0)


def sample_sigma_sum(N: int, q: int, law: StepLaw, rng: CounterRNG) -> float:
    """One draw of sum_{1<=n<m<=N} Q_{m-n}(S_m - S_n)^q (walk only)."""
    N = _check_N(N)
    q = int(q)
    if N == 1:
        return 0.0
    wkey = _key(rng.child(WALK))
    if N - 1 <= _SIGMA_TABLE_MAX:
        return float(_core.draw_sigma_table(wkey, N, law.p_up, _qq_table(N, q)))
    return float(_core.draw_sigma_logfact(wkey, N, law.p_up, float(q), _logfact(N)))


def sample_field_points(points: Sequence[tuple[int, int]], lam: float, rng: CounterRNG) -> np.ndarray:
    """Counts xi(n, x) at the given (n, x) points from a single field realization."""
    times, xs = _points_arrays(points)
    return _core.draw_points(_key(rng.child(FIELD)), _check_lam(lam), times, xs)


def _points_arrays(points) -> tuple[np.ndarray, np.ndarray]:
    pts = [(int(n), int(x)) for n, x in points]
    if not pts or any(n < 0 for n, _ in pts):
        raise ValueError("need at least one point with nonnegative time")
    return np.array([n for n, _ in pts], dtype=np.int64), np.array([x for _, x in pts], dtype=np.int64)


@dataclass(frozen=True)
class Job:
    """What to sample.  ``sites`` is used by W/D, ``phi``/``p_up`` by Y,
    ``q``/``p_up`` by sigma."""

    observable: str
    N: int
    lam: float = 1.0
    p_up: float = 0.75
    phi: tuple[float, ...] = (0.0, 1.0)
    sites: tuple[int, ...] = (0,)
    q: int = 1

    def __post_init__(self):
        if self.observable not in OBSERVABLES:
            raise ValueError(f"observable must be one of {OBSERVABLES}, got {self.observable!r}")
        _check_N(self.N)
        _check_lam(self.lam)
        StepLaw(self.p_up)
        as_sites(self.sites)
        as_observable(self.phi)
        if self.q < 1:
            raise ValueError("q must be >= 1")

    @property
    def law(self) -> StepLaw:
        return StepLaw(self.p_up)

    def params(self) -> dict:
        base = {"observable": self.observable, "N": self.N, "lambda": self.lam}
        if self.observable in ("W", "D"):
            base["sites"] = list(self.sites)
        elif self.observable == "Y":
            base.update(p=self.p_up, phi=list(self.phi))
        else:
            base.update(p=self.p_up, q=self.q)
            del base["lambda"]
        return base


@dataclass
class SampleBatch:
    observable: str
    values: np.ndarray = field(repr=False)
    master_seed: int
    params: dict

    @property
    def m(self) -> int:
        return len(self.values)

    def summary(self) -> dict:
        return summarize(self.values)


def summarize(values: np.ndarray) -> dict:
    """Mean, variance and their standard errors (variance SE from the fourth
    central moment)."""
    x = np.asarray(values, dtype=float)
    m = len(x)
    mean = float(np.mean(x))
    out = {"m": m, "mean": mean, "mean_se": float("nan"), "variance": float("nan"), "variance_se": float("nan")}
    if m >= 2:
        var = float(np.var(x, ddof=1))
        c = x - mean
        m4 = float(np.mean(c**4))
        out["mean_se"] = math.sqrt(var / m)
        out["variance"] = var
        out["variance_se"] = math.sqrt(max(m4 - var * var, 0.0) / m)
    return out


def set_threads(threads: int | None = None) -> int:
    """Apply an explicit thread count, else the THREADS environment variable."""
    if threads is None:
        env = os.environ.get("THREADS")
        threads = int(env) if env else None
    if threads:
        numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))
    return numba.get_num_threads()


def run_batch(job: Job, m: int, master_seed: int, threads: int | None = None) -> SampleBatch:
    """m independent draws; replicate i uses the stream of (master_seed, i)."""
    m = int(m)
    if m < 1:
        raise ValueError("need at least one replicate")
    set_threads(threads)
    seed = np.uint64(int(master_seed) & _U64)
    if job.observable in ("W", "D"):
        vals = _core.batch_region(
            seed, 0, m, job.N, _sites_array(job.sites), float(job.lam), job.observable == "D"
        )
    elif job.observable == "Y":
        coeffs = np.asarray(as_observable(job.phi).coeffs, dtype=np.float64)
        vals = _core.batch_path(seed, 0, m, job.N, coeffs, float(job.lam), job.p_up)
    elif job.N == 1:
        vals = np.zeros(m)
    elif job.N - 1 <= _SIGMA_TABLE_MAX:
        vals = _core.batch_sigma_table(seed, 0, m, job.N, job.p_up, _qq_table(job.N, job.q))
    else:
        vals = _core.batch_sigma_logfact(seed, 0, m, job.N, job.p_up, float(job.q), _logfact(job.N))
    return SampleBatch(job.observable, np.asarray(vals), int(master_seed), job.params())


def run_points(points: Sequence[tuple[int, int]], lam: float, m: int, master_seed: int,
               threads: int | None = None) -> np.ndarray:
    """Field values at fixed space-time points, shape (m, len(points))."""
    set_threads(threads)
    times, xs = _points_arrays(points)
    seed = np.uint64(int(master_seed) & _U64)
    return _core.batch_points(seed, 0, int(m), _check_lam(lam), times, xs)


__all__ = [
    "FieldWindow",
    "Job",
    "SampleBatch",
    "PolynomialObservable",
    "initial_window",
    "evolve_window",
    "sample_WN",
    "sample_DN",
    "sample_Y",
    "sample_sigma_sum",
    "sample_field_points",
    "run_batch",
    "run_points",
    "summarize",
    "set_threads",
]
