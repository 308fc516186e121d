"""Drift-averaged correlation sequences a_t^(q) = E_S[Q_t(S_t)^q].

Under a drifted sampling walk the sequence decays exponentially and its sum
enters the linear variance constant of path-sampled observables.  Under the
symmetric walk ``a_t^(q) = sum_x Q_t(x)^{q+1}`` decays like t^{-q/2}.

Certified tails
---------------
Drifted law, with theta = |v|/2 and c0 = v^2/8 (Hoeffding for the walk and for
the particle kernel):

    a_t <= 2 min(1, 2/sqrt t)^q exp(-c0 t) + exp(-q c0 t),

which sums geometrically.  Symmetric law (q >= 3): the terms follow
``kappa_{q+1} t^{-q/2} (1 + b/t + O(t^-2))`` with b = -q^2/(4(q+1)); the tail
is evaluated from this model with Hurwitz zeta sums, and the remainder is
bounded by an O(t^-2) envelope whose constant is measured on [T/2, T] and
inflated by ``SYMMETRIC_SAFETY``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import zeta
from scipy.stats import binom

from .charlier import as_observable, charlier_coefficients
from .kernels import StepLaw, _half_binomial, kappa, lp_norm_sequence

SYMMETRIC_SAFETY = 1.1
_MAX_T = 1 << 22


class NonSummableError(ValueError):
    """Raised for correlation sequences whose series diverges."""


@dataclass(frozen=True)
class CorrelationSequence:
    q: int
    law: StepLaw
    values: np.ndarray = field(repr=False)  # values[t-1] = a_t, t = 1..T
    tail_bound: float | None = None

    @property
    def T(self) -> int:
        return len(self.values)


def _check(q: int, t: int | None = None) -> None:
    if q < 1:
        raise ValueError(f"order q must be >= 1, got {q}")
    if t is not None and t < 1:
        raise ValueError(f"time t must be >= 1, got {t}")


def _rows(t: int, law: StepLaw) -> tuple[np.ndarray, np.ndarray]:
    """P_t and Q_t on the t+1 sites of the right parity, x = 2k - t."""
    ks = np.arange(t + 1)
    Q = _half_binomial(t, ks)
    P = Q if law.symmetric else binom.pmf(ks, t, law.p_up)
    return P, Q


def a_t(q: int, t: int, law: StepLaw) -> float:
    """E_S[Q_t(S_t)^q] as the exact lattice sum over the support."""
    q, t = int(q), int(t)
    _check(q, t)
    P, Q = _rows(t, law)
    return math.fsum(P * Q**q)


def _hoeffding_rate(law: StepLaw) -> float:
    v = law.drift
    return v * v / 8.0


def drift_tail_bound(q: int, law: StepLaw, T: int) -> float:
    """Certified upper bound on sum_{t > T} a_t^(q) for a drifted law."""
    if law.symmetric:
        raise NonSummableError("the ballistic bound needs a drifted law")
    c0 = _hoeffding_rate(law)
    t1 = T + 1
    sup_kernel = min(1.0, 2.0 / math.sqrt(t1))
    first = 2.0 * sup_kernel**q * math.exp(-c0 * t1) / -math.expm1(-c0)
    second = math.exp(-q * c0 * t1) / -math.expm1(-q * c0)
    return first + second


def _drift_cutoff(q: int, law: StepLaw, eps: float) -> int:
    """Smallest T (up to doubling + bisection) with drift_tail_bound <= eps."""
    hi = 1
    while drift_tail_bound(q, law, hi) > eps:
        hi *= 2
        if hi > _MAX_T:
            raise ValueError(f"tail bound cannot reach {eps:g} within {_MAX_T} terms")
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if drift_tail_bound(q, law, mid) <= eps:
            hi = mid
        else:
            lo = mid
    return hi


@lru_cache(maxsize=32)
def _drift_values(law: StepLaw, qmax: int, T: int) -> np.ndarray:
    """out[q-1, t-1] = a_t^(q) for q <= qmax, t <= T.

    Rows are advanced by the forward equation (positive combinations only, so
    relative error grows at most linearly in t) and summed pairwise.
    """
    out = np.zeros((qmax, T))
    p = law.p_up
    P = np.array([1.0])
    Q = np.array([1.0])
    for t in range(1, T + 1):
        P = np.concatenate(((1.0 - p) * P, [0.0])) + np.concatenate(([0.0], p * P))
        Q = 0.5 * (np.concatenate((Q, [0.0])) + np.concatenate(([0.0], Q)))
        Qq = np.ones_like(Q)
        for q in range(1, qmax + 1):
            Qq = Qq * Q
            out[q - 1, t - 1] = np.sum(P * Qq)
    out.setflags(write=False)
    return out


_SEQ_MEMO: dict[tuple[int, StepLaw], np.ndarray] = {}


def correlation_sequence(q: int, law: StepLaw, T: int) -> CorrelationSequence:
    """a_t^(q) for t = 1..T.

    Drifted laws: terms past the point where the certified tail falls below
    1e-17 of a_1 are set to zero (below double resolution of any partial sum).
    Symmetric law: computed as l^{q+1} norms of the particle kernel.
    Results are memoized per (q, law) and sliced for shorter requests.
    """
    q, T = int(q), int(T)
    _check(q)
    if T < 1:
        return CorrelationSequence(q, law, np.zeros(0), 0.0)
    hit = _SEQ_MEMO.get((q, law))
    if hit is None or len(hit) < T:
        if law.symmetric:
            hit = lp_norm_sequence(T, q + 1)
        else:
            cut = min(T, _drift_cutoff(q, law, 1e-17 * 2.0**-q))
            hit = np.zeros(T)
            hit[:cut] = _drift_values(law, q, cut)[q - 1]
        hit.setflags(write=False)
        _SEQ_MEMO[(q, law)] = hit
    if law.symmetric:
        return CorrelationSequence(q, law, hit[:T], None)
    cut = _drift_cutoff(q, law, 1e-17 * 2.0**-q)
    return CorrelationSequence(q, law, hit[:T], drift_tail_bound(q, law, min(T, cut)))


def _symmetric_correction(q: int) -> float:
    s = q + 1
    return -((s - 1) ** 2) / (4.0 * s)


def _symmetric_tail(q: int, T: int) -> tuple[float, float, np.ndarray]:
    """Model tail sum_{t>T} kappa t^{-q/2}(1 + b/t) and its certified error."""
    s = q + 1
    kap = kappa(s)
    b = _symmetric_correction(q)
    alpha = q / 2.0
    seq = lp_norm_sequence(T, s)
    t = np.arange(T // 2, T + 1, dtype=float)
    resid = seq[T // 2 - 1 :] / (kap * t**-alpha) - 1.0 - b / t
    K = SYMMETRIC_SAFETY * float(np.max(np.abs(resid) * t * t))
    estimate = kap * (zeta(alpha, T + 1) + b * zeta(alpha + 1.0, T + 1))
    error = kap * K * zeta(alpha + 2.0, T + 1)
    return float(estimate), float(error), seq


def tail_sum(q: int, law: StepLaw, eps: float = 1e-12) -> tuple[float, float]:
    """(sum_{t>=1} a_t^(q), certified bound on the truncation error <= eps)."""
    q = int(q)
    _check(q)
    if not eps > 0:
        raise ValueError("eps must be positive")
    if law.symmetric:
        if q <= 2:
            raise NonSummableError(
                f"symmetric correlations of order {q} decay like t^-{q}/2 and are non-summable"
            )
        T = 256
        while True:
            estimate, error, seq = _symmetric_tail(q, T)
            if error <= eps:
                return math.fsum(seq) + estimate, error
            T *= 2
            if T > _MAX_T:
                raise ValueError(f"cannot certify eps={eps:g} for symmetric order {q}")
    T = _drift_cutoff(q, law, eps)
    vals = _drift_values(law, q, T)[q - 1]
    return math.fsum(vals), drift_tail_bound(q, law, T)


def c_phi_constant(phi, lam: float, law: StepLaw, eps: float = 1e-15) -> float:
    """Linear variance constant sum_q c_q^2 q! lam^q (1 + 2 sum_t a_t^(q))."""
    if law.symmetric:
        raise ValueError("drift required: symmetric sampling has no linear variance constant")
    coeffs = charlier_coefficients(as_observable(phi), lam)
    total = []
    for q, w in enumerate(coeffs.chaos_variances(), start=1):
        if w == 0.0:
            continue
        s, _ = tail_sum(q, law, eps)
        total.append(w * (1.0 + 2.0 * s))
    return math.fsum(total)
