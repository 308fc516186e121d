"""Exact finite-N variances of W_N(A), D_N(A) and Y_{N,phi}, with their
leading asymptotic constants."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import binom

from .charlier import as_observable, charlier_coefficients
from .correlations import c_phi_constant, correlation_sequence
from .kernels import StepLaw, as_sites, hitting_mass

# regime tags
N_3_2 = "N^3/2"
N_1_2 = "N^1/2"
LINEAR = "N"
N_LOG_N = "N log N"
BOUNDED = "bounded-ratio"

_GROWTH = {
    N_3_2: lambda N: N**1.5,
    N_1_2: lambda N: math.sqrt(N),
    LINEAR: lambda N: float(N),
    N_LOG_N: lambda N: N * math.log(N),
    BOUNDED: lambda N: 1.0,
}


def growth(regime: str, N: int) -> float:
    return _GROWTH[regime](N)


@dataclass(frozen=True)
class VarianceReport:
    observable: str  # "W", "D" or "Y"
    N: int
    exact: float
    leading_constant: float
    regime: str
    ratio: float  # exact / (leading_constant * growth(N))

    def to_json(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RegimeReport:
    """Symmetric-sampling variance regime of an observable.

    For rank >= 3 the growth is linear with unspecified upper constant;
    ``constant`` then holds the diagonal lower bound c_r^2 r! lam^r.
    """

    rank: int
    regime: str
    constant: float
    constant_is_sharp: bool

    def to_json(self) -> dict:
        out = asdict(self)
        if not self.constant_is_sharp:
            out["upper_constant"] = "unspecified: no sharp constant is known"
        return out


def _check_N(N: int, minimum: int = 1) -> int:
    N = int(N)
    if N < minimum:
        raise ValueError(f"horizon N must be >= {minimum}, got {N}")
    return N


def _kernel_over_time(N: int, d: int) -> np.ndarray:
    """Q_n(d) for n = 1..N-1."""
    n = np.arange(1, N)
    d = abs(d)
    ok = (n >= d) & ((n - d) % 2 == 0)
    out = np.zeros(len(n))
    out[ok] = binom.pmf((n[ok] + d) // 2, n[ok], 0.5)
    return out


def var_WN(N: int, A, lam: float) -> float:
    """lam [N|A| + 2 sum_{n<N} (N-n) sum_{x,y in A} Q_n(y-x)]."""
    N = _check_N(N)
    A = as_sites(A)
    weights = N - np.arange(1, N, dtype=float)
    cross = math.fsum(
        mult * math.fsum(weights * _kernel_over_time(N, d)) for d, mult in A.differences().items()
    )
    return lam * (N * len(A) + 2.0 * cross)


def var_WN_leading(A, lam: float) -> float:
    """Constant in Var W_N(A) ~ const * N^{3/2}."""
    A = as_sites(A)
    return 8.0 * lam * len(A) ** 2 / (3.0 * math.sqrt(2.0 * math.pi))


def var_DN(N: int, A, lam: float) -> float:
    """lam * sum_x P_x(tau_A^+ <= N); D_N(A) is Poisson, so mean = variance."""
    N = _check_N(N, minimum=0)
    return lam * hitting_mass(N, A)


def var_DN_leading(lam: float) -> float:
    """Constant in Var D_N(A) ~ const * N^{1/2}."""
    return 2.0 * lam * math.sqrt(2.0 / math.pi)


def _pair_sum(N: int, q: int, law: StepLaw) -> float:
    """sum_{t=1}^{N-1} (N - t) a_t^(q)."""
    if N < 2:
        return 0.0
    a = correlation_sequence(q, law, N - 1).values
    return math.fsum((N - np.arange(1, N, dtype=float)) * a)


def var_Y(N: int, phi, lam: float, law: StepLaw) -> float:
    """sum_q c_q^2 q! lam^q (N + 2 sum_{t<N} (N-t) a_t^(q)).

    Valid for drifted and symmetric sampling alike.
    """
    N = _check_N(N)
    coeffs = charlier_coefficients(as_observable(phi), lam)
    terms = [
        w * (N + 2.0 * _pair_sum(N, q, law))
        for q, w in enumerate(coeffs.chaos_variances(), start=1)
        if w != 0.0
    ]
    return math.fsum(terms)


def symmetric_regime(phi, lam: float) -> RegimeReport:
    """Growth regime of Var Y_{N,phi} when the sampling walk is symmetric."""
    coeffs = charlier_coefficients(as_observable(phi), lam)
    r = coeffs.rank
    c = coeffs.c[r - 1]
    if r == 1:
        return RegimeReport(1, N_3_2, 8.0 * c * c * lam / (3.0 * math.sqrt(math.pi)), True)
    if r == 2:
        return RegimeReport(2, N_LOG_N, 8.0 * c * c * lam**2 / (math.pi * math.sqrt(3.0)), True)
    return RegimeReport(r, LINEAR, c * c * math.factorial(r) * lam**r, False)


def report_W(N: int, A, lam: float) -> VarianceReport:
    exact = var_WN(N, A, lam)
    const = var_WN_leading(A, lam)
    return VarianceReport("W", int(N), exact, const, N_3_2, exact / (const * growth(N_3_2, N)))


def report_D(N: int, A, lam: float) -> VarianceReport:
    exact = var_DN(N, A, lam)
    const = var_DN_leading(lam)
    return VarianceReport("D", int(N), exact, const, N_1_2, exact / (const * growth(N_1_2, N)))


def report_Y(N: int, phi, lam: float, law: StepLaw) -> VarianceReport:
    exact = var_Y(N, phi, lam, law)
    if law.symmetric:
        reg = symmetric_regime(phi, lam)
        const, regime = reg.constant, reg.regime
    else:
        const, regime = c_phi_constant(phi, lam, law), LINEAR
    return VarianceReport("Y", int(N), exact, const, regime, exact / (const * growth(regime, N)))

