"""Monic Charlier polynomials and Poisson chaos coefficients of polynomials.

The monic Charlier family ``C_q(x; lam)`` is orthogonal under Poisson(lam)
with ``E[C_r C_s] = r! lam^r 1{r=s}``.  A polynomial observable of degree k
decomposes as ``phi(x) = E[phi(N)] + sum_{q=1..k} c_q C_q(x; lam)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import poisson

MAX_DEGREE = 16
RANK_RTOL = 1e-12


@dataclass(frozen=True)
class PolynomialObservable:
    """phi(x) = sum_j coeffs[j] x^j.  Trailing zero coefficients are dropped."""

    coeffs: tuple[float, ...]

    def __init__(self, coeffs: Sequence[float]):
        cs = [float(c) for c in coeffs]
        if not cs or not all(math.isfinite(c) for c in cs):
            raise ValueError(f"need a nonempty finite coefficient list, got {coeffs!r}")
        while len(cs) > 1 and cs[-1] == 0.0:
            cs.pop()
        if len(cs) - 1 > MAX_DEGREE:
            raise ValueError(f"degree {len(cs) - 1} exceeds the cap {MAX_DEGREE}")
        object.__setattr__(self, "coeffs", tuple(cs))

    @classmethod
    def parse(cls, text: str) -> "PolynomialObservable":
        """From a comma-separated list ``"b0,b1,..."``."""
        return cls([float(tok) for tok in text.split(",") if tok.strip()])

    @classmethod
    def charlier(cls, q: int, lam: float) -> "PolynomialObservable":
        """The Charlier polynomial C_q(.; lam) written in the monomial basis."""
        return cls(charlier_monomials(q, lam)[q])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x):
        acc = np.zeros_like(np.asarray(x, dtype=float)) if np.ndim(x) else 0.0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def scaled(self, factor: float) -> "PolynomialObservable":
        return PolynomialObservable([factor * c for c in self.coeffs])

    def __str__(self) -> str:
        return ",".join(repr(c) for c in self.coeffs)


def as_observable(phi) -> PolynomialObservable:
    if isinstance(phi, PolynomialObservable):
        return phi
    if isinstance(phi, str):
        return PolynomialObservable.parse(phi)
    return PolynomialObservable(phi)


@dataclass(frozen=True)
class CharlierCoefficients:
    lam: float
    c: tuple[float, ...]  # c[q-1] is the coefficient of C_q
    rank: int
    mean: float

    @property
    def degree(self) -> int:
        return len(self.c)

    def reconstruct(self, x):
        """mean + sum_q c_q C_q(x; lam); equals the original phi."""
        total = self.mean + 0.0 * np.asarray(x, dtype=float)
        for q, cq in enumerate(self.c, start=1):
            total = total + cq * charlier_eval(q, x, self.lam)
        return total

    def chaos_variances(self) -> np.ndarray:
        """Per-order single-site variances c_q^2 q! lam^q."""
        return np.array(
            [cq * cq * math.factorial(q) * self.lam**q for q, cq in enumerate(self.c, start=1)]
        )

    def to_json(self) -> dict:
        return {
            "lambda": self.lam,
            "degree": self.degree,
            "coefficients": list(self.c),
            "rank": self.rank,
        }


def _check_lam(lam: float) -> float:
    lam = float(lam)
    if not lam > 0.0:
        raise ValueError(f"intensity must be positive, got {lam!r}")
    return lam


def charlier_eval(q: int, x, lam: float):
    """Monic Charlier polynomial C_q(x; lam) via the three-term recurrence."""
    q = int(q)
    if q < 0:
        raise ValueError("order must be nonnegative")
    lam = _check_lam(lam)
    x = np.asarray(x, dtype=float) if np.ndim(x) else float(x)
    prev, cur = 1.0 + 0.0 * x, x - lam
    if q == 0:
        return prev
    for r in range(1, q):
        prev, cur = cur, (x - lam - r) * cur - r * lam * prev
    return cur


def charlier_monomials(qmax: int, lam: float) -> list[np.ndarray]:
    """Monomial coefficients of C_0..C_qmax (index j holds the x^j coefficient)."""
    lam = _check_lam(lam)
    polys = [np.array([1.0])]
    if qmax >= 1:
        polys.append(np.array([-lam, 1.0]))
    for r in range(1, qmax):
        cur, prev = polys[r], polys[r - 1]
        nxt = np.zeros(r + 2)
        nxt[1:] += cur
        nxt[: r + 1] -= (lam + r) * cur
        nxt[: r] -= r * lam * prev
        polys.append(nxt)
    return polys


def ito_indicator_value(q: int, count: int, lam: float) -> float:
    """sum_k (-1)^{q-k} binom(q,k) (count)_k lam^{q-k}.

    This is the q-th multiple Poisson integral of an indicator tensor whose set
    carries ``count`` points and has intensity mass ``lam``.
    """
    q, count = int(q), int(count)
    if q < 0 or count < 0:
        raise ValueError("order and count must be nonnegative")
    lam = _check_lam(lam)
    terms = [
        (-1) ** (q - k) * math.comb(q, k) * math.perm(count, k) * lam ** (q - k)
        for k in range(q + 1)
    ]
    return math.fsum(terms)


def poisson_moments(kmax: int, lam: float) -> np.ndarray:
    """Raw moments E[N^j], j = 0..kmax, for N ~ Poisson(lam).

    Uses E[N^{j+1}] = lam sum_i binom(j, i) E[N^i].
    """
    lam = _check_lam(lam)
    m = [1.0]
    for j in range(kmax):
        m.append(lam * math.fsum(math.comb(j, i) * m[i] for i in range(j + 1)))
    return np.array(m)


def expectation_poly(phi, lam: float) -> float:
    phi = as_observable(phi)
    m = poisson_moments(phi.degree, lam)
    return math.fsum(b * mj for b, mj in zip(phi.coeffs, m))


def charlier_coefficients(phi, lam: float) -> CharlierCoefficients:
    """Charlier expansion by top-down elimination of monic basis elements."""
    phi = as_observable(phi)
    lam = _check_lam(lam)
    k = phi.degree
    if k == 0:
        raise ValueError("constant observable has no chaos coefficients")
    basis = charlier_monomials(k, lam)
    residual = np.array(phi.coeffs, dtype=float)
    c = np.zeros(k)
    for q in range(k, 0, -1):
        c[q - 1] = residual[q]
        residual[: q + 1] -= c[q - 1] * basis[q]
        residual[q] = 0.0
    return CharlierCoefficients(lam, tuple(float(v) for v in c), _rank(c), float(residual[0]))


def charlier_coefficients_projection(phi, lam: float, tail: float = 1e-14) -> np.ndarray:
    """c_q = E[phi(N) C_q(N)] / (q! lam^q) by summing the Poisson law until the
    remaining (polynomially weighted) mass drops below ``tail``.  Independent cross-check of the
    elimination route."""
    phi = as_observable(phi)
    lam = _check_lam(lam)
    # stop once the remaining mass, weighted by the degree-2k integrand, is below tail
    kmax = int(poisson.isf(tail, lam)) + 1
    while poisson.pmf(kmax, lam) * (kmax + 1.0) ** (2 * phi.degree) > tail:
        kmax += 1
    n = np.arange(kmax + 1)
    w = poisson.pmf(n, lam)
    vals = phi(n.astype(float))
    return np.array(
        [
            math.fsum(w * vals * charlier_eval(q, n, lam)) / (math.factorial(q) * lam**q)
            for q in range(1, phi.degree + 1)
        ]
    )


def _rank(c: np.ndarray) -> int:
    scale = float(np.max(np.abs(c))) if len(c) else 0.0
    if scale == 0.0:
        raise ValueError("all chaos coefficients vanish")
    for q, cq in enumerate(c, start=1):
        if abs(cq) > RANK_RTOL * scale:
            return q
    raise AssertionError("unreachable")


def charlier_rank(phi, lam: float) -> int:
    """Smallest q with a non-negligible coefficient c_q."""
    return charlier_coefficients(phi, lam).rank
