"""Transition kernels of nearest-neighbour walks on the integers.

``Q_n(x)`` is the n-step law of the simple symmetric walk that carries the
particles; ``P_n(x)`` is the law of the (possibly biased) sampling walk.  Both
are binomial masses on the parity class of ``n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

import numpy as np
from scipy.stats import binom

# below this many steps kernels are exact binomials rounded once to double
EXACT_MAX = 1024


@dataclass(frozen=True)
class StepLaw:
    """Law of the sampling walk: +1 with probability ``p_up``, else -1."""

    p_up: float

    def __post_init__(self):
        p = float(self.p_up)
        if not (0.0 < p < 1.0) or math.isnan(p):
            raise ValueError(f"p_up must lie in (0, 1), got {self.p_up!r}")
        object.__setattr__(self, "p_up", p)

    @property
    def drift(self) -> float:
        return 2.0 * self.p_up - 1.0

    @property
    def symmetric(self) -> bool:
        return self.p_up == 0.5


SYMMETRIC = StepLaw(0.5)


@dataclass(frozen=True)
class FiniteSiteSet:
    """Nonempty finite set of integer sites, stored sorted."""

    sites: tuple[int, ...]

    def __init__(self, sites: Iterable[int]):
        values = [int(s) for s in sites]
        if not values:
            raise ValueError("site set must be nonempty")
        if len(set(values)) != len(values):
            raise ValueError(f"duplicate sites in {values}")
        object.__setattr__(self, "sites", tuple(sorted(values)))

    def __len__(self) -> int:
        return len(self.sites)

    def __iter__(self):
        return iter(self.sites)

    @property
    def lo(self) -> int:
        return self.sites[0]

    @property
    def hi(self) -> int:
        return self.sites[-1]

    def differences(self) -> dict[int, int]:
        """Multiplicity of each d = y - x over ordered pairs (x, y) in A x A."""
        out: dict[int, int] = {}
        for x in self.sites:
            for y in self.sites:
                out[y - x] = out.get(y - x, 0) + 1
        return out


def as_sites(A) -> FiniteSiteSet:
    return A if isinstance(A, FiniteSiteSet) else FiniteSiteSet(A)


@dataclass(frozen=True)
class KernelRow:
    """One time slice of a kernel on its full range ``-n..n``.

    Entries off the parity class of ``n`` are stored as exact zeros.
    """

    n: int
    sites: np.ndarray
    probs: np.ndarray

    def as_dict(self) -> dict[int, float]:
        return {int(x): float(p) for x, p in zip(self.sites, self.probs) if p != 0.0}

    def __getitem__(self, x: int) -> float:
        if abs(x) > self.n:
            return 0.0
        return float(self.probs[x + self.n])


def _check_time(n: int) -> int:
    n = int(n)
    if n < 0:
        raise ValueError(f"time must be nonnegative, got {n}")
    return n


def ssrw_kernel(n: int, x: int) -> float:
    """Q_n(x) for the simple symmetric walk."""
    n = _check_time(n)
    x = abs(int(x))
    if x > n or (n - x) % 2:
        return 0.0
    if n <= EXACT_MAX:
        return math.comb(n, (n + x) // 2) / (1 << n)
    return float(binom.pmf((n + x) // 2, n, 0.5))


def _half_binomial(n: int, ks: np.ndarray) -> np.ndarray:
    """C(n,k)/2^n; correctly rounded integer division up to EXACT_MAX steps."""
    if n <= EXACT_MAX:
        return _exact_half_row(n)[np.asarray(ks, dtype=np.int64)]
    return binom.pmf(ks, n, 0.5)


@lru_cache(maxsize=256)
def _exact_half_row(n: int) -> np.ndarray:
    den = 1 << n
    c = 1
    out = np.empty(n + 1)
    for k in range(n + 1):
        out[k] = c / den
        c = c * (n - k) // (k + 1)
    out.setflags(write=False)
    return out


def ssrw_kernel_exact(n: int, x: int) -> Fraction:
    """Q_n(x) as an exact rational; test oracle, cheap up to a few hundred steps."""
    n = _check_time(n)
    x = abs(int(x))
    if x > n or (n - x) % 2:
        return Fraction(0)
    return Fraction(math.comb(n, (n + x) // 2), 2**n)


def biased_kernel(n: int, x: int, law: StepLaw) -> float:
    """P_n(x) = P(S_n = x) for the walk with up-probability ``law.p_up``."""
    if law.symmetric:
        return ssrw_kernel(n, x)
    n = _check_time(n)
    x = int(x)
    if abs(x) > n or (n - x) % 2:
        return 0.0
    return float(binom.pmf((n + x) // 2, n, law.p_up))


def kernel_row(n: int, law: StepLaw | None = None) -> KernelRow:
    """Full row over sites ``-n..n`` (step 1, wrong-parity sites zero)."""
    n = _check_time(n)
    sites = np.arange(-n, n + 1)
    probs = np.zeros(2 * n + 1)
    if law is None or law.symmetric:
        # evaluate x >= 0 only and mirror, so the row is bit-symmetric
        ks = np.arange((n + 1) // 2, n + 1)
        xs = 2 * ks - n
        vals = _half_binomial(n, ks)
        probs[n + xs] = vals
        probs[n - xs] = vals
    else:
        ups = np.arange(n + 1)
        probs[2 * ups] = binom.pmf(ups, n, law.p_up)
    return KernelRow(n, sites, probs)


def _support_values(n: int) -> np.ndarray:
    """Q_n on its 2n+1 support, only the n+1 nonzero parity-class entries."""
    return _half_binomial(n, np.arange(n + 1))


def lclt_gap(n: int) -> float:
    """sup_x |(sqrt(n)/2) Q_n(x) - 1{x = n mod 2} exp(-x^2/2n)/sqrt(2 pi)|.

    The supremum runs over all of Z: inside ``-n..n`` it is taken site by site,
    outside only the Gaussian term survives and is largest at ``|x| = n + 2``.
    """
    n = _check_time(n)
    if n < 1:
        raise ValueError("lclt_gap needs n >= 1")
    row = kernel_row(n)
    x = row.sites.astype(float)
    parity = ((row.sites - n) % 2 == 0).astype(float)
    gauss = parity * np.exp(-x * x / (2.0 * n)) / math.sqrt(2.0 * math.pi)
    inside = float(np.max(np.abs(0.5 * math.sqrt(n) * row.probs - gauss)))
    outside = math.exp(-((n + 2) ** 2) / (2.0 * n)) / math.sqrt(2.0 * math.pi)
    return max(inside, outside)


def lp_norm(n: int, s: int) -> float:
    """sum_x Q_n(x)^s over the exact support."""
    n = _check_time(n)
    s = int(s)
    if n < 1 or s < 1:
        raise ValueError("lp_norm needs n >= 1 and s >= 1")
    vals = _support_values(n)
    return float(np.sum(vals**s))


def kappa(s: int) -> float:
    """Limit of n^{(s-1)/2} sum_x Q_n(x)^s."""
    return 2.0 ** ((s - 1) / 2) / (math.pi ** ((s - 1) / 2) * math.sqrt(s))


def lp_norm_sequence(T: int, s: int) -> np.ndarray:
    """Array ``out[t-1] = lp_norm(t, s)`` for t = 1..T.

    For s <= 4 the sums of binomial powers obey short linear recurrences
    (central binomials for s = 2, Franel numbers for s = 3, 4), which are
    forward-stable once normalized by 2^{st}; other s fall back to direct sums.
    """
    T = int(T)
    s = int(s)
    if T < 1:
        return np.zeros(0)
    if s == 1:
        return np.ones(T)
    if s == 2:
        t = np.arange(1, T + 1)
        return np.cumprod((2.0 * t - 1.0) / (2.0 * t))
    if s in (3, 4):
        return _franel_sequence(T, s)
    return np.array([lp_norm(t, s) for t in range(1, T + 1)])


def _franel_sequence(T: int, s: int) -> np.ndarray:
    g = np.empty(T + 1)
    g[0] = 1.0
    g[1] = 2.0 / 2.0**s
    if s == 3:
        for n in range(1, T):
            g[n + 1] = ((7 * n * n + 7 * n + 2) * g[n] + n * n * g[n - 1]) / (8.0 * (n + 1) ** 2)
    else:
        for n in range(1, T):
            g[n + 1] = (
                2.0 * (2 * n + 1) * (3 * n * n + 3 * n + 1) * g[n]
                + 4.0 * n * (4 * n - 1) * (4 * n + 1) * g[n - 1] / 16.0
            ) / (16.0 * (n + 1) ** 3)
    return g[1:]


def ssrw_table(T: int) -> np.ndarray:
    """Dense table ``Q[t, x + T]`` for 0 <= t <= T, |x| <= T."""
    T = int(T)
    Q = np.zeros((T + 1, 2 * T + 1))
    Q[0, T] = 1.0
    for t in range(1, T + 1):
        prev = Q[t - 1]
        Q[t, 1:] += 0.5 * prev[:-1]
        Q[t, :-1] += 0.5 * prev[1:]
    return Q


@lru_cache(maxsize=64)
def _hitting_curve_cached(N: int, sites: tuple[int, ...]) -> np.ndarray:
    lo, hi = sites[0] - N, sites[-1] + N
    width = hi - lo + 1
    mass = np.ones(width)
    in_A = np.zeros(width, dtype=bool)
    in_A[np.asarray(sites) - lo] = True
    out = np.zeros(N + 1)
    absorbed = 0.0
    nxt = np.empty(width)
    for n in range(1, N + 1):
        nxt[:] = 0.0
        nxt[1:] += 0.5 * mass[:-1]
        nxt[:-1] += 0.5 * mass[1:]
        absorbed += float(np.sum(nxt[in_A]))
        nxt[in_A] = 0.0
        mass, nxt = nxt, mass
        out[n] = absorbed
    out.setflags(write=False)
    return out


def hitting_mass_curve(N: int, A) -> np.ndarray:
    """``out[n] = sum_x P_x(tau_A^+ <= n)`` for n = 0..N.

    Unit mass starts on every site of ``[min A - N, max A + N]``; it moves as
    the symmetric walk and is removed (and counted) on first landing in A.
    Mass outside that window cannot reach A by time N.
    """
    N = _check_time(N)
    A = as_sites(A)
    return _hitting_curve_cached(N, A.sites)


def hitting_mass(N: int, A) -> float:
    """sum_x P_x(tau_A^+ <= N), the hitting cylinder mass without the intensity."""
    return float(hitting_mass_curve(N, A)[-1])
