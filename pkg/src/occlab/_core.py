"""Compiled Monte-Carlo kernels.

Random draws are addressed by coordinates, never consumed from a sequential
state: the Poisson initial count of site x is read at ``(fkey, 0, x)``, the
binomial split of site x during step n (time n-1 -> n) at ``(fkey, n, x)``, and
the n-th step of the sampling walk at ``(wkey, n, 0)``.  Any window that
contains the light cone of the observable therefore yields identical draws.
"""
import numba as nb
import numpy as np

from .rng import FIELD, WALK, binomial_half, child_key, poisson_inversion, replicate_key, uniform


@nb.njit(cache=True)
def init_counts(out, lo, width, lam, fkey):
    for i in range(width):
        out[i] = poisson_inversion(lam, uniform(fkey, 0, lo + i, 0))


@nb.njit(cache=True)
def split_step(src, src_lo, src_w, dst, dst_lo, dst_w, fkey, n):
    """Move every particle of ``src`` one step; Binomial(c, 1/2) go right.

    Particles landing outside the destination window are dropped.
    """
    for i in range(dst_w):
        dst[i] = 0
    for i in range(src_w):
        c = src[i]
        if c == 0:
            continue
        x = src_lo + i
        r = binomial_half(c, fkey, n, x)
        j = x + 1 - dst_lo
        if 0 <= j < dst_w:
            dst[j] += r
        j = x - 1 - dst_lo
        if 0 <= j < dst_w:
            dst[j] += c - r


@nb.njit(cache=True)
def draw_region(fkey, N, sites, lam, absorb):
    """One draw of W_N(A) (absorb=False) or D_N(A) (absorb=True)."""
    a_lo = sites[0]
    a_hi = sites[-1]
    width0 = a_hi - a_lo + 2 * N + 1
    buf0 = np.empty(width0, dtype=np.int64)
    buf1 = np.empty(width0, dtype=np.int64)
    lo = a_lo - N
    w = width0
    init_counts(buf0, lo, w, lam, fkey)
    total = 0
    for n in range(1, N + 1):
        new_lo = a_lo - (N - n)
        new_w = a_hi - a_lo + 2 * (N - n) + 1
        split_step(buf0, lo, w, buf1, new_lo, new_w, fkey, n)
        buf0, buf1 = buf1, buf0
        lo, w = new_lo, new_w
        for s in sites:
            total += buf0[s - lo]
            if absorb:
                buf0[s - lo] = 0
    return float(total)


@nb.njit(cache=True)
def walk_path(wkey, N, p_up):
    S = np.zeros(N + 1, dtype=np.int64)
    for n in range(1, N + 1):
        S[n] = S[n - 1] + (1 if uniform(wkey, n, 0, 0) < p_up else -1)
    return S


@nb.njit(cache=True)
def horner(coeffs, x):
    acc = 0.0
    for j in range(len(coeffs) - 1, -1, -1):
        acc = acc * x + coeffs[j]
    return acc


@nb.njit(cache=True)
def draw_path(fkey, wkey, N, coeffs, lam, p_up):
    """One draw of Y_{N,phi} = sum_n phi(xi(n, S_n)).

    At time n only sites within reach of some later S_m matter:
    [lo_n, hi_n] with lo_n = min(S_n, lo_{n+1} - 1), hi_n = max(S_n, hi_{n+1} + 1).
    """
    S = walk_path(wkey, N, p_up)
    los = np.empty(N + 1, dtype=np.int64)
    his = np.empty(N + 1, dtype=np.int64)
    los[N] = S[N]
    his[N] = S[N]
    for n in range(N - 1, -1, -1):
        los[n] = min(S[n], los[n + 1] - 1)
        his[n] = max(S[n], his[n + 1] + 1)
    width0 = his[0] - los[0] + 1
    buf0 = np.empty(width0, dtype=np.int64)
    buf1 = np.empty(width0, dtype=np.int64)
    lo = los[0]
    w = width0
    init_counts(buf0, lo, w, lam, fkey)
    total = 0.0
    for n in range(1, N + 1):
        new_w = his[n] - los[n] + 1
        split_step(buf0, lo, w, buf1, los[n], new_w, fkey, n)
        buf0, buf1 = buf1, buf0
        lo, w = los[n], new_w
        total += horner(coeffs, float(buf0[S[n] - lo]))
    return total


@nb.njit(cache=True)
def draw_sigma_table(wkey, N, p_up, qq_table):
    """Sigma^(q)_S = sum_{1<=n<m<=N} Q_{m-n}(S_m - S_n)^q, with
    qq_table[t, d + N - 1] = Q_t(d)^q."""
    S = walk_path(wkey, N, p_up)
    off = N - 1
    total = 0.0
    for m in range(2, N + 1):
        sm = S[m]
        for n in range(1, m):
            total += qq_table[m - n, sm - S[n] + off]
    return total


@nb.njit(cache=True)
def draw_sigma_logfact(wkey, N, p_up, q, logfact):
    """Same as draw_sigma_table with kernels rebuilt from log-factorials."""
    S = walk_path(wkey, N, p_up)
    ln2 = np.log(2.0)
    total = 0.0
    for m in range(2, N + 1):
        for n in range(1, m):
            t = m - n
            d = abs(S[m] - S[n])
            lq = logfact[t] - logfact[(t + d) // 2] - logfact[(t - d) // 2] - t * ln2
            total += np.exp(q * lq)
    return total


@nb.njit(cache=True)
def draw_points(fkey, lam, times, xs):
    """Counts xi(times[i], xs[i]) from one field realization."""
    tmax = 0
    x_lo = xs[0]
    x_hi = xs[0]
    for i in range(len(times)):
        tmax = max(tmax, times[i])
        x_lo = min(x_lo, xs[i])
        x_hi = max(x_hi, xs[i])
    width0 = x_hi - x_lo + 2 * tmax + 1
    buf0 = np.empty(width0, dtype=np.int64)
    buf1 = np.empty(width0, dtype=np.int64)
    lo = x_lo - tmax
    w = width0
    init_counts(buf0, lo, w, lam, fkey)
    out = np.zeros(len(times), dtype=np.int64)
    for n in range(0, tmax + 1):
        if n > 0:
            new_lo = x_lo - (tmax - n)
            new_w = x_hi - x_lo + 2 * (tmax - n) + 1
            split_step(buf0, lo, w, buf1, new_lo, new_w, fkey, n)
            buf0, buf1 = buf1, buf0
            lo, w = new_lo, new_w
        for i in range(len(times)):
            if times[i] == n:
                out[i] = buf0[xs[i] - lo]
    return out


# batch drivers: replicate i always uses replicate_key(seed, start + i)

@nb.njit(cache=True, parallel=True)
def batch_region(seed, start, m, N, sites, lam, absorb):
    out = np.empty(m)
    for i in nb.prange(m):
        key = replicate_key(seed, start + i)
        out[i] = draw_region(child_key(key, FIELD), N, sites, lam, absorb)
    return out


@nb.njit(cache=True, parallel=True)
def batch_path(seed, start, m, N, coeffs, lam, p_up):
    out = np.empty(m)
    for i in nb.prange(m):
        key = replicate_key(seed, start + i)
        out[i] = draw_path(child_key(key, FIELD), child_key(key, WALK), N, coeffs, lam, p_up)
    return out


@nb.njit(cache=True, parallel=True)
def batch_sigma_table(seed, start, m, N, p_up, qq_table):
    out = np.empty(m)
    for i in nb.prange(m):
        key = replicate_key(seed, start + i)
        out[i] = draw_sigma_table(child_key(key, WALK), N, p_up, qq_table)
    return out


@nb.njit(cache=True, parallel=True)
def batch_sigma_logfact(seed, start, m, N, p_up, q, logfact):
    out = np.empty(m)
    for i in nb.prange(m):
        key = replicate_key(seed, start + i)
        out[i] = draw_sigma_logfact(child_key(key, WALK), N, p_up, q, logfact)
    return out


@nb.njit(cache=True, parallel=True)
def batch_points(seed, start, m, lam, times, xs):
    out = np.empty((m, len(times)), dtype=np.int64)
    for i in nb.prange(m):
        key = replicate_key(seed, start + i)
        out[i, :] = draw_points(child_key(key, FIELD), lam, times, xs)
    return out
