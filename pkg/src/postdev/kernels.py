"""Hot inner loops.

Each kernel exists twice: a numba-compiled loop (``*_nb``) and a vectorized
numpy twin (``*_np``). The public names bind to the numba version unless
acceleration is disabled, see :mod:`postdev._accel`. Binomial coefficients
are never included here; callers add them.
"""

import math

import numpy as np
from scipy.special import betaln, logsumexp

from ._accel import NUMBA_ENABLED, njit, prange

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@njit
def _log1pexp(x):
    if x > 0.0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


@njit(parallel=True)
def normal_logit_grid_nb(mu, sigma, r, n, z, logw):
    G = mu.shape[0]
    m = r.shape[0]
    K = z.shape[0]
    out = np.empty(G)
    # grid points are independent; each writes only its own slot
    for g in prange(G):
        terms = np.empty(K)
        total = 0.0
        s = sigma[g]
        for i in range(m):
            ri = r[i]
            ni = n[i]
            if s == 0.0:
                th = mu[g]
                total += ri * th - ni * _log1pexp(th)
                continue
            top = -np.inf
            for k in range(K):
                th = mu[g] + s * z[k]
                v = ri * th - ni * _log1pexp(th) + logw[k]
                terms[k] = v
                if v > top:
                    top = v
            acc = 0.0
            for k in range(K):
                acc += math.exp(terms[k] - top)
            total += top + math.log(acc)
        out[g] = total
    return out


def normal_logit_grid_np(mu, sigma, r, n, z, logw):
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    out = np.empty(mu.shape[0])
    # chunk over grid points to bound memory at G x m x K
    step = 512
    for lo in range(0, mu.shape[0], step):
        mu_c = mu[lo:lo + step, None, None]
        s_c = sigma[lo:lo + step, None, None]
        th = mu_c + s_c * z[None, None, :]
        terms = r[None, :, None] * th - n[None, :, None] * np.logaddexp(0.0, th)
        per_area = logsumexp(terms + logw[None, None, :], axis=2)
        degenerate = s_c[:, :, 0] == 0.0
        if degenerate.any():
            th0 = mu_c[:, :, 0]
            flat = r[None, :] * th0 - n[None, :] * np.logaddexp(0.0, th0)
            per_area = np.where(degenerate, flat, per_area)
        out[lo:lo + step] = per_area.sum(axis=1)
    return out


@njit(parallel=True)
def beta_binomial_grid_nb(a, b, r, n):
    G = a.shape[0]
    m = r.shape[0]
    out = np.empty(G)
    for g in prange(G):
        ag = a[g]
        bg = b[g]
        log_b_prior = math.lgamma(ag) + math.lgamma(bg) - math.lgamma(ag + bg)
        total = 0.0
        for i in range(m):
            total += (
                math.lgamma(r[i] + ag)
                + math.lgamma(n[i] - r[i] + bg)
                - math.lgamma(n[i] + ag + bg)
            )
        out[g] = total - m * log_b_prior
    return out


def beta_binomial_grid_np(a, b, r, n):
    a = np.asarray(a, dtype=float)[:, None]
    b = np.asarray(b, dtype=float)[:, None]
    return (betaln(r[None, :] + a, n[None, :] - r[None, :] + b) - betaln(a, b)).sum(axis=1)


@njit(parallel=True)
def binomial_rows_nb(p, r, n):
    T = p.shape[0]
    m = p.shape[1]
    out = np.empty(T)
    for t in prange(T):
        total = 0.0
        for i in range(m):
            total += r[i] * math.log(p[t, i]) + (n[i] - r[i]) * math.log1p(-p[t, i])
        out[t] = total
    return out


def binomial_rows_np(p, r, n):
    p = np.asarray(p, dtype=float)
    return (r[None, :] * np.log(p) + (n - r)[None, :] * np.log1p(-p)).sum(axis=1)


@njit(parallel=True)
def gaussian_kde_nb(x, grid, h):
    T = x.shape[0]
    out = np.zeros(grid.shape[0])
    norm = _INV_SQRT_2PI / (T * h)
    for j in prange(grid.shape[0]):
        acc = 0.0
        gj = grid[j]
        for t in range(T):
            u = (gj - x[t]) / h
            acc += math.exp(-0.5 * u * u)
        out[j] = acc * norm
    return out


def gaussian_kde_np(x, grid, h):
    x = np.asarray(x, dtype=float)
    out = np.empty(grid.shape[0])
    step = max(1, 4_000_000 // max(x.shape[0], 1))
    for lo in range(0, grid.shape[0], step):
        u = (grid[lo:lo + step, None] - x[None, :]) / h
        out[lo:lo + step] = np.exp(-0.5 * u * u).sum(axis=1)
    return out * (_INV_SQRT_2PI / (x.shape[0] * h))


if NUMBA_ENABLED:
    normal_logit_grid = normal_logit_grid_nb
    beta_binomial_grid = beta_binomial_grid_nb
    binomial_rows = binomial_rows_nb
    gaussian_kde = gaussian_kde_nb
else:
    normal_logit_grid = normal_logit_grid_np
    beta_binomial_grid = beta_binomial_grid_np
    binomial_rows = binomial_rows_np
    gaussian_kde = gaussian_kde_np
