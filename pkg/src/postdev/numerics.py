"""Quadrature, special functions, random draws and kernel density estimates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import betaln, gammaln, logit

from . import kernels

MAX_QUADRATURE_POINTS = 64


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights integrating against the standard normal density."""

    nodes: np.ndarray
    weights: np.ndarray

    @property
    def K(self) -> int:
        return self.nodes.shape[0]

    @property
    def log_weights(self) -> np.ndarray:
        return np.log(self.weights)

    def expect(self, f) -> float:
        """Approximate E[f(Z)] for Z ~ N(0, 1)."""
        return float(np.dot(f(self.nodes), self.weights))


def gauss_hermite_normalized(K: int) -> QuadratureRule:
    """K-point Gauss-Hermite rule for the weight exp(-z^2/2)/sqrt(2 pi).

    Nodes are the eigenvalues of the Jacobi matrix of the probabilists'
    Hermite polynomials (Golub-Welsch). Weights use the Christoffel function
    1 / sum_j h_j(z)^2 over orthonormal h_j, which keeps the tiny outer
    weights positive and accurate. Exact for polynomials up to degree 2K - 1.
    """
    if not isinstance(K, (int, np.integer)) or not 1 <= K <= MAX_QUADRATURE_POINTS:
        raise ValueError(f"K must be an integer in [1, {MAX_QUADRATURE_POINTS}], got {K!r}")
    K = int(K)
    if K == 1:
        return QuadratureRule(np.zeros(1), np.ones(1))
    off = np.sqrt(np.arange(1, K, dtype=float))
    nodes = eigh_tridiagonal(np.zeros(K), off, eigvals_only=True)
    nodes = 0.5 * (nodes - nodes[::-1])
    h_prev = np.zeros(K)
    h = np.ones(K)
    total = np.ones(K)
    for j in range(1, K):
        h_prev, h = h, (nodes * h - np.sqrt(j - 1) * h_prev) / np.sqrt(j)
        total += h * h
    weights = 1.0 / total
    weights = 0.5 * (weights + weights[::-1])
    weights = weights / weights.sum()
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return QuadratureRule(nodes, weights)


def log_beta(a, b):
    """log B(a, b) = log Gamma(a) + log Gamma(b) - log Gamma(a + b)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a <= 0) or np.any(b <= 0):
        raise ValueError("log_beta requires a > 0 and b > 0")
    out = betaln(a, b)
    return float(out) if out.ndim == 0 else out


def log_binom_coeff(n, r):
    """log C(n, r) via log-gamma."""
    n = np.asarray(n, dtype=float)
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(r > n):
        raise ValueError("log_binom_coeff requires 0 <= r <= n")
    out = gammaln(n + 1.0) - gammaln(r + 1.0) - gammaln(n - r + 1.0)
    return float(out) if out.ndim == 0 else out


# Random streams ---------------------------------------------------------

def rng_stream(seed: int, *key: int) -> np.random.Generator:
    """Independent PCG64 stream derived from ``(seed, *key)``.

    Streams for different keys never overlap, so results do not depend on the
    order in which models or areas are processed.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def draw_normal(rng: np.random.Generator, mu, sigma, size=None):
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma < 0) or np.any(~np.isfinite(sigma)):
        raise ValueError("sigma must be finite and >= 0")
    return mu + sigma * rng.standard_normal(size if size is not None else np.broadcast(mu, sigma).shape)


def draw_gamma_pair(rng: np.random.Generator, a, b, size=None):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a <= 0) or np.any(b <= 0):
        raise ValueError("beta parameters must be > 0")
    shape = size if size is not None else np.broadcast(a, b).shape
    x = rng.standard_gamma(a, size=shape)
    y = rng.standard_gamma(b, size=shape)
    return x, y


def draw_beta(rng: np.random.Generator, a, b, size=None):
    """Beta(a, b) as X / (X + Y) with independent Gamma(a), Gamma(b) variates.

    Results are nudged off the endpoints so that every draw is strictly
    inside (0, 1).
    """
    x, y = draw_gamma_pair(rng, a, b, size)
    p = x / (x + y)
    tiny = np.finfo(float).tiny
    return np.clip(p, tiny, np.nextafter(1.0, 0.0))


def draw_beta_logit(rng: np.random.Generator, a, b, size=None):
    """logit of a Beta(a, b) draw, computed as log X - log Y without rounding to 0 or 1."""
    x, y = draw_gamma_pair(rng, a, b, size)
    return np.log(x) - np.log(y)


def draw_uniform(rng: np.random.Generator, low=0.0, high=1.0, size=None):
    if np.any(np.asarray(high) < np.asarray(low)):
        raise ValueError("uniform requires low <= high")
    return rng.uniform(low, high, size)


def draw_categorical(rng: np.random.Generator, weights, size=None):
    """Indices drawn with probability proportional to ``weights`` (inverse-CDF)."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a non-empty 1-d array")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and non-negative")
    cum = np.cumsum(w)
    total = cum[-1]
    if total <= 0:
        raise ValueError("weights must have a positive sum")
    u = rng.random(size) * total
    idx = np.searchsorted(cum, u, side="right")
    return np.minimum(idx, w.size - 1)


# Kernel density ---------------------------------------------------------

@dataclass(frozen=True)
class KdeCurve:
    abscissae: np.ndarray
    densities: np.ndarray
    bandwidth: float

    def integral(self) -> float:
        return float(np.trapezoid(self.densities, self.abscissae))

    def mode(self) -> float:
        return float(self.abscissae[np.argmax(self.densities)])

    def cdf(self) -> np.ndarray:
        x, f = self.abscissae, self.densities
        c = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(x))])
        return c / c[-1]

    def quantile(self, q: float) -> float:
        return float(np.interp(q, self.cdf(), self.abscissae))

    def iqr(self) -> float:
        return self.quantile(0.75) - self.quantile(0.25)


def silverman_bandwidth(values) -> float:
    """1.06 * s * T^(-1/5)."""
    values = np.asarray(values, dtype=float)
    s = values.std(ddof=1)
    if not s > 0:
        raise ValueError("automatic bandwidth needs samples with positive spread")
    return float(1.06 * s * values.shape[0] ** (-0.2))


def covering_grid(values, bandwidth: float, points: int = 512) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    return np.linspace(values.min() - 4 * bandwidth, values.max() + 4 * bandwidth, points)


def kde(values, bandwidth="auto", grid=None, points: int = 512) -> KdeCurve:
    """Gaussian kernel density estimate of real-valued samples."""
    values = np.ascontiguousarray(values, dtype=float).ravel()
    if values.shape[0] < 2:
        raise ValueError("kernel density estimate needs at least 2 samples")
    if not np.all(np.isfinite(values)):
        raise ValueError("samples must be finite")
    if bandwidth is None or (isinstance(bandwidth, str) and bandwidth.lower() == "auto"):
        h = silverman_bandwidth(values)
    else:
        h = float(bandwidth)
        if not h > 0:
            raise ValueError("bandwidth must be positive")
    grid = covering_grid(values, h, points) if grid is None else np.ascontiguousarray(grid, dtype=float)
    return KdeCurve(grid, kernels.gaussian_kde(values, grid, h), h)


def kde_logit(samples, bandwidth="auto", grid=None, points: int = 512) -> KdeCurve:
    """KDE of rates in (0, 1), smoothed on the logit scale."""
    p = np.asarray(samples, dtype=float).ravel()
    if p.shape[0] < 2:
        raise ValueError("kernel density estimate needs at least 2 samples")
    if np.any(p <= 0) or np.any(p >= 1):
        raise ValueError("rates must lie strictly inside (0, 1)")
    return kde(logit(p), bandwidth, grid, points)
