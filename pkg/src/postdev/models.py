"""The four competing likelihoods for per-area binomial rates.

Every log-likelihood here includes the binomial coefficients, so deviances
from different models are directly comparable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.special import expit

from . import kernels
from .dataset import Dataset
from .numerics import QuadratureRule, gauss_hermite_normalized, log_beta, log_binom_coeff


class Model(str, Enum):
    NORMAL = "normal"
    BETA = "beta"
    NULL = "null"
    SATURATED = "saturated"

    @property
    def index(self) -> int:
        return list(Model).index(self)

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class NormalLogitParams:
    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")


@dataclass(frozen=True)
class BetaParamsAB:
    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError(f"beta parameters must be > 0, got a={self.a}, b={self.b}")


@dataclass(frozen=True)
class BetaParamsMeanSd:
    mu_beta: float
    sigma_beta: float

    def __post_init__(self):
        if not 0 < self.mu_beta < 1:
            raise ValueError(f"beta mean must lie in (0, 1), got {self.mu_beta}")
        if not self.sigma_beta > 0:
            raise ValueError(f"beta SD must be > 0, got {self.sigma_beta}")
        if not self.sigma_beta ** 2 < self.mu_beta * (1 - self.mu_beta):
            raise ValueError("beta SD too large for its mean: need sigma^2 < mu (1 - mu)")


@dataclass(frozen=True)
class NullParam:
    p: float

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise ValueError(f"rate must lie in (0, 1), got {self.p}")


@dataclass(frozen=True)
class SaturatedParams:
    rates: tuple

    def __post_init__(self):
        rates = np.asarray(self.rates, dtype=float)
        if rates.ndim != 1 or np.any(rates <= 0) or np.any(rates >= 1):
            raise ValueError("saturated rates must be a vector of values in (0, 1)")
        object.__setattr__(self, "rates", tuple(float(x) for x in rates))


def beta_ab_to_meansd(p: BetaParamsAB) -> BetaParamsMeanSd:
    s = p.a + p.b
    return BetaParamsMeanSd(p.a / s, math.sqrt(p.a * p.b / (s * s * (s + 1))))


def beta_meansd_to_ab(p: BetaParamsMeanSd) -> BetaParamsAB:
    a, b = meansd_to_ab_arrays(p.mu_beta, p.sigma_beta)
    return BetaParamsAB(float(a), float(b))


def meansd_to_ab_arrays(mu_beta, sigma_beta):
    """Vectorized (mean, SD) -> (a, b); a + b = mu (1 - mu) / sigma^2 - 1."""
    mu_beta = np.asarray(mu_beta, dtype=float)
    sigma_beta = np.asarray(sigma_beta, dtype=float)
    total = mu_beta * (1 - mu_beta) / sigma_beta ** 2 - 1
    if np.any(total <= 0) or np.any(mu_beta <= 0) or np.any(mu_beta >= 1):
        raise ValueError("(mean, SD) outside the region where a, b > 0")
    return mu_beta * total, (1 - mu_beta) * total


def log_binom_total(data: Dataset) -> float:
    """Sum of log C(n_i, r_i), the constant shared by every model."""
    return _log_binom_total(data.n.tobytes(), data.r.tobytes())


@lru_cache(maxsize=32)
def _log_binom_total(n_bytes, r_bytes):
    n = np.frombuffer(n_bytes)
    r = np.frombuffer(r_bytes)
    return float(np.sum(log_binom_coeff(n, r)))


@lru_cache(maxsize=8)
def default_rule(K: int = 20) -> QuadratureRule:
    return gauss_hermite_normalized(K)


def loglik_normal_logit_grid(data: Dataset, mu, sigma, rule: QuadratureRule | None = None) -> np.ndarray:
    """log L for arrays of (mu, sigma) points."""
    rule = rule or default_rule()
    mu = np.ascontiguousarray(mu, dtype=float).ravel()
    sigma = np.ascontiguousarray(sigma, dtype=float).ravel()
    if np.any(sigma < 0):
        raise ValueError("sigma must be >= 0")
    core = kernels.normal_logit_grid(
        mu, sigma, np.ascontiguousarray(data.r), np.ascontiguousarray(data.n),
        np.ascontiguousarray(rule.nodes), np.ascontiguousarray(rule.log_weights),
    )
    return core + log_binom_total(data)


def loglik_normal_logit(data: Dataset, params: NormalLogitParams, rule: QuadratureRule | None = None) -> float:
    """Normal-logit random-effects log-likelihood, areas integrated out by quadrature.

    Each area term is log sum_k exp(r (mu + sigma z_k) - n log(1 + e^(mu + sigma z_k)) + log w_k),
    summed stably in log space.
    """
    return float(loglik_normal_logit_grid(data, [params.mu], [params.sigma], rule)[0])


def loglik_beta_binomial_grid(data: Dataset, a, b) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float).ravel()
    b = np.ascontiguousarray(b, dtype=float).ravel()
    if np.any(a <= 0) or np.any(b <= 0):
        raise ValueError("beta parameters must be > 0")
    core = kernels.beta_binomial_grid(a, b, np.ascontiguousarray(data.r), np.ascontiguousarray(data.n))
    return core + log_binom_total(data)


def loglik_beta_binomial(data: Dataset, params: BetaParamsAB) -> float:
    r, n = data.r, data.n
    terms = log_binom_coeff(n, r) + log_beta(r + params.a, n - r + params.b) - log_beta(params.a, params.b)
    return float(np.sum(terms))


def loglik_null(data: Dataset, param: NullParam | float) -> float:
    p = param.p if isinstance(param, NullParam) else float(param)
    if not 0 < p < 1:
        raise ValueError(f"rate must lie in (0, 1), got {p}")
    return float(loglik_null_array(data, p))


def loglik_null_array(data: Dataset, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    R, N = float(data.R), float(data.N)
    return log_binom_total(data) + R * np.log(p) + (N - R) * np.log1p(-p)


def loglik_saturated(data: Dataset, params: SaturatedParams | np.ndarray) -> float:
    rates = np.asarray(params.rates if isinstance(params, SaturatedParams) else params, dtype=float)
    if rates.shape != (data.m,):
        raise ValueError(f"expected {data.m} rates, got shape {rates.shape}")
    return float(loglik_saturated_rows(data, rates[None, :])[0])


def loglik_saturated_rows(data: Dataset, rates: np.ndarray) -> np.ndarray:
    """Saturated log-likelihood for each row of a T x m matrix of rates."""
    rates = np.ascontiguousarray(rates, dtype=float)
    if rates.ndim != 2 or rates.shape[1] != data.m:
        raise ValueError(f"expected a T x {data.m} rate matrix, got shape {rates.shape}")
    if np.any(rates <= 0) or np.any(rates >= 1):
        raise ValueError("saturated rates must lie strictly inside (0, 1)")
    core = kernels.binomial_rows(rates, np.ascontiguousarray(data.r), np.ascontiguousarray(data.n))
    return core + log_binom_total(data)


def loglik_saturated_max(data: Dataset) -> float:
    """Saturated log-likelihood at p_i = r_i / n_i, with 0 log 0 = 0."""
    r, n = data.r, data.n
    p = r / n
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(r > 0, r * np.log(p), 0.0)
        b = np.where(n - r > 0, (n - r) * np.log1p(-p), 0.0)
    return float(log_binom_total(data) + a.sum() + b.sum())


def logistic(x):
    return expit(x)
