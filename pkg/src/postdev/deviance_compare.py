"""Posterior deviance distributions and their pairwise comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dataset import Dataset
from .models import loglik_null_array, loglik_saturated_rows
from .numerics import draw_beta, draw_categorical, rng_stream

# -2 log 9: a likelihood ratio of 9, i.e. posterior odds 9:1 under equal priors
STRONG_EVIDENCE = -2.0 * math.log(9.0)

# stream keys, second component of rng_stream(seed, ...)
_NULL_KEY = 2
_SATURATED_KEY = 3
_COMPARE_KEY = 100
_ASYMPTOTIC_KEY = 101


@dataclass(frozen=True)
class DevianceDistribution:
    """Discrete deviance distribution: sorted support with cumulative masses.

    ``source`` is ``"exact-grid"`` or ``"monte-carlo"``. Monte Carlo
    distributions also keep their raw draws in generation order.
    """

    values: np.ndarray
    cum_probs: np.ndarray
    source: str
    size: int
    draws: Optional[np.ndarray] = None

    @classmethod
    def from_weighted(cls, values, weights, source: str) -> "DevianceDistribution":
        values = np.asarray(values, dtype=float).ravel()
        weights = np.asarray(weights, dtype=float).ravel()
        order = np.argsort(values, kind="stable")
        v, w = values[order], weights[order]
        uniq, start = np.unique(v, return_index=True)
        merged = np.add.reduceat(w, start)
        cum = np.cumsum(merged)
        cum = cum / cum[-1]
        cum[-1] = 1.0
        return cls(uniq, cum, source, values.shape[0])

    @classmethod
    def from_draws(cls, draws, source: str = "monte-carlo") -> "DevianceDistribution":
        draws = np.asarray(draws, dtype=float).ravel()
        if draws.size == 0:
            raise ValueError("no deviance draws")
        dist = cls.from_weighted(draws, np.ones_like(draws), source)
        return cls(dist.values, dist.cum_probs, source, draws.shape[0], draws.copy())

    @property
    def probs(self) -> np.ndarray:
        return np.diff(self.cum_probs, prepend=0.0)

    def quantile(self, q: float) -> float:
        """Smallest support value whose cumulative probability reaches ``q``."""
        k = np.searchsorted(self.cum_probs, q - 1e-12, side="left")
        return float(self.values[min(k, self.values.size - 1)])

    def median(self) -> float:
        return self.quantile(0.5)

    def mean(self) -> float:
        return float(np.dot(self.values, self.probs))

    def cdf(self, x) -> np.ndarray:
        k = np.searchsorted(self.values, x, side="right")
        padded = np.concatenate([[0.0], self.cum_probs])
        return padded[k]

    def sample(self, T: int, rng: np.random.Generator) -> np.ndarray:
        """T independent deviances.

        A Monte Carlo distribution asked for exactly as many values as it
        holds returns its own draws in random order; otherwise values are
        drawn from the support with their probabilities.
        """
        if self.draws is not None and T == self.draws.shape[0]:
            return rng.permutation(self.draws)
        return self.values[draw_categorical(rng, self.probs, T)]


@dataclass(frozen=True)
class DevianceDiffSummary:
    """Summary of D_first - D_second over independent draws."""

    median: float
    ci_low: float
    ci_high: float
    p_first_smaller: float
    p_strong: float
    T: int
    # counted separately: ties have positive probability on a grid
    p_second_smaller: float = float("nan")

    def as_dict(self) -> dict:
        return {
            "median": self.median,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "p_first_smaller": self.p_first_smaller,
            "p_second_smaller": self.p_second_smaller,
            "p_strong": self.p_strong,
            "T": self.T,
        }


def null_draws(data: Dataset, T: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Rates p ~ Beta(R + 1, N - R + 1) and their deviances."""
    if T < 1:
        raise ValueError("T must be >= 1")
    rng = rng_stream(seed, _NULL_KEY, 0)
    p = draw_beta(rng, data.R + 1, data.N - data.R + 1, size=T)
    return p, -2.0 * loglik_null_array(data, p)


def deviance_dist_null(data: Dataset, T: int, seed: int) -> DevianceDistribution:
    return DevianceDistribution.from_draws(null_draws(data, T, seed)[1])


def saturated_draws(data: Dataset, T: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """T x m independent Beta(r_i + 1, n_i - r_i + 1) rates and the T deviances they give.

    Area i uses its own stream, so column values do not depend on m.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    rates = np.empty((T, data.m))
    for i, rec in enumerate(data.records):
        rng = rng_stream(seed, _SATURATED_KEY, i)
        rates[:, i] = draw_beta(rng, rec.r + 1, rec.n - rec.r + 1, size=T)
    return rates, -2.0 * loglik_saturated_rows(data, rates)


def deviance_dist_saturated(data: Dataset, T: int, seed: int) -> DevianceDistribution:
    return DevianceDistribution.from_draws(saturated_draws(data, T, seed)[1])


def ordered_interval(diffs: np.ndarray, level: float = 0.95) -> tuple[float, float]:
    """Central interval from order statistics.

    For T = 10000 and level 0.95 these are the 250th and 9750th ordered
    values (1-based).
    """
    d = np.sort(np.asarray(diffs, dtype=float))
    T = d.shape[0]
    tail = 0.5 * (1.0 - level)
    lo = min(max(int(round(tail * T)), 1), T)
    hi = min(max(int(round((1.0 - tail) * T)), 1), T)
    return float(d[lo - 1]), float(d[hi - 1])


def summarize_differences(diffs) -> DevianceDiffSummary:
    diffs = np.asarray(diffs, dtype=float)
    lo, hi = ordered_interval(diffs)
    med = float(np.median(diffs))
    return DevianceDiffSummary(
        median=med,
        ci_low=min(lo, med),
        ci_high=max(hi, med),
        p_first_smaller=float(np.mean(diffs < 0)),
        p_strong=float(np.mean(diffs < STRONG_EVIDENCE)),
        T=diffs.shape[0],
        p_second_smaller=float(np.mean(diffs > 0)),
    )


def difference_draws(dist_j: DevianceDistribution, dist_k: DevianceDistribution,
                     T: int, seed: int, key: int = 0) -> np.ndarray:
    """T values of D_j - D_k from independent draws of each distribution."""
    rng_j = rng_stream(seed, _COMPARE_KEY, key, 0)
    rng_k = rng_stream(seed, _COMPARE_KEY, key, 1)
    return dist_j.sample(T, rng_j) - dist_k.sample(T, rng_k)


def compare(dist_j: DevianceDistribution, dist_k: DevianceDistribution,
            T: int, seed: int, key: int = 0) -> DevianceDiffSummary:
    """Summarize D_j - D_k; ``p_first_smaller`` is P(D_j < D_k)."""
    if T < 1:
        raise ValueError("T must be >= 1")
    return summarize_differences(difference_draws(dist_j, dist_k, T, seed, key))


def asymptotic_diff(s1: int, s2: int, FD12: float, T: int, seed: int) -> DevianceDistribution:
    """FD12 + chi2(s1) - chi2(s2) with independent chi-squares."""
    if s1 < 1 or s2 < 1:
        raise ValueError("degrees of freedom must be >= 1")
    rng = rng_stream(seed, _ASYMPTOTIC_KEY, s1, s2)
    d = FD12 + rng.chisquare(s1, size=T) - rng.chisquare(s2, size=T)
    return DevianceDistribution.from_draws(d)


def asymptotic_normal_limit(s1: int, s2: int, FD12: float) -> tuple[float, float]:
    """Mean and variance of the large-s normal form: N(FD12 + s1 - s2, 2 s1 + 2 s2)."""
    return FD12 + s1 - s2, 2.0 * s1 + 2.0 * s2
