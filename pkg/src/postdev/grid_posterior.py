"""Posterior mass on a rectangular parameter grid under flat priors.

Two parametric models are supported: normal-logit over (mu, sigma) and beta
over (mean, SD). Grid index ``g = i1 * g2 + i2``, first parameter outermost.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar
from scipy.special import logit

from .dataset import Dataset
from .deviance_compare import DevianceDistribution
from .models import (
    Model,
    loglik_beta_binomial_grid,
    loglik_normal_logit_grid,
    meansd_to_ab_arrays,
)
from .numerics import QuadratureRule, draw_categorical, rng_stream

log = logging.getLogger(__name__)

PARAM_NAMES = {
    Model.NORMAL: ("mu", "sigma"),
    Model.BETA: ("mu_beta", "sigma_beta"),
}

# half-width of the automatic grid, in standard errors
AUTO_HALF_WIDTH = 5.0


@dataclass(frozen=True)
class GridSpec:
    lo1: float
    hi1: float
    lo2: float
    hi2: float
    g1: int = 100
    g2: int = 100

    def __post_init__(self):
        if not (self.lo1 < self.hi1 and self.lo2 < self.hi2):
            raise ValueError(f"grid bounds must satisfy lo < hi: {self}")
        if self.g1 < 2 or self.g2 < 2:
            raise ValueError("grid needs at least 2 points per axis")

    @property
    def axis1(self) -> np.ndarray:
        return np.linspace(self.lo1, self.hi1, self.g1)

    @property
    def axis2(self) -> np.ndarray:
        return np.linspace(self.lo2, self.hi2, self.g2)

    @property
    def steps(self) -> tuple[float, float]:
        return (self.hi1 - self.lo1) / (self.g1 - 1), (self.hi2 - self.lo2) / (self.g2 - 1)

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        p1, p2 = np.meshgrid(self.axis1, self.axis2, indexing="ij")
        return p1.ravel(), p2.ravel()

    def resized(self, g1: int, g2: Optional[int] = None) -> "GridSpec":
        return GridSpec(self.lo1, self.hi1, self.lo2, self.hi2, g1, g2 if g2 is not None else g1)


@dataclass(frozen=True)
class PosteriorGrid:
    spec: GridSpec
    model: Model
    p1: np.ndarray
    p2: np.ndarray
    loglik: np.ndarray
    mass: np.ndarray
    refined_mle: Optional[tuple[float, float, float]] = field(default=None, compare=False)

    @property
    def G(self) -> int:
        return self.loglik.shape[0]

    @property
    def deviance(self) -> np.ndarray:
        return -2.0 * self.loglik

    def posterior_mean(self) -> tuple[float, float]:
        return float(self.mass @ self.p1), float(self.mass @ self.p2)


@dataclass(frozen=True)
class GridSummary:
    mle_point: tuple[float, float]
    max_loglik: float
    frequentist_deviance: float
    mean_deviance: float
    p_D: float
    DIC: float
    refined_mle: Optional[tuple[float, float, float]] = None

    def as_dict(self) -> dict:
        out = {
            "mle_point": list(self.mle_point),
            "max_loglik": self.max_loglik,
            "frequentist_deviance": self.frequentist_deviance,
            "mean_deviance": self.mean_deviance,
            "p_D": self.p_D,
            "DIC": self.DIC,
        }
        if self.refined_mle is not None:
            out["refined_mle"] = {"point": list(self.refined_mle[:2]), "loglik": self.refined_mle[2]}
        return out


def normalize_mass(loglik, log_prior=None) -> np.ndarray:
    """Posterior masses proportional to exp(loglik), via max subtraction."""
    lp = np.asarray(loglik, dtype=float)
    if log_prior is not None:
        lp = lp + log_prior
    finite = np.isfinite(lp)
    if not finite.any():
        raise ValueError("log-likelihood is -inf at every grid point")
    lp = np.where(finite, lp, -np.inf)
    mass = np.exp(lp - lp.max())
    return mass / mass.sum()


def grid_loglik(data: Dataset, model: Model, p1, p2, rule: QuadratureRule | None = None) -> np.ndarray:
    model = Model(model)
    if model is Model.NORMAL:
        return loglik_normal_logit_grid(data, p1, p2, rule)
    if model is Model.BETA:
        p1 = np.asarray(p1, dtype=float)
        p2 = np.asarray(p2, dtype=float)
        out = np.full(p1.shape, -np.inf)
        ok = (p1 > 0) & (p1 < 1) & (p2 > 0) & (p2 ** 2 < p1 * (1 - p1))
        if ok.any():
            a, b = meansd_to_ab_arrays(p1[ok], p2[ok])
            out[ok] = loglik_beta_binomial_grid(data, a, b)
        return out
    raise ValueError(f"no grid posterior for model {model}")


# Automatic bounds -------------------------------------------------------

def _coarse_box(data: Dataset, model: Model):
    rate = data.R / data.N
    if model is Model.NORMAL:
        center = float(logit(min(max(rate, 1e-6), 1 - 1e-6)))
        return np.linspace(center - 2.0, center + 2.0, 41), np.linspace(0.0, 2.0, 41)
    mu = np.geomspace(max(rate / 5, 1e-8), min(rate * 5, 0.9), 41)
    return mu, None


def find_mle(data: Dataset, model: Model, rule: QuadratureRule | None = None) -> tuple[np.ndarray, float]:
    """Coarse grid search followed by Nelder-Mead refinement."""
    model = Model(model)
    if model is Model.NORMAL:
        a1, a2 = _coarse_box(data, model)
        p1, p2 = np.meshgrid(a1, a2, indexing="ij")
        ll = grid_loglik(data, model, p1.ravel(), p2.ravel(), rule)
        g = int(np.argmax(ll))
        start = np.array([p1.ravel()[g], max(p2.ravel()[g], 0.05)])

        def f(x):
            return -grid_loglik(data, model, [x[0]], [abs(x[1])], rule)[0]
    else:
        # search on (logit mean, log of SD relative to its maximum)
        a1, _ = _coarse_box(data, model)
        frac = np.geomspace(1e-3, 0.9, 41)
        M, F = np.meshgrid(a1, frac, indexing="ij")
        S = F * np.sqrt(M * (1 - M))
        ll = grid_loglik(data, model, M.ravel(), S.ravel())
        g = int(np.argmax(ll))
        start = np.array([logit(M.ravel()[g]), np.log(F.ravel()[g])])

        def to_natural(x):
            m = 1.0 / (1.0 + np.exp(-x[0]))
            return m, np.exp(min(x[1], 0.0)) * np.sqrt(m * (1 - m)) * (1 - 1e-9)

        def f(x):
            m, s = to_natural(x)
            v = grid_loglik(data, model, [m], [s])[0]
            return -v if np.isfinite(v) else 1e300

    res = minimize(f, start, method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-11, "maxiter": 4000})
    x = res.x
    if model is Model.NORMAL:
        point = np.array([x[0], abs(x[1])])
    else:
        point = np.array(to_natural(x))
    return point, -float(res.fun)


def _hessian(f: Callable[[np.ndarray], float], x: np.ndarray, h: np.ndarray) -> np.ndarray:
    n = x.size
    H = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = h[i]
            ej[j] = h[j]
            H[i, j] = H[j, i] = (
                f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)
            ) / (4 * h[i] * h[j])
    return H


def standard_errors(data: Dataset, model: Model, mle: np.ndarray,
                    rule: QuadratureRule | None = None) -> np.ndarray:
    """Inverse observed-information standard errors at the MLE.

    Falls back to per-axis curvature when the joint Hessian is not negative
    definite (the normal-logit surface is slightly ridged).
    """
    def ll(x):
        return float(grid_loglik(data, model, [x[0]], [x[1]], rule)[0])

    h = np.maximum(np.abs(mle) * 1e-2, 1e-6)
    if model is Model.BETA:
        h[1] = min(h[1], 0.25 * mle[1])
    H = _hessian(ll, mle, h)
    info = -H
    try:
        cov = np.linalg.inv(info)
        if np.all(np.diag(cov) > 0) and np.all(np.linalg.eigvalsh(info) > 0):
            return np.sqrt(np.diag(cov))
    except np.linalg.LinAlgError:
        pass
    diag = np.diag(info)
    return np.where(diag > 0, 1.0 / np.sqrt(np.abs(diag)), np.abs(mle) * 0.5)


def _profile(data: Dataset, model: Model, axis: int, value: float, mle: np.ndarray,
             rule: QuadratureRule | None) -> float:
    """Log-likelihood at ``value`` on one axis, maximized over the other parameter."""
    if model is Model.NORMAL:
        if axis == 0:
            other = np.linspace(0.0, max(4.0 * mle[1], 1.0), 201)
            pts = lambda o: (np.full_like(o, value), o)
        else:
            other = np.linspace(mle[0] - 3.0, mle[0] + 3.0, 201)
            pts = lambda o: (o, np.full_like(o, value))
    elif axis == 0:
        # SD as a log fraction of its largest admissible value
        cap = np.sqrt(value * (1 - value))
        other = np.linspace(-15.0, -1e-9, 201)
        pts = lambda o: (np.full_like(o, value), cap * np.exp(o))
    else:
        # mean on the logit scale, restricted to where the SD is admissible
        disc = np.sqrt(max(0.25 - value * value, 0.0))
        lo_m, hi_m = 0.5 - disc, 0.5 + disc
        lo_m = max(lo_m, mle[0] / 20) * (1 + 1e-9)
        hi_m = min(hi_m, 20 * mle[0], 1 - 1e-9)
        if not lo_m < hi_m:
            return -np.inf
        other = np.linspace(logit(lo_m), logit(hi_m), 201)
        pts = lambda o: (1 / (1 + np.exp(-o)), np.full_like(o, value))

    def ll(o):
        o = np.atleast_1d(np.asarray(o, dtype=float))
        return grid_loglik(data, model, *pts(o), rule)

    vals = ll(other)
    k = int(np.argmax(vals))
    if not np.isfinite(vals[k]):
        return -np.inf
    a, b = other[max(k - 1, 0)], other[min(k + 1, other.size - 1)]
    res = minimize_scalar(lambda o: -ll(o)[0], bounds=(a, b), method="bounded", options={"xatol": 1e-10})
    return max(float(vals[k]), -float(res.fun))


def _domain(model: Model, axis: int) -> tuple[float, float]:
    if model is Model.NORMAL:
        return (-np.inf, np.inf) if axis == 0 else (0.0, np.inf)
    return (1e-9, 1 - 1e-9) if axis == 0 else (0.0, 0.5)


def profile_bounds(data: Dataset, model: Model, mle: np.ndarray, best: float, se: np.ndarray,
                   half_width: float = AUTO_HALF_WIDTH,
                   rule: QuadratureRule | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Points where the profile log-likelihood falls ``half_width**2 / 2`` below its maximum.

    This is +/- ``half_width`` profile standard deviations, so the bounds follow
    any skewness of the likelihood. Wald standard errors only set the search step.
    Bounds that would leave the parameter domain are clipped to it.
    """
    model = Model(model)
    target = best - 0.5 * half_width ** 2
    lo = np.empty(2)
    hi = np.empty(2)
    for axis in range(2):
        dlo, dhi = _domain(model, axis)

        def gap(x, axis=axis):
            # finite stand-in for -inf keeps the root finder well defined
            return max(_profile(data, model, axis, x, mle, rule) - target, -1e6)

        for sign, out in ((-1.0, lo), (1.0, hi)):
            edge = dlo if sign < 0 else dhi
            inner, step = float(mle[axis]), float(se[axis])
            while True:
                outer = inner + sign * step
                if sign * (outer - edge) >= 0:
                    outer = edge
                if gap(outer) < 0:
                    bound = brentq(gap, min(inner, outer), max(inner, outer), xtol=1e-12)
                    break
                if outer == edge:
                    bound = edge
                    break
                inner, step = outer, 1.5 * step
            out[axis] = bound
    return lo, hi


def auto_spec(data: Dataset, model: Model, grid_size: int = 100,
              rule: QuadratureRule | None = None) -> tuple[GridSpec, tuple[float, float, float]]:
    """Grid covering MLE +/- AUTO_HALF_WIDTH profile SDs per axis, clipped to the domain."""
    model = Model(model)
    mle, best = find_mle(data, model, rule)
    se = standard_errors(data, model, mle, rule)
    lo, hi = profile_bounds(data, model, mle, best, se, AUTO_HALF_WIDTH, rule)
    if model is Model.BETA:
        lo[0] = max(lo[0], 1e-9)
        hi[0] = min(hi[0], 1 - 1e-9)
        lo[1] = max(lo[1], 1e-3 * se[1])
    spec = GridSpec(lo[0], hi[0], lo[1], hi[1], grid_size, grid_size)
    log.info("%s auto grid: %s (mle %s, se %s)", model.value, spec, mle, se)
    return spec, (float(mle[0]), float(mle[1]), best)


def build_grid(data: Dataset, model: Model | str, spec: GridSpec | str = "auto",
               grid_size: int = 100, rule: QuadratureRule | None = None,
               log_prior: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None) -> PosteriorGrid:
    """Evaluate the log-likelihood at every grid point and normalize to posterior masses.

    ``log_prior`` (off by default) adds a log prior weight per point.
    """
    model = Model(model)
    refined = None
    if isinstance(spec, str):
        if spec.lower() != "auto":
            raise ValueError(f"unknown grid spec {spec!r}")
        spec, refined = auto_spec(data, model, grid_size, rule)
    p1, p2 = spec.points()
    ll = grid_loglik(data, model, p1, p2, rule)
    prior = None if log_prior is None else np.asarray(log_prior(p1, p2), dtype=float)
    mass = normalize_mass(ll, prior)
    for arr in (p1, p2, ll, mass):
        arr.flags.writeable = False
    return PosteriorGrid(spec, model, p1, p2, ll, mass, refined)


def grid_from_loglik(spec: GridSpec, model: Model | str, loglik) -> PosteriorGrid:
    """Wrap precomputed log-likelihood values (one per grid point) as a posterior grid."""
    p1, p2 = spec.points()
    loglik = np.asarray(loglik, dtype=float).ravel()
    if loglik.shape != p1.shape:
        raise ValueError(f"expected {p1.size} log-likelihood values, got {loglik.size}")
    return PosteriorGrid(spec, Model(model), p1, p2, loglik, normalize_mass(loglik))


def grid_summaries(grid: PosteriorGrid) -> GridSummary:
    g = int(np.argmax(grid.loglik))
    max_ll = float(grid.loglik[g])
    fd = -2.0 * max_ll
    finite = grid.mass > 0
    mean_dev = float(np.dot(grid.mass[finite], grid.deviance[finite]))
    p_D = mean_dev - fd
    return GridSummary(
        mle_point=(float(grid.p1[g]), float(grid.p2[g])),
        max_loglik=max_ll,
        frequentist_deviance=fd,
        mean_deviance=mean_dev,
        p_D=p_D,
        DIC=mean_dev + p_D,
        refined_mle=grid.refined_mle,
    )


def deviance_cdf(grid: PosteriorGrid) -> DevianceDistribution:
    keep = grid.mass > 0
    return DevianceDistribution.from_weighted(grid.deviance[keep], grid.mass[keep], "exact-grid")


@dataclass(frozen=True)
class ParamDraws:
    """Grid points drawn from the posterior mass, with their log-likelihoods."""

    model: Model
    index: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    loglik: np.ndarray

    @property
    def T(self) -> int:
        return self.index.shape[0]

    @property
    def deviance(self) -> np.ndarray:
        return -2.0 * self.loglik


def sample_params(grid: PosteriorGrid, T: int, seed: int) -> ParamDraws:
    if T < 1:
        raise ValueError("T must be >= 1")
    rng = rng_stream(seed, grid.model.index, 0)
    idx = draw_categorical(rng, grid.mass, T)
    return ParamDraws(grid.model, idx, grid.p1[idx], grid.p2[idx], grid.loglik[idx])

