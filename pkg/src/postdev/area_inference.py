"""Per-area posterior rate draws and typical-area draws."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, logit

from .dataset import Dataset
from .deviance_compare import saturated_draws
from .models import Model, meansd_to_ab_arrays
from .numerics import draw_beta, draw_beta_logit, rng_stream

log = logging.getLogger(__name__)

# stream keys: rng_stream(seed, model.index, purpose, area)
_AREA_PURPOSE = 1
_TYPICAL_PURPOSE = 2

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class AreaDrawMatrix:
    """T x m rate draws; row t is aligned with parameter draw t."""

    model: str
    draws: np.ndarray
    corrected: tuple = field(default=(), compare=False)

    def __post_init__(self):
        d = np.asarray(self.draws, dtype=float)
        if d.ndim != 2:
            raise ValueError("area draws must be a T x m matrix")
        if np.any(d <= 0) or np.any(d >= 1):
            raise ValueError("area draws must lie strictly inside (0, 1)")
        d.flags.writeable = False
        object.__setattr__(self, "draws", d)

    @property
    def T(self) -> int:
        return self.draws.shape[0]

    @property
    def m(self) -> int:
        return self.draws.shape[1]

    def logits(self) -> np.ndarray:
        return logit(self.draws)

    def column(self, i: int) -> np.ndarray:
        return self.draws[:, i]


def _to_open_unit(p: np.ndarray) -> np.ndarray:
    return np.clip(p, np.finfo(float).tiny, 1.0 - _EPS)


def empirical_logits(data: Dataset) -> tuple[np.ndarray, np.ndarray, tuple]:
    """Per-area logit estimates and sample precisions n p (1 - p).

    A zero count is replaced by 0.5; a count equal to n by n - 0.5. The
    indices of areas needing the upper correction are returned.
    """
    r = np.array(data.r, dtype=float)
    n = data.n
    r = np.where(r == 0, 0.5, r)
    full = np.flatnonzero(r == n)
    if full.size:
        log.warning("areas %s have r = n; using r = n - 0.5", data.ids[full].tolist())
        r[full] = n[full] - 0.5
    p_hat = r / n
    return np.log(r / (n - r)), n * p_hat * (1 - p_hat), tuple(int(i) for i in full)


def conditional_normal_moments(theta_hat, psi_area, mu, sigma):
    """Mean and SD of the normal approximation to logit p_i given (mu, sigma).

    Broadcasts: area arrays of shape (m,), parameter arrays of shape (T,)
    give (T, m) results. sigma = 0 means complete shrinkage to mu.
    """
    theta_hat = np.asarray(theta_hat, dtype=float)
    psi_area = np.asarray(psi_area, dtype=float)
    mu = np.asarray(mu, dtype=float)[..., None]
    sigma = np.asarray(sigma, dtype=float)[..., None]
    with np.errstate(divide="ignore", invalid="ignore"):
        psi = 1.0 / sigma ** 2
        prec = psi_area + psi
        mean = (psi_area * theta_hat + psi * mu) / prec
        sd = 1.0 / np.sqrt(prec)
    degenerate = sigma == 0
    mean = np.where(degenerate, mu, mean)
    sd = np.where(degenerate, 0.0, sd)
    return mean, sd


def _params_as_arrays(param_draws):
    if hasattr(param_draws, "p1"):
        return np.asarray(param_draws.p1, dtype=float), np.asarray(param_draws.p2, dtype=float)
    arr = np.asarray(param_draws, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] == 0:
        raise ValueError("parameter draws must be a non-empty sequence of pairs")
    return arr[:, 0], arr[:, 1]


def area_draws_normal(data: Dataset, param_draws, seed: int) -> AreaDrawMatrix:
    """Rates from the normal approximation to each area's conditional posterior.

    For draw t, logit p_i = (psi_i theta_hat_i + psi mu) / (psi_i + psi) + z / sqrt(psi_i + psi)
    with psi = 1 / sigma^2 and z ~ N(0, 1) from area i's own stream.
    """
    mu, sigma = _params_as_arrays(param_draws)
    if np.any(sigma < 0):
        raise ValueError("sigma draws must be >= 0")
    theta_hat, psi_area, corrected = empirical_logits(data)
    mean, sd = conditional_normal_moments(theta_hat, psi_area, mu, sigma)
    T = mu.shape[0]
    z = np.empty((T, data.m))
    for i in range(data.m):
        z[:, i] = rng_stream(seed, Model.NORMAL.index, _AREA_PURPOSE, i).standard_normal(T)
    return AreaDrawMatrix(Model.NORMAL.value, _to_open_unit(expit(mean + sd * z)), corrected)


def normal_conditional_exact(data: Dataset, i: int, mu: float, sigma: float,
                             points: int = 4001) -> tuple[float, float]:
    """Exact mean and SD of logit p_i given (mu, sigma), by dense trapezoid integration.

    Cross-check for the normal approximation; not used in the pipeline.
    """
    r, n = float(data.r[i]), float(data.n[i])
    theta_hat, psi_area, _ = empirical_logits(data)
    m0, s0 = conditional_normal_moments(theta_hat[i:i + 1], psi_area[i:i + 1], mu, sigma)
    center, width = float(m0.ravel()[0]), float(s0.ravel()[0])
    th = np.linspace(center - 12 * width, center + 12 * width, points)
    logf = r * th - n * np.logaddexp(0.0, th) - 0.5 * ((th - mu) / sigma) ** 2
    w = np.exp(logf - logf.max())
    z = np.trapezoid(w, th)
    mean = np.trapezoid(w * th, th) / z
    var = np.trapezoid(w * (th - mean) ** 2, th) / z
    return float(mean), float(np.sqrt(var))


def area_draws_beta(data: Dataset, param_draws, seed: int, parametrization: str = "meansd") -> AreaDrawMatrix:
    """p_i ~ Beta(r_i + a_t, n_i - r_i + b_t) for every draw t and area i.

    ``param_draws`` holds (mean, SD) pairs, or (a, b) pairs when
    ``parametrization="ab"``.
    """
    p1, p2 = _params_as_arrays(param_draws)
    if parametrization == "meansd":
        a, b = meansd_to_ab_arrays(p1, p2)
    elif parametrization == "ab":
        a, b = p1, p2
    else:
        raise ValueError(f"unknown parametrization {parametrization!r}")
    if np.any(a <= 0) or np.any(b <= 0):
        raise ValueError("beta parameters must be > 0")
    T = a.shape[0]
    out = np.empty((T, data.m))
    for i, rec in enumerate(data.records):
        rng = rng_stream(seed, Model.BETA.index, _AREA_PURPOSE, i)
        out[:, i] = draw_beta(rng, rec.r + a, rec.n - rec.r + b, size=T)
    return AreaDrawMatrix(Model.BETA.value, out)


def area_draws_local(data: Dataset, T: int, seed: int) -> AreaDrawMatrix:
    """Independent flat-prior posteriors Beta(r_i + 1, n_i - r_i + 1).

    The same draws serve as the saturated model's area draws; with equal
    seeds they coincide with :func:`postdev.deviance_compare.saturated_draws`.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    rates, _ = saturated_draws(data, T, seed)
    return AreaDrawMatrix("local", rates)


def area_draws_null(data: Dataset, rates) -> AreaDrawMatrix:
    """Null model: every area shares the draw-t common rate."""
    rates = np.asarray(rates, dtype=float)
    return AreaDrawMatrix(Model.NULL.value, np.repeat(rates[:, None], data.m, axis=1))


def typical_city_draws(model: Model | str, param_draws, seed: int,
                       parametrization: str = "meansd") -> np.ndarray:
    """Logit rate of a randomly chosen new area, one per parameter draw.

    normal: mu_t + sigma_t Z_t. beta: logit of a Beta(a_t, b_t) draw.
    """
    model = Model(model)
    p1, p2 = _params_as_arrays(param_draws)
    rng = rng_stream(seed, model.index, _TYPICAL_PURPOSE, 0)
    if model is Model.NORMAL:
        if np.any(p2 < 0):
            raise ValueError("sigma draws must be >= 0")
        return p1 + p2 * rng.standard_normal(p1.shape[0])
    if model is Model.BETA:
        a, b = meansd_to_ab_arrays(p1, p2) if parametrization == "meansd" else (p1, p2)
        return draw_beta_logit(rng, a, b)
    raise ValueError(f"model {model} has no among-area distribution")
