"""Model averaging with per-draw posterior model probabilities.

At draw t, model j has posterior probability proportional to
prior_j * exp(-D_j[t] / 2). Averaged draws copy the draw-t values of a model
chosen with those probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .area_inference import AreaDrawMatrix
from .models import Model
from .numerics import rng_stream

_AVERAGE_KEY = 200
_TYPICAL_KEY = 201


@dataclass(frozen=True)
class AveragingConfig:
    models: tuple
    prior_probs: tuple

    def __post_init__(self):
        models = tuple(Model(m) for m in self.models)
        priors = tuple(float(p) for p in self.prior_probs)
        if not models:
            raise ValueError("at least one model must be included")
        if len(set(models)) != len(models):
            raise ValueError("models must be distinct")
        if len(priors) != len(models):
            raise ValueError("one prior probability per model is required")
        if any(p < 0 for p in priors) or abs(sum(priors) - 1.0) > 1e-9:
            raise ValueError("prior probabilities must be non-negative and sum to 1")
        object.__setattr__(self, "models", models)
        object.__setattr__(self, "prior_probs", priors)

    @classmethod
    def equal(cls, models) -> "AveragingConfig":
        models = tuple(models)
        return cls(models, tuple(1.0 / len(models) for _ in models))

    def restricted(self, models) -> "AveragingConfig":
        """Keep only ``models``, renormalizing their priors."""
        keep = [Model(m) for m in models]
        pri = [self.prior_probs[self.models.index(m)] if m in self.models else 0.0 for m in keep]
        total = sum(pri)
        if total <= 0:
            raise ValueError("restricted models carry no prior probability")
        return AveragingConfig(tuple(keep), tuple(p / total for p in pri))


DEFAULT_MODELS = (Model.NORMAL, Model.BETA, Model.SATURATED)


@dataclass(frozen=True)
class AlignedDraws:
    """Per-model deviances (T,) and area draws (T x m), index-aligned on t."""

    deviance: dict
    areas: dict

    def __post_init__(self):
        dev = {Model(k): np.asarray(v, dtype=float) for k, v in self.deviance.items()}
        areas = {Model(k): v for k, v in self.areas.items()}
        Ts = {v.shape[0] for v in dev.values()} | {a.T for a in areas.values()}
        if len(Ts) > 1:
            raise ValueError(f"draw counts differ across models: {sorted(Ts)}")
        ms = {a.m for a in areas.values()}
        if len(ms) > 1:
            raise ValueError(f"area counts differ across models: {sorted(ms)}")
        if not set(areas) <= set(dev):
            raise ValueError("every model with area draws needs deviance draws")
        object.__setattr__(self, "deviance", dev)
        object.__setattr__(self, "areas", areas)

    @property
    def T(self) -> int:
        return next(iter(self.deviance.values())).shape[0]


def posterior_model_probs(aligned: AlignedDraws, config: AveragingConfig) -> np.ndarray:
    """T x J matrix; column j follows ``config.models[j]``."""
    missing = [m for m in config.models if m not in aligned.deviance]
    if missing:
        raise ValueError(f"no draws for models {[m.value for m in missing]}")
    D = np.column_stack([aligned.deviance[m] for m in config.models])
    with np.errstate(divide="ignore"):
        logw = np.log(np.asarray(config.prior_probs))[None, :] - 0.5 * D
    top = logw.max(axis=1, keepdims=True)
    if not np.all(np.isfinite(top)):
        raise ValueError("every model has zero likelihood at some draw")
    w = np.exp(logw - top)
    return w / w.sum(axis=1, keepdims=True)


def _select(rng: np.random.Generator, probs: np.ndarray, size=None) -> np.ndarray:
    """One categorical index per row of ``probs``; ``size=(T, k)`` draws k per row."""
    cum = np.cumsum(probs, axis=1)
    cum[:, -1] = 1.0
    if size is None:
        u = rng.random(probs.shape[0])[:, None]
        return (u >= cum).sum(axis=1)
    u = rng.random(size)
    return (u[:, :, None] >= cum[:, None, :]).sum(axis=2)


@dataclass(frozen=True)
class AveragedDraws:
    areas: AreaDrawMatrix
    selected: np.ndarray
    models: tuple

    def selection_frequencies(self) -> dict:
        return {m.value: float(np.mean(self.selected == j)) for j, m in enumerate(self.models)}


def averaged_area_draws(aligned: AlignedDraws, config: AveragingConfig, seed: int,
                        per_area: bool = False) -> AveragedDraws:
    """Averaged T x m area draws.

    By default one model is chosen per draw t and its whole area row is
    copied. ``per_area=True`` chooses independently for every (t, i); the
    per-area marginals are the same either way.
    """
    probs = posterior_model_probs(aligned, config)
    stack = np.stack([aligned.areas[m].draws for m in config.models])
    T, m = stack.shape[1], stack.shape[2]
    rng = rng_stream(seed, _AVERAGE_KEY, int(per_area))
    if per_area:
        sel = _select(rng, probs, size=(T, m))
        out = np.take_along_axis(stack, sel[None, :, :], axis=0)[0]
    else:
        sel = _select(rng, probs)
        out = stack[sel, np.arange(T), :]
    return AveragedDraws(AreaDrawMatrix("averaged", out), sel, config.models)


def averaged_typical_city(normal_draws, beta_draws, aligned: AlignedDraws,
                          config: AveragingConfig, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Per draw t, take the normal or beta typical-area logit by their two-model probabilities.

    Returns the averaged logits and a boolean array, True where the normal
    draw was used.
    """
    allowed = {Model.NORMAL, Model.BETA}
    extra = [m.value for m in config.models if m not in allowed]
    if extra:
        raise ValueError(f"typical-area averaging only uses normal and beta models, got {extra}")
    config = config.restricted([Model.NORMAL, Model.BETA])
    normal_draws = np.asarray(normal_draws, dtype=float)
    beta_draws = np.asarray(beta_draws, dtype=float)
    if normal_draws.shape != (aligned.T,) or beta_draws.shape != (aligned.T,):
        raise ValueError("typical-area draws must have one value per aligned draw")
    p_normal = posterior_model_probs(aligned, config)[:, 0]
    u = rng_stream(seed, _TYPICAL_KEY, 0).random(aligned.T)
    use_normal = u < p_normal
    return np.where(use_normal, normal_draws, beta_draws), use_normal
