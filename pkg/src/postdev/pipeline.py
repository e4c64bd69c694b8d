"""End-to-end analysis: grids, aligned draws, comparisons and averaging."""

from __future__ import annotations

import itertools
import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .area_inference import (
    AreaDrawMatrix,
    area_draws_beta,
    area_draws_normal,
    area_draws_null,
    typical_city_draws,
)
from .averaging import (
    DEFAULT_MODELS,
    AlignedDraws,
    AveragedDraws,
    AveragingConfig,
    averaged_area_draws,
    averaged_typical_city,
)
from .dataset import Dataset
from .deviance_compare import (
    DevianceDiffSummary,
    DevianceDistribution,
    compare,
    difference_draws,
    null_draws,
    saturated_draws,
)
from .grid_posterior import (
    GridSpec,
    ParamDraws,
    PosteriorGrid,
    build_grid,
    deviance_cdf,
    grid_summaries,
    sample_params,
)
from .models import Model
from .numerics import QuadratureRule

log = logging.getLogger(__name__)

PARAMETRIC = (Model.NORMAL, Model.BETA)
ALL_MODELS = (Model.NORMAL, Model.BETA, Model.NULL, Model.SATURATED)


@dataclass(frozen=True)
class DrawSet:
    """T aligned draws for one model: parameters, deviances and area rates."""

    model: Model
    deviance: np.ndarray
    areas: AreaDrawMatrix
    params: Optional[ParamDraws] = None
    rates: Optional[np.ndarray] = None

    @property
    def T(self) -> int:
        return self.deviance.shape[0]


def fit_grids(data: Dataset, specs: Optional[dict] = None, grid_size: int = 100,
              rule: QuadratureRule | None = None) -> dict:
    specs = specs or {}
    grids = {}
    for model in PARAMETRIC:
        t0 = time.perf_counter()
        spec = specs.get(model, specs.get(model.value, "auto"))
        if isinstance(spec, GridSpec) and (spec.g1, spec.g2) != (grid_size, grid_size):
            spec = spec.resized(grid_size)
        grids[model] = build_grid(data, model, spec, grid_size=grid_size, rule=rule)
        log.info("%s grid: %d points in %.2fs", model.value, grids[model].G, time.perf_counter() - t0)
    return grids


def draw_model(data: Dataset, model: Model, T: int, seed: int,
               grid: Optional[PosteriorGrid] = None) -> DrawSet:
    model = Model(model)
    if model in PARAMETRIC:
        if grid is None:
            raise ValueError(f"{model.value} draws need a posterior grid")
        params = sample_params(grid, T, seed)
        make = area_draws_normal if model is Model.NORMAL else area_draws_beta
        return DrawSet(model, params.deviance, make(data, params, seed), params=params)
    if model is Model.NULL:
        p, dev = null_draws(data, T, seed)
        return DrawSet(model, dev, area_draws_null(data, p), rates=p)
    rates, dev = saturated_draws(data, T, seed)
    return DrawSet(model, dev, AreaDrawMatrix(Model.SATURATED.value, rates))


def deviance_distribution(draws: DrawSet, grid: Optional[PosteriorGrid] = None) -> DevianceDistribution:
    """Exact grid distribution for parametric models, Monte Carlo otherwise."""
    if draws.model in PARAMETRIC and grid is not None:
        return deviance_cdf(grid)
    return DevianceDistribution.from_draws(draws.deviance)


def pair_key(j: Model, k: Model) -> int:
    return 10 * j.index + k.index


@dataclass
class Analysis:
    data: Dataset
    T: int
    seed: int
    grids: dict
    draws: dict
    distributions: dict
    config: AveragingConfig
    timings: dict = field(default_factory=dict)

    def summaries(self) -> dict:
        return {m: grid_summaries(g) for m, g in self.grids.items()}

    def compare(self, j, k) -> DevianceDiffSummary:
        j, k = Model(j), Model(k)
        return compare(self.distributions[j], self.distributions[k], self.T, self.seed, pair_key(j, k))

    def differences(self, j, k) -> np.ndarray:
        j, k = Model(j), Model(k)
        return difference_draws(self.distributions[j], self.distributions[k], self.T, self.seed, pair_key(j, k))

    def pairs(self):
        return list(itertools.combinations(self.distributions.keys(), 2))

    def aligned(self, models=None) -> AlignedDraws:
        models = [Model(m) for m in (models or self.draws.keys())]
        return AlignedDraws(
            {m: self.draws[m].deviance for m in models},
            {m: self.draws[m].areas for m in models},
        )

    def averaged(self, per_area: bool = False) -> AveragedDraws:
        return averaged_area_draws(self.aligned(self.config.models), self.config, self.seed, per_area)

    def typical(self) -> dict:
        """Typical-area logits for normal, beta and their average."""
        out = {}
        for m in PARAMETRIC:
            out[m.value] = typical_city_draws(m, self.draws[m].params, self.seed)
        cfg = self.config.restricted(PARAMETRIC) if any(m in self.config.models for m in PARAMETRIC) \
            else AveragingConfig.equal(PARAMETRIC)
        avg, use_normal = averaged_typical_city(out["normal"], out["beta"], self.aligned(PARAMETRIC), cfg, self.seed)
        out["averaged"] = avg
        out["_use_normal"] = use_normal
        return out


def run_analysis(data: Dataset, T: int = 10_000, seed: int = 1, specs: Optional[dict] = None,
                 grid_size: int = 100, config: Optional[AveragingConfig] = None,
                 models=ALL_MODELS, rule: QuadratureRule | None = None) -> Analysis:
    """Fit both grids and generate aligned draws for every requested model."""
    if T < 1:
        raise ValueError("T must be >= 1")
    models = tuple(Model(m) for m in models)
    config = config or AveragingConfig.equal(DEFAULT_MODELS)
    needed = set(models) | set(config.models) | set(PARAMETRIC)
    timings = {}
    t0 = time.perf_counter()
    grids = fit_grids(data, specs, grid_size, rule)
    timings["grids"] = time.perf_counter() - t0
    draws, dists = {}, {}
    for model in ALL_MODELS:
        if model not in needed:
            continue
        t0 = time.perf_counter()
        draws[model] = draw_model(data, model, T, seed, grids.get(model))
        if model in models:
            dists[model] = deviance_distribution(draws[model], grids.get(model))
        timings[model.value] = time.perf_counter() - t0
    log.info("draws complete: %s", {k: round(v, 3) for k, v in timings.items()})
    return Analysis(data, T, seed, grids, draws, dists, config, timings)
