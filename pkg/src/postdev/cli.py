"""Command line interface.

    postdev fit      grids and grid summaries for the normal and beta models
    postdev compare  deviance distributions and pairwise differences
    postdev areas    per-area posterior densities (local, normal, beta, averaged)
    postdev average  averaged densities, typical-area densities, model selection rates
    postdev run      all of the above
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.special import logit

from . import __version__
from ._accel import NUMBA_ENABLED
from .averaging import DEFAULT_MODELS, AveragingConfig, posterior_model_probs
from .dataset import DataError, Dataset, load_csv, missouri
from .grid_posterior import PARAM_NAMES, GridSpec
from .models import Model
from .numerics import covering_grid, kde, silverman_bandwidth
from .output import render_svg, update_summary, write_columns
from .pipeline import ALL_MODELS, PARAMETRIC, Analysis, run_analysis

log = logging.getLogger("postdev")

DEFAULT_CITIES = (1, 8, 17, 83, 84)
AREA_FAMILIES = ("local", "normal", "beta", "averaged")
FORMATS = ("csv", "json", "svg")


@dataclass
class RunConfig:
    data: Optional[Path] = None
    T: int = 10_000
    seed: int = 1
    grids: dict = field(default_factory=dict)
    grid_size: int = 100
    models: tuple = DEFAULT_MODELS
    priors: Optional[tuple] = None
    cities: tuple = DEFAULT_CITIES
    bandwidth: object = "auto"
    out: Path = Path("postdev-out")
    formats: tuple = ("csv", "json")
    pairs: Optional[tuple] = None
    per_area: bool = False

    def __post_init__(self):
        if self.T < 100:
            raise ValueError(f"--draws must be >= 100, got {self.T}")
        if self.grid_size < 2:
            raise ValueError("--grid-size must be >= 2")
        bad = [f for f in self.formats if f not in FORMATS]
        if bad:
            raise ValueError(f"unknown format(s) {bad}; choose from {FORMATS}")
        self.averaging()  # validates models and priors

    def averaging(self) -> AveragingConfig:
        if self.priors is None:
            return AveragingConfig.equal(self.models)
        return AveragingConfig(self.models, self.priors)

    def load(self) -> Dataset:
        return missouri() if self.data is None else load_csv(self.data)


def _parse_grid(text: str) -> tuple[str, GridSpec]:
    try:
        name, bounds = text.split(":", 1)
        lo1, hi1, lo2, hi2 = (float(v) for v in bounds.split(","))
        model = Model(name.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected <model>:<lo1>,<hi1>,<lo2>,<hi2>, got {text!r}") from None
    if model not in PARAMETRIC:
        raise argparse.ArgumentTypeError(f"grids exist only for normal and beta, got {name!r}")
    try:
        return model.value, GridSpec(lo1, hi1, lo2, hi2)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _csv_list(conv):
    def parse(text):
        try:
            return tuple(conv(v.strip()) for v in text.split(",") if v.strip())
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return parse


def _bandwidth(text):
    if text.lower() == "auto":
        return "auto"
    try:
        h = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bandwidth must be 'auto' or a positive number, got {text!r}") from None
    if not h > 0:
        raise argparse.ArgumentTypeError("bandwidth must be positive")
    return h


def _pair(text):
    try:
        j, k = text.split(":")
        return Model(j.strip()), Model(k.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected <model>:<model>, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--data", type=Path, help="CSV with columns id,n,r (default: embedded Missouri data)")
    common.add_argument("--draws", type=int, default=10_000, help="posterior draws T (default 10000)")
    common.add_argument("--seed", type=int, default=1)
    common.add_argument("--grid", type=_parse_grid, action="append", default=[],
                        metavar="MODEL:LO1,HI1,LO2,HI2", help="explicit grid bounds (default: automatic)")
    common.add_argument("--grid-size", type=int, default=100, help="points per grid axis")
    common.add_argument("--models", type=_csv_list(Model), default=DEFAULT_MODELS,
                        help="models to compare and average (default normal,beta,saturated)")
    common.add_argument("--priors", type=_csv_list(float), default=None,
                        help="prior model probabilities, in --models order (default equal)")
    common.add_argument("--cities", type=_csv_list(int), default=DEFAULT_CITIES,
                        help="area ids for density output (default 1,8,17,83,84)")
    common.add_argument("--bandwidth", type=_bandwidth, default="auto",
                        help="KDE bandwidth on the logit scale, or 'auto' (Silverman)")
    common.add_argument("--out", type=Path, default=Path("postdev-out"), help="output directory")
    common.add_argument("--format", type=_csv_list(str), default=("csv", "json"),
                        help="comma list from csv,json,svg")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="postdev", description=__doc__.splitlines()[0] if __doc__ else None,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("fit", parents=[common], help="normal and beta grid posteriors")
    cmp_p = sub.add_parser("compare", parents=[common], help="deviance distributions and differences")
    cmp_p.add_argument("--pairs", type=_csv_list(_pair), default=None,
                       help="explicit comparisons j:k (D_j - D_k), e.g. beta:normal,normal:normal")
    areas_p = sub.add_parser("areas", parents=[common], help="per-area posterior densities")
    avg_p = sub.add_parser("average", parents=[common], help="model-averaged densities")
    run_p = sub.add_parser("run", parents=[common], help="fit, compare, areas and average")
    for p in (areas_p, avg_p, run_p):
        p.add_argument("--per-area-selection", action="store_true",
                       help="choose the averaged model independently for every area")
    run_p.add_argument("--pairs", type=_csv_list(_pair), default=None)
    return parser


def config_from_args(args) -> RunConfig:
    return RunConfig(
        data=args.data,
        T=args.draws,
        seed=args.seed,
        grids=dict(args.grid),
        grid_size=args.grid_size,
        models=tuple(args.models),
        priors=None if args.priors is None else tuple(args.priors),
        cities=tuple(args.cities),
        bandwidth=args.bandwidth,
        out=args.out,
        formats=tuple(args.format),
        pairs=getattr(args, "pairs", None),
        per_area=getattr(args, "per_area_selection", False),
    )


# Commands ----------------------------------------------------------------

def _analysis(cfg: RunConfig, data: Dataset) -> Analysis:
    return run_analysis(data, T=cfg.T, seed=cfg.seed, specs=cfg.grids, grid_size=cfg.grid_size,
                        config=cfg.averaging(), models=ALL_MODELS)


def _config_record(cfg: RunConfig, data: Dataset) -> dict:
    return {
        "data": str(cfg.data) if cfg.data else "missouri",
        "areas": data.m, "R": data.R, "N": data.N,
        "draws": cfg.T, "seed": cfg.seed, "grid_size": cfg.grid_size,
        "models": [m.value for m in cfg.models],
        "priors": list(cfg.averaging().prior_probs),
        "bandwidth": cfg.bandwidth,
        "numba": NUMBA_ENABLED,
    }


def cmd_fit(cfg: RunConfig, data: Dataset, analysis: Optional[Analysis] = None) -> dict:
    analysis = analysis or _analysis(cfg, data)
    report = {}
    for model, grid in analysis.grids.items():
        names = PARAM_NAMES[model]
        if "csv" in cfg.formats:
            write_columns(cfg.out / f"grid_{model.value}.csv", ("param1", "param2", "loglik", "mass"),
                          (grid.p1, grid.p2, grid.loglik, grid.mass))
        s = analysis.summaries()[model].as_dict()
        s["parameters"] = list(names)
        s["grid"] = {"lo1": grid.spec.lo1, "hi1": grid.spec.hi1, "lo2": grid.spec.lo2,
                     "hi2": grid.spec.hi2, "g1": grid.spec.g1, "g2": grid.spec.g2}
        s["posterior_mean"] = list(grid.posterior_mean())
        report[model.value] = s
        log.info("fit %s: max loglik %.3f, DIC %.2f", model.value, s["max_loglik"], s["DIC"])
    if "json" in cfg.formats:
        update_summary(cfg.out, "config", _config_record(cfg, data))
        update_summary(cfg.out, "fit", report)
    return report


def _cdf_columns(values: np.ndarray):
    v = np.sort(values)
    return v, np.arange(1, v.size + 1) / v.size


def cmd_compare(cfg: RunConfig, data: Dataset, analysis: Optional[Analysis] = None) -> dict:
    analysis = analysis or _analysis(cfg, data)
    dists = analysis.distributions
    for model, dist in dists.items():
        if "csv" in cfg.formats:
            write_columns(cfg.out / f"cdf_{model.value}.csv", ("value", "cum_prob"), (dist.values, dist.cum_probs))
    if "svg" in cfg.formats:
        render_svg(cfg.out / "cdf_all.svg",
                   [(m.value, d.values, d.cum_probs) for m, d in dists.items()],
                   title="Posterior deviance distributions", xlabel="deviance", ylabel="cdf")
    pairs = cfg.pairs
    if pairs is None:
        included = [m for m in ALL_MODELS if m in cfg.models]
        pairs = [(j, k) for a, j in enumerate(included) for k in included[a + 1:]]
    report = {"pairs": {}, "distributions": {}}
    for model, dist in dists.items():
        report["distributions"][model.value] = {
            "source": dist.source, "size": dist.size, "median": dist.median(), "mean": dist.mean(),
            "q25": dist.quantile(0.25), "q75": dist.quantile(0.75), "min": float(dist.values[0]),
        }
    for j, k in pairs:
        diffs = analysis.differences(j, k)
        summ = analysis.compare(j, k)
        name = f"{j.value}_{k.value}"
        report["pairs"][name] = summ.as_dict()
        if "csv" in cfg.formats:
            write_columns(cfg.out / f"diff_{name}.csv", ("value", "cum_prob"), _cdf_columns(diffs))
        if "svg" in cfg.formats:
            render_svg(cfg.out / f"diff_{name}.svg", [(f"D_{j.value} - D_{k.value}", *_cdf_columns(diffs))],
                       title=f"{j.value} - {k.value} deviance", xlabel="deviance difference", ylabel="cdf")
        log.info("compare %s: median %.3f, P(%s smaller) %.4f", name, summ.median, j.value, summ.p_first_smaller)
    report["null_separation"] = dists[Model.NULL].median() - dists[Model.NORMAL].median()
    if "json" in cfg.formats:
        update_summary(cfg.out, "config", _config_record(cfg, data))
        update_summary(cfg.out, "compare", report)
    return report


def _write_densities(cfg: RunConfig, city: int, samples: dict, stem: str) -> dict:
    """KDE of each family's logit samples on one shared abscissa; returns mode and IQR per family."""
    if cfg.bandwidth == "auto":
        hs = {k: silverman_bandwidth(v) for k, v in samples.items()}
    else:
        hs = {k: float(cfg.bandwidth) for k in samples}
    allv = np.concatenate(list(samples.values()))
    grid = covering_grid(allv, max(hs.values()))
    out, series = {}, []
    for family, values in samples.items():
        curve = kde(values, hs[family], grid)
        series.append((family, curve.abscissae, curve.densities))
        name = f"{stem}_{city}_{family}" if city is not None else f"{stem}_{family}"
        if "csv" in cfg.formats:
            write_columns(cfg.out / f"{name}.csv", ("logit", "density"), (curve.abscissae, curve.densities))
        out[family] = {"mode": curve.mode(), "iqr": curve.iqr(), "bandwidth": curve.bandwidth,
                       "median": curve.quantile(0.5)}
    if "svg" in cfg.formats:
        name = f"{stem}_{city}" if city is not None else stem
        render_svg(cfg.out / f"{name}.svg", series, title=name.replace("_", " "),
                   xlabel="logit rate", ylabel="density")
    return out


def _area_samples(analysis: Analysis, data: Dataset, city: int, averaged) -> dict:
    i = data.index_of(city)
    sat = analysis.draws[Model.SATURATED].areas
    return {
        "local": logit(sat.column(i)),
        "normal": logit(analysis.draws[Model.NORMAL].areas.column(i)),
        "beta": logit(analysis.draws[Model.BETA].areas.column(i)),
        "averaged": logit(averaged.areas.column(i)),
    }


def cmd_areas(cfg: RunConfig, data: Dataset, analysis: Optional[Analysis] = None) -> dict:
    analysis = analysis or _analysis(cfg, data)
    averaged = analysis.averaged(cfg.per_area)
    report = {}
    for city in cfg.cities:
        samples = _area_samples(analysis, data, city, averaged)
        report[str(city)] = _write_densities(cfg, city, samples, "density")
    if "json" in cfg.formats:
        update_summary(cfg.out, "config", _config_record(cfg, data))
        update_summary(cfg.out, "areas", report)
    return report


def cmd_average(cfg: RunConfig, data: Dataset, analysis: Optional[Analysis] = None) -> dict:
    analysis = analysis or _analysis(cfg, data)
    averaged = analysis.averaged(cfg.per_area)
    probs = posterior_model_probs(analysis.aligned(cfg.models), analysis.config)
    report = {
        "models": [m.value for m in analysis.config.models],
        "priors": list(analysis.config.prior_probs),
        "selection_frequencies": averaged.selection_frequencies(),
        "mean_model_probs": {m.value: float(probs[:, j].mean()) for j, m in enumerate(analysis.config.models)},
        "per_area_selection": cfg.per_area,
        "cities": {},
    }
    for city in cfg.cities:
        # same four families as cmd_areas, so the shared files agree
        samples = _area_samples(analysis, data, city, averaged)
        report["cities"][str(city)] = _write_densities(cfg, city, samples, "density")["averaged"]
    typical = analysis.typical()
    use_normal = typical.pop("_use_normal")
    report["typical"] = _write_densities(cfg, None, typical, "typical")
    report["typical"]["normal_selection_frequency"] = float(np.mean(use_normal))
    if "json" in cfg.formats:
        update_summary(cfg.out, "config", _config_record(cfg, data))
        update_summary(cfg.out, "average", report)
    return report


COMMANDS = {"fit": cmd_fit, "compare": cmd_compare, "areas": cmd_areas, "average": cmd_average}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # usage errors, --help and --version
        return exc.code if isinstance(exc.code, int) else 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        cfg = config_from_args(args)
        data = cfg.load()
        for city in cfg.cities:
            data.index_of(city)
        cfg.out.mkdir(parents=True, exist_ok=True)
        t0 = time.perf_counter()
        analysis = _analysis(cfg, data)
        log.info("analysis ready in %.2fs", time.perf_counter() - t0)
        if args.command == "run":
            for name in ("fit", "compare", "areas", "average"):
                COMMANDS[name](cfg, data, analysis)
        else:
            COMMANDS[args.command](cfg, data, analysis)
    except (DataError, ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"postdev: error: {msg}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
