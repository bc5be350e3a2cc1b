"""End-to-end evaluation runs and parameter sweeps.

A run takes a trajectory and a land-usage store through element
extraction, tree construction, PCT training and scoring, and runs the
flat baselines over both elements and classically extracted locations.
Sweeps repeat runs over a parameter grid and write plot-ready ``.dat``
tables.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from .augment import AugmentConfig, augment_trajectory
from .baselines import MarkovModel, OneVsRest
from .ctree import PruneConfig, build_tree, prune
from .evalkit import (
    MultiOutcome,
    SingleOutcome,
    breakdown,
    flat_accuracy,
    gen_instances,
    gen_multi_instances,
    score_multi,
    score_single,
    split_chronological,
)
from .ingest import LandUsageStore
from .locations import (
    DBSCANConfig,
    ThresholdConfig,
    cluster_visits_dbscan,
    extract_visits_threshold,
    location_sequence,
    location_stats,
)
from .pct import PCT, ClassifierParams, Mode, PredictConfig, actual_nodes
from .summarise import Interaction, SummariseConfig, interaction_stats, summarise

log = logging.getLogger(__name__)

SWEEP_PARAMS = ("d_min", "t_s", "lam", "theta", "xi", "n")


@dataclass(frozen=True)
class RunConfig:
    """Every tunable of a run. Defaults are the standard settings for each stage."""

    n: int = 1
    maxradius: Optional[float] = None  # None: 50 m for single elements, 100 m when n > 1
    delta: float = 300.0
    t_max: float = 3600.0
    d_min: float = 1200.0
    max_dist: float = 50.0
    eps: float = 15.0
    minpts: int = 0
    lam: float = 0.5
    theta: float = 0.0
    xi: float = 0.0
    t_s: float = 0.6
    reg: float = 1e-3
    epochs: int = 20
    eta0: float = 0.1
    seed: int = 0
    tz_offset: float = 0.0
    train_fraction: float = 0.8
    alpha: float = 1.0
    threshold_t_max: bool = True  # False ignores gaps when extracting visits
    locations: bool = True  # also run the extracted-location baselines

    def __post_init__(self):
        if self.maxradius is None:
            object.__setattr__(self, "maxradius", 50.0 if self.n == 1 else 100.0)

    def validate(self) -> "RunConfig":
        checks = {
            "n": self.n >= 1,
            "maxradius": self.maxradius > 0,
            "delta": self.delta > 0,
            "t_max": self.t_max > 0,
            "d_min": self.d_min > 0,
            "max_dist": self.max_dist > 0,
            "eps": self.eps > 0,
            "minpts": self.minpts >= 0,
            "lam": 0.0 <= self.lam <= 1.0,
            "theta": 0.0 <= self.theta <= 1.0,
            "xi": self.xi >= 0,
            "t_s": 0.0 <= self.t_s <= 1.0,
            "reg": self.reg > 0,
            "epochs": self.epochs >= 1,
            "eta0": self.eta0 > 0,
            "train_fraction": 0.0 < self.train_fraction < 1.0,
            "alpha": self.alpha >= 0,
        }
        for key, ok in checks.items():
            if not ok:
                raise ConfigError(key, getattr(self, key))
        return self

    def replace(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **kw).validate()

    @property
    def classifier(self) -> ClassifierParams:
        return ClassifierParams(self.reg, self.epochs, self.eta0, self.seed)


class ConfigError(ValueError):
    def __init__(self, key, value):
        super().__init__(f"invalid value for {key}: {value!r}")
        self.key = key


@dataclass
class Pipeline:
    """Holds one trajectory/store pair and caches the stages that do not
    depend on the swept parameters."""

    traj: Sequence
    store: LandUsageStore
    _aug: Dict[tuple, list] = field(default_factory=dict)
    _windows: Dict[tuple, list] = field(default_factory=dict)

    def augmented(self, cfg: RunConfig):
        key = (cfg.n, cfg.maxradius, cfg.delta)
        if key not in self._aug:
            self._aug[key] = augment_trajectory(self.traj, self.store, AugmentConfig(*key))
        return self._aug[key]

    def interactions(self, cfg: RunConfig) -> List[Interaction]:
        return summarise(self.augmented(cfg), SummariseConfig(cfg.t_max, cfg.d_min))

    def visits(self, cfg: RunConfig):
        # windows do not depend on the minimum duration, so extract once with
        # the smallest admissible value and filter afterwards
        t_max = cfg.t_max if cfg.threshold_t_max else None
        key = (cfg.max_dist, t_max)
        if key not in self._windows:
            self._windows[key] = extract_visits_threshold(self.traj, ThresholdConfig(cfg.max_dist, 1e-9, t_max))
        return [v for v in self._windows[key] if v.duration > cfg.d_min]

    def run(self, cfg: RunConfig) -> dict:
        return evaluate(self, cfg.validate())


def _pct(part, whole) -> float:
    return 100.0 * part / whole if whole else 0.0


def evaluate(pipe: Pipeline, cfg: RunConfig) -> dict:
    """One full run; returns a JSON-ready report."""
    interactions = pipe.interactions(cfg)
    report = {
        "config": dataclasses.asdict(cfg),
        "landusage": {"stats": interaction_stats(interactions, pipe.store.area)},
    }
    multi = cfg.n > 1
    gen = gen_multi_instances if multi else gen_instances
    instances = gen(interactions, cfg.d_min, cfg.tz_offset)
    report["landusage"]["instances"] = len(instances)
    try:
        train, test = split_chronological(instances, cfg.train_fraction)
    except ValueError as exc:
        report["flagged"] = str(exc)
        train = test = []

    if train:
        elements = sorted({i.element for i in interactions})
        tags = {e: pipe.store[e].tags for e in elements}
        tree = build_tree(tags, interactions, cfg.lam, cfg.tz_offset)
        tree = prune(tree, PruneConfig(cfg.theta, cfg.xi), interactions)
        model = PCT.train(tree, train, cfg.classifier)
        report["tree"] = {"nodes": len(tree), "terminals": len(tree.terminals()), "depth": tree.depth()}
        report["modes"] = score_modes(model, test, cfg, multi)

        ovr = OneVsRest.train(train, cfg.classifier)
        markov = MarkovModel(cfg.alpha).fit([[i.current_id, i.label] for i in train])
        report["landusage"]["ovr"] = flat_accuracy(ovr.predict(test), test)
        report["landusage"]["markov"] = flat_accuracy([markov.predict_next(i.current_id) for i in test], test)
        report["test_instances"] = len(test)

    if cfg.locations:
        report["locations"] = _location_baselines(pipe, cfg)
    return report


def score_modes(model: PCT, test, cfg: RunConfig, multi: bool) -> dict:
    tree = model.tree
    out = {}
    if not multi:
        for mode in (Mode.SINGLE_ELEMENT, Mode.SINGLE_CONTEXT):
            preds = model.predict(test, PredictConfig(mode, cfg.t_s))
            outcomes = [score_single(p, next(iter(actual_nodes(tree, i))), tree) for p, i in zip(preds, test)]
            res = breakdown(outcomes, SingleOutcome)
            res["root_returned"] = _pct(sum(p == tree.root for p in preds), len(preds))
            out[mode.value] = res
    else:
        for mode in (Mode.MULTI_ELEMENT, Mode.MULTI_CONTEXT):
            preds = model.predict(test, PredictConfig(mode, cfg.t_s))
            outcomes = [score_multi(p, actual_nodes(tree, i), tree) for p, i in zip(preds, test)]
            out[mode.value] = breakdown(outcomes, MultiOutcome)
    return out


def _location_baselines(pipe: Pipeline, cfg: RunConfig) -> dict:
    visits = pipe.visits(cfg)
    locations = cluster_visits_dbscan(visits, DBSCANConfig(cfg.eps, cfg.minpts))
    out = {"stats": location_stats(locations)}
    seq = [Interaction(s, e, lid) for s, e, lid in location_sequence(locations)]
    instances = gen_instances(seq, cfg.d_min, cfg.tz_offset)
    try:
        train, test = split_chronological(instances, cfg.train_fraction)
    except ValueError as exc:
        out["flagged"] = str(exc)
        return out
    ovr = OneVsRest.train(train, cfg.classifier)
    markov = MarkovModel(cfg.alpha).fit([[i.current_id, i.label] for i in train])
    out["ovr"] = flat_accuracy(ovr.predict(test), test)
    out["markov"] = flat_accuracy([markov.predict_next(i.current_id) for i in test], test)
    return out


# --------------------------------------------------------------------------
# sweeps

ACCURACY_COLUMNS = (
    ("se_element", ("modes", "single_element", "element_correct")),
    ("sc_element", ("modes", "single_context", "element_correct")),
    ("sc_context", ("modes", "single_context", "context_correct")),
    ("sc_incorrect", ("modes", "single_context", "incorrect")),
    ("sc_root", ("modes", "single_context", "root_returned")),
    ("me_fully_element", ("modes", "multi_element", "fully_element_correct")),
    ("me_partial_element", ("modes", "multi_element", "partial_element_correct")),
    ("mc_fully_element", ("modes", "multi_context", "fully_element_correct")),
    ("mc_fully_context", ("modes", "multi_context", "fully_context_correct")),
    ("mc_partial_element", ("modes", "multi_context", "partial_element_correct")),
    ("mc_partial_context", ("modes", "multi_context", "partial_context_correct")),
    ("lu_ovr", ("landusage", "ovr")),
    ("lu_markov", ("landusage", "markov")),
    ("loc_ovr", ("locations", "ovr")),
    ("loc_markov", ("locations", "markov")),
)

STATS_COLUMNS = (
    ("lu_interactions", ("landusage", "stats", "interactions")),
    ("lu_elements", ("landusage", "stats", "elements")),
    ("lu_total_time", ("landusage", "stats", "total_time")),
    ("lu_mean_area", ("landusage", "stats", "mean_area")),
    ("loc_interactions", ("locations", "stats", "interactions")),
    ("loc_locations", ("locations", "stats", "elements")),
    ("loc_total_time", ("locations", "stats", "total_time")),
    ("loc_mean_area", ("locations", "stats", "mean_area")),
    ("test_instances", ("test_instances",)),
)


def _dig(doc, path):
    for k in path:
        if not isinstance(doc, dict) or k not in doc:
            return None
        doc = doc[k]
    return doc


def _cast(param: str, value: float):
    return int(value) if param == "n" else float(value)


def _run_point(args):
    pipe, cfg = args
    return pipe.run(cfg)


def run_sweep(pipe: Pipeline, param: str, values: Sequence[float], base: RunConfig = RunConfig(),
              jobs: int = 1) -> List[dict]:
    """Reports for each grid value, in grid order. A point without test
    instances is kept and marked with a ``flagged`` entry."""
    if param not in SWEEP_PARAMS:
        raise ConfigError("param", param)
    cfgs = [base.replace(**{param: _cast(param, v)}) for v in values]
    if jobs > 1 and len(cfgs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            reports = list(ex.map(_run_point, [(pipe, c) for c in cfgs]))
    else:
        reports = [pipe.run(c) for c in cfgs]
    for v, r in zip(values, reports):
        r["param"] = param
        r["value"] = _cast(param, v)
    return reports


def sweep_table(reports: Sequence[dict], columns=ACCURACY_COLUMNS):
    """Header names and rows (``None`` for missing cells)."""
    header = ["value"] + [name for name, _ in columns]
    rows = [[r["value"]] + [_dig(r, path) for _, path in columns] for r in reports]
    return header, rows


def _fmt(v) -> str:
    if v is None:
        return "?"
    if isinstance(v, int) and not isinstance(v, bool):
        return str(v)
    v = float(v)
    if math.isfinite(v) and v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return f"{v:.6g}"


def emit_dat(header: Sequence[str], rows: Sequence[Sequence], path) -> None:
    """Whitespace-separated table with a ``#`` header; missing cells are ``?``."""
    lines = ["# " + " ".join(header)]
    for row in rows:
        lines.append(" ".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_sweep(reports: Sequence[dict], outdir, name: Optional[str] = None) -> List[Path]:
    """Write ``<name>.dat`` (accuracies, %), ``<name>-stats.dat`` and ``<name>.json``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    name = name or reports[0]["param"]
    paths = [outdir / f"{name}.dat", outdir / f"{name}-stats.dat", outdir / f"{name}.json"]
    emit_dat(*sweep_table(reports, ACCURACY_COLUMNS), paths[0])
    emit_dat(*sweep_table(reports, STATS_COLUMNS), paths[1])
    paths[2].write_text(dump_report(list(reports)), encoding="utf-8")
    return paths


def dump_report(report) -> str:
    return json.dumps(report, sort_keys=True, indent=1) + "\n"
