"""Command-line entry point: every pipeline stage as a subcommand.

Settings come from a flat ``key = value`` config file (``--config``) and
are overridden by flags. Exit status is 0 on success, 1 for bad input
(invalid parameters, missing files, unknown subcommands) and 2 when a
stage fails at run time.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .augment import AugmentConfig, augment_trajectory, load_augmented, save_augmented
from .baselines import MarkovModel, OneVsRest
from .ctree import ContextTree, PruneConfig, build_tree, prune
from .evalkit import flat_accuracy, gen_instances, gen_multi_instances, split_chronological
from .experiment import ConfigError, Pipeline, RunConfig, dump_report, run_sweep, score_modes, write_sweep
from .ingest import load_landusage, load_trajectory, save_landusage, save_trajectory
from .locations import DBSCANConfig, ThresholdConfig, cluster_visits_dbscan, extract_visits_threshold, save_locations
from .pct import PCT, Mode, PredictConfig
from .summarise import SummariseConfig, interaction_stats, load_interactions, save_interactions, summarise
from .synthgen import AgentSchedule, WorldSpec, busy_routine, gen_trajectory, gen_world, weekly_routine

log = logging.getLogger("pctree")

RUN_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_BOOL_FIELDS = {"threshold_t_max", "locations"}
_INT_FIELDS = {"n", "minpts", "epochs", "seed"}

# keys that are not RunConfig fields, with their parsers
EXTRA_KEYS = {
    "trajectory": str, "landusage": str, "augmented": str, "interactions": str,
    "tree": str, "model": str, "out": str, "out_dir": str,
    "days": int, "buildings": int, "noise": float, "routine": str, "gap_prob": float,
    "param": str, "values": str, "jobs": int, "mode": str, "name": str,
}


class UsageError(Exception):
    pass


class MissingInput(Exception):
    pass


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _converter(key):
    if key in _BOOL_FIELDS:
        return _parse_bool
    if key in _INT_FIELDS:
        return int
    if key in RUN_FIELDS:
        return float
    return EXTRA_KEYS[key]


def convert(key: str, value):
    key = key.replace("-", "_")
    if key not in RUN_FIELDS and key not in EXTRA_KEYS:
        raise ConfigError(key, value)
    if not isinstance(value, str):
        return key, value
    try:
        return key, _converter(key)(value.strip())
    except ValueError:
        raise ConfigError(key, value) from None


def read_config(path) -> dict:
    """Parse a ``key = value`` file; ``#`` starts a comment."""
    path = Path(path)
    if not path.is_file():
        raise MissingInput(f"config file not found: {path}")
    out = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        k, v = convert(k, v)
        out[k] = v
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value settings file; flags take precedence")
    common.add_argument("-v", "--verbose", action="store_true")
    g = common.add_argument_group("parameters")
    for name in RUN_FIELDS:
        g.add_argument("--" + name.replace("_", "-"), dest=name, default=argparse.SUPPRESS, metavar="X")

    p = _Parser(prog="pctree", description="Next-place prediction with Predictive Context Trees.")
    sub = p.add_subparsers(dest="command", metavar="command", parser_class=_Parser)

    def cmd(name, help_, *paths):
        sp = sub.add_parser(name, help=help_, parents=[common])
        for key in paths:
            sp.add_argument("--" + key.replace("_", "-"), dest=key, default=argparse.SUPPRESS)
        return sp

    cmd("synth", "generate a synthetic world, trajectory and ground truth",
        "out_dir", "days", "buildings", "noise", "routine", "gap_prob")
    cmd("augment", "attach land-usage elements to trajectory points", "trajectory", "landusage", "out")
    cmd("summarise", "turn an augmented trajectory into interactions", "augmented", "out")
    cmd("extract-locations", "thresholding visits clustered with DBSCAN", "trajectory", "out")
    cmd("build-tree", "build and prune a context tree", "interactions", "landusage", "out")
    cmd("train", "train a PCT on the training split", "interactions", "tree", "out")
    cmd("predict", "predict the test split with a trained PCT", "interactions", "model", "mode", "out")
    cmd("evaluate", "score a trained PCT and the flat baselines", "interactions", "model", "landusage", "out")
    cmd("sweep", "re-run the pipeline over a parameter grid", "trajectory", "landusage",
        "param", "values", "out_dir", "jobs", "name")
    return p


def resolve(ns: argparse.Namespace) -> dict:
    settings = read_config(ns.config) if ns.config else {}
    for k, v in vars(ns).items():
        if k in ("command", "config", "verbose"):
            continue
        k, v = convert(k, v)
        settings[k] = v
    return settings


def run_config(settings: dict) -> RunConfig:
    return RunConfig(**{k: v for k, v in settings.items() if k in RUN_FIELDS}).validate()


def need(settings: dict, key: str, must_exist: bool = True) -> Path:
    if key not in settings:
        raise UsageError(f"missing required setting: {key}")
    path = Path(settings[key])
    if must_exist and not path.exists():
        raise MissingInput(f"input file not found: {path}")
    return path


def _instances(interactions, cfg: RunConfig):
    gen = gen_multi_instances if cfg.n > 1 else gen_instances
    return gen(interactions, cfg.d_min, cfg.tz_offset)


# --------------------------------------------------------------------------
# subcommands


def cmd_synth(s, cfg):
    out = need(s, "out_dir", must_exist=False)
    out.mkdir(parents=True, exist_ok=True)
    routine = s.get("routine", "weekly")
    nb = s.get("buildings", 8 if routine == "weekly" else 200)
    spec = WorldSpec(n_buildings=nb, area_km2=1.0 if nb <= 20 else nb / 20, seed=cfg.seed,
                     min_gap=120.0 if nb <= 20 else 60.0)
    world = gen_world(spec)
    if routine == "weekly":
        schedule = AgentSchedule(weekly_routine(world), noise_sigma=s.get("noise", 10.0),
                                 gap_prob=s.get("gap_prob", 0.0))
    elif routine == "busy":
        schedule = AgentSchedule(busy_routine(world, cfg.seed, cycle_days=42), noise_sigma=s.get("noise", 10.0),
                                 gap_prob=s.get("gap_prob", 0.0), cycle_days=42)
    else:
        raise ConfigError("routine", routine)
    traj, truth = gen_trajectory(world, schedule, s.get("days", 84), seed=cfg.seed + 1)
    save_landusage(world.store, out / "landusage.geojson")
    save_trajectory(traj, out / "trajectory.csv")
    save_interactions(truth, out / "truth.csv")
    log.info("wrote %d points, %d buildings, %d true stays to %s", len(traj), len(world.buildings), len(truth), out)


def cmd_augment(s, cfg):
    traj = load_trajectory(need(s, "trajectory"))
    store = load_landusage(need(s, "landusage"))
    out = need(s, "out", must_exist=False)
    aug = augment_trajectory(traj, store, AugmentConfig(cfg.n, cfg.maxradius, cfg.delta))
    save_augmented(aug, out)
    log.info("augmented %d points -> %s", len(aug), out)


def cmd_summarise(s, cfg):
    aug = load_augmented(need(s, "augmented"))
    out = need(s, "out", must_exist=False)
    its = summarise(aug, SummariseConfig(cfg.t_max, cfg.d_min))
    save_interactions(its, out)
    log.info("%d interactions -> %s", len(its), out)


def cmd_extract_locations(s, cfg):
    traj = load_trajectory(need(s, "trajectory"))
    out = need(s, "out", must_exist=False)
    t_max = cfg.t_max if cfg.threshold_t_max else None
    visits = extract_visits_threshold(traj, ThresholdConfig(cfg.max_dist, cfg.d_min, t_max))
    locs = cluster_visits_dbscan(visits, DBSCANConfig(cfg.eps, cfg.minpts))
    save_locations(locs, out)
    log.info("%d visits in %d locations -> %s", len(visits), len(locs), out)


def cmd_build_tree(s, cfg):
    its = load_interactions(need(s, "interactions"))
    store = load_landusage(need(s, "landusage"))
    out = need(s, "out", must_exist=False)
    used = sorted({i.element for i in its})
    missing = [e for e in used if e not in store]
    if missing:
        raise ValueError(f"interactions mention elements absent from the land-usage file: {missing[:5]}")
    tree = build_tree({e: store[e].tags for e in used}, its, cfg.lam, cfg.tz_offset)
    tree = prune(tree, PruneConfig(cfg.theta, cfg.xi), its)
    tree.save(out)
    log.info("tree with %d nodes -> %s", len(tree), out)


def cmd_train(s, cfg):
    its = load_interactions(need(s, "interactions"))
    tree = ContextTree.load(need(s, "tree"))
    out = need(s, "out", must_exist=False)
    train, _ = split_chronological(_instances(its, cfg), cfg.train_fraction)
    model = PCT.train(tree, train, cfg.classifier)
    model.save(out)
    log.info("trained %d classifiers on %d instances -> %s", len(model.models), len(train), out)


def _mode(s, cfg) -> Mode:
    default = "single_element" if cfg.n == 1 else "multi_element"
    try:
        return Mode(s.get("mode", default).replace("-", "_"))
    except ValueError:
        raise ConfigError("mode", s.get("mode")) from None


def cmd_predict(s, cfg):
    its = load_interactions(need(s, "interactions"))
    model = PCT.load(need(s, "model"))
    mode = _mode(s, cfg)
    _, test = split_chronological(_instances(its, cfg), cfg.train_fraction)
    preds = model.predict(test, PredictConfig(mode, cfg.t_s))
    out = s.get("out")
    fh = open(out, "w", newline="", encoding="utf-8") if out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["start", "current_id", "label", "predicted"])
        for inst, p in zip(test, preds):
            shown = "+".join(sorted(p)) if isinstance(p, set) else p
            w.writerow([int(inst.start), inst.current_id, inst.label, shown])
    finally:
        if out:
            fh.close()


def cmd_evaluate(s, cfg):
    its = load_interactions(need(s, "interactions"))
    model = PCT.load(need(s, "model"))
    train, test = split_chronological(_instances(its, cfg), cfg.train_fraction)
    report = {
        "config": dataclasses.asdict(cfg),
        "test_instances": len(test),
        "modes": score_modes(model, test, cfg, cfg.n > 1),
    }
    ovr = OneVsRest.train(train, cfg.classifier)
    markov = MarkovModel(cfg.alpha).fit([[i.current_id, i.label] for i in train])
    report["landusage"] = {
        "ovr": flat_accuracy(ovr.predict(test), test),
        "markov": flat_accuracy([markov.predict_next(i.current_id) for i in test], test),
    }
    if "landusage" in s:
        store = load_landusage(need(s, "landusage"))
        report["landusage"]["stats"] = interaction_stats(its, store.area)
    text = dump_report(report)
    if "out" in s:
        Path(s["out"]).write_text(text, encoding="utf-8")
    sys.stdout.write(text)


def cmd_sweep(s, cfg):
    traj = load_trajectory(need(s, "trajectory"))
    store = load_landusage(need(s, "landusage"))
    out = need(s, "out_dir", must_exist=False)
    param = s.get("param")
    if param is None:
        raise UsageError("missing required setting: param")
    try:
        values = [float(v) for v in str(s.get("values", "")).split(",") if v.strip()]
    except ValueError:
        raise ConfigError("values", s.get("values")) from None
    if not values:
        raise ConfigError("values", s.get("values"))
    reports = run_sweep(Pipeline(traj, store), param, values, cfg, jobs=s.get("jobs", 1))
    for path in write_sweep(reports, out, s.get("name")):
        log.info("wrote %s", path)


COMMANDS = {
    "synth": cmd_synth, "augment": cmd_augment, "summarise": cmd_summarise,
    "extract-locations": cmd_extract_locations, "build-tree": cmd_build_tree, "train": cmd_train,
    "predict": cmd_predict, "evaluate": cmd_evaluate, "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if ns.command is None:
        parser.print_usage(sys.stderr)
        return 1
    logging.basicConfig(level=logging.DEBUG if ns.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        settings = resolve(ns)
        cfg = run_config(settings)
        resolved = dict(dataclasses.asdict(cfg), **{k: v for k, v in settings.items() if k not in RUN_FIELDS})
        log.info("resolved config: %s", json.dumps(resolved, sort_keys=True))
    except (ConfigError, UsageError, MissingInput) as exc:
        log.error("%s", exc)
        return 1
    try:
        COMMANDS[ns.command](settings, cfg)
    except (ConfigError, UsageError, MissingInput) as exc:
        log.error("%s", exc)
        return 1
    except Exception as exc:  # noqa: BLE001 - any stage failure maps to exit 2
        log.error("%s failed: %s", ns.command, exc)
        if ns.verbose:
            log.exception("traceback")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
