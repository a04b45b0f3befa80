"""End-to-end desk-scale pipeline: maps, data, all predictors, curves,
acoustic maps and a lambda sweep of noise-aware plans.

Every artifact is a deterministic function of the seed and the settings
below, so two runs with the same arguments produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import dataset, mapgen, metrics, planner, predictor
from .acousticmap import fixed_listener_map, fixed_robot_map
from .acoustics import AcousticConfig
from .gridmap import Pose2, load_map

log = logging.getLogger(__name__)

MODEL_ORDER = ("heuristic", "dislinreg", "dirdismlp", "vis_pano", "vis_ego",
               "binned16", "binned64", "binned128")

# Two-room scenario: start and goal in the left room's lower zone, a listener
# between them; the quiet route passes behind the separator panel.
TWOROOM_ANCHOR = Pose2(3.375, 3.625)
TWOROOM_START = Pose2(0.625, 0.875)
TWOROOM_GOAL = Pose2(6.125, 0.875)
TWOROOM_LISTENER = Pose2(3.375, 0.875)
LISTENER_THRESHOLD_DB = 62.0
LAMBDAS = (0.0, 0.001, 0.003, 0.01, 0.03, 0.1, 0.3, 1.0)


@dataclass(frozen=True)
class ReproConfig:
    seed: int = 0
    train_per_map: int = 2000
    eval_per_map: int = 500
    epochs: int = 60
    models: tuple = MODEL_ORDER
    plan_model: str = "vis_pano"
    lambdas: tuple = LAMBDAS
    jobs: int = 1
    acoustic: AcousticConfig = field(default_factory=AcousticConfig)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["models"] = list(self.models)
        d["lambdas"] = list(self.lambdas)
        return d


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def run(cfg: ReproConfig, out) -> dict:
    """Run the pipeline into ``out``; returns ``{kind: (auc, acc@4/128)}``."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()

    index = mapgen.write_maps(out / "maps", cfg.seed)
    data_dir = out / "data"
    data_dir.mkdir(exist_ok=True)
    samples = {}
    for split, ids in index.items():
        if split not in dataset.SPLITS:
            continue
        maps = [load_map(out / "maps" / split / f"{mid}.json")[0] for mid in ids]
        per = cfg.train_per_map if split == "train" else cfg.eval_per_map
        path = data_dir / f"{split}.jsonl"
        dataset.write_dataset(path, dataset.generate(maps, per, cfg.seed, cfg.acoustic, cfg.jobs))
        dataset.write_manifest(path, dataset.DatasetManifest(split, ids, per, cfg.seed, cfg.acoustic))
        samples[split] = dataset.read_dataset(path)
        log.info("%s: %d samples (%.0fs)", split, len(samples[split]), time.perf_counter() - t0)

    model_dir = out / "models"
    metric_dir = out / "metrics"
    model_dir.mkdir(exist_ok=True)
    metric_dir.mkdir(exist_ok=True)
    tcfg = predictor.TrainConfig(epochs=cfg.epochs, seed=cfg.seed)
    models, summary = {}, {}
    rows = []
    for kind in cfg.models:
        layout = predictor.layout_for(kind)
        model, tlog = predictor.fit(kind, dataset.arrays(samples["train"], layout),
                                    dataset.arrays(samples["val"], layout), tcfg)
        predictor.save_model(model, model_dir / f"{kind}.json")
        if tlog is not None:
            tlog.to_csv(model_dir / f"{kind}.log.csv")
        curve = metrics.evaluate(samples["test"], model)
        curve.to_csv(metric_dir / f"{kind}.curve.csv")
        metrics.dump_distribution(samples["test"], model, metric_dir / f"{kind}.dist.csv")
        auc = metrics.curve_auc(curve)
        summary[kind] = (auc, curve.at(4 / 128))
        rows.append([kind, repr(auc), repr(curve.at(1 / 128)), repr(curve.at(4 / 128)),
                     repr(curve.at(8 / 128)), model.n_params,
                     -1 if tlog is None else tlog.best_epoch])
        models[kind] = model
        log.info("%s: auc %.3f acc@4 %.3f (%.0fs)", kind, auc, curve.at(4 / 128),
                 time.perf_counter() - t0)
    _write_csv(metric_dir / "summary.csv",
               ["model", "auc", "acc_1", "acc_4", "acc_8", "n_params", "best_epoch"], rows)

    grid, materials = load_map(out / "maps" / "fixtures" / "tworoom.json")
    amap_dir = out / "acoustic_maps"
    amap_dir.mkdir(exist_ok=True)
    map_model = models.get("vis_pano") or next(iter(models.values()))
    for name, build in (("fixed_robot", fixed_robot_map), ("fixed_listener", fixed_listener_map)):
        raster = build(grid, materials, TWOROOM_ANCHOR, map_model)
        raster.to_json(amap_dir / f"tworoom_{name}.json")
        raster.to_csv(amap_dir / f"tworoom_{name}.csv")

    plan_dir = out / "plans"
    plan_dir.mkdir(exist_ok=True)
    plan_model = models.get(cfg.plan_model) or predictor.heuristic_model()
    listeners = [planner.Listener(TWOROOM_LISTENER, 1.0, LISTENER_THRESHOLD_DB)]
    actions = planner.default_actions()
    sweep = []
    for lam in cfg.lambdas:
        problem = planner.PlanProblem(grid, TWOROOM_START, TWOROOM_GOAL, listeners, actions,
                                      lam, plan_model, materials)
        p = planner.plan(problem)
        p.to_json(plan_dir / f"plan_lambda_{lam:g}.json")
        peak = max(max(t) for t in p.per_listener_trace) if p.steps else 0.0
        sweep.append([repr(lam), len(p.cells), repr(p.total_time), repr(p.total_noise_cost),
                      repr(p.cost), repr(peak)])
    _write_csv(plan_dir / "sweep.csv",
               ["lambda", "n_cells", "total_time", "noise_cost", "cost", "peak_db"], sweep)
    log.info("repro done in %.0fs", time.perf_counter() - t0)
    (out / "summary.json").write_text(json.dumps(
        {k: {"auc": a, "acc_4": b} for k, (a, b) in summary.items()}, indent=1, sort_keys=True) + "\n")
    return summary
