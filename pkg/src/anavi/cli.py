"""Command-line entry point: ``anavi <subcommand> ...``.

Exit codes: 0 ok, 2 usage, 3 data error, 4 no path.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__, dataset, kernels, mapgen, metrics, planner, predictor
from .acousticmap import MODES, fixed_listener_map, fixed_robot_map, oracle_map
from .acoustics import AcousticConfig
from .audiomeasure import WavError, compare_table, load_measurements, load_wav, waveform_db, write_table
from .gridmap import MapError, Pose2, SamplingExhausted, load_map
from .sensing import scan_panorama

log = logging.getLogger("anavi")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NO_PATH = 0, 2, 3, 4
DATA_ERRORS = (MapError, SamplingExhausted, dataset.DatasetError, predictor.ModelError,
               planner.PlanningError, WavError, FileNotFoundError, ValueError, KeyError)


class UsageError(Exception):
    pass


def _point(text: str) -> Pose2:
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected X,Y but got {text!r}") from None
    return Pose2(x, y)


def _listener(text: str) -> planner.Listener:
    parts = text.split(",")
    if len(parts) not in (2, 3, 4):
        raise argparse.ArgumentTypeError(f"expected X,Y[,weight[,threshold]] but got {text!r}")
    try:
        vals = [float(v) for v in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"non-numeric listener {text!r}") from None
    weight = vals[2] if len(vals) > 2 else 1.0
    threshold = vals[3] if len(vals) > 3 else 0.0
    return planner.Listener(Pose2(vals[0], vals[1]), weight, threshold)


def _map_at(text: str) -> tuple[str, Pose2]:
    path, sep, xy = text.rpartition(":")
    if not sep or not path:
        raise argparse.ArgumentTypeError(f"expected MAP:X,Y but got {text!r}")
    return path, _point(xy)


def _default_seed() -> int:
    env = os.environ.get("ANAVI_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"ANAVI_SEED must be an integer, got {env!r}") from None


def _run_json(args, target: Path) -> None:
    """Echo the resolved arguments next to (file) or inside (directory) ``target``."""
    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    doc = {"anavi_version": __version__, "kernel_backend": kernels.BACKEND,
           "config": json.loads(json.dumps(cfg, default=_jsonable))}
    if target.suffix:
        path = target.with_name(target.stem + ".run.json")
    else:
        path = target / "run.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def _jsonable(v):
    if isinstance(v, planner.Listener):
        return {"pose": list(v.pose), "weight": v.weight, "threshold_db": v.threshold_db}
    if isinstance(v, Path):
        return str(v)
    return str(v)


def _parent(path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


# ---- subcommands ------------------------------------------------------------

def cmd_gen_maps(args):
    out = Path(args.out)
    index = mapgen.write_maps(out, args.seed, fixtures=not args.no_fixtures)
    _run_json(args, out)
    print(json.dumps(index))


def cmd_gen_data(args):
    root = Path(args.maps)
    index_path = root / "splits.json"
    if not index_path.exists():
        raise FileNotFoundError(f"{index_path} not found (run `anavi gen-maps` first)")
    index = json.loads(index_path.read_text())
    if args.split not in index:
        raise dataset.DatasetError(f"split {args.split!r} not in {index_path}")
    ids = index[args.split]
    manifests = []
    for other in dataset.SPLITS:
        if other != args.split and other in index:
            manifests.append(dataset.DatasetManifest(other, index[other], 1, args.seed, AcousticConfig()))
    cfg = AcousticConfig(n_rays=args.n_rays, max_bounces=args.max_bounces)
    manifest = dataset.DatasetManifest(args.split, ids, args.per_map, args.seed, cfg)
    dataset.check_split_hygiene(manifests + [manifest])
    maps = [load_map(root / args.split / f"{mid}.json")[0] for mid in ids]
    out = _parent(args.out)
    n = dataset.write_dataset(out, dataset.generate(maps, args.per_map, args.seed, cfg, args.jobs))
    dataset.write_manifest(out, manifest)
    _run_json(args, out)
    print(f"wrote {n} samples to {out}")


def cmd_train(args):
    layout = predictor.layout_for(args.model)
    train = dataset.arrays(dataset.read_dataset(args.train), layout)
    val = dataset.arrays(dataset.read_dataset(args.val), layout)
    cfg = predictor.TrainConfig(epochs=args.epochs, seed=args.seed, learning_rate=args.lr,
                                weight_decay=args.weight_decay)
    model, tlog = predictor.fit(args.model, train, val, cfg)
    out = _parent(args.out)
    predictor.save_model(model, out)
    if tlog is not None:
        tlog.to_csv(out.with_name(out.stem + ".log.csv"))
    _run_json(args, out)
    print(f"saved {args.model} ({model.n_params} parameters) to {out}")


def cmd_eval(args):
    model = predictor.load_model(args.model)
    samples = dataset.read_dataset(args.data)
    if not samples:
        raise dataset.DatasetError(f"{args.data}: no samples")
    curve = metrics.evaluate(samples, model)
    curve.to_csv(_parent(args.out_curve))
    if args.out_dist:
        metrics.dump_distribution(samples, model, _parent(args.out_dist))
    _run_json(args, Path(args.out_curve))
    print(f"auc {metrics.curve_auc(curve):.4f}  acc@4/128 {curve.at(4 / 128):.4f}")


def cmd_acoustic_map(args):
    grid, materials = load_map(args.map)
    if args.oracle:
        raster = oracle_map(grid, args.mode, args.at, AcousticConfig(n_rays=args.n_rays), args.seed)
    else:
        if not args.model:
            raise UsageError("--model is required unless --oracle is given")
        model = predictor.load_model(args.model)
        build = fixed_robot_map if args.mode == "fixed_robot" else fixed_listener_map
        raster = build(grid, materials, args.at, model)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    raster.to_json(out / f"{args.mode}.json")
    raster.to_csv(out / f"{args.mode}.csv")
    _run_json(args, out)
    print(f"{int(raster.present().sum())} cells written to {out}")


def cmd_plan(args):
    grid, materials = load_map(args.map)
    model = predictor.load_model(args.model) if args.model else predictor.heuristic_model()
    actions = planner.load_actions(args.actions) if args.actions else planner.default_actions()
    problem = planner.PlanProblem(grid, args.start, args.goal, args.listener or [], actions,
                                  args.lam, model, materials)
    p = planner.plan(problem)
    out = _parent(args.out)
    doc = p.to_dict()
    doc["lambda"] = args.lam
    if args.simulate:
        doc["simulated_trace"] = planner.simulate_plan_audio(problem, p, seed=args.seed)
    out.write_text(json.dumps(doc, indent=1) + "\n")
    _run_json(args, out)
    print(f"{len(p.cells)} cells, time {p.total_time:.3f} s, noise cost {p.total_noise_cost:.3f}")


def cmd_measure(args):
    db = waveform_db(load_wav(args.wav), args.offset)
    if args.out:
        out = _parent(args.out)
        out.write_text(json.dumps({"wav": args.wav, "offset": args.offset, "db": db}) + "\n")
        _run_json(args, out)
    print(f"{db:.4f}")


def cmd_compare(args):
    doc = load_measurements(args.manifest)
    model = predictor.load_model(args.model)
    map_path, pose = args.pano_from
    grid, materials = load_map(map_path)
    scan = scan_panorama(grid, materials, pose) if model.input_layout != "dirdist" else None
    source_db = args.source_db if args.source_db is not None else doc.get("source_db")
    if source_db is None:
        raise UsageError("--source-db is required when the manifest has no source_db")
    records = compare_table(doc["records"], model, scan, float(source_db), args.offset,
                            base_dir=Path(args.manifest).parent)
    out = _parent(args.out)
    write_table(records, out)
    _run_json(args, out)
    for r in records:
        print(f"{r.label}: measured {r.db_measured:.2f} predicted {r.db_predicted:.2f} "
              f"error {r.error:+.2f}")


def cmd_repro(args):
    from .repro import ReproConfig, run
    cfg = ReproConfig(seed=args.seed, train_per_map=args.train_per_map,
                      eval_per_map=args.eval_per_map, epochs=args.epochs, jobs=args.jobs)
    out = Path(args.out)
    _run_json(args, out)
    summary = run(cfg, out)
    for kind, (auc, acc4) in summary.items():
        print(f"{kind:10s} auc {auc:.4f}  acc@4/128 {acc4:.4f}")


# ---- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="random seed (default: $ANAVI_SEED or 0)")
    common.add_argument("--log-level", default="WARNING",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    common.add_argument("--jobs", type=int, default=1, help="worker processes")

    p = argparse.ArgumentParser(prog="anavi", description="Acoustic noise prediction and "
                                "noise-aware planning on 2D grid maps.")
    p.add_argument("--version", action="version", version=f"anavi {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("gen-maps", parents=[common], help="write procedural and fixture maps")
    s.add_argument("--out", required=True)
    s.add_argument("--no-fixtures", action="store_true")
    s.set_defaults(func=cmd_gen_maps)

    s = sub.add_parser("gen-data", parents=[common], help="generate a labeled dataset split")
    s.add_argument("--maps", required=True, help="directory written by gen-maps")
    s.add_argument("--split", required=True, choices=dataset.SPLITS)
    s.add_argument("--per-map", type=int, default=2000)
    s.add_argument("--n-rays", type=int, default=AcousticConfig.n_rays)
    s.add_argument("--max-bounces", type=int, default=AcousticConfig.max_bounces)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_gen_data)

    s = sub.add_parser("train", parents=[common], help="fit a predictor")
    s.add_argument("--model", required=True, choices=predictor.KINDS)
    s.add_argument("--train", required=True)
    s.add_argument("--val", required=True)
    s.add_argument("--epochs", type=int, default=60)
    s.add_argument("--lr", type=float, default=0.01)
    s.add_argument("--weight-decay", type=float, default=0.01)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", parents=[common], help="epsilon-accuracy curve of a model")
    s.add_argument("--model", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--out-curve", required=True)
    s.add_argument("--out-dist")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("acoustic-map", parents=[common], help="loudness raster over a map")
    s.add_argument("--map", required=True)
    s.add_argument("--mode", required=True, choices=MODES)
    s.add_argument("--at", required=True, type=_point, help="anchor X,Y in meters")
    s.add_argument("--model")
    s.add_argument("--oracle", action="store_true", help="use the ray tracer instead of a model")
    s.add_argument("--n-rays", type=int, default=AcousticConfig.n_rays)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_acoustic_map)

    s = sub.add_parser("plan", parents=[common], help="noise-aware path")
    s.add_argument("--map", required=True)
    s.add_argument("--model", help="predictor file (default: distance heuristic)")
    s.add_argument("--start", required=True, type=_point)
    s.add_argument("--goal", required=True, type=_point)
    s.add_argument("--listener", action="append", type=_listener,
                   help="X,Y[,weight[,threshold_db]]; repeatable")
    s.add_argument("--lambda", dest="lam", type=float, default=0.0)
    s.add_argument("--actions")
    s.add_argument("--simulate", action="store_true",
                   help="also trace ground-truth listener levels along the plan")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_plan)

    s = sub.add_parser("measure", parents=[common], help="max dB of a recording")
    s.add_argument("--wav", required=True)
    s.add_argument("--offset", type=float, default=0.0, help="calibration offset in dB")
    s.add_argument("--out")
    s.set_defaults(func=cmd_measure)

    s = sub.add_parser("compare", parents=[common], help="measured vs predicted table")
    s.add_argument("--manifest", required=True)
    s.add_argument("--model", required=True)
    s.add_argument("--pano-from", required=True, type=_map_at, help="MAP:X,Y")
    s.add_argument("--source-db", type=float)
    s.add_argument("--offset", type=float, default=0.0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("repro", parents=[common], help="full desk-scale pipeline")
    s.add_argument("--out", required=True)
    s.add_argument("--train-per-map", type=int, default=2000)
    s.add_argument("--eval-per-map", type=int, default=500)
    s.add_argument("--epochs", type=int, default=60)
    s.set_defaults(func=cmd_repro)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.seed is None:
            args.seed = _default_seed()
        if args.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        args.func(args)
    except UsageError as exc:
        print(f"anavi: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except planner.NoPath as exc:
        print(f"anavi: no path: {exc}", file=sys.stderr)
        return EXIT_NO_PATH
    except DATA_ERRORS as exc:
        print(f"anavi: data error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
