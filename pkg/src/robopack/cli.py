"""Command line entry points: dataset generation, benchmark runs, training,
transfer evaluation, report conversion and the HTTP service.

Exit codes: 0 success, 2 invalid input (bad arguments, missing or corrupt
files), 3 training divergence.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bench import (
    OraclePolicy,
    PackManPolicy,
    build_report,
    column_policy,
    first_fit_policy,
    floor_policy,
    load_report,
    run_episode,
    walle_policy,
    write_instances_csv,
    write_report,
    write_summary_csv,
)
from .datagen import (
    EpisodeSpec,
    generate_episode,
    load_stream,
    save_stream,
    small_box_episode,
    validate_stream,
)
from .deeprl import TrainerConfig, load_model, run_training, save_model
from .errors import CorruptModel, TrainingDiverged
from .heuristics import WallEParams

# spreads one CLI seed into distinct per-episode seeds
SEED_STRIDE = 1_000_003

ALGORITHMS = ("firstfit", "floor", "column", "walle", "packman", "oracle")


def _parse_dims(text: str) -> tuple[int, int, int]:
    parts = text.lower().split("x")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected LxBxH, got {text!r}")
    try:
        dims = tuple(int(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected integers in {text!r}") from exc
    if any(d < 1 for d in dims):
        raise argparse.ArgumentTypeError("dimensions must be positive")
    return dims


def _parse_walle_params(text: str) -> WallEParams:
    try:
        vals = [float(v) for v in text.split(",")]
        return WallEParams.from_sequence(vals)
    except (ValueError, TypeError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="robopack", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate perfectly packable datasets")
    g.add_argument("--opt", type=int, required=True, help="optimal bin count per episode")
    g.add_argument("--bins", type=_parse_dims, default=(45, 80, 45), metavar="LxBxH")
    g.add_argument("--count-min", type=int, default=230)
    g.add_argument("--count-max", type=int, default=370)
    g.add_argument("--episodes", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--small", action="store_true", help="small-box variant (doubled count target)")

    r = sub.add_parser("run", help="run packing policies over a dataset directory")
    r.add_argument("--algo", required=True, help="comma list from: " + ",".join(ALGORITHMS))
    r.add_argument("--data", required=True)
    r.add_argument("--model", help="model file, required when packman is listed")
    r.add_argument("--max-bins", type=int, default=16)
    r.add_argument("--out", required=True, help="report JSON path")
    r.add_argument(
        "--walle-params",
        type=_parse_walle_params,
        default=None,
        metavar="A1,A2,A3,A4,A5",
        help="override the five stability weights",
    )

    t = sub.add_parser("train", help="train the value-net policy")
    t.add_argument("--data", required=True)
    t.add_argument("--episodes", type=int, default=2000)
    t.add_argument("--explore-episodes", type=int, default=1000)
    t.add_argument("--batch-size", type=int, default=256)
    t.add_argument("--max-bins", type=int, default=16)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True, help="model JSON path")
    t.add_argument("--curve", help="training curve CSV path")

    e = sub.add_parser("eval", help="evaluate a trained model on a dataset (no retraining)")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--max-bins", type=int, default=16)
    e.add_argument("--out", required=True, help="report JSON path")

    rep = sub.add_parser("report", help="convert a report JSON to CSV tables")
    rep.add_argument("--in", dest="infile", required=True)
    rep.add_argument("--csv", required=True, help="summary CSV path")
    rep.add_argument("--per-instance", help="per-instance rows CSV path")

    s = sub.add_parser("serve", help="start the HTTP packing service")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8000)
    return p


def _fail(msg: str, code: int = 2) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return code


def _load_datasets(data_dir: str):
    root = Path(data_dir)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset directory {data_dir!r} not found")
    paths = sorted(root.glob("episode_*.json"))
    if not paths:
        raise FileNotFoundError(f"no episode_*.json files in {data_dir!r}")
    return [load_stream(p) for p in paths]


def cmd_gen(args) -> int:
    lo, hi = args.count_min, args.count_max
    if not (1 <= lo <= hi):
        return _fail(f"invalid count range [{lo}, {hi}]")
    if args.opt < 1 or args.episodes < 1:
        return _fail("--opt and --episodes must be positive")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    make = small_box_episode if args.small else generate_episode
    for k in range(args.episodes):
        spec = EpisodeSpec(
            seed=args.seed * SEED_STRIDE + k,
            opt_bins=args.opt,
            bin_dims=args.bins,
            box_count_range=(lo, hi),
        )
        try:
            bs = make(spec)
        except ValueError as exc:
            return _fail(f"episode {k}: {exc}")
        report = validate_stream(bs)
        if not report.ok:
            return _fail(f"episode {k} failed validation: {report.violations}")
        save_stream(bs, out / f"episode_{k:04d}.json")
    print(f"wrote {args.episodes} episodes to {out}")
    return 0


def _policies_for(names: list[str], args) -> list:
    policies = []
    for name in names:
        if name == "firstfit":
            policies.append(first_fit_policy())
        elif name == "floor":
            policies.append(floor_policy())
        elif name == "column":
            policies.append(column_policy())
        elif name == "walle":
            policies.append(walle_policy(args.walle_params))
        elif name == "oracle":
            policies.append(OraclePolicy())
        elif name == "packman":
            if not args.model:
                raise ValueError("packman requires --model")
            net, _meta = load_model(args.model)
            policies.append(PackManPolicy(net))
        else:
            raise ValueError(f"unknown algorithm {name!r}; choose from {ALGORITHMS}")
    return policies


def cmd_run(args) -> int:
    names = [n.strip() for n in args.algo.split(",") if n.strip()]
    if not names:
        return _fail("--algo lists no algorithms")
    try:
        policies = _policies_for(names, args)
        datasets = _load_datasets(args.data)
    except (ValueError, FileNotFoundError, CorruptModel) as exc:
        return _fail(str(exc))
    if args.max_bins < 1:
        return _fail("--max-bins must be positive")
    results = []
    for policy in policies:
        for inst, bs in enumerate(datasets):
            results.append(run_episode(policy, bs, args.max_bins, instance=inst))
    config_echo = {
        "command": "run",
        "algorithms": names,
        "data": args.data,
        "max_bins": args.max_bins,
        "model": args.model,
        "instances": len(datasets),
    }
    write_report(build_report(results, config_echo), args.out)
    print(f"wrote report for {len(names)} algorithms x {len(datasets)} instances to {args.out}")
    return 0


def cmd_train(args) -> int:
    try:
        datasets = _load_datasets(args.data)
    except FileNotFoundError as exc:
        return _fail(str(exc))
    cfg = TrainerConfig(
        episodes=args.episodes,
        explore_episodes=args.explore_episodes,
        batch_size=args.batch_size,
        max_bins=args.max_bins,
        seed=args.seed,
    )
    if cfg.episodes < 1:
        return _fail("--episodes must be positive")
    try:
        net, curve = run_training(datasets, cfg, curve_path=args.curve)
    except TrainingDiverged as exc:
        return _fail(f"training diverged: {exc}", code=3)
    except ValueError as exc:
        return _fail(str(exc))
    save_model(net, (4, 36), cfg, args.out)
    last = curve[-1]
    print(
        f"trained {cfg.episodes} episodes; final fill {last['fill_first_opt']:.3f}, "
        f"bins {last['bins_used']}; model at {args.out}"
    )
    return 0


def cmd_eval(args) -> int:
    try:
        net, _meta = load_model(args.model)
        datasets = _load_datasets(args.data)
    except (CorruptModel, FileNotFoundError) as exc:
        return _fail(str(exc))
    if args.max_bins < 1:
        return _fail("--max-bins must be positive")
    policy = PackManPolicy(net)
    results = [
        run_episode(policy, bs, args.max_bins, instance=inst)
        for inst, bs in enumerate(datasets)
    ]
    config_echo = {
        "command": "eval",
        "model": args.model,
        "data": args.data,
        "max_bins": args.max_bins,
        "instances": len(datasets),
    }
    write_report(build_report(results, config_echo), args.out)
    print(f"wrote transfer report for {len(datasets)} instances to {args.out}")
    return 0


def cmd_report(args) -> int:
    try:
        report = load_report(args.infile)
    except (OSError, ValueError) as exc:
        return _fail(f"cannot read report: {exc}")
    write_summary_csv(report, args.csv)
    if args.per_instance:
        write_instances_csv(report, args.per_instance)
    print(f"wrote summary to {args.csv}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "gen": cmd_gen,
        "run": cmd_run,
        "train": cmd_train,
        "eval": cmd_eval,
        "report": cmd_report,
        "serve": cmd_serve,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
