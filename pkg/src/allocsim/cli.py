"""Command-line harness: train agents, evaluate policies, compare them.

Artifacts are plain files under ``--out``: CSV logs, binary checkpoints,
and a ``manifest.json`` written last so that everything it names exists.
Identical arguments and seed reproduce CSVs and checkpoints byte for byte.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import statistics
import sys
import time
from importlib import resources
from pathlib import Path

from .dqn import DqnConfig, TrainingRun, evaluate, train
from .engine import ENCODINGS, EngineConfig
from .model import SuiteError, load_suite_path
from .neural import CheckpointError, load_params

__all__ = ["main", "default_suite_path", "cmd_train", "cmd_eval", "cmd_compare"]

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_DIVERGED = 2


def default_suite_path() -> Path:
    """Location of the bundled two-process demo suite."""
    return Path(resources.files("allocsim").joinpath("data/default_suite.json"))


def _git_blob_sha1(path: Path) -> str:
    data = path.read_bytes()
    h = hashlib.sha1()
    h.update(b"blob %d\0" % len(data))
    h.update(data)
    return h.hexdigest()


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in row) + "\n")


def _write_manifest(out_dir: Path, payload: dict) -> None:
    tmp = out_dir / "manifest.json.tmp"
    tmp.write_text(json.dumps(payload, indent=2, default=str) + "\n", encoding="utf-8")
    os.replace(tmp, out_dir / "manifest.json")


def _load_suite_or_fail(path_arg: str | None):
    path = Path(path_arg) if path_arg else default_suite_path()
    if not path.is_file():
        raise SuiteError(f"suite file not found: {path}")
    return load_suite_path(path), path


def _engine_config(args) -> EngineConfig:
    return EngineConfig(
        arrival_probability=args.arrival_prob,
        enabled_duration_cap=args.cap,
        encoding=args.encoding,
        seed=args.seed,
    )


def _run_train_once(suite, suite_path: Path, args, out_dir: Path, seed: int) -> TrainingRun:
    started = time.monotonic()
    engine_config = EngineConfig(
        arrival_probability=args.arrival_prob,
        enabled_duration_cap=args.cap,
        encoding=args.encoding,
        seed=seed,
    )
    dqn_config = DqnConfig(
        episodes=args.episodes,
        steps_per_episode=args.steps,
        seed=seed,
    )
    run = train(suite, engine_config, dqn_config, out_dir)

    rows = [
        [ep, run.episode_rewards[ep], run.episode_mean_loss[ep], run.episode_epsilon_end[ep]]
        for ep in range(len(run.episode_rewards))
    ]
    _write_csv(out_dir / "train.csv", ["episode", "cum_reward", "mean_loss", "epsilon_end"], rows)

    outputs = ["train.csv", "last.ckpt"]
    if run.best_path is not None:
        outputs.insert(1, "best.ckpt")
    _write_manifest(
        out_dir,
        {
            "command": "train",
            "argv": sys.argv[1:],
            "seed": seed,
            "suite_file": str(suite_path),
            "suite_git_sha1": _git_blob_sha1(suite_path),
            "config": {
                "episodes": dqn_config.episodes,
                "steps_per_episode": dqn_config.steps_per_episode,
                "batch_size": dqn_config.batch_size,
                "discount": dqn_config.discount,
                "target_sync_period": dqn_config.target_sync_period,
                "epsilon_start": dqn_config.epsilon_start,
                "epsilon_end": dqn_config.epsilon_end,
                "learning_rate": dqn_config.learning_rate,
                "arrival_probability": engine_config.arrival_probability,
                "enabled_duration_cap": engine_config.enabled_duration_cap,
                "encoding": engine_config.encoding,
            },
            "outputs": outputs,
            "failed": run.failed,
            "error": run.error,
            "duration_seconds": time.monotonic() - started,
        },
    )
    return run


def cmd_train(args) -> int:
    try:
        suite, suite_path = _load_suite_or_fail(args.suite)
    except SuiteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR

    out_root = Path(args.out)
    diverged = False
    for index in range(args.runs):
        if args.runs == 1:
            out_dir, seed = out_root, args.seed
        else:
            out_dir, seed = out_root / f"run_{index:03d}", args.seed + index
        out_dir.mkdir(parents=True, exist_ok=True)
        run = _run_train_once(suite, suite_path, args, out_dir, seed)
        if run.failed:
            diverged = True
            print(f"run {index} (seed {seed}) diverged: {run.error}", file=sys.stderr)
        else:
            best = max(run.episode_rewards) if run.episode_rewards else float("nan")
            print(
                f"trained seed={seed} episodes={len(run.episode_rewards)} "
                f"best_episode_reward={best} out={out_dir}"
            )
    return EXIT_DIVERGED if diverged else EXIT_OK


def _policy_rewards(policy: str, suite, args, weights_path: str | None) -> list[float]:
    params = None
    if policy == "checkpoint":
        if not weights_path:
            raise CheckpointError("policy 'dqn' requires --weights")
        params = load_params(weights_path)
    return evaluate(
        policy,
        suite,
        _engine_config(args),
        episodes=args.episodes,
        steps=args.steps,
        params=params,
        base_seed=args.seed,
    )


def cmd_eval(args) -> int:
    try:
        suite, suite_path = _load_suite_or_fail(args.suite)
        policy = "checkpoint" if args.policy == "dqn" else args.policy
        rewards = _policy_rewards(policy, suite, args, args.weights)
    except (SuiteError, CheckpointError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR

    started = time.monotonic()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(out_dir / "eval.csv", ["episode", "cum_reward"], list(map(list, enumerate(rewards))))
    print(
        f"policy={args.policy} episodes={args.episodes} steps={args.steps} "
        f"median={statistics.median(rewards)} mean={statistics.fmean(rewards)}"
    )
    _write_manifest(
        out_dir,
        {
            "command": "eval",
            "argv": sys.argv[1:],
            "seed": args.seed,
            "suite_file": str(suite_path),
            "suite_git_sha1": _git_blob_sha1(suite_path),
            "config": {
                "policy": args.policy,
                "weights": args.weights,
                "episodes": args.episodes,
                "steps": args.steps,
                "arrival_probability": args.arrival_prob,
                "enabled_duration_cap": args.cap,
                "encoding": args.encoding,
            },
            "outputs": ["eval.csv"],
            "duration_seconds": time.monotonic() - started,
        },
    )
    return EXIT_OK


def cmd_compare(args) -> int:
    """Run the trained agent and both heuristics on paired episode seeds."""
    try:
        suite, suite_path = _load_suite_or_fail(args.suite)
        per_policy = {
            "dqn": _policy_rewards("checkpoint", suite, args, args.weights),
            "fifo": _policy_rewards("fifo", suite, args, None),
            "spt": _policy_rewards("spt", suite, args, None),
        }
    except (SuiteError, CheckpointError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR

    started = time.monotonic()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = [
        [ep, per_policy["dqn"][ep], per_policy["fifo"][ep], per_policy["spt"][ep]]
        for ep in range(args.episodes)
    ]
    _write_csv(out_dir / "compare.csv", ["episode", "dqn", "fifo", "spt"], rows)
    for name in ("dqn", "fifo", "spt"):
        rewards = per_policy[name]
        print(
            f"policy={name} episodes={args.episodes} steps={args.steps} "
            f"median={statistics.median(rewards)} mean={statistics.fmean(rewards)}"
        )
    _write_manifest(
        out_dir,
        {
            "command": "compare",
            "argv": sys.argv[1:],
            "seed": args.seed,
            "suite_file": str(suite_path),
            "suite_git_sha1": _git_blob_sha1(suite_path),
            "config": {
                "weights": args.weights,
                "episodes": args.episodes,
                "steps": args.steps,
                "arrival_probability": args.arrival_prob,
                "enabled_duration_cap": args.cap,
                "encoding": args.encoding,
            },
            "outputs": ["compare.csv"],
            "duration_seconds": time.monotonic() - started,
        },
    )
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser, episodes: int, steps: int) -> None:
    parser.add_argument("--suite", help="suite config file (default: bundled demo suite)")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=0, help="base random seed")
    parser.add_argument("--episodes", type=int, default=episodes)
    parser.add_argument("--steps", type=int, default=steps, help="steps per episode")
    parser.add_argument("--arrival-prob", type=float, default=0.5,
                        help="per-step probability of a new case arriving")
    parser.add_argument("--cap", type=float, default=90.0,
                        help="duration cap on the waiting pool (blocks new arrivals)")
    parser.add_argument("--encoding", choices=ENCODINGS, default="a10")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="allocsim",
        description="Resource-allocation simulator with a learning agent and dispatch baselines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train an agent, writing CSV logs and checkpoints")
    _add_common(p_train, episodes=600, steps=400)
    p_train.add_argument("--runs", type=int, default=1,
                         help="number of independent runs (seeds seed..seed+N-1, one subdir each)")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate one policy")
    _add_common(p_eval, episodes=100, steps=400)
    p_eval.add_argument("--policy", choices=("dqn", "fifo", "spt", "random"), required=True)
    p_eval.add_argument("--weights", help="checkpoint file (required for --policy dqn)")
    p_eval.set_defaults(func=cmd_eval)

    p_cmp = sub.add_parser("compare", help="run dqn/fifo/spt on paired episode seeds")
    _add_common(p_cmp, episodes=100, steps=5000)
    p_cmp.add_argument("--weights", required=True, help="checkpoint file for the dqn policy")
    p_cmp.set_defaults(func=cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
