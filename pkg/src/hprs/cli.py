"""Command-line entrypoint: ``hprs <subcommand> ...``.

Exit codes: 0 success, 1 validation failure, 2 usage error (bad flags,
missing files, bad configuration).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .assessment import aggregate, pam
from .envs import DEFAULT_SPECS, INVARIANCE_CONFIGS, GridDriveEnv, data_path, make_env
from .errors import ConfigError, HPRSError, SpecError
from .planning import ShootingConfig, mpc_episode
from .rewards import VARIANTS, make_reward
from .shaping import shape_trace
from .solvers import QLearningConfig, evaluate_policy, q_learning, verify_invariance
from .spec_lang import parse_spec
from .task import NoSafetyWarning, load_task, validate
from .trace import load_trace, robustness, sigma, sigma_avg, sigma_task, task_robustness

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

DEFAULTS = {
    "spec": None,
    "env": "grid",
    "env_config": None,
    "reward": "hprs",
    "rewards": list(VARIANTS),
    "seeds": None,
    "episodes": 400,
    "eval_episodes": 20,
    "horizon": None,
    "gamma": 0.99,
    "eps": 1e-10,
    "alpha": 0.1,
    "terminal_potential": None,
    "window": 10,
    "combine": "min",
    "comfort_cutoff": 0.5,
    "out": None,
    "samples": 16,
    "plan_horizon": 10,
}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# configuration plumbing


def load_config(path) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {path}")
    try:
        cfg = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise UsageError(f"{path}: config must be a JSON object")
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    unknown = set(cfg) - set(DEFAULTS)
    if unknown:
        raise UsageError(f"{path}: unknown config keys {sorted(unknown)}")
    return cfg


def effective(args, keys) -> dict:
    """Flags > config file > defaults."""
    cfg = load_config(getattr(args, "config", None))
    out = {}
    for k in keys:
        flag = getattr(args, k, None)
        out[k] = flag if flag is not None else cfg.get(k, DEFAULTS[k])
    return out


def parse_seeds(value) -> list[int]:
    if value is None:
        env = os.environ.get("HPRS_SEED")
        value = env if env is not None else "0"
    if isinstance(value, int):
        return [value]
    if isinstance(value, list):
        seeds = value
    else:
        text = str(value)
        if ".." in text:
            lo, hi = text.split("..", 1)
            seeds = list(range(int(lo), int(hi) + 1))
        else:
            seeds = [s for s in text.replace(" ", "").split(",") if s]
    try:
        seeds = [int(s) for s in seeds]
    except ValueError:
        raise UsageError(f"seeds must be integers, got {value!r}") from None
    if not seeds:
        raise UsageError("at least one seed is required")
    return seeds


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def existing(path, what) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{what} not found: {path}")
    return p


def write_csv(path, header, rows, cfg) -> None:
    """CSV with a comment header; the body depends only on the inputs."""
    buf = io.StringIO()
    buf.write(f"# hprs {__version__} config_hash={config_hash(cfg)}\n")
    buf.write(f"# written {time.strftime('%Y-%m-%dT%H:%M:%S')}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    if path is None or str(path) == "-":
        sys.stdout.write(buf.getvalue())
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(buf.getvalue(), encoding="utf-8")


def write_sidecar(out_dir, command, cfg) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = {"command": command, "version": __version__, "config": cfg, "config_hash": config_hash(cfg)}
    (out / "run.json").write_text(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n",
                                  encoding="utf-8")


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def spec_for(cfg) -> Path:
    if cfg["spec"]:
        return existing(cfg["spec"], "spec file")
    return data_path("specs", DEFAULT_SPECS[cfg["env"]])


def env_for(cfg):
    if cfg["env"] not in DEFAULT_SPECS:
        raise UsageError(f"--env must be one of {sorted(DEFAULT_SPECS)}")
    if cfg["env_config"]:
        existing(cfg["env_config"], "environment config")
    env = make_env(cfg["env"], cfg["env_config"])
    if cfg["horizon"]:
        env.horizon = int(cfg["horizon"])
    return env


# ---------------------------------------------------------------------------
# subcommands


def cmd_validate(args) -> int:
    path = existing(args.spec, "spec file")
    name = str(path)
    try:
        draft = parse_spec(path.read_bytes())
    except SpecError as exc:
        print(exc.format(name), file=sys.stderr)
        return EXIT_FAIL
    for d in draft.warnings:
        print(d.format(name), file=sys.stderr)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NoSafetyWarning)
        try:
            task = validate(draft)
        except HPRSError as exc:
            print(f"{name}: {exc.code}: {exc}", file=sys.stderr)
            return EXIT_FAIL
    for w in caught:
        print(f"{name}: NoSafety: {w.message}", file=sys.stderr)
    print(f"{'class':<8} {'kind':<9} {'name':<24} {'line':>4}  {'bounds':<22} predicate")
    for r in task.requirements:
        bounds = f"[{r.l:.6g}, {r.u:.6g}]"
        print(f"{r.cls.group:<8} {r.cls.keyword:<9} {r.name:<24} {r.line:>4}  {bounds:<22} {r.f} >= 0")
    print(f"safety={len(task.safety)} target=1 comfort={len(task.comfort)}")
    return EXIT_OK


def cmd_monitor(args) -> int:
    task = load_task(existing(args.spec, "spec file"))
    trace = load_trace(existing(args.trace, "trace file"), task.decls, args.horizon)
    rows = []
    for r in task.requirements:
        avg = sigma_avg(r, trace) if r.cls.is_comfort else None
        rows.append((r.name, r.cls.keyword, sigma(r, trace), robustness(r, trace), avg))
    rows.append(("<task>", "", sigma_task(task, trace), task_robustness(task, trace, args.combine), None))
    header = ("requirement", "class", "sigma", "robustness", "sigma_avg")
    cfg = {"spec": str(args.spec), "trace": str(args.trace), "combine": args.combine,
           "horizon": args.horizon}
    write_csv(args.out, header, rows, cfg)
    if trace.clamped:
        print(f"note: {trace.clamped} sample(s) clamped to declared bounds", file=sys.stderr)
    return EXIT_OK


def cmd_shape(args) -> int:
    cfg = effective(args, ["gamma", "window", "combine", "terminal_potential"])
    cfg["terminal_potential"] = cfg["terminal_potential"] or "zero"
    task = load_task(existing(args.spec, "spec file"))
    trace = load_trace(existing(args.trace, "trace file"), task.decls, args.horizon)
    rep = shape_trace(task, trace, gamma=float(cfg["gamma"]), terminal_potential=cfg["terminal_potential"],
                      window=int(cfg["window"]), combine=cfg["combine"])
    header = ("t", "base", "psi_before", "psi_after", "shaped", "morl_unif", "morl_decr",
              "tltl_final", "bhnr")
    rows = [tuple(row[h] for h in header) for row in rep.rows()]
    write_csv(args.out, header, rows, {**cfg, "spec": str(args.spec), "trace": str(args.trace)})
    return EXIT_OK


def _train_cfg(args):
    keys = ["spec", "env", "env_config", "reward", "seeds", "episodes", "horizon", "gamma", "alpha",
            "terminal_potential", "window", "out"]
    cfg = effective(args, keys)
    cfg["seeds"] = parse_seeds(cfg["seeds"])
    cfg["terminal_potential"] = cfg["terminal_potential"] or "keep"
    if cfg["reward"] not in VARIANTS:
        raise UsageError(f"--reward must be one of {VARIANTS}")
    return cfg


def cmd_train(args) -> int:
    cfg = _train_cfg(args)
    env = env_for(cfg)
    task = load_task(spec_for(cfg))
    hp = QLearningConfig(alpha=float(cfg["alpha"]), gamma=float(cfg["gamma"]), window=int(cfg["window"]),
                         terminal_potential=cfg["terminal_potential"])
    out = Path(cfg["out"]) if cfg["out"] else None
    if out:
        write_sidecar(out, "train", cfg)
    for seed in cfg["seeds"]:
        _, curve = q_learning(env, cfg["reward"], task, int(cfg["episodes"]), seed, hp)
        path = out / f"curve_{cfg['reward']}_seed{seed}.csv" if out else None
        write_csv(path, ("episode", "F_mean", "F_std"), curve.rows(), {**cfg, "seed": seed})
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = effective(args, ["spec", "gamma", "eps"])
    task = load_task(existing(cfg["spec"], "spec file") if cfg["spec"] else data_path("specs", "griddrive.req"))
    configs = args.env_config or [str(data_path("envs", c)) for c in INVARIANCE_CONFIGS]
    ok = True
    for c in configs:
        mdp = GridDriveEnv.from_config(existing(c, "environment config")).transition_matrix()
        res = verify_invariance(task, mdp, float(cfg["gamma"]), float(cfg["eps"]))
        print(res.line())
        ok &= res.passed
    print("overall:", "PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_bench(args) -> int:
    keys = ["spec", "env", "env_config", "rewards", "seeds", "episodes", "eval_episodes", "horizon",
            "gamma", "alpha", "terminal_potential", "window", "comfort_cutoff", "out", "samples",
            "plan_horizon"]
    cfg = effective(args, keys)
    cfg["seeds"] = parse_seeds(cfg["seeds"])
    cfg["terminal_potential"] = cfg["terminal_potential"] or "keep"
    rewards = cfg["rewards"]
    if isinstance(rewards, str):
        rewards = [r for r in rewards.split(",") if r]
    bad = [r for r in rewards if r not in VARIANTS]
    if bad or not rewards:
        raise UsageError(f"unknown reward variants {bad}; choose from {VARIANTS}")
    cfg["rewards"] = rewards
    env = env_for(cfg)
    task = load_task(spec_for(cfg))
    n_eval = int(cfg["eval_episodes"])
    rows = []
    for variant in rewards:
        reports = []
        for seed in cfg["seeds"]:
            eval_seeds = range(seed * 100_003, seed * 100_003 + n_eval)
            if env.discrete:
                hp = QLearningConfig(alpha=float(cfg["alpha"]), gamma=float(cfg["gamma"]),
                                     window=int(cfg["window"]), terminal_potential=cfg["terminal_potential"])
                pol, _ = q_learning(env, variant, task, int(cfg["episodes"]), seed, hp)
                reports += evaluate_policy(env, pol, task, eval_seeds)
            else:
                sc = ShootingConfig(int(cfg["samples"]), int(cfg["plan_horizon"]), float(cfg["gamma"]))
                for s in eval_seeds:
                    rew = make_reward(variant, task, gamma=float(cfg["gamma"]), window=int(cfg["window"]),
                                      terminal_potential=cfg["terminal_potential"])
                    reports.append(pam(task, mpc_episode(env, rew, task, s, sc)))
        rates = aggregate(reports, float(cfg["comfort_cutoff"]))
        rows.append((variant, rates.S, rates.S_T, rates.S_T_C))
    out = Path(cfg["out"]) if cfg["out"] else None
    if out:
        write_sidecar(out, "bench", cfg)
    write_csv(out / "bench.csv" if out else None, ("reward", "S", "S_T", "S_T_C"), rows, cfg)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hprs", description="Hierarchical potential-based reward shaping toolkit.")
    p.add_argument("--version", action="version", version=f"hprs {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="parse and validate a requirements file")
    v.add_argument("spec")
    v.set_defaults(func=cmd_validate)

    m = sub.add_parser("monitor", help="evaluate requirements on a JSON-lines trace")
    m.add_argument("spec")
    m.add_argument("trace")
    m.add_argument("--horizon", type=int)
    m.add_argument("--combine", choices=("min", "mean"), default="min")
    m.add_argument("--out", help="CSV path (default stdout)")
    m.set_defaults(func=cmd_monitor)

    s = sub.add_parser("shape", help="per-step shaped and baseline rewards for a trace")
    s.add_argument("spec")
    s.add_argument("trace")
    s.add_argument("--config")
    s.add_argument("--horizon", type=int)
    s.add_argument("--gamma", type=float)
    s.add_argument("--window", type=int)
    s.add_argument("--combine", choices=("min", "mean"))
    s.add_argument("--terminal-potential", choices=("zero", "keep"))
    s.add_argument("--out")
    s.set_defaults(func=cmd_shape)

    def learning_flags(q):
        q.add_argument("--config", help="JSON file; flags override its values")
        q.add_argument("--spec")
        q.add_argument("--env", choices=sorted(DEFAULT_SPECS))
        q.add_argument("--env-config")
        q.add_argument("--seeds", help="e.g. 0,1,2 or 0..9 (fallback: $HPRS_SEED)")
        q.add_argument("--episodes", type=int)
        q.add_argument("--horizon", type=int)
        q.add_argument("--gamma", type=float)
        q.add_argument("--alpha", type=float)
        q.add_argument("--window", type=int)
        q.add_argument("--terminal-potential", choices=("zero", "keep"))
        q.add_argument("--out", help="output directory")

    t = sub.add_parser("train", help="tabular Q-learning; writes learning curves")
    learning_flags(t)
    t.add_argument("--reward", choices=VARIANTS)
    t.set_defaults(func=cmd_train)

    b = sub.add_parser("bench", help="success rates per reward variant")
    learning_flags(b)
    b.add_argument("--rewards", help="comma-separated variants (default: all)")
    b.add_argument("--eval-episodes", type=int)
    b.add_argument("--comfort-cutoff", type=float)
    b.add_argument("--samples", type=int, help="shooting samples per step (continuous envs)")
    b.add_argument("--plan-horizon", type=int)
    b.set_defaults(func=cmd_bench)

    i = sub.add_parser("verify-invariance", help="check optimal-policy invariance on grid MDPs")
    i.add_argument("--config")
    i.add_argument("--spec")
    i.add_argument("--env-config", action="append", help="grid config; repeatable (default: bundled)")
    i.add_argument("--gamma", type=float)
    i.add_argument("--eps", type=float)
    i.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"hprs {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SpecError as exc:
        print(exc.format(getattr(args, "spec", None) or "<spec>"), file=sys.stderr)
        return EXIT_FAIL
    except ConfigError as exc:
        print(f"hprs {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HPRSError as exc:
        print(f"hprs {args.command}: {exc.code}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
