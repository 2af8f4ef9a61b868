"""Command-line entry point: train, eval, replay, inspect-reward, gen-arm-motions."""

from __future__ import annotations

import argparse
import json
import logging
import os
import random
import sys

from .arm_motion import plan_table, sample_plan
from .configs import (ExperimentConfig, config_from_dict, config_to_dict,
                      load_config, reduced_task_config, save_config)
from .episodes import SCENARIO_NAMES

log = logging.getLogger("dynpick")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None,
                   help="master seed (overrides the config)")
    p.add_argument("--config", default=None,
                   help="experiment configuration file (YAML)")
    p.add_argument("--out", default=None,
                   help="output directory or file, depending on the command")
    p.add_argument("--log-level", default="info",
                   choices=("debug", "info", "warning", "error"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dynpick",
        description="Dynamic pick-and-place: simulator, rewards, RL harness.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run PPO training")
    _add_common(p)
    p.add_argument("--envs", type=int, default=None,
                   help="number of parallel environments")
    p.add_argument("--iters", type=int, default=None,
                   help="training iterations")
    p.add_argument("--resume", default=None,
                   help="policy checkpoint to continue from")

    p = sub.add_parser("eval", help="evaluate a policy over episodes")
    _add_common(p)
    p.add_argument("--policy", default=None, help="policy checkpoint (.pt)")
    p.add_argument("--estimator", default=None,
                   help="payload estimator checkpoint (.pt)")
    p.add_argument("--baseline", default=None,
                   choices=("random", "do-nothing", "scripted"),
                   help="built-in baseline instead of a checkpoint")
    p.add_argument("--episodes", type=int, default=100)
    p.add_argument("--scenario", default=None,
                   choices=SCENARIO_NAMES,
                   help="fixed scenario instead of sampled tasks")
    p.add_argument("--record", default=None,
                   help="write episode records to this file")
    p.add_argument("--signature-every", type=int, default=1,
                   help="state-signature stride in recorded episodes")

    p = sub.add_parser("replay", help="re-run recorded episodes and diff them")
    _add_common(p)
    p.add_argument("--records", required=True, help="record file to replay")

    p = sub.add_parser("inspect-reward",
                       help="replay one recorded episode, print each step's "
                            "reward terms")
    _add_common(p)
    p.add_argument("--records", required=True, help="record file")
    p.add_argument("--episode", type=int, default=0,
                   help="episode index within the file")

    p = sub.add_parser("gen-arm-motions",
                       help="sample random arm motion plans and emit "
                            "(t, q, qd) tables")
    _add_common(p)
    p.add_argument("--plans", type=int, default=10)
    p.add_argument("--dt", type=float, default=0.02,
                   help="table sampling step [s]")
    return parser


def _setup_logging(level: str) -> None:
    logging.basicConfig(level=getattr(logging, level.upper()),
                        format="%(levelname)s %(name)s: %(message)s")


def _load_cfg(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else reduced_task_config()
    if args.seed is not None:
        cfg.train.seed = args.seed
    return cfg


def _emit(obj: dict, out: str | None) -> None:
    text = json.dumps(obj, indent=2)
    print(text)
    if out:
        os.makedirs(os.path.dirname(out) or ".", exist_ok=True)
        with open(out, "w") as f:
            f.write(text + "\n")


# ----------------------------------------------------------------------
# subcommands


def cmd_train(args) -> int:
    from .policy import load_policy
    from .training import Trainer

    cfg = _load_cfg(args)
    if args.envs is not None:
        cfg.train.n_envs = args.envs
    if args.iters is not None:
        cfg.train.iters = args.iters
    trainer = Trainer(cfg, out_dir=args.out)
    if args.resume:
        net, meta = load_policy(args.resume, cfg.policy)
        trainer.net.load_state_dict(net.state_dict())
        log.info("resumed policy from %s (meta %s)", args.resume, meta)
    if args.out:
        save_config(cfg, os.path.join(args.out, "config.yaml"))
    try:
        summary = trainer.train()
    finally:
        trainer.close()
    print(json.dumps(summary, indent=2))
    return 0


def _policy_factory(args, cfg):
    from .evaluate import do_nothing_policy, policy_fn_from_net, random_policy
    from .policy import load_policy

    seed = cfg.train.seed
    if args.baseline == "random":
        fn = random_policy(seed)
        return lambda env: fn
    if args.baseline == "do-nothing":
        return lambda env: do_nothing_policy(env)
    if args.baseline == "scripted":
        from .scripted import ScriptedController

        def factory(env):
            ctl = ScriptedController(env)
            return lambda obs: ctl.act()

        return factory
    if not args.policy:
        raise SystemExit("eval needs --policy or --baseline")
    net, _ = load_policy(args.policy, cfg.policy)
    estimator = None
    if args.estimator:
        from .estimator import load_estimator
        estimator = load_estimator(args.estimator)
    return lambda env: policy_fn_from_net(net, env, estimator)


def cmd_eval(args) -> int:
    from .evaluate import run_eval

    cfg = _load_cfg(args)
    factory = _policy_factory(args, cfg)
    metrics = run_eval(cfg, factory, args.episodes, seed=cfg.train.seed,
                       scenario=args.scenario, record_path=args.record,
                       signature_every=args.signature_every)
    _emit(metrics, args.out)
    return 0


def _env_from_header(args, header: dict):
    from .task_env import PickPlaceEnv

    if args.config:
        cfg = load_config(args.config)
    elif "config" in header:
        cfg = config_from_dict(header["config"])
    else:
        cfg = reduced_task_config()
    return PickPlaceEnv(cfg)


def cmd_replay(args) -> int:
    from .records import read_record_file, replay_record

    header, records = read_record_file(args.records)
    env = _env_from_header(args, header)
    divergences = []
    for k, rec in enumerate(records):
        result = replay_record(env, rec)
        if not result["match"]:
            divergences.append({"episode": k, **result})
    report = {"episodes": len(records), "divergences": divergences,
              "match": not divergences}
    _emit(report, args.out)
    return 0 if not divergences else 1


def cmd_inspect_reward(args) -> int:
    from .records import read_record_file, spec_from_dict

    header, records = read_record_file(args.records)
    if not 0 <= args.episode < len(records):
        raise SystemExit(f"episode {args.episode} out of range "
                         f"(file holds {len(records)})")
    rec = records[args.episode]
    env = _env_from_header(args, header)
    env.reset(spec_from_dict(rec["spec"]))
    lines = []
    totals = {}
    for t, raw in enumerate(rec["actions"]):
        _, reward, done, info = env.step(raw)
        row = {"t": t, "phase": info["phase"], "reward": round(reward, 6),
               "terms": {k: round(v, 6) for k, v in info["terms"].items() if v}}
        lines.append(row)
        for k, v in info["terms"].items():
            totals[k] = totals.get(k, 0.0) + v
        if done:
            break
    out_f = open(args.out, "w") if args.out else sys.stdout
    try:
        for row in lines:
            out_f.write(json.dumps(row) + "\n")
        summary = {"episode": args.episode, "outcome": env.outcome,
                   "return": round(sum(r["reward"] for r in lines), 6),
                   "term_totals": {k: round(v, 6)
                                   for k, v in sorted(totals.items())}}
        out_f.write(json.dumps(summary) + "\n")
    finally:
        if args.out:
            out_f.close()
    return 0


def cmd_gen_arm_motions(args) -> int:
    cfg = _load_cfg(args)
    rng = random.Random(cfg.train.seed)
    limits = (cfg.arm.lower, cfg.arm.upper)
    out_f = open(args.out, "w") if args.out else sys.stdout
    try:
        out_f.write(json.dumps({"format": "arm-motion-plans", "version": 1,
                                "plans": args.plans, "dt": args.dt}) + "\n")
        for k in range(args.plans):
            plan = sample_plan(rng, limits)
            out_f.write(json.dumps({
                "type": "plan", "plan": k,
                "payload_mass": plan.payload_mass,
                "joints": [{"joint_index": j.joint_index, "q_init": j.q_init,
                            "q_target": j.q_target, "duration": j.duration,
                            "mode": j.mode} for j in plan.joints],
            }) + "\n")
            for t, q, qd in plan_table(plan, args.dt):
                out_f.write(json.dumps({"type": "sample", "plan": k,
                                        "t": round(t, 9), "q": list(q),
                                        "qd": list(qd)}) + "\n")
    finally:
        if args.out:
            out_f.close()
    return 0


COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "replay": cmd_replay,
    "inspect-reward": cmd_inspect_reward,
    "gen-arm-motions": cmd_gen_arm_motions,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging(args.log_level)
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
