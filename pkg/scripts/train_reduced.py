#!/usr/bin/env python3
"""Train a policy on the reduced desk task, then evaluate it.

Phase A trains at fixed difficulty within a wall-clock budget and evaluates
against the random and do-nothing baselines. Phase B (optional) continues the
same policy with the curriculum enabled to exercise level advancement.
"""

import argparse
import json
import logging
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from dynpick.configs import reduced_task_config, save_config
from dynpick.evaluate import (do_nothing_policy, policy_fn_from_net,
                              random_policy, run_eval)
from dynpick.training import Trainer


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="runs/reduced")
    ap.add_argument("--iters", type=int, default=1200)
    ap.add_argument("--budget-min", type=float, default=25.0,
                    help="phase A wall-clock budget [minutes]")
    ap.add_argument("--eval-episodes", type=int, default=200)
    ap.add_argument("--curriculum-iters", type=int, default=0,
                    help="phase B iterations with the curriculum enabled")
    args = ap.parse_args()

    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = reduced_task_config(seed=args.seed)
    cfg.train.iters = args.iters
    os.makedirs(args.out, exist_ok=True)
    save_config(cfg, os.path.join(args.out, "config.yaml"))

    trainer = Trainer(cfg, out_dir=args.out)
    summary = trainer.train(time_budget_s=args.budget_min * 60.0)
    print("phase A:", json.dumps(summary, indent=2))

    net = trainer.net
    report = {"train": summary}
    for name, factory in (
        ("policy", lambda env: policy_fn_from_net(net, env)),
        ("random", lambda env, f=random_policy(args.seed): f),
        ("do_nothing", lambda env: do_nothing_policy(env)),
    ):
        metrics = run_eval(cfg, factory, args.eval_episodes, seed=args.seed + 1)
        report[name] = metrics
        print(f"{name}: success {metrics['success_rate']:.2%} over "
              f"{metrics['episodes']} episodes")

    if args.curriculum_iters > 0:
        trainer.cfg.train.curriculum_enabled = True
        summary_b = trainer.train(iters=args.curriculum_iters)
        report["curriculum"] = summary_b
        print("phase B:", json.dumps(summary_b, indent=2))

    trainer.close()
    with open(os.path.join(args.out, "report.json"), "w") as f:
        json.dump(report, f, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
