#!/usr/bin/env python3
"""Pretrain the payload estimator on synthetic carry episodes and report
release-moment mass errors for a sweep of payloads."""

import argparse
import json
import logging
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from dynpick.configs import reduced_task_config
from dynpick.est_pretrain import evaluate_release_estimates, pretrain
from dynpick.estimator import save_estimator


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="runs/estimator")
    ap.add_argument("--episodes", type=int, default=2200)
    ap.add_argument("--steps", type=int, default=1500)
    args = ap.parse_args()

    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = reduced_task_config(seed=args.seed)
    net, report = pretrain(cfg, episodes=args.episodes, steps=args.steps,
                           seed=args.seed)
    errs = evaluate_release_estimates(cfg, net)
    report["release_estimates"] = errs

    os.makedirs(args.out, exist_ok=True)
    save_estimator(os.path.join(args.out, "estimator.pt"), net)
    with open(os.path.join(args.out, "report.json"), "w") as f:
        json.dump(report, f, indent=2)
    print(json.dumps(errs, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
