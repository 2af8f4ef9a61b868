#!/usr/bin/env python3
"""Evaluate a policy checkpoint (or the scripted baseline) on the six fixed
scenarios and print a per-scenario table."""

import argparse
import json
import logging
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from dynpick.configs import load_config, reduced_task_config
from dynpick.evaluate import policy_fn_from_net, run_all_scenarios
from dynpick.policy import load_policy
from dynpick.scripted import ScriptedController


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--config", default=None)
    ap.add_argument("--policy", default=None, help="policy checkpoint (.pt)")
    ap.add_argument("--episodes", type=int, default=20, help="per scenario")
    ap.add_argument("--out", default=None, help="write the report here (JSON)")
    args = ap.parse_args()

    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = load_config(args.config) if args.config else reduced_task_config()
    if args.policy:
        net, _ = load_policy(args.policy, cfg.policy)
        factory = lambda env: policy_fn_from_net(net, env)
    else:
        def factory(env):
            ctl = ScriptedController(env)
            return lambda obs: ctl.act()

    report = run_all_scenarios(cfg, factory, episodes_per=args.episodes,
                               seed=args.seed)
    for name, m in report.items():
        print(f"{name:18s} success {m['success_rate']:6.2%}  "
              f"buckets {m['failure_buckets']}")
    if args.out:
        os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
        with open(args.out, "w") as f:
            json.dump(report, f, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
