"""Episode records: JSONL serialization, exact replay, and judged metrics.

One record holds everything needed to rebuild and re-run an episode
bit-for-bit: the episode spec and the raw action stream. A per-decision
state signature (poses, joints, object, reward) is stored alongside so a
replay can be checked for exact agreement rather than trusted.
"""

from __future__ import annotations

import dataclasses
import json
import math

from .episodes import EpisodeSpec
from .task_env import PickPlaceEnv

RECORD_FORMAT = "pickplace-records"
RECORD_VERSION = 1

# outcome -> failure bucket; success is not a bucket
FAILURE_BUCKETS = {
    "dropped": "grasp_slip",
    "floor": "grasp_slip",
    "toppled": "tip_over",
    "timeout": "timeout",
    "workspace": "timeout",
    "off_center": "off_center",
    "disturbed": "retreat_disturb",
}

SIGNATURE_KEYS = (
    "base_x", "base_y", "base_yaw", "base_h",
    "q0", "q1", "q2", "q3", "q4", "q5",
    "ee_x", "ee_y", "ee_z",
    "obj_x", "obj_y", "obj_z",
    "attached", "phase", "reward",
)


def state_signature(env: PickPlaceEnv, reward: float) -> list:
    w = env.world
    return [w.base_x, w.base_y, w.base_yaw, w.base_h,
            w.q[0], w.q[1], w.q[2], w.q[3], w.q[4], w.q[5],
            w.ee_pos[0], w.ee_pos[1], w.ee_pos[2],
            w.obj.x, w.obj.y, w.obj.z,
            1.0 if w.attached else 0.0, float(env.phase), reward]


def record_episode(env: PickPlaceEnv, spec: EpisodeSpec, policy_fn,
                   signature_every: int = 1) -> dict:
    """Run one episode under ``policy_fn(obs) -> raw action`` and record it."""
    obs = env.reset(spec)
    actions = []
    signatures = {}
    done = False
    total = 0.0
    while not done:
        raw = policy_fn(obs)
        raw = [float(v) for v in raw]
        obs, reward, done, info = env.step(raw)
        actions.append(raw)
        total += reward
        t = env.t_decision - 1
        if signature_every and (t % signature_every == 0 or done):
            signatures[str(t)] = state_signature(env, reward)
    stats = env.episode_stats()
    return {
        "spec": dataclasses.asdict(spec),
        "actions": actions,
        "signatures": signatures,
        "outcome": stats["outcome"],
        "return": total,
        "stats": _plain(stats),
    }


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, float) and math.isinf(obj):
        return None
    if hasattr(obj, "item"):
        return obj.item()
    return obj


def spec_from_dict(d: dict) -> EpisodeSpec:
    d = dict(d)
    d["levels"] = tuple(d.get("levels", (0.10, 0.10, 0.10)))
    return EpisodeSpec(**d)


def write_records(path: str, records: list, config: dict | None = None) -> None:
    """Write a header line then one record per line. ``config`` (a plain-dict
    experiment configuration) makes the file self-contained for replay."""
    header = {"format": RECORD_FORMAT, "version": RECORD_VERSION,
              "episodes": len(records)}
    if config is not None:
        header["config"] = config
    with open(path, "w") as f:
        f.write(json.dumps(header) + "\n")
        for rec in records:
            f.write(json.dumps(rec) + "\n")


def read_record_file(path: str) -> tuple:
    """(header, records), enforcing the version header on the first line."""
    with open(path) as f:
        first = f.readline().strip()
        if not first:
            raise ValueError(f"{path}: empty record file")
        header = json.loads(first)
        if not isinstance(header, dict) or header.get("format") != RECORD_FORMAT:
            raise ValueError(f"{path}: missing record version header")
        if header.get("version") != RECORD_VERSION:
            raise ValueError(
                f"{path}: record version {header.get('version')} is not "
                f"supported (expected {RECORD_VERSION})")
        out = []
        for line in f:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return header, out


def read_records(path: str) -> list:
    return read_record_file(path)[1]


def replay_record(env: PickPlaceEnv, rec: dict) -> dict:
    """Re-run a record's actions and compare state signatures exactly.

    Returns {"match": bool, "first_divergence": t or None, "max_abs_diff": x}.
    Divergence is judged bitwise: any signature element that is not equal as
    a float64 counts.
    """
    spec = spec_from_dict(rec["spec"])
    env.reset(spec)
    max_diff = 0.0
    first_div = None
    done = False
    for t, raw in enumerate(rec["actions"]):
        if done:
            first_div = first_div if first_div is not None else t
            break
        _, reward, done, _ = env.step(raw)
        key = str(t)
        if key in rec["signatures"]:
            got = state_signature(env, reward)
            want = rec["signatures"][key]
            for g, w_ in zip(got, want):
                d = abs(g - w_)
                if d > max_diff:
                    max_diff = d
                if g != w_ and first_div is None:
                    first_div = t
    outcome_match = env.episode_stats()["outcome"] == rec["outcome"]
    match = first_div is None and max_diff == 0.0 and outcome_match
    return {"match": match, "first_divergence": first_div,
            "max_abs_diff": max_diff, "outcome_match": outcome_match}


_PHYSICAL_ABORTS = ("workspace", "toppled", "floor", "dropped")


def judge_record(rec: dict) -> str:
    """Recompute the outcome from a record's final-state summary.

    The placement/retreat judgement, disturbance, and timeout are re-derived
    from logged numbers; physical aborts (toppling, floor contact, slip-out,
    workspace exit) are direct event reports and pass through.
    """
    st = rec["stats"]
    if st["release_success"]:
        if st["final_placed"] and st["final_place_err"] <= rec["spec"]["place_tol"]:
            return "success"
        return "off_center"
    if rec["outcome"] in _PHYSICAL_ABORTS:
        return rec["outcome"]
    if st["disturbed"]:
        return "disturbed"
    return "timeout"


def judge_records(records: list) -> dict:
    """Aggregate metrics over a batch of records."""
    n = len(records)
    outcomes: dict[str, int] = {}
    succ_times = []
    place_errs = []
    dynamic_grasps = 0
    grasped = 0
    for rec in records:
        st = rec["stats"]
        outcomes[rec["outcome"]] = outcomes.get(rec["outcome"], 0) + 1
        if rec["outcome"] == "success" and st.get("completion_time_s") is not None:
            succ_times.append(st["completion_time_s"])
        if st.get("place_err") is not None:
            place_errs.append(st["place_err"])
        if st.get("t_grasp", -1) >= 0:
            grasped += 1
            if st.get("dynamic_grasp"):
                dynamic_grasps += 1
    n_success = outcomes.get("success", 0)
    buckets = {b: 0 for b in
               ("grasp_slip", "tip_over", "timeout", "off_center",
                "retreat_disturb")}
    for outcome, count in outcomes.items():
        if outcome != "success":
            buckets[FAILURE_BUCKETS[outcome]] += count
    t_mean = sum(succ_times) / len(succ_times) if succ_times else None
    t_std = (math.sqrt(sum((t - t_mean) ** 2 for t in succ_times)
                       / len(succ_times)) if succ_times else None)
    return {
        "episodes": n,
        "outcomes": outcomes,
        "success_rate": n_success / n if n else 0.0,
        "failures": n - n_success,
        "failure_buckets": buckets,
        "grasp_rate": grasped / n if n else 0.0,
        "completion_time_mean_s": t_mean,
        "completion_time_std_s": t_std,
        "mean_place_err": (sum(place_errs) / len(place_errs)
                           if place_errs else None),
        "dynamic_grasp_frac": (dynamic_grasps / grasped if grasped else 0.0),
    }
