"""Configuration dataclasses for the simulator, rewards, curriculum, and training."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import yaml

TWO_PI = 6.283185307179586
PI = 3.141592653589793


@dataclass
class SimParams:
    """Plant-level physical and timing parameters."""

    dt: float = 0.01                  # simulation step [s]
    gravity: float = 9.81

    # Base command tracking (first-order lags, exactly discretized).
    tau_track: float = 0.15           # planar velocity / yaw rate lag [s]
    tau_body: float = 0.25            # body height and pitch lag [s]
    base_height: float = 0.50         # nominal standing height [m]

    # Command limits: raw policy outputs are affinely mapped into these.
    vx_min: float = -1.0
    vx_max: float = 2.0
    vy_abs: float = 1.0
    wz_abs: float = 1.0
    dh_min: float = -0.20
    dh_max: float = 0.0
    pitch_abs: float = 0.28

    # Payload reaction: base velocity disturbance proportional to payload
    # mass times end-effector acceleration, low-pass filtered.
    kappa_dist: float = 0.020         # [s/kg] planar coupling gain
    kappa_rot: float = 0.030          # [rad·s/(kg·m)] yaw coupling gain
    tau_dist: float = 0.10            # disturbance filter time constant [s]

    # Grasping.
    r_grasp: float = 0.03             # max EE-to-object distance at closure [m]
    v_grasp: float = 0.30             # max EE-to-object relative speed at closure [m/s]
    kappa_bump: float = 0.1           # attached-object slip per unit EE accel [s^2 scale]

    # Placement and toppling.
    theta_settle: float = 0.35        # max tilt at touchdown that still settles [rad]
    c_tip: float = 2.0                # touchdown speed scale vs. aspect ratio w/h
    rest_band_below: float = 0.02     # attached object counts as resting this far below table top
    rest_band_above: float = 0.01     # ... and this far above

    # Contact model.
    k_table: float = 1000.0           # spring constant for EE-table penetration [N/m]

    workspace_radius: float = 6.0     # hard spatial bound for episode abort [m]


@dataclass
class ArmParams:
    """Serial 6-DOF arm: kinematics, limits, tracking dynamics, mass model."""

    mount: tuple = (0.15, 0.0, 0.10)  # arm base offset from base-body center [m]
    # Joint rotation axes in the local frame ('z' yaw, 'y' pitch).
    axes: tuple = ("z", "y", "y", "y", "z", "y")
    # Fixed translation applied after each joint, in its rotated frame [m].
    links: tuple = (
        (0.0, 0.0, 0.06),
        (0.28, 0.0, 0.0),
        (0.25, 0.0, 0.0),
        (0.09, 0.0, 0.0),
        (0.05, 0.0, 0.0),
        (0.07, 0.0, 0.0),
    )
    lower: tuple = (-2.6, -0.6, -2.8, -1.6, -2.6, -1.6)
    upper: tuple = (2.6, 2.6, 0.0, 1.6, 2.6, 1.6)
    nominal: tuple = (0.0, 1.0, -1.4, 0.0, 0.0, 0.0)

    omega_n: float = 12.0             # critically damped tracking bandwidth [rad/s]
    vel_limit: float = 3.2            # joint speed limit [rad/s]
    tau_max: tuple = (30.0, 60.0, 40.0, 15.0, 8.0, 5.0)   # actuator torque limits [N·m]
    inertia: tuple = (0.35, 0.90, 0.55, 0.08, 0.05, 0.03)  # effective joint inertias [kg·m^2]
    # Point masses lumped at each link's distal end (last one includes gripper) [kg].
    link_masses: tuple = (0.6, 1.2, 0.8, 0.3, 0.2, 0.4)


@dataclass
class RewardConfig:
    """Coefficients and geometry for the staged reward machine."""

    # Stage-gated shaping and bonus terms. Bonuses are sized so that finishing
    # the task always beats camping on any dense shaping stream under the
    # training discount.
    k1: float = 1.0      # EE-to-object, sharp Gaussian
    k2: float = 1.0      # EE-to-object, wide Gaussian
    k3: float = 0.5      # EE-object contact indicator
    k4: float = 50.0     # grasp bonus (per indicator: in-gripper, secured lift)
    k5: float = 0.3      # base heading alignment toward the place table
    k6: float = 1.0      # object-to-place keypoints, wide Gaussian
    k7: float = 1.0      # object-to-place keypoints, sharp Gaussian
    k8: float = 0.5      # base-to-place approach
    k9: float = 200.0    # place success bonus
    k10: float = 100.0   # gripper release bonus
    k11: float = 0.5     # base retreat shaping
    k12: float = 1.0     # EE retreat shaping
    k13: float = 200.0   # completion bonus (paid as release + 2*retreat)
    # Always-on penalty groups (applied with negative sign).
    k14: float = 0.002   # arm joint speed, L1
    k15: float = 0.02    # arm action rate
    k16: float = 0.0005  # arm torque, L1
    k17: float = 0.005   # arm posture deviation from nominal, L1
    k18: float = 0.05    # joints near position limits, count
    k19: float = 0.05    # base vertical speed squared + pitch rate
    k20: float = 0.05    # velocity-command rate, squared
    k21: float = 0.05    # velocity-command second difference, squared
    k22: float = 0.005   # motion effort: (1 + |body cmd|^2) * |velocity cmd|
    k23: float = 0.1     # body-command rate, squared
    k24: float = 0.1     # body-command second difference, squared
    k25: float = 0.01    # body-command magnitude, squared
    k26: float = 0.002   # EE-table contact force, squared
    k27: float = 0.5     # upright alignment near the place target

    contact_radius: float = 0.08      # EE counts as "above" a table within this planar margin [m]
    delta_home: float = 0.15          # arm-returned threshold on joint-space distance [rad]
    near_limit_frac: float = 0.05     # fraction of joint range that counts as "near limit"


@dataclass
class CurriculumParams:
    """Three-track tolerance schedule with synchronized advancement."""

    init_level: float = 0.10
    level_step: float = 0.01
    period: int = 50                  # iterations per advancement check
    pick_threshold: float = 0.90      # strict > comparisons
    place_threshold: float = 0.85
    release_threshold: float = 0.85
    sync_margin: float = 0.015        # |L_pick - L_place| must stay within this
    level_max: float = 1.0


@dataclass
class TaskRanges:
    """Episode sampling ranges for tasks, objects, and tables."""

    pick_dist: tuple = (0.9, 3.0)     # robot start to pick table [m]
    place_dist: tuple = (0.5, 3.0)    # robot start to place table [m]
    pick_height: tuple = (0.0, 1.3)   # table top heights [m]
    place_height: tuple = (0.0, 1.3)
    object_yaw: tuple = (0.0, PI)
    box_width: tuple = (0.03, 0.05)
    cyl_diameter: tuple = (0.04, 0.07)
    obj_height: tuple = (0.06, 0.10)
    mass: tuple = (0.2, 2.3)
    table_radius: float = 0.10
    table_gap_min: float = 0.25       # min pick-to-place table separation [m]
    robot_place_gap_min: float = 0.45  # min robot-start to place-table distance [m]

    # Level-indexed difficulty anchors: tolerance(level) interpolates easy -> hard.
    place_tol_easy: float = 0.12      # placement radius at level 0 [m]
    place_tol_hard: float = 0.05      # ... at level 1 [m]
    retreat_easy: float = 0.05        # required retreat distance at level 0 [m]
    retreat_hard: float = 0.10        # ... at level 1 [m]

    # Optional overrides for reduced presets (None keeps the sampled value).
    fixed_pick_height: float | None = None
    fixed_place_height: float | None = None
    fixed_mass: float | None = None
    cylinder_only: bool = False


@dataclass
class TaskParams:
    """Episode-level predicates and timing."""

    horizon_s: float = 10.0
    decision_interval: int = 2        # sim steps per high-level action
    history_len: int = 10             # stacked past decisions in the observation
    lift_threshold: float = 0.03      # secured-lift height above table top [m]
    disturb_limit: float = 0.01       # object motion after release that spoils retreat [m]


@dataclass
class EstimatorParams:
    """Recurrent payload estimator."""

    hidden_size: int = 24
    num_layers: int = 2
    lr: float = 1e-3
    mass_min: float = 0.0
    mass_max: float = 3.0
    mass_prior: float = 1.25          # mean of the sampled mass range, used before contact
    contact_weight: float = 1.0
    mass_weight: float = 1.0


@dataclass
class PolicyParams:
    """Actor-critic network shapes."""

    actor_widths: tuple = (128, 128, 64)
    critic_widths: tuple = (128, 128, 64)
    init_log_std: float = -0.5
    negative_slope: float = 0.01      # LeakyReLU


@dataclass
class PPOParams:
    gamma: float = 0.996
    lam: float = 0.95
    clip: float = 0.2
    epochs: int = 4
    minibatches: int = 4
    lr: float = 3e-4
    vf_coef: float = 0.5
    ent_coef: float = 0.003
    max_grad_norm: float = 1.0
    normalize_adv: bool = True


@dataclass
class TrainParams:
    n_envs: int = 64
    rollout_len: int = 128            # high-level steps per env per iteration
    iters: int = 400
    seed: int = 0
    curriculum_enabled: bool = False
    estimator_enabled: bool = True
    estimator_updates: int = 2        # estimator gradient steps per iteration
    log_every: int = 10
    checkpoint_every: int = 50
    time_budget_s: float | None = None


@dataclass
class ExperimentConfig:
    """Top-level bundle; what the CLI loads from and dumps to YAML."""

    sim: SimParams = field(default_factory=SimParams)
    arm: ArmParams = field(default_factory=ArmParams)
    reward: RewardConfig = field(default_factory=RewardConfig)
    curriculum: CurriculumParams = field(default_factory=CurriculumParams)
    ranges: TaskRanges = field(default_factory=TaskRanges)
    task: TaskParams = field(default_factory=TaskParams)
    estimator: EstimatorParams = field(default_factory=EstimatorParams)
    policy: PolicyParams = field(default_factory=PolicyParams)
    ppo: PPOParams = field(default_factory=PPOParams)
    train: TrainParams = field(default_factory=TrainParams)


def _to_plain(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, tuple):
        return [_to_plain(v) for v in obj]
    if isinstance(obj, list):
        return [_to_plain(v) for v in obj]
    return obj


def _from_plain(cls, data: dict):
    kwargs = {}
    hints = {f.name: f for f in dataclasses.fields(cls)}
    for key, value in data.items():
        if key not in hints:
            raise KeyError(f"unknown config key {key!r} for {cls.__name__}")
        f = hints[key]
        if dataclasses.is_dataclass(f.type) or (isinstance(f.type, str) and f.type in _SECTION_TYPES):
            sub_cls = _SECTION_TYPES[f.type] if isinstance(f.type, str) else f.type
            kwargs[key] = _from_plain(sub_cls, value)
        elif isinstance(value, list):
            kwargs[key] = tuple(tuple(v) if isinstance(v, list) else v for v in value)
        else:
            kwargs[key] = value
    return cls(**kwargs)


_SECTION_TYPES = {
    "SimParams": SimParams,
    "ArmParams": ArmParams,
    "RewardConfig": RewardConfig,
    "CurriculumParams": CurriculumParams,
    "TaskRanges": TaskRanges,
    "TaskParams": TaskParams,
    "EstimatorParams": EstimatorParams,
    "PolicyParams": PolicyParams,
    "PPOParams": PPOParams,
    "TrainParams": TrainParams,
}


def save_config(cfg: ExperimentConfig, path: str) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(_to_plain(cfg), fh, sort_keys=False)


def load_config(path: str) -> ExperimentConfig:
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    return _from_plain(ExperimentConfig, data)


def config_from_dict(data: dict) -> ExperimentConfig:
    return _from_plain(ExperimentConfig, data)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return _to_plain(cfg)


def reduced_task_config(seed: int = 0) -> ExperimentConfig:
    """Fixed-difficulty desk preset: levels at 0.10, mass 0.5 kg, bench-height tables."""
    cfg = ExperimentConfig()
    cfg.ranges.fixed_pick_height = 0.60
    cfg.ranges.fixed_place_height = 0.60
    cfg.ranges.fixed_mass = 0.5
    cfg.ranges.cylinder_only = True
    cfg.ranges.pick_dist = (0.9, 1.6)
    cfg.ranges.place_dist = (0.5, 1.6)
    cfg.train.seed = seed
    cfg.train.curriculum_enabled = False
    cfg.train.estimator_enabled = False   # mass is fixed; nothing to infer
    return cfg


def full_task_config(seed: int = 0) -> ExperimentConfig:
    """Full sampling ranges with the curriculum enabled."""
    cfg = ExperimentConfig()
    cfg.train.seed = seed
    cfg.train.curriculum_enabled = True
    cfg.policy.actor_widths = (512, 512, 128)
    cfg.policy.critic_widths = (512, 512, 128)
    return cfg
