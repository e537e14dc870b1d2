"""Deterministic analytic environments mapping controllers to outcomes.

Two skill environments share a 5-joint arm (base yaw plus four in-plane
revolute joints, analytic forward kinematics):

* throw    -- a ball held in the gripper is released at the end of the motion
              and integrated ballistically to the ground; outcome = landing (x, y) in m.
* joystick -- the gripper sweep may deflect a stick; outcome = (pitch, roll)
              in rad from a clipped linear response to the deepest penetration.

A toy observation-emitting reaching task (reach2d) renders 16x16 frames for
representation learning, and a kinematic point-mass task family (pusherlike /
throwerlike / strikerlike) hosts cross-task policy transfer.  All geometry is
a desk-scale stand-in chosen for cheap, closed-form evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import (
    ControllerParams,
    DimensionError,
    JointTrajectory,
    Outcome,
    clamp,
    decode,
    eval_trajectory,
)

__all__ = [
    "EnvironmentSpec",
    "RealityGap",
    "Obstacle",
    "ObservationFrame",
    "NOMINAL_GAP",
    "make_env",
    "load_env_config",
    "theta_bounds",
    "execute",
    "make_executor",
    "collides",
    "quality",
    "reach_reset",
    "reach_step",
    "render_frame",
    "transfer_task",
    "policy_shapes",
    "unflatten_policy",
    "flatten_policy",
]

SKILL_KINDS = ("throw", "joystick")
TRANSFER_KINDS = ("pusherlike", "throwerlike", "strikerlike")
KINDS = SKILL_KINDS + ("reach2d",) + TRANSFER_KINDS

N_JOINTS = 5
COEFF_BOUND = 1.0
JOINT_LIMIT = 2.5  # rad, symmetric per joint

REACH_ACTIONS = 6          # +x, -x, +y, -y, +z-noop, -z-noop
REACH_STEP = 0.05
REACH_TOUCH_RADIUS = 0.1
FRAME_SIZE = 16


@dataclass(frozen=True)
class RealityGap:
    """Systematic perturbation applied at execution time.

    The nominal gap (scale 1, zero bias) leaves execution unchanged.
    """

    gravity_scale: float = 1.0
    joint_bias: np.ndarray = field(default_factory=lambda: np.zeros(N_JOINTS))
    link_scale: float = 1.0

    def __post_init__(self):
        if self.gravity_scale <= 0:
            raise ValueError("gravity_scale must be positive")
        object.__setattr__(self, "joint_bias", np.asarray(self.joint_bias, dtype=float))

    @property
    def is_nominal(self) -> bool:
        return (
            self.gravity_scale == 1.0
            and self.link_scale == 1.0
            and not np.any(self.joint_bias)
        )


NOMINAL_GAP = RealityGap()


@dataclass(frozen=True)
class Obstacle:
    """Axis-aligned rectangular wall in the vertical (x, z) plane.

    The wall extends infinitely along y; a point collides when its (x, z)
    coordinates fall inside the rectangle.
    """

    center: tuple[float, float]
    width: float
    height: float

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("obstacle extents must be positive")

    def contains(self, x, z) -> np.ndarray:
        cx, cz = self.center
        return (
            (np.abs(np.asarray(x) - cx) <= self.width / 2.0)
            & (np.abs(np.asarray(z) - cz) <= self.height / 2.0)
        )


@dataclass(frozen=True)
class ObservationFrame:
    """16x16 grayscale frame plus the ground truth used only for evaluation."""

    grid: np.ndarray
    gripper: np.ndarray
    target: np.ndarray
    reward: int

    def flat(self) -> np.ndarray:
        return self.grid.reshape(-1)


@dataclass(frozen=True)
class EnvironmentSpec:
    """Immutable description of one environment instance."""

    kind: str
    link_lengths: np.ndarray = field(
        default_factory=lambda: np.array([0.4, 0.3, 0.2, 0.1])
    )
    base_height: float = 0.8
    joystick_pos: np.ndarray = field(default_factory=lambda: np.array([0.5, 0.0, 1.1]))
    joystick_radius: float = 0.15
    joystick_gain: float = 8.0
    max_tilt: float = math.pi / 6.0
    gravity: float = 9.81
    step: float = 0.01
    duration: float = 1.0
    perturb_sigma: float = 0.02   # joystick robustness probe, fraction of range
    perturb_count: int = 5

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown environment kind {self.kind!r}")
        object.__setattr__(self, "link_lengths", np.asarray(self.link_lengths, dtype=float))
        object.__setattr__(self, "joystick_pos", np.asarray(self.joystick_pos, dtype=float))
        if np.any(self.link_lengths <= 0):
            raise ValueError("link lengths must be positive")
        if self.step <= 0:
            raise ValueError("integration step must be positive")

    @property
    def dim_params(self) -> int:
        if self.kind in SKILL_KINDS:
            return 3 * N_JOINTS
        raise ValueError(f"{self.kind} has no controller parameterization")

    @property
    def dim_outcome(self) -> int:
        if self.kind in SKILL_KINDS:
            return 2
        raise ValueError(f"{self.kind} has no outcome space")

    @property
    def joint_limits(self) -> np.ndarray:
        lim = np.full((N_JOINTS, 2), JOINT_LIMIT)
        lim[:, 0] *= -1.0
        return lim


def make_env(kind: str, **overrides) -> EnvironmentSpec:
    """Environment with documented defaults for the given kind."""
    return EnvironmentSpec(kind=kind, **overrides)


def theta_bounds(env: EnvironmentSpec) -> np.ndarray:
    """Per-dimension [lo, hi] for controller coefficients."""
    b = np.empty((env.dim_params, 2))
    b[:, 0] = -COEFF_BOUND
    b[:, 1] = COEFF_BOUND
    return b


def new_params(env: EnvironmentSpec, values) -> ControllerParams:
    return ControllerParams(values=values, bounds=theta_bounds(env))


def random_params(env: EnvironmentSpec, rng: np.random.Generator) -> ControllerParams:
    b = theta_bounds(env)
    return ControllerParams(values=rng.uniform(b[:, 0], b[:, 1]), bounds=b)


# ---------------------------------------------------------------------------
# Arm kinematics
# ---------------------------------------------------------------------------

def _gripper_state(env: EnvironmentSpec, gap: RealityGap, angles, velocities):
    """Gripper position and velocity from joint angles/velocities.

    Joint 0 is the base yaw; joints 1..4 rotate in the yawed vertical plane,
    angles measured from vertical (rest pose points straight up).
    """
    links = env.link_lengths * gap.link_scale
    q = np.asarray(angles, dtype=float) + gap.joint_bias
    qd = np.asarray(velocities, dtype=float)
    yaw, yaw_d = q[0], qd[0]
    phi = np.cumsum(q[1:])
    phi_d = np.cumsum(qd[1:])
    r = float(np.sum(links * np.sin(phi)))
    z = env.base_height + float(np.sum(links * np.cos(phi)))
    r_d = float(np.sum(links * np.cos(phi) * phi_d))
    z_d = -float(np.sum(links * np.sin(phi) * phi_d))
    cos_y, sin_y = math.cos(yaw), math.sin(yaw)
    pos = np.array([r * cos_y, r * sin_y, z])
    vel = np.array(
        [
            r_d * cos_y - r * sin_y * yaw_d,
            r_d * sin_y + r * cos_y * yaw_d,
            z_d,
        ]
    )
    return pos, vel


def _arm_points(env: EnvironmentSpec, gap: RealityGap, angles) -> np.ndarray:
    """Joint positions (base to gripper) for collision sweeps."""
    links = env.link_lengths * gap.link_scale
    q = np.asarray(angles, dtype=float) + gap.joint_bias
    yaw = q[0]
    phi = np.cumsum(q[1:])
    r = np.concatenate([[0.0], np.cumsum(links * np.sin(phi))])
    z = env.base_height + np.concatenate([[0.0], np.cumsum(links * np.cos(phi))])
    cos_y, sin_y = math.cos(yaw), math.sin(yaw)
    return np.stack([r * cos_y, r * sin_y, z], axis=1)


def _trajectory(env: EnvironmentSpec, theta: ControllerParams) -> JointTrajectory:
    if theta.dim != env.dim_params:
        raise DimensionError(
            f"{env.kind} expects {env.dim_params} parameters, got {theta.dim}"
        )
    return decode(theta, N_JOINTS, duration=env.duration)


def _ballistic_landing(pos, vel, gravity: float):
    """Closed-form landing point of a projectile released at pos with vel.

    Returns None when the release point is below ground.
    """
    z0, vz = pos[2], vel[2]
    if z0 < 0:
        return None
    disc = vz * vz + 2.0 * gravity * z0
    t_land = (vz + math.sqrt(disc)) / gravity
    return np.array([pos[0] + vel[0] * t_land, pos[1] + vel[1] * t_land]), t_land


def _sample_times(env: EnvironmentSpec) -> np.ndarray:
    n = int(round(env.duration / env.step))
    return np.linspace(0.0, env.duration, n + 1)


def execute(env: EnvironmentSpec, gap: RealityGap, theta: ControllerParams) -> Outcome:
    """Run a controller and report its outcome; pure and deterministic.

    throw: release the ball at the end of the motion with the gripper's
    position and velocity, integrate ballistic flight analytically, outcome =
    ground contact (x, y).  A release below ground yields an invalid outcome.

    joystick: outcome = (pitch, roll) from the clipped linear response to the
    deepest gripper penetration of the stick region, (0, 0) without contact.
    """
    if env.kind not in SKILL_KINDS:
        raise ValueError(f"execute not defined for kind {env.kind!r}")
    traj = _trajectory(env, theta)
    limits = env.joint_limits
    if env.kind == "throw":
        angles, vels = eval_trajectory(traj, traj.duration, joint_limits=limits)
        pos, vel = _gripper_state(env, gap, angles, vels)
        landing = _ballistic_landing(pos, vel, env.gravity * gap.gravity_scale)
        if landing is None:
            return Outcome.invalid(2)
        return Outcome(values=landing[0])

    # joystick: sweep the trajectory, find the deepest penetration
    stick = env.joystick_pos
    best_depth = -1.0
    best_disp = None
    for t in _sample_times(env):
        angles, vels = eval_trajectory(traj, t, joint_limits=limits)
        pos, _ = _gripper_state(env, gap, angles, vels)
        dist = float(np.linalg.norm(pos - stick))
        depth = env.joystick_radius - dist
        if depth > best_depth and depth > 0:
            best_depth = depth
            best_disp = pos[:2] - stick[:2]
    if best_disp is None:
        return Outcome(values=np.zeros(2))
    response = np.clip(env.joystick_gain * best_disp, -1.0, 1.0)
    return Outcome(values=env.max_tilt * response)


def make_executor(env: EnvironmentSpec, gap: RealityGap = NOMINAL_GAP):
    """Bind (env, gap) into a theta -> Outcome callable."""
    return lambda theta: execute(env, gap, theta)


def collides(env: EnvironmentSpec, theta: ControllerParams, obstacle: Obstacle, gap: RealityGap = NOMINAL_GAP) -> bool:
    """True when the sampled arm sweep or ballistic path crosses the wall."""
    if env.kind != "throw":
        raise ValueError("collision checks are defined for the throw environment")
    traj = _trajectory(env, theta)
    limits = env.joint_limits
    times = _sample_times(env)
    for t in times:
        angles, _ = eval_trajectory(traj, t, joint_limits=limits)
        pts = _arm_points(env, gap, angles)
        if bool(np.any(obstacle.contains(pts[:, 0], pts[:, 2]))):
            return True
    angles, vels = eval_trajectory(traj, traj.duration, joint_limits=limits)
    pos, vel = _gripper_state(env, gap, angles, vels)
    landing = _ballistic_landing(pos, vel, env.gravity * gap.gravity_scale)
    if landing is None:
        return False
    _, t_land = landing
    g = env.gravity * gap.gravity_scale
    ts = np.arange(0.0, t_land + env.step, env.step)
    xs = pos[0] + vel[0] * ts
    zs = pos[2] + vel[2] * ts - 0.5 * g * ts * ts
    return bool(np.any(obstacle.contains(xs, zs)))


def quality(env: EnvironmentSpec, theta: ControllerParams, outcome: Outcome, seed: int = 0) -> float:
    """Quality score of a skill; higher is better, maximum 0.

    throw: negative integral of squared joint accelerations over the motion
    (closed form for cubics), a kinematic stand-in for actuation effort.
    joystick: negative mean outcome deviation over perturbed re-executions
    with Gaussian parameter noise.
    """
    if not outcome.valid:
        raise ValueError("quality requires a valid outcome")
    if env.kind == "throw":
        # q''(t) = 2 a2 + 6 a3 t; integral of the square over [0, T]
        traj = _trajectory(env, theta)
        a2 = traj.coeffs[:, 1]
        a3 = traj.coeffs[:, 2]
        t = traj.duration
        total = np.sum(
            4.0 * a2 * a2 * t + 12.0 * a2 * a3 * t * t + 12.0 * a3 * a3 * t**3
        )
        return -float(total)
    if env.kind == "joystick":
        rng = np.random.Generator(np.random.PCG64(seed))
        b = theta.bounds
        sigma = env.perturb_sigma * (b[:, 1] - b[:, 0])
        dev = 0.0
        for _ in range(env.perturb_count):
            noisy = clamp(theta.with_values(theta.values + rng.normal(0.0, sigma)))
            out = execute(env, NOMINAL_GAP, noisy)
            dev += float(np.linalg.norm(out.values - outcome.values))
        return -dev / env.perturb_count
    raise ValueError(f"quality not defined for kind {env.kind!r}")


# ---------------------------------------------------------------------------
# reach2d: toy observation-emitting reaching task
# ---------------------------------------------------------------------------

def render_frame(gripper, target, reward: int = 0) -> ObservationFrame:
    """Render both blobs on a 16x16 grid by bilinear splatting.

    Gripper mass 1.0 and target mass 0.5 are each spread over the four cells
    around the continuous position; overlaps keep the brighter value.
    """
    grid = np.zeros((FRAME_SIZE, FRAME_SIZE))
    for pos, intensity in ((target, 0.5), (gripper, 1.0)):
        gx = float(np.clip(pos[0], 0.0, 1.0)) * (FRAME_SIZE - 1)
        gy = float(np.clip(pos[1], 0.0, 1.0)) * (FRAME_SIZE - 1)
        ix, iy = int(gx), int(gy)
        fx, fy = gx - ix, gy - iy
        for dx, wx in ((0, 1.0 - fx), (1, fx)):
            for dy, wy in ((0, 1.0 - fy), (1, fy)):
                x, y = ix + dx, iy + dy
                if x < FRAME_SIZE and y < FRAME_SIZE:
                    grid[y, x] = max(grid[y, x], intensity * wx * wy)
    return ObservationFrame(
        grid=grid,
        gripper=np.asarray(gripper, dtype=float).copy(),
        target=np.asarray(target, dtype=float).copy(),
        reward=reward,
    )


def reach_reset(rng: np.random.Generator) -> ObservationFrame:
    """Fresh episode: random gripper anywhere, target away from the border."""
    gripper = rng.uniform(0.0, 1.0, size=2)
    target = rng.uniform(0.15, 0.85, size=2)
    return render_frame(gripper, target, reward=0)


_REACH_MOVES = np.array(
    [
        [REACH_STEP, 0.0],
        [-REACH_STEP, 0.0],
        [0.0, REACH_STEP],
        [0.0, -REACH_STEP],
        [0.0, 0.0],   # +z: out-of-plane, no planar effect
        [0.0, 0.0],   # -z
    ]
)


def reach_step(state: ObservationFrame, action: int) -> ObservationFrame:
    """Apply one elementary move and render the next frame.

    Reward: -1 when the move leaves the unit square (the gripper is then
    clamped back), +1 when within the touch radius of the target, else 0.
    """
    if not 0 <= action < REACH_ACTIONS:
        raise ValueError(f"action must be in [0, {REACH_ACTIONS})")
    moved = state.gripper + _REACH_MOVES[action]
    out_of_bounds = bool(np.any(moved < 0.0) or np.any(moved > 1.0))
    clamped = np.clip(moved, 0.0, 1.0)
    if out_of_bounds:
        reward = -1
    elif np.linalg.norm(moved - state.target) < REACH_TOUCH_RADIUS:
        reward = 1
    else:
        reward = 0
    return render_frame(clamped, state.target, reward=reward)


# ---------------------------------------------------------------------------
# Kinematic transfer-task family
# ---------------------------------------------------------------------------

TRANSFER_STATE_DIM = 6
TRANSFER_ACTION_DIM = 2
TRANSFER_HIDDEN = 16
TRANSFER_STEPS = 100
_HAND_STEP = 0.03
_CONTACT_RADIUS = 0.08


def policy_shapes():
    """Layer shapes of the shared transfer-task policy (6 -> 16 -> 2, tanh)."""
    return [
        (TRANSFER_STATE_DIM, TRANSFER_HIDDEN),
        (TRANSFER_HIDDEN, TRANSFER_ACTION_DIM),
    ]


def flatten_policy(layers) -> np.ndarray:
    return np.concatenate([np.asarray(w, dtype=float).reshape(-1) for w in layers])


def unflatten_policy(flat) -> list[np.ndarray]:
    flat = np.asarray(flat, dtype=float)
    layers = []
    idx = 0
    for shape in policy_shapes():
        size = shape[0] * shape[1]
        layers.append(flat[idx : idx + size].reshape(shape))
        idx += size
    if idx != flat.shape[0]:
        raise DimensionError(f"policy vector length {flat.shape[0]}, expected {idx}")
    return layers


def _policy_action(layers, state) -> np.ndarray:
    h = np.tanh(state @ layers[0])
    return np.tanh(h @ layers[1])


def _transfer_init(kind: str, rng: np.random.Generator):
    hand = np.array([0.5, 0.1]) + rng.uniform(-0.05, 0.05, size=2)
    puck = np.array([0.5, 0.35]) + rng.uniform(-0.08, 0.08, size=2)
    if kind == "strikerlike":
        goal = np.array([0.5, 0.9]) + rng.uniform(-0.15, 0.15, size=2)
    else:
        goal = np.array([0.5, 0.7]) + rng.uniform(-0.15, 0.15, size=2)
    return hand, puck, goal


def transfer_task(kind: str, policy_layers, seed: int = 0) -> float:
    """Roll the policy out for 100 steps; return = -(terminal puck-goal distance).

    Contact transfers only the component of the hand motion directed at the
    puck, pushing it radially away from the hand.
    pusherlike: the puck moves by the transferred displacement.
    throwerlike: the transfer accelerates a sliding puck (drag 0.9).
    strikerlike: a single contact imparts an amplified impulse (drag 0.98);
    afterwards the hand can no longer affect the puck.
    """
    if kind not in TRANSFER_KINDS:
        raise ValueError(f"unknown transfer task {kind!r}")
    layers = [np.asarray(w, dtype=float) for w in policy_layers]
    expected = policy_shapes()
    if [w.shape for w in layers] != expected:
        raise DimensionError(f"policy shapes {[w.shape for w in layers]} != {expected}")
    rng = np.random.Generator(np.random.PCG64(seed))
    hand, puck, goal = _transfer_init(kind, rng)
    puck_vel = np.zeros(2)
    struck = False
    for _ in range(TRANSFER_STEPS):
        state = np.concatenate([puck - hand, goal - puck, hand])
        step = _policy_action(layers, state) * _HAND_STEP
        hand = np.clip(hand + step, 0.0, 1.0)
        gap_vec = puck - hand
        gap_norm = float(np.linalg.norm(gap_vec))
        push = np.zeros(2)
        if 0.0 < gap_norm < _CONTACT_RADIUS:
            direction = gap_vec / gap_norm
            push = max(0.0, float(step @ direction)) * direction
        if kind == "pusherlike":
            puck = np.clip(puck + push, 0.0, 1.0)
        elif kind == "throwerlike":
            puck_vel = puck_vel + 0.7 * push
            puck = np.clip(puck + puck_vel, 0.0, 1.0)
            puck_vel *= 0.9
        else:  # strikerlike
            if not struck and np.any(push != 0.0):
                puck_vel = 4.0 * push
                struck = True
            puck = np.clip(puck + puck_vel, 0.0, 1.0)
            puck_vel *= 0.98
    return -float(np.linalg.norm(puck - goal))


# ---------------------------------------------------------------------------
# Config file support
# ---------------------------------------------------------------------------

_FLOAT_KEYS = {
    "base_height", "gravity", "step", "duration", "joystick_radius",
    "joystick_gain", "max_tilt", "perturb_sigma",
}
_VEC_KEYS = {"link_lengths", "joystick_pos"}


def load_env_config(path) -> EnvironmentSpec:
    """Read an EnvironmentSpec from a key=value file.

    Recognized keys: kind (required), link_lengths and joystick_pos as
    comma-separated floats, perturb_count as int, and the scalar geometry
    keys (base_height, gravity, step, duration, joystick_radius,
    joystick_gain, max_tilt, perturb_sigma).  Lines starting with '#' are
    comments.
    """
    fields: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            try:
                if key == "kind":
                    fields[key] = value
                elif key in _VEC_KEYS:
                    fields[key] = np.array([float(v) for v in value.split(",")])
                elif key in _FLOAT_KEYS:
                    fields[key] = float(value)
                elif key == "perturb_count":
                    fields[key] = int(value)
                else:
                    raise ValueError(f"unknown key {key!r}")
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    if "kind" not in fields:
        raise ValueError(f"{path}: missing required key 'kind'")
    return EnvironmentSpec(**fields)
