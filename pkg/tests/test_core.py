import numpy as np
import pytest

from skillpipe.core import (
    ControllerParams,
    DimensionError,
    JointTrajectory,
    Outcome,
    Skill,
    clamp,
    decode,
    eval_trajectory,
)
from conftest import make_params


class TestDecode:
    def test_zero_theta_is_constant_rest(self):
        traj = decode(make_params(np.zeros(15)), n_joints=5, rest=np.full(5, 0.3))
        for t in (0.0, 0.25, 1.0):
            angles, _ = eval_trajectory(traj, t)
            assert np.allclose(angles, 0.3)

    def test_single_linear_term(self):
        theta = np.zeros(15)
        theta[0] = 1.0  # a1 of joint 0
        traj = decode(make_params(theta), n_joints=5)
        angles, _ = eval_trajectory(traj, 1.0)
        assert angles[0] == pytest.approx(1.0)
        assert np.allclose(angles[1:], 0.0)

    def test_quadratic_plus_cubic_oracle(self):
        # q(t) = t^2 + t^3 evaluated directly at t = 0.5
        theta = np.zeros(15)
        theta[1] = 1.0
        theta[2] = 1.0
        traj = decode(make_params(theta), n_joints=5)
        angles, _ = eval_trajectory(traj, 0.5)
        assert angles[0] == pytest.approx(0.25 + 0.125)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            decode(make_params(np.zeros(14)), n_joints=5)

    def test_flatten_roundtrip(self):
        rng = np.random.default_rng(3)
        theta = make_params(rng.uniform(-1, 1, 15))
        traj = decode(theta, n_joints=5)
        assert np.array_equal(traj.flatten(), theta.values)


class TestEvalTrajectory:
    def test_constant_trajectory_zero_velocity(self):
        traj = decode(make_params(np.zeros(15)), n_joints=5, rest=np.ones(5))
        for t in (0.0, 0.7, 1.0):
            _, vel = eval_trajectory(traj, t)
            assert np.allclose(vel, 0.0)

    def test_linear_velocity(self):
        theta = np.zeros(15)
        theta[0] = 1.0
        traj = decode(make_params(theta), n_joints=5)
        for t in (0.0, 0.5, 1.0):
            _, vel = eval_trajectory(traj, t)
            assert vel[0] == pytest.approx(1.0)

    def test_cubic_velocity_oracle(self):
        # d/dt t^3 = 3 t^2 -> 0.75 at t = 0.5
        theta = np.zeros(15)
        theta[2] = 1.0
        traj = decode(make_params(theta), n_joints=5)
        _, vel = eval_trajectory(traj, 0.5)
        assert vel[0] == pytest.approx(0.75)

    def test_t_out_of_range(self):
        traj = decode(make_params(np.zeros(15)), n_joints=5)
        with pytest.raises(ValueError):
            eval_trajectory(traj, 1.5)
        with pytest.raises(ValueError):
            eval_trajectory(traj, -0.1)

    def test_velocity_matches_finite_differences(self):
        rng = np.random.default_rng(11)
        h = 1e-6
        for _ in range(20):
            traj = decode(make_params(rng.uniform(-1, 1, 15)), n_joints=5)
            t = rng.uniform(h, 1.0 - h)
            ang_p, _ = eval_trajectory(traj, t + h)
            ang_m, _ = eval_trajectory(traj, t - h)
            _, vel = eval_trajectory(traj, t)
            assert np.allclose(vel, (ang_p - ang_m) / (2 * h), atol=1e-6)

    def test_clamped_joint_zeroes_velocity(self):
        theta = np.zeros(15)
        theta[0] = 1.0  # q0(t) = t
        traj = decode(make_params(theta), n_joints=5)
        limits = np.tile([-0.25, 0.25], (5, 1))
        angles, vel = eval_trajectory(traj, 1.0, joint_limits=limits)
        assert angles[0] == pytest.approx(0.25)
        assert vel[0] == 0.0


class TestClamp:
    def test_identity_in_bounds(self):
        theta = make_params([0.5, -0.5, 0.0])
        assert np.array_equal(clamp(theta).values, theta.values)

    def test_projects_below_lower(self):
        theta = make_params([-2.0, 0.0, 0.0])
        assert clamp(theta).values[0] == -1.0

    def test_idempotent(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            theta = make_params(rng.uniform(-3, 3, 15))
            once = clamp(theta)
            twice = clamp(once)
            assert np.array_equal(once.values, twice.values)

    def test_projection_never_increases_distance_to_interior_points(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            theta = make_params(rng.uniform(-3, 3, 8))
            interior = rng.uniform(-1, 1, 8)
            before = np.linalg.norm(theta.values - interior)
            after = np.linalg.norm(clamp(theta).values - interior)
            assert after <= before + 1e-12


class TestTypes:
    def test_controller_params_bounds_shape(self):
        with pytest.raises(DimensionError):
            ControllerParams(values=np.zeros(3), bounds=np.zeros((2, 2)))

    def test_invalid_outcome_sentinel(self):
        out = Outcome.invalid(2)
        assert not out.valid
        assert np.array_equal(out.values, np.zeros(2))

    def test_skill_requires_valid_outcome(self):
        with pytest.raises(ValueError):
            Skill(params=make_params([0.0]), outcome=Outcome.invalid(2), quality=0.0)

    def test_trajectory_duration_positive(self):
        with pytest.raises(ValueError):
            JointTrajectory(rest=np.zeros(2), coeffs=np.zeros((2, 3)), duration=0.0)
