import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from entropic_sac.envsim import (
    DT, MAX_SPEED, TIME_LIMIT, Pendulum, PendulumState, make_env, reward_of, step_state,
    write_trajectory_csv,
)
from entropic_sac.errors import ConfigError, ContractError

REWARD_FLOOR = -(math.pi**2 + 0.1 * 64 + 0.001 * 4)


def test_reset_is_seed_deterministic():
    a = Pendulum(np.random.default_rng(3)).reset()
    b = Pendulum(np.random.default_rng(3)).reset()
    assert np.array_equal(a, b)


def test_reset_angle_is_centered():
    env = Pendulum(np.random.default_rng(0))
    thetas = np.array([(env.reset(), env.state.theta)[1] for _ in range(10**5)])
    sigma = (2 * math.pi / math.sqrt(12)) / math.sqrt(len(thetas))
    assert abs(thetas.mean()) <= 3 * sigma
    assert thetas.min() >= -math.pi and thetas.max() <= math.pi


def test_observation_is_on_unit_circle():
    env = Pendulum(np.random.default_rng(1))
    for _ in range(100):
        obs = env.reset()
        assert abs(obs[0] ** 2 + obs[1] ** 2 - 1.0) <= 1e-12


def test_upright_rest_is_a_fixed_point():
    nxt, r = step_state(PendulumState(0.0, 0.0), 0.0)
    assert (nxt.theta, nxt.theta_dot, r) == (0.0, 0.0, 0.0)


def test_hanging_reward_is_minus_pi_squared():
    _, r = step_state(PendulumState(math.pi, 0.0), 0.0)
    assert r == pytest.approx(-math.pi**2, abs=1e-12)
    assert r == pytest.approx(-9.8696, abs=1e-4)


def test_single_step_matches_straight_line_formula():
    th, thd = 0.7, -1.3
    nxt, _ = step_state(PendulumState(th, thd), 0.0)
    thd2 = thd + 15.0 * math.sin(th) * 0.05
    assert abs(nxt.theta_dot - thd2) <= 1e-15
    assert abs(nxt.theta - (th + thd2 * 0.05)) <= 1e-15


def test_torque_and_speed_clamps():
    a, _ = step_state(PendulumState(0.0, 0.0), 50.0)
    b, _ = step_state(PendulumState(0.0, 0.0), 2.0)
    assert a == b
    fast, _ = step_state(PendulumState(math.pi / 2, 7.9), 2.0)
    assert fast.theta_dot == MAX_SPEED and fast.theta == pytest.approx(math.pi / 2 + MAX_SPEED * DT)


@settings(max_examples=200, deadline=None)
@given(st.floats(-50, 50), st.floats(-8, 8), st.floats(-10, 10))
def test_reward_bound_and_speed_invariant(theta, theta_dot, action):
    nxt, r = step_state(PendulumState(theta, theta_dot), action)
    assert REWARD_FLOOR <= r <= 0.0
    assert abs(nxt.theta_dot) <= MAX_SPEED


def test_episodes_truncate_and_never_terminate():
    env = Pendulum(np.random.default_rng(2))
    env.reset()
    flags = [env.step(np.array([0.5]))[2:] for _ in range(TIME_LIMIT)]
    assert not any(t for t, _ in flags)
    assert [tr for _, tr in flags] == [False] * (TIME_LIMIT - 1) + [True]


def test_trajectories_are_bit_identical_for_same_seed_and_actions():
    actions = np.random.default_rng(9).uniform(-2, 2, size=300)

    def roll():
        env = Pendulum(np.random.default_rng(4))
        env.reset()
        return [env.step(a) for a in actions[:TIME_LIMIT]]

    first, second = roll(), roll()
    assert all(np.array_equal(a[0], b[0]) and a[1] == b[1] for a, b in zip(first, second))


def test_non_finite_action_rejected():
    env = Pendulum(np.random.default_rng(0))
    env.reset()
    with pytest.raises(ContractError):
        env.step(np.array([np.nan]))


def test_action_space_log_volume():
    space = Pendulum.action_space
    assert space.dim == 1 and space.volume == 4.0
    assert space.log_volume == pytest.approx(1.3863, abs=1e-4)


def test_make_env_rejects_unknown_id():
    with pytest.raises(ConfigError):
        make_env("CartPole-v1", np.random.default_rng(0))


def test_reward_wraps_angle():
    assert reward_of(2 * math.pi, 0.0, 0.0) == pytest.approx(0.0, abs=1e-24)


def test_trajectory_csv(tmp_path):
    path = tmp_path / "traj.csv"
    write_trajectory_csv(path, [(0, 0.1, 0.2, 0.3, -0.4)])
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["step", "theta", "theta_dot", "action", "reward"]
    assert rows[1] == ["0", "0.1", "0.2", "0.3", "-0.4"]
