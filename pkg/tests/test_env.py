import numpy as np
import pytest
from hypothesis import given, strategies as st

from chainreduce.resources import DeviceState
from chainreduce.scheduler import RLConfig, SchedEnv, SchedEnvState, env_step, threshold, valid_actions
from chainreduce.scheduler.env import (
    battery_part, best_steps, busy_penalty, encode, encoded_size, latency_part,
)

S = DeviceState
CFG = RLConfig()


def test_free_sender_zero_agg():
    s0 = SchedEnvState.initial(4)
    _, r, done = env_step(s0, 0, CFG)
    assert r == pytest.approx(-0.04) and not done


def test_free_sender_with_two_aggregations():
    s0 = SchedEnvState.initial(4)
    s = s0.__class__(s0.states, (0, 0, 2, 0))
    _, r, _ = env_step(s, 2, CFG)
    assert r == pytest.approx(0.16)


def test_busy_penalty_at_t4_n5():
    s = SchedEnvState.initial(5, busy=[3])
    s = s.__class__(s.states, s.n_agg, t=4, busy=s.busy)
    _, r, _ = env_step(s, 3, CFG)
    assert r == pytest.approx(-1.2)
    assert busy_penalty(4, 5, CFG) == pytest.approx(-1.2)


def test_done_device_is_invalid_terminal():
    s = SchedEnvState.initial(3)
    s, _, _ = env_step(s, 0, CFG)
    s, _, _ = env_step(s, 1, CFG)  # 0 -> 1, device 0 Done
    _, r, done = env_step(s, 0, CFG)
    assert r == -1.0 and done


def test_receiver_reward_uses_receiver_count():
    s = SchedEnvState.initial(4)
    s = s.__class__(s.states, (0, 3, 0, 0))
    s, _, _ = env_step(s, 0, CFG)
    _, r, _ = env_step(s, 1, CFG)
    assert r == pytest.approx(-0.04 - 0.3)


def test_completion_reward_and_states():
    s = SchedEnvState.initial(2)
    s, r1, _ = env_step(s, 1, CFG)
    assert s.states[1] is S.SEND and s.pending == 1
    s, r2, done = env_step(s, 0, CFG)
    assert (r1, r2, done) == (pytest.approx(-0.04), 1.0, True)
    assert s.states == (S.FREE, S.DONE) and s.n_agg == (1, 0)
    assert s.pairs == ((1, 0),)


def test_exceeding_step_limit_is_terminal():
    s = SchedEnvState.initial(3)
    s = s.__class__(s.states, s.n_agg, t=best_steps(3))
    _, r, done = env_step(s, 0, CFG)
    assert r == -1.0 and done


def test_self_pair_invalid():
    s, _, _ = env_step(SchedEnvState.initial(3), 2, CFG)
    assert 2 not in valid_actions(s)
    _, r, done = env_step(s, 2, CFG)
    assert r == -1.0 and done


def test_out_of_range_action():
    with pytest.raises(ValueError):
        env_step(SchedEnvState.initial(3), 5, CFG)


class TestValidActions:
    def test_all_free(self):
        assert valid_actions(SchedEnvState.initial(5)) == [0, 1, 2, 3, 4]

    def test_pending_excluded(self):
        s, _, _ = env_step(SchedEnvState.initial(5), 3, CFG)
        assert valid_actions(s) == [0, 1, 2, 4]

    def test_single_live_is_empty(self):
        s = SchedEnvState.initial(3, absent=[0, 1])
        assert valid_actions(s) == []

    def test_busy_included(self):
        assert 1 in valid_actions(SchedEnvState.initial(3, busy=[1]))


def test_busy_device_is_flagged_deferred():
    s = SchedEnvState.initial(3, busy=[2])
    s, _, _ = env_step(s, 2, CFG)
    s, _, _ = env_step(s, 0, CFG)
    assert s.deferred_flags == (True,)


def test_thresholds():
    assert battery_part(8, 0.1) == 0
    assert battery_part(7, 0.1) == pytest.approx(0.2)
    assert latency_part(8, 0.1) == pytest.approx(0.3)
    assert threshold(8, CFG) == pytest.approx(0.3)
    assert threshold(8, CFG.with_(phi=0.1)) == pytest.approx(0.2)
    with pytest.raises(ValueError):
        threshold(1, CFG)


@given(st.integers(0, 5000))
def test_battery_part_recursion(n):
    want = 0.0 if n <= 1 else 0.1 * (n % 2) + battery_part(n // 2, 0.1)
    assert battery_part(n, 0.1) == pytest.approx(want)


def test_config_validation():
    with pytest.raises(ValueError):
        RLConfig(rho=0.1)
    with pytest.raises(ValueError):
        RLConfig(decay=1.0)
    with pytest.raises(ValueError):
        RLConfig(epsilon_new=1.5)
    with pytest.raises(ValueError):
        RLConfig(strategy="greedy")


def test_encoding_shape():
    s = SchedEnvState.initial(6, busy=[1])
    x = encode(s)
    assert x.shape == (encoded_size(6),)
    assert x[7 + 1] == 1.0  # device 1 one-hot Busy


@given(st.integers(2, 10), st.integers(0, 1000))
def test_random_valid_episode_completes_in_best_steps(n, seed):
    rng = np.random.default_rng(seed)
    env = SchedEnv(n)
    s = env.reset()
    steps, done = 0, False
    while not done:
        s, r, done = env.step(int(rng.choice(env.valid_actions())))
        steps += 1
    assert steps == best_steps(n) and r == 1.0
    assert sum(s.n_agg) == n - 1
