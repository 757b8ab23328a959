from __future__ import annotations


__copyright__ = "Copyright (C) 2026 TractOracle developers"

__license__ = """
Permission is hereby granted, free of charge, to any person obtaining a copy
of this software and associated documentation files (the "Software"), to deal
in the Software without restriction, including without limitation the rights
to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
copies of the Software, and to permit persons to whom the Software is
furnished to do so, subject to the following conditions:

The above copyright notice and this permission notice shall be included in
all copies or substantial portions of the Software.

THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN
THE SOFTWARE.
"""

import logging

import numpy as np
import pytest
from testlib import constant_oracle, demo_volume, small_env_config

from tractoracle.env import (
    DoneReason,
    EnvConfig,
    EpisodeFinishedError,
    TrackingEnvironment,
    reward,
)
from tractoracle.geometry import OutOfBoundsError


logger = logging.getLogger(__name__)


UP = np.array([0., 0., 1.])


def _turned(degrees):
    rad = np.radians(degrees)
    return np.array([np.sin(rad), 0., np.cos(rad)])


def _walk(env, direction, n_steps):
    """Step every active episode *n_steps* times in *direction*."""
    batches = []
    for _ in range(n_steps):
        ids = env.active_ids()
        if not len(ids):
            break
        batches.append(env.step(ids, np.tile(direction, (len(ids), 1))))
    return batches


# {{{ configuration

def test_config_validation():
    with pytest.raises(ValueError):
        EnvConfig(t_min=200, max_steps=200)
    with pytest.raises(ValueError):
        EnvConfig(max_angle=-1)
    with pytest.raises(ValueError):
        EnvConfig(step_size=0)
    with pytest.raises(ValueError):
        EnvConfig(oracle_threshold=1.)

    assert EnvConfig().state_width(3) == 7*4*3 + 3*100
    cfg = small_env_config(alpha=3.)
    assert EnvConfig.from_dict(cfg.to_dict()) == cfg

# }}}


# {{{ rewards

def test_local_reward_examples():
    v = demo_volume("straight-tube")
    s = [[8., 8., 19.5], [8., 8., 20.]]

    # aligned with the peak and with the previous direction
    assert reward(v, s, UP, UP, None, False) == 1.
    # first step: no previous direction
    assert reward(v, s, UP, [0, 0, 0], None, False) == 1.
    # peaks have no sign
    assert reward(v, s, -UP, -UP, None, False) == 1.
    # reversing the previous direction is penalized
    assert reward(v, s, -UP, UP, None, False) == -1.
    # orthogonal to the peak
    assert abs(reward(v, s, [1, 0, 0], [1, 0, 0], None, False)) < 1e-12
    # outside the tube there are no peaks
    assert reward(v, [[1., 1., 1.]], UP, UP, None, False) == 0.
    # the action is normalized
    assert reward(v, s, 5*UP, UP, None, False) == 1.


def test_anatomical_reward_examples():
    v = demo_volume("straight-tube")
    s = [[8., 8., 19.5], [8., 8., 20.]]

    assert reward(v, s, UP, UP, 0.7, True) == 11.
    assert reward(v, s, UP, UP, 0.5, True) == 11.
    assert reward(v, s, UP, UP, 0.3, True) == 1.
    assert reward(v, s, UP, UP, 0.7, False) == 1.
    assert reward(v, s, UP, UP, None, True) == 1.
    assert reward(v, s, UP, UP, 0.7, True, alpha=2.) == 3.

# }}}


# {{{ stepping

def test_reset_errors():
    env = TrackingEnvironment(demo_volume("straight-tube"), small_env_config())
    with pytest.raises(ValueError):
        env.reset(np.zeros((0, 3)))
    with pytest.raises(OutOfBoundsError):
        env.reset([[8, 8, 10], [8, 8, 47.5]])


def test_states():
    v = demo_volume("straight-tube")
    cfg = small_env_config()
    env = TrackingEnvironment(v, cfg)
    states = env.reset([[8, 8, 10], [0, 0, 0]])

    width = 4*v.max_peaks
    assert states.shape == (2, cfg.state_width(v.max_peaks))
    assert states.dtype == np.float32
    assert np.array_equal(states[0, :width], v.peaks[8, 8, 10].reshape(-1))
    assert np.all(states[1, :7*width] == 0)
    assert np.all(states[:, 7*width:] == 0)

    batch = env.step(np.array([0]), UP[np.newaxis])
    assert np.array_equal(batch.states[0], states[0])
    assert np.array_equal(batch.next_states[0, -3:], UP)
    assert np.array_equal(batch.next_states[0, -6:-3], [0, 0, 0])

    env.step(np.array([0]), UP[np.newaxis])
    assert np.array_equal(env.states([0])[0, -6:], [*UP, *UP])


def test_step_spacing_and_returns():
    v = demo_volume("straight-tube")
    cfg = small_env_config(step_size=0.75)
    env = TrackingEnvironment(v, cfg)
    env.reset([[8, 8, 10], [8, 8, 20]])

    batches = _walk(env, UP, 6)
    assert all(len(b) == 2 and not b.dones.any() for b in batches)
    assert np.allclose(batches[0].actions, UP)
    assert np.allclose(env.returns, 6.)

    for i in range(2):
        s = env.streamline(i)
        assert len(s) == 7
        assert np.allclose(np.linalg.norm(np.diff(s, axis=0), axis=1), 0.75)


def test_wm_exit_keeps_exit_point():
    env = TrackingEnvironment(demo_volume("straight-tube"), small_env_config())
    env.reset([[8, 8, 40]])
    batches = _walk(env, UP, 20)

    assert len(batches) == 8
    assert batches[-1].done_reasons == (DoneReason.WM_EXIT,)
    assert env.done_reasons[0] == DoneReason.WM_EXIT
    assert np.allclose(env.streamline(0)[-1], [8, 8, 44])


def test_angle_threshold():
    v = demo_volume("straight-tube")
    env = TrackingEnvironment(v, small_env_config(max_angle=30))
    env.reset([[8, 8, 10], [8, 8, 10]])

    # no angle constraint on the first step
    first = env.step(np.array([0, 1]), np.array([UP, _turned(45)]))
    assert not first.dones.any()

    second = env.step(np.array([0, 1]), np.array([_turned(31), _turned(45 + 29)]))
    assert second.done_reasons == (DoneReason.ANGLE, None)


def test_zero_action_ends_episode():
    env = TrackingEnvironment(demo_volume("straight-tube"), small_env_config())
    env.reset([[8, 8, 10]])
    env.step(np.array([0]), UP[np.newaxis])
    batch = env.step(np.array([0]), np.zeros((1, 3)))

    assert batch.done_reasons == (DoneReason.ANGLE,)
    assert batch.rewards[0] == 0
    assert len(env.streamline(0)) == 2


def test_max_steps():
    env = TrackingEnvironment(demo_volume("straight-tube"),
            small_env_config(max_steps=5, t_min=1))
    env.reset([[8, 8, 10]])
    batches = _walk(env, UP, 10)
    assert len(batches) == 5
    assert env.done_reasons == [DoneReason.MAX_STEPS]
    assert len(env.streamline(0)) == 6


def test_step_errors():
    env = TrackingEnvironment(demo_volume("straight-tube"),
            small_env_config(max_steps=2, t_min=1))
    env.reset([[8, 8, 10], [8, 8, 20]])
    with pytest.raises(ValueError):
        env.step(np.array([0, 1]), UP[np.newaxis])
    with pytest.raises(ValueError):
        env.step(np.array([0, 0]), np.array([UP, UP]))

    _walk(env, UP, 2)
    with pytest.raises(EpisodeFinishedError):
        env.step(np.array([0]), UP[np.newaxis])

# }}}


# {{{ oracle

def test_oracle_stop_after_t_min():
    v = demo_volume("straight-tube")
    env = TrackingEnvironment(v, small_env_config(t_min=3), constant_oracle(0.2))
    env.reset([[8, 8, 10]])
    batches = _walk(env, UP, 20)

    assert len(batches) == 4
    assert batches[-1].done_reasons == (DoneReason.ORACLE_STOP,)
    # a rejected streamline earns no bonus
    assert np.allclose([b.rewards[0] for b in batches], 1.)


def test_oracle_bonus_at_termination():
    v = demo_volume("straight-tube")
    cfg = small_env_config(t_min=3, max_steps=6, alpha=10.)
    env = TrackingEnvironment(v, cfg, constant_oracle(0.8))
    env.reset([[8, 8, 10]])
    batches = _walk(env, UP, 20)

    assert len(batches) == 6
    assert env.done_reasons == [DoneReason.MAX_STEPS]
    assert np.allclose([b.rewards[0] for b in batches], [1, 1, 1, 1, 1, 11])
    assert env.returns[0] == pytest.approx(16.)


def test_oracle_stop_disabled():
    v = demo_volume("straight-tube")
    cfg = small_env_config(t_min=3, max_steps=6, oracle_stop=False)
    env = TrackingEnvironment(v, cfg, constant_oracle(0.2))
    env.reset([[8, 8, 10]])
    _walk(env, UP, 20)
    assert env.done_reasons == [DoneReason.MAX_STEPS]
    assert env.returns[0] == pytest.approx(6.)


def test_zero_first_action_with_oracle():
    v = demo_volume("straight-tube")
    env = TrackingEnvironment(v, small_env_config(alpha=10.), constant_oracle(0.7))
    env.reset([[8, 8, 10], [8, 8, 20]])
    batch = env.step(np.array([0, 1]), np.array([np.zeros(3), UP]))

    assert batch.done_reasons == (DoneReason.ANGLE, None)
    # a single point cannot be scored and earns no bonus
    assert np.allclose(batch.rewards, [0., 1.])
    assert len(env.streamline(0)) == 1
    assert len(env.harvest()) == 1


@pytest.mark.parametrize("scale", [0.1, 1., 7.5])
def test_reward_ignores_action_length(scale):
    v = demo_volume("crossing")
    cfg = small_env_config(t_min=3, max_steps=20, alpha=10.)
    seeds = [[8, 24, 5], [8, 5, 24], [8, 23, 10]]
    unit = TrackingEnvironment(v, cfg, constant_oracle(0.8))
    scaled = TrackingEnvironment(v, cfg, constant_oracle(0.8))
    unit.reset(seeds)
    scaled.reset(seeds)

    rng = np.random.default_rng(3)
    while len(unit.active_ids()):
        ids = unit.active_ids()
        actions = np.tile(UP, (len(ids), 1)) + rng.normal(0, 0.2, (len(ids), 3))
        a = unit.step(ids, actions)
        b = scaled.step(ids, scale*actions)
        assert np.allclose(a.rewards, b.rewards, rtol=0, atol=1e-12)
        assert a.done_reasons == b.done_reasons

    assert np.allclose(unit.returns, scaled.returns)


def test_ablated_oracle_leaves_local_reward():
    v = demo_volume("crossing")
    cfg = small_env_config(t_min=3, max_steps=40, alpha=0., oracle_stop=False)
    with_oracle = TrackingEnvironment(v, cfg, constant_oracle(0.9))
    without = TrackingEnvironment(v, cfg)

    seeds = [[8, 24, 5], [8, 5, 24], [8, 23, 10]]
    with_oracle.reset(seeds)
    without.reset(seeds)

    rng = np.random.default_rng(0)
    n_compared = 0
    while len(without.active_ids()):
        ids = without.active_ids()
        assert np.array_equal(ids, with_oracle.active_ids())
        actions = np.tile(UP, (len(ids), 1)) + rng.normal(0, 0.1, (len(ids), 3))
        a = with_oracle.step(ids, actions)
        b = without.step(ids, actions)
        assert np.array_equal(a.rewards, b.rewards)
        assert a.done_reasons == b.done_reasons

        for k, i in enumerate(ids):
            s = without.streamline(i)
            prev = s[-2] - s[-3] if len(s) > 2 else np.zeros(3)
            expected = reward(v, s[:-1], actions[k], prev, None, False)
            assert abs(b.rewards[k] - expected) < 1e-9
            n_compared += 1

    assert n_compared > 10

# }}}


# {{{ harvesting

def test_harvest():
    v = demo_volume("straight-tube")
    env = TrackingEnvironment(v, small_env_config(min_length=5))
    env.reset([[8, 8, 41], [8, 8, 10], [8, 8, 30]])

    # 41 -> 44 exits after 6 steps, 30 -> 44 after 28
    _walk(env, UP, 10)
    t = env.harvest()
    assert len(t) == 1
    assert t.done_reasons == (DoneReason.WM_EXIT.value,)
    assert list(t.short) == [False]

    _walk(env, UP, 100)
    t = env.harvest()
    assert len(t) == 3
    assert np.allclose(t[1][0], [8, 8, 10])
    assert list(t.lengths()) == [7, 69, 29]

    short = TrackingEnvironment(v, small_env_config(min_length=10))
    short.reset([[8, 8, 41]])
    _walk(short, UP, 10)
    assert list(short.harvest().short) == [True]

# }}}


if __name__ == "__main__":
    import sys
    if len(sys.argv) > 1:
        exec(sys.argv[1])
    else:
        from pytest import main
        main([__file__])

# vim: fdm=marker
