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
from dataclasses import replace

import numpy as np
import pytest
from testlib import constant_oracle, demo_volume, small_env_config, tiny_sac_config

from tractoracle.evaluator import report
from tractoracle.geometry import segment_angles
from tractoracle.sac import ConfigurationMismatchError, SacAgent
from tractoracle.tracker import (
    TrackingConfig,
    peak_following_directions,
    track_baseline,
    track_policy,
)


logger = logging.getLogger(__name__)


def _same_tractograms(t1, t2):
    return (len(t1) == len(t2)
            and t1.done_reasons == t2.done_reasons
            and all(np.array_equal(a, b)
                for a, b in zip(t1.streamlines, t2.streamlines, strict=True)))


# {{{ peak following

def test_peak_choice_in_crossing():
    v = demo_volume("crossing")
    positions = np.array([[8., 24., 24.]]*3)
    prev = np.array([
        [0., 0.3, 0.95],
        [0., -0.9, 0.3],
        [0., 0.1, -1.],
        ])
    chosen = peak_following_directions(v, positions, prev, np.ones(3, dtype=bool))
    assert np.allclose(chosen, [[0, 0, 1], [0, -1, 0], [0, 0, -1]], atol=1e-6)


def test_first_step_leaves_the_roi():
    v = demo_volume("straight-tube")
    positions = np.array([[8., 8., 4.], [8., 8., 43.]])
    chosen = peak_following_directions(v, positions, np.zeros((2, 3)),
            np.zeros(2, dtype=bool))
    assert np.allclose(chosen, [[0, 0, 1], [0, 0, -1]], atol=1e-6)


def test_no_peaks_keeps_direction():
    v = demo_volume("straight-tube")
    chosen = peak_following_directions(v, np.array([[1., 1., 1.]]),
            np.array([[1., 0., 0.]]), np.ones(1, dtype=bool))
    assert np.array_equal(chosen, [[1., 0., 0.]])

# }}}


# {{{ baseline

def test_baseline_seed_count():
    v = demo_volume("straight-tube")
    t = track_baseline(v, 2, rng_seed=0)
    assert len(t) == 2*len(v.interface_voxels())
    assert len(t.done_reasons) == len(t)


def test_baseline_recovers_straight_tube():
    v = demo_volume("straight-tube")
    r = report(track_baseline(v, 1, rng_seed=1), v)
    assert r.vc_pct >= 99
    assert r.vb == 1
    assert r.bundles[0].ol_pct > 90


def test_baseline_zero_angle_is_collinear():
    v = demo_volume("crossing")
    t = track_baseline(v, 1, max_angle=0., rng_seed=2)
    long = [s for s in t.streamlines if len(s) >= 3]
    assert long
    assert all(segment_angles(s).max() < 1e-6 for s in long)


def test_baseline_independent_of_workers():
    v = demo_volume("crossing")
    serial = track_baseline(v, 1, rng_seed=3,
            config=TrackingConfig(workers=1, chunk_size=16))
    parallel = track_baseline(v, 1, rng_seed=3,
            config=TrackingConfig(workers=4, chunk_size=16))
    assert _same_tractograms(serial, parallel)

    other = track_baseline(v, 1, rng_seed=4)
    assert not _same_tractograms(serial, other)


def test_config_validation():
    with pytest.raises(ValueError):
        TrackingConfig(workers=0)
    with pytest.raises(ValueError):
        TrackingConfig(chunk_size=0)

    cfg = TrackingConfig(per_voxel_seeds=3, deterministic=False)
    assert TrackingConfig.from_dict(cfg.to_dict()) == cfg

# }}}


# {{{ agent

def test_track_policy():
    v = demo_volume("straight-tube")
    env_cfg = small_env_config(max_steps=20, t_min=5)
    agent = SacAgent(env_cfg.state_width(v.max_peaks), tiny_sac_config())

    t = track_policy(agent, None, v, 1, env_cfg, rng_seed=0,
            config=TrackingConfig(per_voxel_seeds=1, chunk_size=16, workers=2))
    assert len(t) == len(v.interface_voxels())
    assert all(len(s) <= env_cfg.max_steps + 1 for s in t.streamlines)

    serial = track_policy(agent, None, v, 1, env_cfg, rng_seed=0,
            config=TrackingConfig(per_voxel_seeds=1, chunk_size=16))
    assert _same_tractograms(t, serial)


def test_track_policy_stochastic_is_reproducible():
    v = demo_volume("straight-tube")
    env_cfg = small_env_config(max_steps=10, t_min=2)
    agent = SacAgent(env_cfg.state_width(v.max_peaks), tiny_sac_config())
    config = TrackingConfig(per_voxel_seeds=1, deterministic=False, chunk_size=20)

    t1 = track_policy(agent, None, v, 1, env_cfg, rng_seed=5, config=config)
    t2 = track_policy(agent, None, v, 1, env_cfg, rng_seed=5, config=config)
    assert _same_tractograms(t1, t2)


def test_oracle_stop_shortens_streamlines():
    v = demo_volume("straight-tube")
    env_cfg = small_env_config(max_steps=30, t_min=1, max_angle=180.)
    agent = SacAgent(env_cfg.state_width(v.max_peaks), tiny_sac_config(rng_seed=2))
    oracle = constant_oracle(0.3)
    config = TrackingConfig(per_voxel_seeds=1, chunk_size=32)

    stopped = track_policy(agent, oracle, v, 1, env_cfg, rng_seed=4, config=config)
    free = track_policy(agent, oracle, v, 1, replace(env_cfg, oracle_stop=False),
            rng_seed=4, config=config)

    assert "oracle-stop" in stopped.done_reasons
    assert "oracle-stop" not in free.done_reasons
    # rejected at the first eligible step, identical before that
    for a, b in zip(stopped.streamlines, free.streamlines, strict=True):
        assert len(a) == min(len(b), env_cfg.t_min + 2)
        assert np.array_equal(a, b[:len(a)])

    assert (np.mean([len(s) for s in stopped.streamlines])
            <= np.mean([len(s) for s in free.streamlines]))


def test_track_policy_mismatch():
    v = demo_volume("straight-tube")
    agent = SacAgent(10, tiny_sac_config())
    with pytest.raises(ConfigurationMismatchError):
        track_policy(agent, None, v, 1, small_env_config())

# }}}


if __name__ == "__main__":
    import sys
    if len(sys.argv) > 1:
        exec(sys.argv[1])
    else:
        from pytest import main
        main([__file__])

# vim: fdm=marker
