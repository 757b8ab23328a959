"""
Tracking
--------

Tractogram generation from interface seeds, either with a trained agent or
with a classical deterministic peak-following baseline. Both share the
stopping rules of :class:`tractoracle.env.TrackingEnvironment`.

Seeds are split into chunks of fixed size, each chunk rolled out in its own
environment. Chunks may run on a thread pool; the output is assembled in seed
order, so results do not depend on the number of workers.

.. autoclass:: TrackingConfig
.. autofunction:: track_policy
.. autofunction:: track_baseline
.. autofunction:: peak_following_directions
"""

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
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from typing import TYPE_CHECKING, Any

import numpy as np

from pytools import ProcessLogger

from tractoracle.env import EnvConfig, TrackingEnvironment
from tractoracle.geometry import nearest_voxel
from tractoracle.phantom import interface_seeds
from tractoracle.sac import act, check_agent_matches
from tractoracle.tractogram import Tractogram
from tractoracle.typing import as_seed_sequence, spawn_rngs


if TYPE_CHECKING:
    from collections.abc import Callable

    from tractoracle.oracle import OracleModel
    from tractoracle.phantom import PhantomVolume
    from tractoracle.sac import SacAgent
    from tractoracle.typing import BoolArray, FloatArray, IntArray, Seed

    ChoosePolicy = Callable[[TrackingEnvironment, IntArray], FloatArray]


logger = logging.getLogger(__name__)


# {{{ configuration

@dataclass(frozen=True)
class TrackingConfig:
    """
    .. attribute:: per_voxel_seeds
    .. attribute:: deterministic

        If *True*, the agent's mean actions are used. Otherwise actions are
        sampled from the policy.

    .. attribute:: workers
    .. attribute:: chunk_size

        Number of seeds rolled out together in one environment.
    """

    per_voxel_seeds: int = 20
    deterministic: bool = True
    workers: int = 1
    chunk_size: int = 512

    def __post_init__(self) -> None:
        for name in ("per_voxel_seeds", "workers", "chunk_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @staticmethod
    def from_dict(data: dict[str, Any]) -> TrackingConfig:
        known = {fld.name for fld in fields(TrackingConfig)}
        return TrackingConfig(**{k: v for k, v in data.items() if k in known})

# }}}


# {{{ chunked rollout

def _seed_streams(rng_seed: Seed) -> tuple[np.random.SeedSequence,
        np.random.SeedSequence]:
    ss = as_seed_sequence(rng_seed)
    return (
        np.random.SeedSequence(ss.entropy, spawn_key=(*ss.spawn_key, 0)),
        np.random.SeedSequence(ss.entropy, spawn_key=(*ss.spawn_key, 1)))


def _rollout_chunk(v: PhantomVolume, env_cfg: EnvConfig,
        oracle: OracleModel | None, seeds: FloatArray,
        choose: ChoosePolicy) -> Tractogram:
    env = TrackingEnvironment(v, env_cfg, oracle)
    env.reset(seeds)
    while True:
        ids = env.active_ids()
        if not len(ids):
            break
        env.step(ids, choose(env, ids))
    return env.harvest()


def _rollout(v: PhantomVolume, env_cfg: EnvConfig, oracle: OracleModel | None,
        seeds: FloatArray,
        make_policy: Callable[[int], ChoosePolicy],
        workers: int, chunk_size: int) -> Tractogram:
    starts = range(0, len(seeds), chunk_size)

    def run(ichunk: int) -> Tractogram:
        start = starts[ichunk]
        return _rollout_chunk(v, env_cfg, oracle,
                seeds[start:start+chunk_size], make_policy(ichunk))

    if workers == 1 or len(starts) == 1:
        parts = [run(i) for i in range(len(starts))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(starts))))

    return Tractogram.concatenate(parts)

# }}}


# {{{ policy tracking

def track_policy(agent: SacAgent, oracle: OracleModel | None, v: PhantomVolume,
        per_voxel_seeds: int, env_cfg: EnvConfig, rng_seed: Seed = 0,
        config: TrackingConfig | None = None) -> Tractogram:
    """Track from *per_voxel_seeds* jittered seeds in every interface voxel of
    *v*, stepping with the agent's actions until an episode ends.

    One streamline is returned per seed, in seed order; streamlines shorter
    than ``env_cfg.min_length`` steps are kept and flagged as short.

    :raises tractoracle.sac.ConfigurationMismatchError: if the agent does not
        fit the environment.
    """
    if config is None:
        config = TrackingConfig(per_voxel_seeds=per_voxel_seeds)
    check_agent_matches(agent, v, env_cfg)

    jitter_seed, action_seed = _seed_streams(rng_seed)
    seeds = interface_seeds(v, per_voxel_seeds, rng_seed=jitter_seed)
    n_chunks = -(-len(seeds) // config.chunk_size)
    action_rngs = spawn_rngs(action_seed, n_chunks)

    def make_policy(ichunk: int) -> ChoosePolicy:
        rng = action_rngs[ichunk]

        def choose(env: TrackingEnvironment, ids: IntArray) -> FloatArray:
            actions, _ = act(agent.actor, env.states(ids),
                    deterministic=config.deterministic, rng=rng)
            return actions

        return choose

    with ProcessLogger(logger, f"tracking {len(seeds)} seeds with agent"):
        result = _rollout(v, env_cfg, oracle, seeds, make_policy,
                config.workers, config.chunk_size)

    logger.info("tracked %d streamlines (%d short)", len(result), result.short.sum())
    return result

# }}}


# {{{ peak-following baseline

_NEIGHBORHOOD = np.array(
        [(i, j, k) for i in (-1, 0, 1) for j in (-1, 0, 1) for k in (-1, 0, 1)
            if (i, j, k) != (0, 0, 0)],
        dtype=np.int64)


def _away_from_roi(v: PhantomVolume, voxels: IntArray) -> FloatArray:
    """Unit vectors pointing from the ROI voxels in the 26-neighborhood of
    each of *voxels* toward the voxel. Zero where no ROI voxel is adjacent.
    """
    dims = np.array(v.dims)
    neighbors = voxels[:, np.newaxis, :] + _NEIGHBORHOOD
    inside = np.all((neighbors >= 0) & (neighbors < dims), axis=-1)
    clipped = np.clip(neighbors, 0, dims - 1)
    is_roi = inside & (v.roi_labels[
        clipped[..., 0], clipped[..., 1], clipped[..., 2]] > 0)

    toward = np.einsum("nm,mj->nj", is_roi.astype(np.float64), _NEIGHBORHOOD)
    norms = np.linalg.norm(toward, axis=1, keepdims=True)
    return np.where(norms > 0, -toward/np.where(norms > 0, norms, 1.), 0.)


def peak_following_directions(v: PhantomVolume, positions: FloatArray,
        prev_directions: FloatArray, has_prev: BoolArray) -> FloatArray:
    """Choose, at each of *positions*, the peak of the nearest voxel most
    aligned (in absolute cosine) with the reference direction, signed to
    point along it. The reference is the previous direction or, on the first
    step, the direction away from the adjacent ROI. Ties in absolute cosine
    go to the stronger peak.

    Where a voxel carries no peaks, the reference direction is returned.
    """
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    voxels = np.clip(nearest_voxel(positions), 0, np.array(v.dims) - 1)
    slots = v.peaks[voxels[:, 0], voxels[:, 1], voxels[:, 2]].astype(np.float64)
    used = slots[..., 3] > 0

    reference = np.where(has_prev[:, np.newaxis], prev_directions,
            _away_from_roi(v, voxels))

    cos = np.einsum("nkj,nj->nk", slots[..., :3], reference)
    alignment = np.where(used, np.abs(cos), -1.)
    best_alignment = alignment.max(axis=1, keepdims=True)
    tied = used & (alignment >= best_alignment - 1e-12)
    best = np.argmax(np.where(tied, slots[..., 3], -1.), axis=1)

    rows = np.arange(len(positions))
    sign = np.where(cos[rows, best] < 0, -1., 1.)
    chosen = sign[:, np.newaxis]*slots[rows, best, :3]

    return np.where(used.any(axis=1)[:, np.newaxis], chosen, reference)


def _baseline_choose(env: TrackingEnvironment, ids: IntArray) -> FloatArray:
    tips = env.points[ids, env.n_steps[ids]]
    return peak_following_directions(env.v, tips, env.prev_dirs[ids, -1],
            env.n_steps[ids] >= 1)


def track_baseline(v: PhantomVolume, per_voxel_seeds: int,
        step_size: float = 0.5, max_angle: float = 30., rng_seed: Seed = 0,
        env_cfg: EnvConfig | None = None,
        config: TrackingConfig | None = None) -> Tractogram:
    """Deterministic strongest-aligned-peak tracking under the white-matter,
    angle and length stopping rules, without an oracle. Seed jitter is the
    only source of randomness.

    *env_cfg* supplies the remaining stopping parameters; its step size and
    maximum angle are replaced by *step_size* and *max_angle*.
    """
    if config is None:
        config = TrackingConfig(per_voxel_seeds=per_voxel_seeds)
    env_cfg = replace(env_cfg or EnvConfig(),
            step_size=step_size, max_angle=max_angle, oracle_stop=False, alpha=0.)

    jitter_seed, _ = _seed_streams(rng_seed)
    seeds = interface_seeds(v, per_voxel_seeds, rng_seed=jitter_seed)

    with ProcessLogger(logger, f"tracking {len(seeds)} seeds with peak following"):
        result = _rollout(v, env_cfg, None, seeds, lambda ichunk: _baseline_choose,
                config.workers, config.chunk_size)

    logger.info("tracked %d streamlines (%d short)", len(result), result.short.sum())
    return result

# }}}

# vim: foldmethod=marker
