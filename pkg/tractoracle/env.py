"""
Tracking environment
--------------------

A batch of tracking episodes, one per seed. At every step, the agent
chooses a direction for each active episode; the environment normalizes it,
moves the streamline tip by :attr:`EnvConfig.step_size` and then checks the
stopping criteria, in this order:

#. ``wm-exit``: the white-matter mask, trilinearly interpolated at the new
   tip, is below :attr:`EnvConfig.wm_threshold`;
#. ``angle``: the angle between the new and the previous direction exceeds
   :attr:`EnvConfig.max_angle` degrees;
#. ``oracle-stop``: more than :attr:`EnvConfig.t_min` steps were taken and
   the oracle scores the streamline below
   :attr:`EnvConfig.oracle_threshold`;
#. ``max-steps``: :attr:`EnvConfig.max_steps` steps were taken.

The reward of a step is the sum of a local term, the alignment of the
direction with the closest peak at the tip times its alignment with the
previous direction, and an anatomical term, :attr:`EnvConfig.alpha` if the
episode ends with a streamline the oracle scores as plausible.

.. autoexception:: EpisodeFinishedError
.. autoclass:: DoneReason
.. autoclass:: EnvConfig
.. autoclass:: TransitionBatch
.. autoclass:: TrackingEnvironment

.. autofunction:: peak_descriptors
.. autofunction:: local_rewards
.. autofunction:: reward
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
from dataclasses import asdict, dataclass, fields
from enum import Enum
from typing import TYPE_CHECKING, Any

import numpy as np

from tractoracle.geometry import OutOfBoundsError, nearest_voxel, trilinear_many
from tractoracle.oracle import score_batch
from tractoracle.tractogram import Tractogram
from tractoracle.typing import as_points


if TYPE_CHECKING:
    from collections.abc import Sequence

    from tractoracle.oracle import OracleModel
    from tractoracle.phantom import PhantomVolume
    from tractoracle.typing import BoolArray, FloatArray, IntArray, PointLike


logger = logging.getLogger(__name__)


class EpisodeFinishedError(RuntimeError):
    pass


class DoneReason(str, Enum):
    ORACLE_STOP = "oracle-stop"
    WM_EXIT = "wm-exit"
    ANGLE = "angle"
    MAX_STEPS = "max-steps"


# {{{ configuration

@dataclass(frozen=True)
class EnvConfig:
    """
    .. attribute:: step_size

        Step length in voxels.

    .. attribute:: alpha

        Weight of the anatomical reward term.

    .. attribute:: t_min

        Number of steps after which oracle stopping becomes active.

    .. attribute:: max_angle

        Largest permitted angle between consecutive directions, in degrees.

    .. attribute:: wm_threshold
    .. attribute:: max_steps
    .. attribute:: oracle_threshold
    .. attribute:: oracle_stop

        Whether the oracle stopping criterion is active.

    .. attribute:: oracle_stride

        Evaluate the oracle stopping criterion on every *oracle_stride*-th
        eligible step only.

    .. attribute:: min_length

        Harvested streamlines with fewer steps are flagged as short.

    .. attribute:: n_previous_directions
    """

    step_size: float = 0.5
    alpha: float = 10.
    t_min: int = 20
    max_angle: float = 30.
    wm_threshold: float = 0.1
    max_steps: int = 200
    oracle_threshold: float = 0.5
    oracle_stop: bool = True
    oracle_stride: int = 1
    min_length: int = 10
    n_previous_directions: int = 100

    def __post_init__(self) -> None:
        if self.step_size <= 0:
            raise ValueError(f"step_size must be positive, got {self.step_size}")
        if not 0 < self.oracle_threshold < 1:
            raise ValueError("oracle_threshold must lie in (0, 1), got "
                    f"{self.oracle_threshold}")
        if not 0 <= self.t_min < self.max_steps:
            raise ValueError(f"need 0 <= t_min < max_steps, got t_min={self.t_min}, "
                    f"max_steps={self.max_steps}")
        if self.oracle_stride < 1:
            raise ValueError("oracle_stride must be at least 1")
        if self.max_angle < 0:
            raise ValueError("max_angle must be nonnegative")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.n_previous_directions < 1:
            raise ValueError("n_previous_directions must be positive")

    def state_width(self, max_peaks: int) -> int:
        """Width of a state vector for a phantom with *max_peaks* peak slots:
        seven peak descriptors of width ``4 * max_peaks`` and the previous
        directions.
        """
        return 7*4*max_peaks + 3*self.n_previous_directions

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @staticmethod
    def from_dict(data: dict[str, Any]) -> EnvConfig:
        known = {fld.name for fld in fields(EnvConfig)}
        return EnvConfig(**{k: v for k, v in data.items() if k in known})

# }}}


# {{{ states and rewards

NEIGHBOR_OFFSETS = np.array([
    [-1, 0, 0], [1, 0, 0],
    [0, -1, 0], [0, 1, 0],
    [0, 0, -1], [0, 0, 1],
    ], dtype=np.int64)


def peak_descriptors(v: PhantomVolume, voxels: IntArray) -> FloatArray:
    """Return the flattened peak slots (width ``4K``) of the voxels with
    indices *voxels*, of shape ``(n, 3)``. Voxels outside the grid get
    zeros.
    """
    voxels = np.asarray(voxels, dtype=np.int64).reshape(-1, 3)
    dims = np.array(v.dims)
    inside = np.all((voxels >= 0) & (voxels < dims), axis=1)

    result = np.zeros((len(voxels), 4*v.max_peaks), dtype=np.float32)
    i, j, k = voxels[inside].T
    result[inside] = v.peaks[i, j, k].reshape(-1, 4*v.max_peaks)
    return result


def _tip_voxels(v: PhantomVolume, positions: FloatArray) -> IntArray:
    return np.clip(nearest_voxel(positions), 0, np.array(v.dims) - 1)


def local_rewards(v: PhantomVolume, positions: FloatArray,
        directions: FloatArray, prev_directions: FloatArray,
        has_prev: BoolArray) -> FloatArray:
    """Vectorized local reward term. *directions* and *prev_directions* are
    unit vectors; where *has_prev* is false, the previous-direction factor is
    taken to be 1.
    """
    voxels = _tip_voxels(v, positions)
    slots = v.peaks[voxels[:, 0], voxels[:, 1], voxels[:, 2]].astype(np.float64)

    used = slots[..., 3] > 0
    cos = np.abs(np.einsum("nkj,nj->nk", slots[..., :3], directions))
    peak_term = np.max(np.where(used, cos, 0.), axis=1, initial=0.)

    prev_term = np.where(has_prev,
            np.einsum("nj,nj->n", directions, prev_directions), 1.)
    return peak_term*prev_term


def reward(v: PhantomVolume, streamline: Sequence[PointLike] | FloatArray,
        action: PointLike, prev_action: PointLike,
        oracle_score: float | None, is_terminal: bool,
        alpha: float = 10., oracle_threshold: float = 0.5) -> float:
    """Reward of moving from the tip of *streamline* in direction *action*.

    *action* is normalized before use; a zero *prev_action* marks the first
    step. The anatomical term *alpha* is awarded if *is_terminal* and
    *oracle_score* is at least *oracle_threshold*.
    """
    tip = as_points(streamline)[-1:]
    a = np.asarray(action, dtype=np.float64)
    norm = np.linalg.norm(a)
    local = 0.
    if norm > 0:
        a_prev = np.asarray(prev_action, dtype=np.float64)
        prev_norm = np.linalg.norm(a_prev)
        has_prev = prev_norm > 0
        local = float(local_rewards(v, tip, (a/norm)[np.newaxis],
                (a_prev/prev_norm if has_prev else a_prev)[np.newaxis],
                np.array([has_prev]))[0])

    anatomical = 0.
    if is_terminal and oracle_score is not None and oracle_score >= oracle_threshold:
        anatomical = alpha
    return local + anatomical

# }}}


# {{{ environment

@dataclass(frozen=True, eq=False)
class TransitionBatch:
    """Transitions of the episodes *ids* in one environment step.

    .. attribute:: ids
    .. attribute:: states
    .. attribute:: actions

        The unit directions taken (zero for zero actions).

    .. attribute:: rewards
    .. attribute:: next_states
    .. attribute:: dones
    .. attribute:: done_reasons

        :class:`DoneReason` values, or *None* for episodes still running.
    """

    ids: IntArray
    states: FloatArray
    actions: FloatArray
    rewards: FloatArray
    next_states: FloatArray
    dones: BoolArray
    done_reasons: tuple[DoneReason | None, ...]

    def __len__(self) -> int:
        return len(self.ids)


class TrackingEnvironment:
    """
    .. automethod:: reset
    .. automethod:: step
    .. automethod:: active_ids
    .. automethod:: states
    .. automethod:: harvest

    .. attribute:: returns

        Sum of rewards collected by each episode so far.
    """

    def __init__(self, v: PhantomVolume, config: EnvConfig,
            oracle: OracleModel | None = None) -> None:
        self.v = v
        self.config = config
        self.oracle = oracle
        self.state_width = config.state_width(v.max_peaks)
        self._reset_arrays(0)

    def _reset_arrays(self, n: int) -> None:
        cfg = self.config
        self.points = np.zeros((n, cfg.max_steps + 1, 3))
        self.n_steps = np.zeros(n, dtype=np.int64)
        self.prev_dirs = np.zeros((n, cfg.n_previous_directions, 3))
        self.done = np.zeros(n, dtype=bool)
        self.done_reasons: list[DoneReason | None] = [None]*n
        self.returns = np.zeros(n)

    @property
    def n_episodes(self) -> int:
        return len(self.n_steps)

    def reset(self, seeds: Sequence[PointLike] | FloatArray) -> FloatArray:
        """Start one episode per seed, discarding all previous episodes.

        :returns: the initial states, of shape ``(n, state_width)``.
        :raises ValueError: if *seeds* is empty.
        :raises tractoracle.geometry.OutOfBoundsError: if a seed lies outside
            the grid.
        """
        seeds = np.asarray(seeds, dtype=np.float64).reshape(-1, 3)
        if not len(seeds):
            raise ValueError("cannot reset with an empty seed batch")
        upper = np.array(self.v.dims) - 1
        outside = ~np.all((seeds >= 0) & (seeds <= upper), axis=1)
        if outside.any():
            raise OutOfBoundsError(f"seed {tuple(seeds[outside][0])} lies outside "
                    f"the grid of shape {self.v.dims}")

        self._reset_arrays(len(seeds))
        self.points[:, 0] = seeds
        return self.states()

    def active_ids(self) -> IntArray:
        return np.nonzero(~self.done)[0]

    def states(self, ids: IntArray | None = None) -> FloatArray:
        """Assemble the states of episodes *ids* (default: all): the peak
        descriptors of the tip voxel and of its 6 axis neighbors, then the
        previous directions, oldest first.
        """
        if ids is None:
            ids = np.arange(self.n_episodes)
        ids = np.asarray(ids, dtype=np.int64)

        tips = self.points[ids, self.n_steps[ids]]
        voxels = _tip_voxels(self.v, tips)
        width = 4*self.v.max_peaks

        descriptors = peak_descriptors(
                self.v,
                (voxels[:, np.newaxis, :]
                    + np.concatenate([np.zeros((1, 3), np.int64), NEIGHBOR_OFFSETS])
                    ).reshape(-1, 3)
                ).reshape(len(ids), 7*width)
        return np.concatenate(
                [descriptors, self.prev_dirs[ids].reshape(len(ids), -1)],
                axis=1).astype(np.float32)

    def streamline(self, i: int) -> FloatArray:
        return self.points[i, :self.n_steps[i] + 1].copy()

    def _oracle_scores(self, ids: IntArray) -> FloatArray:
        """Oracle scores of episodes *ids*. Streamlines of a single point
        cannot be resampled and score 0.
        """
        assert self.oracle is not None
        result = np.zeros(len(ids))
        scorable = self.n_steps[ids] >= 1
        if scorable.any():
            result[scorable] = score_batch(self.oracle,
                    [self.streamline(i) for i in ids[scorable]])
        return result

    def step(self, ids: IntArray, actions: FloatArray) -> TransitionBatch:
        """Advance the episodes *ids* by one step in the directions *actions*
        (any nonzero length). A zero action ends its episode with reason
        ``angle``.

        :raises EpisodeFinishedError: if one of *ids* has already finished.
        """
        cfg = self.config
        ids = np.asarray(ids, dtype=np.int64).reshape(-1)
        actions = np.asarray(actions, dtype=np.float64).reshape(-1, 3)
        if len(ids) != len(actions):
            raise ValueError(f"got {len(ids)} episode ids but {len(actions)} actions")
        if len(np.unique(ids)) != len(ids):
            raise ValueError("episode ids must be distinct")
        if self.done[ids].any():
            raise EpisodeFinishedError(
                    f"episode {ids[self.done[ids]][0]} has already finished")

        states = self.states(ids)

        norms = np.linalg.norm(actions, axis=1)
        zero = norms < 1e-12
        units = np.where(zero[:, np.newaxis], 0.,
                actions / np.where(zero, 1., norms)[:, np.newaxis])

        t_prev = self.n_steps[ids]
        tips = self.points[ids, t_prev]
        has_prev = t_prev >= 1
        prev_units = self.prev_dirs[ids, -1]

        local = np.where(zero, 0.,
                local_rewards(self.v, tips, units, prev_units, has_prev))

        moving = ~zero
        t_new = t_prev + moving
        self.points[ids[moving], t_new[moving]] = (
                tips[moving] + cfg.step_size*units[moving])
        self.n_steps[ids] = t_new

        shifted = np.roll(self.prev_dirs[ids], -1, axis=1)
        shifted[:, -1] = units
        self.prev_dirs[ids] = np.where(moving[:, np.newaxis, np.newaxis],
                shifted, self.prev_dirs[ids])

        # {{{ stopping criteria

        reasons: list[DoneReason | None] = [
                DoneReason.ANGLE if z else None for z in zero]

        new_tips = self.points[ids, t_new]
        wm = trilinear_many(self.v.wm_mask, new_tips, fill_value=0.)
        cos = np.clip(np.einsum("nj,nj->n", units, prev_units), -1., 1.)
        angles = np.degrees(np.arccos(cos))

        for row in range(len(ids)):
            if reasons[row] is not None:
                continue
            if wm[row] < cfg.wm_threshold:
                reasons[row] = DoneReason.WM_EXIT
            elif has_prev[row] and angles[row] > cfg.max_angle:
                reasons[row] = DoneReason.ANGLE

        oracle_scores: dict[int, float] = {}
        if self.oracle is not None and cfg.oracle_stop:
            eligible = [row for row in range(len(ids))
                    if reasons[row] is None
                    and t_new[row] > cfg.t_min
                    and (t_new[row] - cfg.t_min - 1) % cfg.oracle_stride == 0]
            if eligible:
                scores = self._oracle_scores(ids[eligible])
                for row, sc in zip(eligible, scores, strict=True):
                    oracle_scores[row] = float(sc)
                    if sc < cfg.oracle_threshold:
                        reasons[row] = DoneReason.ORACLE_STOP

        for row in range(len(ids)):
            if reasons[row] is None and t_new[row] >= cfg.max_steps:
                reasons[row] = DoneReason.MAX_STEPS

        # }}}

        dones = np.array([r is not None for r in reasons], dtype=bool)

        anatomical = np.zeros(len(ids))
        if self.oracle is not None and cfg.alpha:
            unscored = [row for row in np.nonzero(dones)[0]
                    if row not in oracle_scores]
            if unscored:
                for row, sc in zip(unscored, self._oracle_scores(ids[unscored]),
                        strict=True):
                    oracle_scores[row] = float(sc)
            for row in np.nonzero(dones)[0]:
                if oracle_scores[row] >= cfg.oracle_threshold:
                    anatomical[row] = cfg.alpha

        rewards = local + anatomical
        self.returns[ids] += rewards
        self.done[ids] = dones
        for i, reason in zip(ids, reasons, strict=True):
            self.done_reasons[i] = reason

        if logger.isEnabledFor(logging.DEBUG):
            logger.debug("stepped %d episodes, %d finished", len(ids), dones.sum())

        return TransitionBatch(
                ids=ids,
                states=states,
                actions=units,
                rewards=rewards,
                next_states=self.states(ids),
                dones=dones,
                done_reasons=tuple(reasons))

    def harvest(self, ids: IntArray | None = None) -> Tractogram:
        """Return the streamlines of the finished episodes among *ids*
        (default: all), in order of episode index. Streamlines with fewer than
        :attr:`EnvConfig.min_length` steps are flagged as short.
        """
        if ids is None:
            ids = np.arange(self.n_episodes)
        finished = [int(i) for i in np.sort(np.asarray(ids)) if self.done[i]]
        return Tractogram(
                streamlines=tuple(self.streamline(i) for i in finished),
                done_reasons=tuple(
                    DoneReason(self.done_reasons[i]).value for i in finished),
                short=np.array([self.n_steps[i] < self.config.min_length
                    for i in finished], dtype=bool))

# }}}

# vim: foldmethod=marker
