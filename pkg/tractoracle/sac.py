"""
Soft actor-critic
-----------------

The tracking agent: a Gaussian actor over raw 3D directions (no squashing;
the environment normalizes actions), twin critics with polyak-averaged
target copies, an automatically tuned entropy coefficient and a ring-buffer
replay memory.

.. autoexception:: NotReadyError
.. autoexception:: ConfigurationMismatchError
.. autoexception:: tractoracle.tensor.NumericalFailureError
    :noindex:

.. autoclass:: SacConfig
.. autoclass:: Actor
.. autoclass:: Critic
.. autoclass:: SacAgent
.. autoclass:: ReplayBuffer
.. autoclass:: ReplaySample

.. autofunction:: act
.. autofunction:: td_targets
.. autofunction:: polyak_update
.. autofunction:: update
.. autoclass:: UpdateReport
.. autoclass:: SacEpoch
.. autofunction:: train

.. autofunction:: save_agent
.. autofunction:: load_agent
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

import copy
import logging
import threading
from collections import Counter
from dataclasses import asdict, dataclass, fields
from typing import IO, TYPE_CHECKING, Any

import numpy as np

from pytools import ProcessLogger

from tractoracle.container import FileFormatError
from tractoracle.env import TrackingEnvironment
from tractoracle.phantom import interface_seeds
from tractoracle.tensor import (
    MLP,
    Adam,
    Leaf,
    Linear,
    Module,
    NumericalFailureError,
    ShapeError,
    Tensor,
    backward,
    check_finite,
    clamp,
    concat,
    exp,
    gaussian_sample,
    minimum,
    no_grad,
    read_tensors,
    relu,
    square,
    write_tensors,
)
from tractoracle.tensor.primitives import LOG_STD_MAX, LOG_STD_MIN
from tractoracle.typing import spawn_rngs


if TYPE_CHECKING:
    import os
    from collections.abc import Mapping

    from tractoracle.env import EnvConfig, TransitionBatch
    from tractoracle.oracle import OracleModel
    from tractoracle.phantom import PhantomVolume
    from tractoracle.typing import BoolArray, FloatArray


logger = logging.getLogger(__name__)

__all__ = [
    "Actor",
    "ConfigurationMismatchError",
    "Critic",
    "NotReadyError",
    "NumericalFailureError",
    "ReplayBuffer",
    "ReplaySample",
    "SacAgent",
    "SacConfig",
    "SacEpoch",
    "UpdateReport",
    "act",
    "load_agent",
    "polyak_update",
    "save_agent",
    "td_targets",
    "train",
    "update",
]


class NotReadyError(RuntimeError):
    pass


class ConfigurationMismatchError(ValueError):
    pass


ACTION_DIM = 3
_HALF_LOG_2PI = 0.5*np.log(2*np.pi)


# {{{ configuration

@dataclass(frozen=True)
class SacConfig:
    """
    .. attribute:: lr
    .. attribute:: gamma

        Discount factor.

    .. attribute:: tau

        Polyak averaging coefficient of the target critics.

    .. attribute:: batch_size
    .. attribute:: target_entropy
    .. attribute:: initial_log_alpha
    .. attribute:: epochs
    .. attribute:: hidden_dim
    .. attribute:: n_layers

        Number of hidden layers of actor and critics.

    .. attribute:: n_seeds_per_epoch
    .. attribute:: buffer_capacity
    .. attribute:: updates_per_step

        Gradient updates per collected transition.

    .. attribute:: checkpoint_every
    .. attribute:: dtype
    .. attribute:: rng_seed
    """

    lr: float = 5e-4
    gamma: float = 0.95
    tau: float = 0.005
    batch_size: int = 256
    target_entropy: float = -float(ACTION_DIM)
    initial_log_alpha: float = 0.
    epochs: int = 1000
    hidden_dim: int = 1024
    n_layers: int = 3
    n_seeds_per_epoch: int = 64
    buffer_capacity: int = 100_000
    updates_per_step: int = 1
    checkpoint_every: int = 0
    dtype: str = "float32"
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not 0 < self.gamma < 1:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if not 0 < self.tau <= 1:
            raise ValueError(f"tau must lie in (0, 1], got {self.tau}")
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        for name in ("batch_size", "hidden_dim", "n_layers", "n_seeds_per_epoch",
                "buffer_capacity", "updates_per_step"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.epochs < 0 or self.checkpoint_every < 0:
            raise ValueError("epochs and checkpoint_every must be nonnegative")
        if self.buffer_capacity < self.batch_size:
            raise ValueError("buffer_capacity must be at least batch_size")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @staticmethod
    def from_dict(data: dict[str, Any]) -> SacConfig:
        known = {fld.name for fld in fields(SacConfig)}
        return SacConfig(**{k: v for k, v in data.items() if k in known})

# }}}


# {{{ networks

class Actor(Module):
    """Maps states to the mean and the clamped log standard deviation of a
    diagonal 3D Gaussian.
    """

    def __init__(self, state_width: int, hidden_dim: int, n_layers: int,
            rng: np.random.Generator, dtype: Any = np.float32) -> None:
        self.state_width = state_width
        self.trunk = MLP([state_width] + [hidden_dim]*n_layers, rng, dtype)
        self.mean = Linear(hidden_dim, ACTION_DIM, rng, dtype)
        self.log_std = Linear(hidden_dim, ACTION_DIM, rng, dtype)

    def __call__(self, states: Tensor) -> tuple[Tensor, Tensor]:
        if states.shape[-1] != self.state_width:
            raise ShapeError(f"actor expects states of width {self.state_width}, "
                    f"got shape {states.shape}")
        h = relu(self.trunk(states))
        return self.mean(h), clamp(self.log_std(h), LOG_STD_MIN, LOG_STD_MAX)


class Critic(Module):
    """Maps a state and an action to a scalar value."""

    def __init__(self, state_width: int, hidden_dim: int, n_layers: int,
            rng: np.random.Generator, dtype: Any = np.float32) -> None:
        self.state_width = state_width
        self.net = MLP([state_width + ACTION_DIM] + [hidden_dim]*n_layers + [1],
                rng, dtype)

    def __call__(self, states: Tensor, actions: Tensor) -> Tensor:
        if states.shape[-1] != self.state_width:
            raise ShapeError(f"critic expects states of width {self.state_width}, "
                    f"got shape {states.shape}")
        x = concat([states, actions], axis=-1)
        return self.net(x).reshape(x.shape[0])


def gaussian_log_prob(log_std: Tensor, noise: FloatArray) -> Tensor:
    """Log density of the sample ``mean + exp(log_std) * noise`` under the
    Gaussian it was drawn from, summed over action components.
    """
    const = (-0.5*np.sum(noise**2, axis=-1) - ACTION_DIM*_HALF_LOG_2PI)
    return log_std.sum(axis=-1)*(-1.) + const.astype(log_std.dtype)


class SacAgent:
    """
    .. attribute:: config
    .. attribute:: state_width
    .. attribute:: actor
    .. attribute:: critic1
    .. attribute:: critic2
    .. attribute:: target1
    .. attribute:: target2
    .. attribute:: log_alpha

        Logarithm of the entropy coefficient, a scalar parameter.

    .. autoproperty:: alpha
    .. automethod:: tensors
    .. automethod:: optimizer_steps
    .. automethod:: load_tensors
    """

    def __init__(self, state_width: int, config: SacConfig) -> None:
        self.config = config
        self.state_width = state_width

        dtype = np.dtype(config.dtype)
        actor_rng, critic1_rng, critic2_rng = spawn_rngs(config.rng_seed, 3)

        self.actor = Actor(state_width, config.hidden_dim, config.n_layers,
                actor_rng, dtype)
        self.critic1 = Critic(state_width, config.hidden_dim, config.n_layers,
                critic1_rng, dtype)
        self.critic2 = Critic(state_width, config.hidden_dim, config.n_layers,
                critic2_rng, dtype)
        self.target1 = copy.deepcopy(self.critic1)
        self.target2 = copy.deepcopy(self.critic2)
        self.log_alpha = Leaf(np.array(config.initial_log_alpha, dtype=dtype),
                requires_grad=True, name="log_alpha")

        self.actor_optimizer = Adam(self.actor.named_parameters(), lr=config.lr)
        self.critic1_optimizer = Adam(self.critic1.named_parameters(), lr=config.lr)
        self.critic2_optimizer = Adam(self.critic2.named_parameters(), lr=config.lr)
        self.alpha_optimizer = Adam({"log_alpha": self.log_alpha}, lr=config.lr)

    @property
    def alpha(self) -> float:
        return float(np.exp(self.log_alpha.data))

    def _modules(self) -> dict[str, Module]:
        return {
            "actor": self.actor,
            "critic1": self.critic1,
            "critic2": self.critic2,
            "target1": self.target1,
            "target2": self.target2,
            }

    def _optimizers(self) -> dict[str, Adam]:
        return {
            "actor": self.actor_optimizer,
            "critic1": self.critic1_optimizer,
            "critic2": self.critic2_optimizer,
            "alpha": self.alpha_optimizer,
            }

    def tensors(self) -> dict[str, FloatArray]:
        """All network parameters, optimizer moments and the entropy
        coefficient, by name.
        """
        result: dict[str, FloatArray] = {}
        for prefix, module in self._modules().items():
            result.update({f"{prefix}.{name}": ary
                for name, ary in module.state_dict().items()})
        result["log_alpha"] = self.log_alpha.data.reshape(1)
        for prefix, opt in self._optimizers().items():
            result.update(opt.state_arrays(f"adam.{prefix}"))
        return result

    def optimizer_steps(self) -> dict[str, int]:
        """Adam step counts by optimizer name."""
        return {prefix: opt.state.step for prefix, opt in self._optimizers().items()}

    def load_tensors(self, tensors: dict[str, FloatArray],
            optimizer_steps: Mapping[str, int] | None = None) -> None:
        for prefix, module in self._modules().items():
            module.load_state_dict({
                name[len(prefix)+1:]: ary for name, ary in tensors.items()
                if name.startswith(f"{prefix}.")})
        self.log_alpha.data[...] = np.asarray(tensors["log_alpha"]).reshape(())
        steps = optimizer_steps or {}
        for prefix, opt in self._optimizers().items():
            opt.load_state_arrays(tensors, f"adam.{prefix}", int(steps.get(prefix, 0)))


def act(actor: Actor, states: FloatArray, deterministic: bool = False,
        rng: np.random.Generator | None = None) -> tuple[FloatArray, FloatArray]:
    """Choose actions for a batch of *states*.

    :returns: a tuple ``(actions, log_probs)``. In deterministic mode, the
        actions are the means and the log-probabilities are the density at
        the mean.
    :raises tractoracle.tensor.ShapeError: if the state width does not match.
    """
    dtype = actor.mean.weight.dtype
    states = np.atleast_2d(np.asarray(states, dtype=dtype))

    with no_grad():
        mean, log_std = actor(Leaf(states))
        if deterministic:
            noise = np.zeros(mean.shape, dtype=dtype)
            actions = mean.value
        else:
            if rng is None:
                raise ValueError("stochastic actions require an rng")
            noise = rng.standard_normal(mean.shape).astype(dtype)
            actions = gaussian_sample(mean, log_std, noise).value
        log_probs = gaussian_log_prob(log_std, noise).value

    return actions.astype(np.float64), log_probs.astype(np.float64)

# }}}


# {{{ replay

@dataclass(frozen=True, eq=False)
class ReplaySample:
    states: FloatArray
    actions: FloatArray
    rewards: FloatArray
    next_states: FloatArray
    dones: FloatArray


class ReplayBuffer:
    """Fixed-capacity ring buffer of transitions; once full, new transitions
    overwrite the oldest. Appends are serialized by a lock.

    .. automethod:: push
    .. automethod:: sample
    """

    def __init__(self, capacity: int, state_width: int,
            dtype: Any = np.float32) -> None:
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.states = np.zeros((capacity, state_width), dtype=dtype)
        self.actions = np.zeros((capacity, ACTION_DIM), dtype=dtype)
        self.rewards = np.zeros(capacity, dtype=dtype)
        self.next_states = np.zeros((capacity, state_width), dtype=dtype)
        self.dones = np.zeros(capacity, dtype=dtype)
        self.position = 0
        self.size = 0
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return self.size

    def push(self, states: FloatArray, actions: FloatArray, rewards: FloatArray,
            next_states: FloatArray, dones: FloatArray | BoolArray) -> None:
        n = len(states)
        if not (len(actions) == len(rewards) == len(next_states) == len(dones) == n):
            raise ValueError("transition arrays differ in length")

        with self._lock:
            for start in range(0, n, self.capacity):
                chunk = slice(start, min(n, start + self.capacity))
                m = chunk.stop - chunk.start
                idx = (self.position + np.arange(m)) % self.capacity
                self.states[idx] = states[chunk]
                self.actions[idx] = actions[chunk]
                self.rewards[idx] = rewards[chunk]
                self.next_states[idx] = next_states[chunk]
                self.dones[idx] = dones[chunk]
                self.position = (self.position + m) % self.capacity
                self.size = min(self.capacity, self.size + m)

    def push_transitions(self, batch: TransitionBatch,
            raw_actions: FloatArray) -> None:
        """Append the transitions of an environment step, storing the actions
        as sampled by the actor rather than normalized.
        """
        self.push(batch.states, raw_actions, batch.rewards, batch.next_states,
                batch.dones)

    def sample(self, batch_size: int, rng: np.random.Generator) -> ReplaySample:
        """Draw *batch_size* transitions uniformly, with replacement, from the
        filled slots.
        """
        if self.size == 0:
            raise NotReadyError("cannot sample from an empty replay buffer")
        idx = rng.integers(self.size, size=batch_size)
        return ReplaySample(
                states=self.states[idx],
                actions=self.actions[idx],
                rewards=self.rewards[idx],
                next_states=self.next_states[idx],
                dones=self.dones[idx])

# }}}


# {{{ updates

@dataclass(frozen=True)
class UpdateReport:
    critic1: float
    critic2: float
    actor: float
    alpha: float


def td_targets(agent: SacAgent, rewards: FloatArray, next_states: FloatArray,
        dones: FloatArray, noise: FloatArray) -> FloatArray:
    """Return the critic regression targets
    ``r + gamma * (1 - done) * (min(Q1', Q2')(s', a') - alpha * log pi(a'|s'))``
    where ``a'`` is drawn from the actor at *next_states* with standard
    normal *noise*.
    """
    dtype = agent.actor.mean.weight.dtype
    cfg = agent.config
    with no_grad():
        s_next = Leaf(np.asarray(next_states, dtype=dtype))
        mean, log_std = agent.actor(s_next)
        noise = np.asarray(noise, dtype=dtype)
        a_next = gaussian_sample(mean, log_std, noise)
        log_prob = gaussian_log_prob(log_std, noise).value
        q_next = minimum(agent.target1(s_next, a_next),
                agent.target2(s_next, a_next)).value

    soft_value = q_next.astype(np.float64) - agent.alpha*log_prob.astype(np.float64)
    return (np.asarray(rewards, dtype=np.float64)
            + cfg.gamma*(1 - np.asarray(dones, dtype=np.float64))*soft_value)


def polyak_update(target: Module, source: Module, tau: float) -> None:
    """Set every target parameter to ``tau * source + (1 - tau) * target``."""
    source_params = source.named_parameters()
    for name, param in target.named_parameters().items():
        param.data[...] = tau*source_params[name].data + (1 - tau)*param.data


def _critic_step(critic: Critic, optimizer: Adam, states: Leaf, actions: Leaf,
        y: FloatArray) -> float:
    optimizer.zero_grad()
    pred = critic(states, actions)
    loss = square(pred - y.astype(pred.dtype)).mean()
    backward(loss)
    optimizer.step()
    return loss.item()


def update(agent: SacAgent, buffer: ReplayBuffer,
        rng: np.random.Generator) -> UpdateReport:
    """Perform one gradient update of critics, actor and entropy coefficient
    on a batch sampled from *buffer*, then move the target critics toward the
    critics.

    :raises NotReadyError: if *buffer* holds fewer than ``batch_size``
        transitions.
    :raises tractoracle.tensor.NumericalFailureError: if a loss is not finite.
    """
    cfg = agent.config
    if len(buffer) < cfg.batch_size:
        raise NotReadyError(f"replay buffer holds {len(buffer)} transitions, "
                f"need {cfg.batch_size}")

    dtype = agent.actor.mean.weight.dtype
    batch = buffer.sample(cfg.batch_size, rng)

    # {{{ critics

    y = td_targets(agent, batch.rewards, batch.next_states, batch.dones,
            rng.standard_normal((cfg.batch_size, ACTION_DIM)))
    states = Leaf(batch.states.astype(dtype))
    actions = Leaf(batch.actions.astype(dtype))
    critic1_loss = _critic_step(agent.critic1, agent.critic1_optimizer,
            states, actions, y)
    critic2_loss = _critic_step(agent.critic2, agent.critic2_optimizer,
            states, actions, y)

    # }}}

    # {{{ actor

    agent.actor_optimizer.zero_grad()
    mean, log_std = agent.actor(states)
    noise = rng.standard_normal(mean.shape).astype(dtype)
    sampled = gaussian_sample(mean, log_std, noise)
    log_prob = gaussian_log_prob(log_std, noise)
    q = minimum(agent.critic1(states, sampled), agent.critic2(states, sampled))
    actor_loss = (log_prob*agent.alpha - q).mean()
    backward(actor_loss)
    agent.actor_optimizer.step()

    # the actor loss also reached the critics
    agent.critic1.zero_grad()
    agent.critic2.zero_grad()

    # }}}

    # {{{ entropy coefficient

    agent.alpha_optimizer.zero_grad()
    entropy_gap = (log_prob.value + cfg.target_entropy).astype(dtype)
    alpha_loss = (agent.log_alpha*Leaf(-entropy_gap)).mean()
    backward(alpha_loss)
    agent.alpha_optimizer.step()

    # }}}

    polyak_update(agent.target1, agent.critic1, cfg.tau)
    polyak_update(agent.target2, agent.critic2, cfg.tau)

    report = UpdateReport(
            critic1=critic1_loss,
            critic2=critic2_loss,
            actor=actor_loss.item(),
            alpha=agent.alpha)
    for name, value in asdict(report).items():
        check_finite(f"{name} loss", value)
    return report

# }}}


# {{{ training

@dataclass(frozen=True)
class SacEpoch:
    """
    .. attribute:: epoch
    .. attribute:: mean_return
    .. attribute:: mean_length

        Mean number of steps per episode.

    .. attribute:: done_reasons

        Histogram of episode termination reasons.

    .. attribute:: n_transitions

        Number of transitions collected.

    .. attribute:: n_updates
    .. attribute:: last_update

        The :class:`UpdateReport` of the last update, or *None*.
    """

    epoch: int
    mean_return: float
    mean_length: float
    done_reasons: dict[str, int]
    n_transitions: int
    n_updates: int
    last_update: UpdateReport | None


def check_agent_matches(agent: SacAgent, v: PhantomVolume,
        env_cfg: EnvConfig) -> None:
    """
    :raises ConfigurationMismatchError: if the agent's state width differs
        from the environment's.
    """
    width = env_cfg.state_width(v.max_peaks)
    if agent.state_width != width:
        raise ConfigurationMismatchError(
                f"agent expects states of width {agent.state_width}, but the "
                f"environment produces width {width} ({v.max_peaks} peaks per "
                f"voxel, {env_cfg.n_previous_directions} previous directions)")


def train(v: PhantomVolume, oracle: OracleModel | None, env_cfg: EnvConfig,
        sac_cfg: SacConfig,
        agent: SacAgent | None = None,
        checkpoint_path: str | os.PathLike[str] | None = None,
        ) -> tuple[SacAgent, list[SacEpoch]]:
    """Train an agent for ``sac_cfg.epochs`` epochs. Each epoch rolls out the
    stochastic actor from ``sac_cfg.n_seeds_per_epoch`` interface seeds,
    stores every transition and performs ``sac_cfg.updates_per_step``
    updates per stored transition once the buffer holds a batch.

    With *checkpoint_path*, the agent is saved there every
    ``sac_cfg.checkpoint_every`` epochs and at the end.

    :raises ConfigurationMismatchError: if *agent* does not fit the
        environment.
    """
    if agent is None:
        agent = SacAgent(env_cfg.state_width(v.max_peaks), sac_cfg)
    check_agent_matches(agent, v, env_cfg)

    # the first three streams initialize the agent
    seed_rng, rollout_rng, update_rng = spawn_rngs(sac_cfg.rng_seed, 6)[3:]

    env = TrackingEnvironment(v, env_cfg, oracle)
    buffer = ReplayBuffer(sac_cfg.buffer_capacity, agent.state_width,
            np.dtype(sac_cfg.dtype))

    n_stored = 0
    trace: list[SacEpoch] = []
    with ProcessLogger(logger, f"training agent for {sac_cfg.epochs} epochs"):
        for epoch in range(sac_cfg.epochs):
            candidates = interface_seeds(v, per_voxel=1,
                    rng_seed=int(seed_rng.integers(2**31)))
            picks = seed_rng.choice(len(candidates), size=sac_cfg.n_seeds_per_epoch,
                    replace=len(candidates) < sac_cfg.n_seeds_per_epoch)

            env.reset(candidates[picks])
            n_transitions = 0
            n_updates = 0
            last_update = None
            while True:
                ids = env.active_ids()
                if not len(ids):
                    break
                raw, _ = act(agent.actor, env.states(ids), rng=rollout_rng)
                transitions = env.step(ids, raw)
                buffer.push_transitions(transitions, raw)
                n_transitions += len(ids)
                n_stored += len(ids)

                # transitions stored before the buffer held a batch get no update
                n_new = min(len(ids), n_stored - sac_cfg.batch_size + 1)
                if n_new > 0:
                    for _ in range(n_new*sac_cfg.updates_per_step):
                        last_update = update(agent, buffer, update_rng)
                        n_updates += 1

            check_finite("episode returns", env.returns)
            record = SacEpoch(
                    epoch=epoch,
                    mean_return=float(env.returns.mean()),
                    mean_length=float(env.n_steps.mean()),
                    done_reasons=dict(sorted(Counter(
                        r.value for r in env.done_reasons if r is not None
                        ).items())),
                    n_transitions=n_transitions,
                    n_updates=n_updates,
                    last_update=last_update)
            trace.append(record)
            logger.info("epoch %d: mean return %.3f, mean length %.1f, %s",
                    epoch, record.mean_return, record.mean_length,
                    ", ".join(f"{k} {n}" for k, n in record.done_reasons.items()))

            if (checkpoint_path is not None and sac_cfg.checkpoint_every
                    and (epoch + 1) % sac_cfg.checkpoint_every == 0):
                save_agent(checkpoint_path, agent)

    if checkpoint_path is not None:
        save_agent(checkpoint_path, agent)

    return agent, trace

# }}}


# {{{ checkpoints

CHECKPOINT_KIND = "agent"


def save_agent(target: str | os.PathLike[str] | IO[bytes], agent: SacAgent) -> None:
    write_tensors(target, agent.tensors(), config={
        "kind": CHECKPOINT_KIND,
        "state_width": agent.state_width,
        "sac": agent.config.to_dict(),
        "optimizer_steps": agent.optimizer_steps(),
        })


def load_agent(source: str | os.PathLike[str] | IO[bytes]) -> SacAgent:
    """
    :raises tractoracle.container.FileFormatError: if *source* is not an
        agent checkpoint.
    """
    config, tensors = read_tensors(source)
    if config is None or config.get("kind") != CHECKPOINT_KIND:
        raise FileFormatError("TNSR: archive is not an agent checkpoint")

    agent = SacAgent(int(config["state_width"]), SacConfig.from_dict(config["sac"]))
    try:
        agent.load_tensors(tensors, config.get("optimizer_steps"))
    except (KeyError, ValueError) as err:
        raise FileFormatError("TNSR: agent tensors do not match configuration: "
                f"{err}") from err
    return agent

# }}}

# vim: foldmethod=marker
