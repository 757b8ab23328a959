"""
Streamline plausibility oracle
------------------------------

A transformer encoder regressing a plausibility score in ``[0, 1]`` from the
sequence of segment vectors of a resampled streamline. The pipeline is:

#. resample the streamline to :attr:`OracleConfig.n_points` points and take
   the ``n_points - 1`` raw segment vectors (not normalized, so that segment
   length carries the streamline length);
#. project each vector to :attr:`OracleConfig.embed_dim`;
#. prepend a learned ``SCORE`` token and add a sinusoidal positional encoding;
#. apply :attr:`OracleConfig.n_blocks` post-norm encoder blocks (multi-head
   self-attention and a ReLU feed-forward network, each followed by a
   residual connection and layer normalization);
#. map the ``SCORE`` position through a linear layer and a sigmoid.

.. autoexception:: TrainingDataError

.. autoclass:: OracleConfig
.. autoclass:: OracleModel
.. autofunction:: parameter_count
.. autofunction:: encoder_parameter_count
.. autofunction:: sinusoidal_encoding
.. autofunction:: streamline_features

Scoring
^^^^^^^

.. autofunction:: score
.. autofunction:: score_batch
.. autofunction:: filter_tractogram

Training
^^^^^^^^

.. autofunction:: augment
.. autoclass:: ClassificationMetrics
.. autofunction:: classification_metrics
.. autoclass:: OracleEpoch
.. autofunction:: train_oracle

Checkpoints
^^^^^^^^^^^

.. autofunction:: save_oracle
.. autofunction:: load_oracle
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
from typing import IO, TYPE_CHECKING, Any

import numpy as np

from pytools import ProcessLogger, memoize

from tractoracle.container import FileFormatError
from tractoracle.geometry import resample, to_directions
from tractoracle.tensor import (
    MLP,
    Adam,
    LayerNorm,
    Leaf,
    Linear,
    Module,
    Tensor,
    backward,
    check_finite,
    concat,
    no_grad,
    read_tensors,
    sigmoid,
    softmax,
    square,
    transpose,
    write_tensors,
)
from tractoracle.tractogram import Tractogram
from tractoracle.typing import as_points, spawn_rngs


if TYPE_CHECKING:
    import os
    from collections.abc import Sequence

    from tractoracle.phantom import LabeledStreamlineSet
    from tractoracle.typing import FloatArray, IntArray, PointLike, Seed


logger = logging.getLogger(__name__)


class TrainingDataError(ValueError):
    pass


#: Additive attention bias for padded keys.
MASKED_SCORE = -1e9


# {{{ configuration

@dataclass(frozen=True)
class OracleConfig:
    """
    .. attribute:: n_points
    .. attribute:: embed_dim
    .. attribute:: n_blocks
    .. attribute:: n_heads
    .. attribute:: ffn_dim
    .. attribute:: threshold

        Scores at or above the threshold classify a streamline as plausible.

    .. attribute:: dtype

        Name of the floating point type of parameters and activations.
    """

    n_points: int = 128
    embed_dim: int = 32
    n_blocks: int = 4
    n_heads: int = 4
    ffn_dim: int = 2048
    threshold: float = 0.5
    dtype: str = "float32"

    def __post_init__(self) -> None:
        if self.n_points < 2:
            raise ValueError(f"n_points must be at least 2, got {self.n_points}")
        for name in ("embed_dim", "n_blocks", "n_heads", "ffn_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.embed_dim % self.n_heads:
            raise ValueError(f"embed_dim ({self.embed_dim}) is not divisible by "
                    f"n_heads ({self.n_heads})")
        if not 0 < self.threshold < 1:
            raise ValueError(f"threshold must lie in (0, 1), got {self.threshold}")
        if np.dtype(self.dtype).kind != "f":
            raise ValueError(f"dtype must be a floating point type, got {self.dtype}")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @staticmethod
    def from_dict(data: dict[str, Any]) -> OracleConfig:
        known = {fld.name for fld in fields(OracleConfig)}
        return OracleConfig(**{k: v for k, v in data.items() if k in known})


def encoder_parameter_count(config: OracleConfig) -> int:
    """Number of parameters in the encoder blocks."""
    d, f = config.embed_dim, config.ffn_dim
    attention = 4*(d*d + d)
    feed_forward = (d*f + f) + (f*d + d)
    norms = 2*2*d
    return config.n_blocks*(attention + feed_forward + norms)


def parameter_count(config: OracleConfig) -> int:
    """Total number of trainable parameters: the encoder blocks plus the input
    projection, the ``SCORE`` token and the output head.
    """
    d = config.embed_dim
    return encoder_parameter_count(config) + (3*d + d) + d + (d + 1)

# }}}


# {{{ network

@memoize
def sinusoidal_encoding(n_tokens: int, dim: int) -> FloatArray:
    """Return the ``(n_tokens, dim)`` sinusoidal positional encoding: even
    columns ``sin(pos / 10000**(2i/dim))``, odd columns the matching cosine.
    """
    position = np.arange(n_tokens, dtype=np.float64)[:, np.newaxis]
    div = np.exp(np.arange(0, dim, 2, dtype=np.float64) * -(np.log(10000.) / dim))
    result = np.zeros((n_tokens, dim))
    result[:, 0::2] = np.sin(position*div)
    result[:, 1::2] = np.cos(position*div)[:, :dim // 2]
    result.flags.writeable = False
    return result


class MultiHeadAttention(Module):
    def __init__(self, dim: int, n_heads: int, rng: np.random.Generator,
            dtype: Any) -> None:
        self.n_heads = n_heads
        self.query = Linear(dim, dim, rng, dtype)
        self.key = Linear(dim, dim, rng, dtype)
        self.value = Linear(dim, dim, rng, dtype)
        self.output = Linear(dim, dim, rng, dtype)

    def __call__(self, x: Tensor, bias: FloatArray | None = None) -> Tensor:
        nbatch, ntokens, dim = x.shape
        head_dim = dim // self.n_heads

        def split_heads(y: Tensor) -> Tensor:
            return transpose(y.reshape(nbatch, ntokens, self.n_heads, head_dim),
                    (0, 2, 1, 3))

        q = split_heads(self.query(x))
        k = split_heads(self.key(x))
        v = split_heads(self.value(x))

        scores = (q @ transpose(k, (0, 1, 3, 2))) * (1/np.sqrt(head_dim))
        if bias is not None:
            scores = scores + bias
        context = softmax(scores, axis=-1) @ v
        return self.output(
                transpose(context, (0, 2, 1, 3)).reshape(nbatch, ntokens, dim))


class EncoderBlock(Module):
    def __init__(self, config: OracleConfig, rng: np.random.Generator) -> None:
        dtype = np.dtype(config.dtype)
        self.attention = MultiHeadAttention(
                config.embed_dim, config.n_heads, rng, dtype)
        self.norm1 = LayerNorm(config.embed_dim, dtype)
        self.feed_forward = MLP(
                [config.embed_dim, config.ffn_dim, config.embed_dim], rng, dtype)
        self.norm2 = LayerNorm(config.embed_dim, dtype)

    def __call__(self, x: Tensor, bias: FloatArray | None = None) -> Tensor:
        x = self.norm1(x + self.attention(x, bias))
        return self.norm2(x + self.feed_forward(x))


class OracleModel(Module):
    """
    .. attribute:: config

    .. automethod:: __call__
    """

    def __init__(self, config: OracleConfig, rng_seed: Seed = 0) -> None:
        self.config = config
        dtype = np.dtype(config.dtype)
        rng, = spawn_rngs(rng_seed, 1)

        self.input_projection = Linear(3, config.embed_dim, rng, dtype)
        self.score_token = Leaf(
                (0.02*rng.standard_normal(config.embed_dim)).astype(dtype),
                requires_grad=True, name="score_token")
        self.blocks = [EncoderBlock(config, rng) for _ in range(config.n_blocks)]
        self.head = Linear(config.embed_dim, 1, rng, dtype)

    def __call__(self, directions: FloatArray,
            padding_mask: FloatArray | None = None) -> Tensor:
        """Score a batch of direction sequences.

        :arg directions: array of shape ``(batch, n, 3)``.
        :arg padding_mask: optional boolean array of shape ``(batch, n)``,
            *True* where a direction is padding to be ignored by attention.
        :returns: a tensor of shape ``(batch,)``.
        """
        dtype = np.dtype(self.config.dtype)
        directions = np.asarray(directions, dtype=dtype)
        if directions.ndim != 3 or directions.shape[2] != 3:
            raise ValueError("expected directions of shape (batch, n, 3), got "
                    f"{directions.shape}")
        nbatch, ndirs, _ = directions.shape
        dim = self.config.embed_dim

        tokens = self.input_projection(Leaf(directions))
        score_tokens = Leaf(np.zeros((nbatch, 1, dim), dtype=dtype)) + self.score_token
        x = (concat([score_tokens, tokens], axis=1)
                + sinusoidal_encoding(ndirs + 1, dim).astype(dtype))

        bias = None
        if padding_mask is not None:
            padding_mask = np.asarray(padding_mask, dtype=bool)
            if padding_mask.shape != (nbatch, ndirs):
                raise ValueError(f"padding mask of shape {padding_mask.shape} "
                        f"does not match directions of shape {directions.shape}")
            key_mask = np.concatenate(
                    [np.zeros((nbatch, 1), dtype=bool), padding_mask], axis=1)
            bias = np.ascontiguousarray(np.broadcast_to(
                    np.where(key_mask, MASKED_SCORE, 0.).astype(dtype)
                    [:, np.newaxis, np.newaxis, :],
                    (nbatch, self.config.n_heads, ndirs + 1, ndirs + 1)))

        for block in self.blocks:
            x = block(x, bias)

        return sigmoid(self.head(x[:, 0, :])).reshape(nbatch)

# }}}


# {{{ scoring

def streamline_features(s: Sequence[PointLike] | FloatArray,
        n_points: int) -> FloatArray:
    """Return the ``(n_points - 1, 3)`` segment vectors of *s* resampled to
    *n_points* points.

    :raises tractoracle.geometry.InvalidInputError: if *s* has fewer than 2
        points.
    """
    return to_directions(resample(s, n_points))


def score_batch(m: OracleModel, batch: Sequence[FloatArray],
        chunk_size: int = 64) -> FloatArray:
    """Return the score of every streamline in *batch* as a ``float64``
    array. Streamlines are scored in chunks of *chunk_size*.
    """
    if not len(batch):
        return np.zeros(0)

    results = []
    with no_grad():
        for start in range(0, len(batch), chunk_size):
            feats = np.stack([
                streamline_features(s, m.config.n_points)
                for s in batch[start:start+chunk_size]])
            results.append(m(feats).value.astype(np.float64))
    return np.concatenate(results)


def score(m: OracleModel, s: Sequence[PointLike] | FloatArray) -> float:
    return float(score_batch(m, [as_points(s)])[0])


def filter_tractogram(m: OracleModel,
        t: Tractogram) -> tuple[Tractogram, FloatArray]:
    """Keep the streamlines of *t* that score at or above the model's
    threshold.

    :returns: the filtered tractogram and the scores of all streamlines of *t*.
    """
    scores = score_batch(m, t.streamlines)
    keep = np.nonzero(scores >= m.config.threshold)[0]
    logger.info("oracle filter kept %d of %d streamlines", len(keep), len(t))
    return t.subset(keep.tolist()), scores

# }}}


# {{{ augmentation

def augment(s: Sequence[PointLike] | FloatArray, target: float,
        rng: np.random.Generator,
        n_points: int = 128,
        flip_probability: float = 0.5,
        cut_probability: float = 0.3,
        noise_std: float = 0.1,
        min_keep: float = 0.5) -> tuple[FloatArray, float]:
    """Randomly reverse *s* (with *flip_probability*), cut it to a prefix or
    suffix keeping a uniform fraction in ``[min_keep, 1]`` of its points and
    resample it to *n_points* (with *cut_probability*), then add i.i.d.
    Gaussian noise of standard deviation *noise_std* to every point.
    *target* is returned unchanged.
    """
    points = as_points(s).copy()

    if flip_probability and rng.random() < flip_probability:
        points = points[::-1].copy()

    if cut_probability and rng.random() < cut_probability:
        n = len(points)
        n_keep = max(2, int(np.ceil(rng.uniform(min_keep, 1.)*n)))
        points = points[:n_keep] if rng.random() < 0.5 else points[n-n_keep:]
        points = resample(points, n_points)

    if noise_std:
        points = points + rng.normal(0., noise_std, size=points.shape)

    return points, target

# }}}


# {{{ training

@dataclass(frozen=True)
class ClassificationMetrics:
    """
    .. attribute:: accuracy
    .. attribute:: sensitivity
    .. attribute:: precision
    .. attribute:: f1
    """

    accuracy: float
    sensitivity: float
    precision: float
    f1: float


def classification_metrics(scores: FloatArray, targets: IntArray,
        threshold: float = 0.5) -> ClassificationMetrics:
    """Binary classification metrics of *scores* against *targets*, with
    ``score >= threshold`` predicting the positive class. Ratios with a zero
    denominator are reported as 0.
    """
    scores = np.asarray(scores)
    targets = np.asarray(targets).astype(bool)
    if not len(scores):
        raise ValueError("cannot compute metrics of an empty set")

    pred = scores >= threshold
    tp = int(np.sum(pred & targets))
    fp = int(np.sum(pred & ~targets))
    fn = int(np.sum(~pred & targets))

    def ratio(num: float, den: float) -> float:
        return num/den if den else 0.

    sensitivity = ratio(tp, tp + fn)
    precision = ratio(tp, tp + fp)
    return ClassificationMetrics(
            accuracy=float(np.mean(pred == targets)),
            sensitivity=sensitivity,
            precision=precision,
            f1=ratio(2*precision*sensitivity, precision + sensitivity))


@dataclass(frozen=True)
class OracleEpoch:
    """
    .. attribute:: epoch
    .. attribute:: loss

        Mean training loss over the epoch's (augmented) batches.

    .. attribute:: validation_loss
    .. attribute:: validation

        :class:`ClassificationMetrics` on the held-out set, or *None* if the
        held-out set is empty.
    """

    epoch: int
    loss: float
    validation_loss: float
    validation: ClassificationMetrics | None


def stratified_split(targets: IntArray, fraction: float,
        rng: np.random.Generator) -> tuple[IntArray, IntArray]:
    """Split indices into training and held-out parts, holding out
    *fraction* of each class (at least one example of each class that has
    two or more).
    """
    train, held_out = [], []
    for cls in (0, 1):
        idx = rng.permutation(np.nonzero(targets == cls)[0])
        n_held = int(round(fraction*len(idx)))
        if len(idx) >= 2:
            n_held = max(1, n_held)
        held_out.append(idx[:n_held])
        train.append(idx[n_held:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(held_out))


def _mse(m: OracleModel, feats: FloatArray, targets: FloatArray) -> Tensor:
    pred = m(feats)
    return square(pred - targets.astype(pred.dtype)).mean()


def train_oracle(data: LabeledStreamlineSet, cfg: OracleConfig,
        epochs: int = 20,
        batch_size: int = 32,
        lr: float = 1e-3,
        rng_seed: Seed = 0,
        validation_fraction: float = 0.1,
        augmentation: bool = True) -> tuple[OracleModel, list[OracleEpoch]]:
    """Train an :class:`OracleModel` by minimizing the mean squared error
    between scores and targets with :class:`~tractoracle.tensor.Adam`.

    A stratified *validation_fraction* of *data* is held out and scored after
    every epoch. Training streamlines are passed through :func:`augment`
    unless *augmentation* is false.

    :returns: the trained model and one :class:`OracleEpoch` per epoch.
    :raises TrainingDataError: if *data* is empty or has a single class.
    """
    if not len(data):
        raise TrainingDataError("no training streamlines")
    n_pos = data.n_positive
    if n_pos in (0, len(data)):
        raise TrainingDataError("training data must contain both plausible and "
                f"implausible streamlines (got {n_pos} of {len(data)} plausible)")

    init_rng, split_rng, rng = spawn_rngs(rng_seed, 3)
    model = OracleModel(cfg, rng_seed=int(init_rng.integers(2**31)))
    optimizer = Adam(model.named_parameters(), lr=lr)

    train_idx, val_idx = stratified_split(data.targets, validation_fraction,
            split_rng)
    targets = data.targets.astype(np.float64)

    val_feats = None
    if len(val_idx):
        val_feats = np.stack([
            streamline_features(data.streamlines[i], cfg.n_points)
            for i in val_idx])

    trace: list[OracleEpoch] = []
    with ProcessLogger(logger, f"training oracle on {len(train_idx)} streamlines "
            f"({len(val_idx)} held out)"):
        for epoch in range(epochs):
            order = rng.permutation(train_idx)
            total_loss = 0.
            for start in range(0, len(order), batch_size):
                idx = order[start:start+batch_size]
                streamlines = [data.streamlines[i] for i in idx]
                if augmentation:
                    streamlines = [augment(s, 0., rng, n_points=cfg.n_points)[0]
                            for s in streamlines]
                feats = np.stack([streamline_features(s, cfg.n_points)
                    for s in streamlines])

                optimizer.zero_grad()
                loss = _mse(model, feats, targets[idx])
                check_finite("oracle training loss", loss.item())
                backward(loss)
                optimizer.step()
                total_loss += loss.item()*len(idx)

            validation = None
            val_loss = float("nan")
            if val_feats is not None:
                with no_grad():
                    val_scores = model(val_feats).value.astype(np.float64)
                val_loss = float(np.mean((val_scores - targets[val_idx])**2))
                validation = classification_metrics(
                        val_scores, data.targets[val_idx], cfg.threshold)

            record = OracleEpoch(
                    epoch=epoch,
                    loss=total_loss/len(train_idx),
                    validation_loss=val_loss,
                    validation=validation)
            trace.append(record)
            logger.info("epoch %d: loss %.5f, held-out loss %.5f, accuracy %s",
                    epoch, record.loss, val_loss,
                    f"{validation.accuracy:.3f}" if validation else "n/a")

    return model, trace

# }}}


# {{{ checkpoints

CHECKPOINT_KIND = "oracle"


def save_oracle(target: str | os.PathLike[str] | IO[bytes],
        m: OracleModel) -> None:
    """Write the parameters of *m* to a ``TNSR`` archive with the
    configuration as preamble.
    """
    write_tensors(target, m.state_dict(),
            config={"kind": CHECKPOINT_KIND, **m.config.to_dict()})


def load_oracle(source: str | os.PathLike[str] | IO[bytes]) -> OracleModel:
    """
    :raises tractoracle.container.FileFormatError: if *source* is not an
        oracle checkpoint.
    """
    config, tensors = read_tensors(source)
    if config is None or config.get("kind") != CHECKPOINT_KIND:
        raise FileFormatError("TNSR: archive is not an oracle checkpoint")

    model = OracleModel(OracleConfig.from_dict(config))
    try:
        model.load_state_dict(tensors)
    except (KeyError, ValueError) as err:
        raise FileFormatError(f"TNSR: oracle parameters do not match "
                f"configuration: {err}") from err
    return model

# }}}

# vim: foldmethod=marker
