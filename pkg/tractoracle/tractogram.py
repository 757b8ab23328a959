"""
Tractograms
-----------

.. autoclass:: Tractogram

``TSF1`` files
^^^^^^^^^^^^^^

A little-endian container: magic ``TSF1``, ``u32`` streamline count, then per
streamline a ``u32`` point count followed by that many ``f32`` ``(x, y, z)``
triplets in voxel coordinates.

.. autofunction:: write_tractogram
.. autofunction:: read_tractogram

Score sidecars
^^^^^^^^^^^^^^

.. autofunction:: write_scores
.. autofunction:: read_scores
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
import os
from dataclasses import dataclass, field
from typing import IO, TYPE_CHECKING

import numpy as np

from tractoracle.container import (
    BinaryReader,
    BinaryWriter,
    FileFormatError,
    open_input,
    open_output,
)
from tractoracle.typing import as_points


if TYPE_CHECKING:
    from collections.abc import Iterator, Sequence

    from tractoracle.typing import BoolArray, FloatArray


logger = logging.getLogger(__name__)

MAGIC = b"TSF1"


@dataclass(frozen=True, eq=False)
class Tractogram:
    """A set of streamlines in the voxel frame of a phantom.

    .. attribute:: streamlines

        Tuple of ``(n_i, 3)`` ``float64`` arrays.

    .. attribute:: done_reasons

        For each streamline, why tracking stopped (see
        :class:`tractoracle.env.DoneReason`), or ``""`` if unknown (e.g. for
        tractograms read from a file).

    .. attribute:: short

        Boolean flags marking streamlines with fewer steps than the
        harvesting minimum. They are retained, not dropped.

    .. automethod:: subset
    .. automethod:: lengths
    """

    streamlines: tuple[FloatArray, ...] = ()
    done_reasons: tuple[str, ...] = field(default=())
    short: BoolArray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    def __post_init__(self) -> None:
        object.__setattr__(self, "streamlines",
                tuple(as_points(s) for s in self.streamlines))
        n = len(self.streamlines)
        if not self.done_reasons:
            object.__setattr__(self, "done_reasons", ("",)*n)
        if not len(self.short):
            object.__setattr__(self, "short", np.zeros(n, dtype=bool))
        object.__setattr__(self, "short", np.asarray(self.short, dtype=bool))

        if not (len(self.done_reasons) == len(self.short) == n):
            raise ValueError("streamlines, done_reasons and short flags "
                    "differ in length")

    def __len__(self) -> int:
        return len(self.streamlines)

    def __iter__(self) -> Iterator[FloatArray]:
        return iter(self.streamlines)

    def __getitem__(self, i: int) -> FloatArray:
        return self.streamlines[i]

    def lengths(self) -> np.ndarray:
        """Number of points of each streamline."""
        return np.array([len(s) for s in self.streamlines], dtype=np.int64)

    def subset(self, indices: Sequence[int]) -> Tractogram:
        indices = list(indices)
        return Tractogram(
                streamlines=tuple(self.streamlines[i] for i in indices),
                done_reasons=tuple(self.done_reasons[i] for i in indices),
                short=self.short[np.asarray(indices, dtype=np.int64)])

    @staticmethod
    def concatenate(tractograms: Sequence[Tractogram]) -> Tractogram:
        return Tractogram(
                streamlines=tuple(s for t in tractograms for s in t.streamlines),
                done_reasons=tuple(r for t in tractograms for r in t.done_reasons),
                short=np.concatenate(
                    [t.short for t in tractograms] + [np.zeros(0, dtype=bool)]))


def write_tractogram(target: str | os.PathLike[str] | IO[bytes],
        t: Tractogram) -> None:
    """Write the points of *t* as ``TSF1``. Done reasons and flags are not
    stored. Paths are written atomically.
    """
    with open_output(target) as outf:
        w = BinaryWriter(outf)
        w.write(MAGIC)
        w.u32(len(t))
        for s in t.streamlines:
            w.u32(len(s))
            w.array(s, np.float32)

    logger.debug("wrote %d streamlines", len(t))


def read_tractogram(source: str | os.PathLike[str] | IO[bytes]) -> Tractogram:
    """
    :raises FileFormatError: on a wrong magic, truncation or trailing data.
    """
    with open_input(source) as inf:
        r = BinaryReader(inf, "TSF1")
        r.expect_magic(MAGIC)
        count = r.u32()
        streamlines = []
        for _ in range(count):
            n = r.u32()
            streamlines.append(r.array(np.float32, (n, 3)).astype(np.float64))
        if not r.at_end():
            raise FileFormatError("TSF1: trailing data after last streamline")

    return Tractogram(streamlines=tuple(streamlines))


def write_scores(target: str | os.PathLike[str] | IO[str],
        scores: Sequence[float] | FloatArray) -> None:
    """Write one score per line with six decimals."""
    text = "".join(f"{float(score):.6f}\n" for score in scores)
    if isinstance(target, (str, os.PathLike)):
        with open_output(target) as outf:
            outf.write(text.encode("utf-8"))
    else:
        target.write(text)


def read_scores(source: str | os.PathLike[str]) -> FloatArray:
    with open(source) as inf:
        return np.array([float(line) for line in inf if line.strip()],
                dtype=np.float64)

# vim: foldmethod=marker
