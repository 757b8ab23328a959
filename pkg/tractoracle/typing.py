"""
Typing helpers
--------------

.. currentmodule:: tractoracle.typing

.. autodata:: FloatArray

    A :mod:`numpy` array of floating point values. Points and directions are
    arrays of shape ``(n, 3)``.

.. autodata:: IntArray
.. autodata:: BoolArray
.. autodata:: PointLike

    Anything :func:`numpy.asarray` turns into a length-3 position.

.. autodata:: Seed

    An integer seed or a :class:`numpy.random.SeedSequence`, accepted wherever
    a random stream is created.

.. autofunction:: not_none
.. autofunction:: as_points
.. autofunction:: make_rng
.. autofunction:: spawn_rngs
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

from collections.abc import Sequence
from typing import TypeAlias, TypeVar

import numpy as np
import numpy.typing as npt


FloatArray: TypeAlias = npt.NDArray[np.floating]
IntArray: TypeAlias = npt.NDArray[np.integer]
BoolArray: TypeAlias = npt.NDArray[np.bool_]

PointLike: TypeAlias = Sequence[float] | FloatArray
Seed: TypeAlias = int | np.random.SeedSequence

T = TypeVar("T")


def not_none(x: T | None) -> T:
    assert x is not None
    return x


def as_points(points: Sequence[PointLike] | FloatArray,
              dtype: npt.DTypeLike = np.float64) -> FloatArray:
    """Return *points* as a contiguous ``(n, 3)`` array of *dtype*."""
    result = np.ascontiguousarray(points, dtype=dtype)
    if result.ndim != 2 or result.shape[1] != 3:
        raise ValueError(f"expected an (n, 3) array of points, got shape "
                f"{result.shape}")
    return result


def make_rng(seed: Seed) -> np.random.Generator:
    """Return a :class:`numpy.random.Generator` seeded from *seed*."""
    return np.random.default_rng(seed)


def as_seed_sequence(seed: Seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def spawn_rngs(seed: Seed, n: int) -> list[np.random.Generator]:
    """Return *n* independent generators derived from *seed*. Unlike
    :meth:`numpy.random.SeedSequence.spawn`, repeated calls with the same
    *seed* give the same generators.
    """
    ss = as_seed_sequence(seed)
    return [
        np.random.default_rng(
            np.random.SeedSequence(ss.entropy, spawn_key=(*ss.spawn_key, i)))
        for i in range(n)]
