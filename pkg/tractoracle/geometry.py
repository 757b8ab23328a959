"""
Streamline geometry
-------------------

All positions are in continuous voxel coordinates. Voxel ``(i, j, k)`` has its
center at the integer position ``(i, j, k)``; a field sampled at a voxel
center returns that voxel's value, and the domain of trilinear interpolation
is ``[0, dim - 1]`` along each axis.

A *streamline* is an ``(n, 3)`` array of points, a *direction sequence* the
``(n - 1, 3)`` array of consecutive differences. Scalar fields are arrays of
shape ``(X, Y, Z)``, vector fields of shape ``(X, Y, Z, W)``.

.. autoexception:: InvalidInputError
.. autoexception:: DegenerateInputError
.. autoexception:: OutOfBoundsError

.. autofunction:: resample
.. autofunction:: arc_length
.. autofunction:: to_directions
.. autofunction:: segment_angle
.. autofunction:: segment_angles
.. autofunction:: trilinear
.. autofunction:: trilinear_many
.. autofunction:: nearest_voxel
.. autofunction:: in_grid
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

from itertools import product
from typing import TYPE_CHECKING

import numpy as np

from tractoracle.typing import as_points


if TYPE_CHECKING:
    from collections.abc import Sequence

    from tractoracle.typing import FloatArray, IntArray, PointLike


class InvalidInputError(ValueError):
    pass


class DegenerateInputError(InvalidInputError):
    pass


class OutOfBoundsError(IndexError):
    pass


# {{{ streamlines

def _check_streamline(s: Sequence[PointLike] | FloatArray) -> FloatArray:
    points = as_points(s)
    if len(points) < 2:
        raise InvalidInputError(
                f"a streamline needs at least 2 points, got {len(points)}")
    if not np.all(np.isfinite(points)):
        raise InvalidInputError("streamline has non-finite coordinates")
    return points


def to_directions(s: Sequence[PointLike] | FloatArray) -> FloatArray:
    """Return the ``(n - 1, 3)`` consecutive differences of the points of *s*,
    ``directions[i] = points[i+1] - points[i]``.
    """
    return np.diff(_check_streamline(s), axis=0)


def arc_length(s: Sequence[PointLike] | FloatArray) -> float:
    """Return the total length of the polyline *s*."""
    return float(np.linalg.norm(to_directions(s), axis=1).sum())


def resample(s: Sequence[PointLike] | FloatArray, n: int) -> FloatArray:
    """Return *n* points spaced uniformly in arc length along the polyline *s*.

    Points are placed by linear interpolation along the polyline. The first
    and last output points are the input endpoints, bit for bit.

    :raises InvalidInputError: if *s* has fewer than 2 points or *n* < 2.
    :raises DegenerateInputError: if *s* has zero total length.
    """
    points = _check_streamline(s)
    if n < 2:
        raise InvalidInputError(f"cannot resample to {n} points (need >= 2)")

    seg_lengths = np.linalg.norm(np.diff(points, axis=0), axis=1)

    # coincident points carry no arc length, and np.interp needs strictly
    # increasing abscissae
    points_kept = points[np.concatenate([[True], seg_lengths > 0])]
    cum_length = np.concatenate(
            [[0.], np.cumsum(np.linalg.norm(np.diff(points_kept, axis=0), axis=1))])
    total = cum_length[-1]
    if total == 0:
        raise DegenerateInputError("streamline has zero arc length")

    targets = np.linspace(0., total, n)
    result = np.empty((n, 3), dtype=np.float64)
    for axis in range(3):
        result[:, axis] = np.interp(targets, cum_length, points_kept[:, axis])

    result[0] = points[0]
    result[-1] = points[-1]
    return result


def segment_angle(u: PointLike, v: PointLike) -> float:
    """Return the angle between *u* and *v* in degrees, in ``[0, 180]``."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    norm_u = np.linalg.norm(u)
    norm_v = np.linalg.norm(v)
    if norm_u == 0 or norm_v == 0:
        raise InvalidInputError("angle with a zero-length vector is undefined")

    cos = np.clip(np.dot(u, v) / (norm_u * norm_v), -1., 1.)
    return float(np.degrees(np.arccos(cos)))


def segment_angles(s: Sequence[PointLike] | FloatArray) -> FloatArray:
    """Return the ``n - 2`` angles (degrees) between consecutive segments of
    *s*.
    """
    dirs = to_directions(s)
    norms = np.linalg.norm(dirs, axis=1)
    if np.any(norms == 0):
        raise InvalidInputError("streamline has a zero-length segment")

    unit = dirs / norms[:, np.newaxis]
    cos = np.clip(np.einsum("ij,ij->i", unit[:-1], unit[1:]), -1., 1.)
    return np.degrees(np.arccos(cos))

# }}}


# {{{ voxel grids

def in_grid(p: PointLike, dims: Sequence[int]) -> bool:
    """Return whether *p* lies within the trilinear domain ``[0, dim - 1]``."""
    p = np.asarray(p, dtype=np.float64)
    upper = np.asarray(dims[:3], dtype=np.float64) - 1
    return bool(np.all(p >= 0) and np.all(p <= upper))


def nearest_voxel(p: PointLike | FloatArray) -> IntArray:
    """Return the integer index of the voxel whose center is closest to *p*.
    Accepts a single point or an ``(n, 3)`` array. Ties round up.
    """
    return np.floor(np.asarray(p, dtype=np.float64) + 0.5).astype(np.int64)


def trilinear(f: FloatArray, p: PointLike) -> float | FloatArray:
    """Sample the scalar or vector field *f* at *p* by trilinear weighting of
    the 8 surrounding voxel centers.

    :raises OutOfBoundsError: if *p* is outside ``[0, dim - 1]`` on any axis.
    """
    p = np.asarray(p, dtype=np.float64)
    dims = np.asarray(f.shape[:3])
    if not in_grid(p, f.shape):
        raise OutOfBoundsError(f"position {tuple(p)} outside grid of shape "
                f"{tuple(dims)}")

    lower = np.minimum(np.floor(p).astype(np.int64), np.maximum(dims - 2, 0))
    upper = np.minimum(lower + 1, dims - 1)
    frac = p - lower

    value = np.zeros(f.shape[3:], dtype=np.float64)
    for corner in product((0, 1), repeat=3):
        weight = 1.
        idx = []
        for axis, c in enumerate(corner):
            if c:
                weight *= frac[axis]
                idx.append(upper[axis])
            else:
                weight *= 1 - frac[axis]
                idx.append(lower[axis])
        value = value + weight*f[tuple(idx)]

    if value.ndim == 0:
        return float(value)
    return value


def trilinear_many(f: FloatArray, points: FloatArray,
                   fill_value: float = 0.) -> FloatArray:
    """Vectorized :func:`trilinear` over an ``(n, 3)`` array of *points*.
    Points outside the grid evaluate to *fill_value*.
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    dims = np.asarray(f.shape[:3])
    inside = np.all((points >= 0) & (points <= dims - 1), axis=1)

    result = np.full((len(points), *f.shape[3:]), fill_value, dtype=np.float64)
    if not inside.any():
        return result

    p = points[inside]
    lower = np.minimum(np.floor(p).astype(np.int64), np.maximum(dims - 2, 0))
    upper = np.minimum(lower + 1, dims - 1)
    frac = p - lower

    acc = np.zeros((len(p), *f.shape[3:]), dtype=np.float64)
    for corner in product((0, 1), repeat=3):
        weight = np.ones(len(p))
        idx = []
        for axis, c in enumerate(corner):
            if c:
                weight = weight * frac[:, axis]
                idx.append(upper[:, axis])
            else:
                weight = weight * (1 - frac[:, axis])
                idx.append(lower[:, axis])
        values = f[idx[0], idx[1], idx[2]]
        acc += weight.reshape(-1, *([1] * (values.ndim - 1))) * values

    result[inside] = acc
    return result

# }}}

# vim: foldmethod=marker
