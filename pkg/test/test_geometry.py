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
from testlib import affine_field, random_walk

from tractoracle.geometry import (
    DegenerateInputError,
    InvalidInputError,
    OutOfBoundsError,
    arc_length,
    in_grid,
    nearest_voxel,
    resample,
    segment_angle,
    segment_angles,
    to_directions,
    trilinear,
    trilinear_many,
)


logger = logging.getLogger(__name__)


# {{{ directions and arc length

def test_to_directions():
    s = np.array([[0, 0, 0], [1, 0, 0], [1, 2, 0]], dtype=np.float64)
    assert np.array_equal(to_directions(s), [[1, 0, 0], [0, 2, 0]])
    assert arc_length(s) == 3.


def test_reversed_directions():
    rng = np.random.default_rng(11)
    s = random_walk(rng, 17, step=0.4)
    assert np.array_equal(to_directions(s[::-1]), -to_directions(s)[::-1])



@pytest.mark.parametrize("s", [[], [[0, 0, 0]]])
def test_too_short(s):
    with pytest.raises(InvalidInputError):
        to_directions(s)
    with pytest.raises(InvalidInputError):
        resample(s, 4)

# }}}


# {{{ resampling

@pytest.mark.parametrize("n", [2, 3, 17, 128])
def test_resample_endpoints_and_spacing(n):
    rng = np.random.default_rng(12)
    s = random_walk(rng, 23, step=0.7, start=(3., 4., 5.))

    r = resample(s, n)
    assert r.shape == (n, 3)
    assert np.array_equal(r[0], s[0])
    assert np.array_equal(r[-1], s[-1])

    # chords never exceed the arc length between samples
    chords = np.linalg.norm(np.diff(r, axis=0), axis=1)
    assert np.all(chords <= arc_length(s)/(n - 1) + 1e-12)


def test_resample_straight_line_is_uniform():
    s = np.array([[0, 0, 0], [0.5, 0, 0], [4, 0, 0], [10, 0, 0]], dtype=np.float64)
    r = resample(s, 11)
    assert np.allclose(r[:, 0], np.arange(11), atol=1e-12)
    assert np.allclose(r[:, 1:], 0)


def test_resample_idempotent_on_uniform_input():
    s = np.stack([np.linspace(0, 9, 10), np.zeros(10), np.zeros(10)], axis=1)
    assert np.allclose(resample(s, 10), s, atol=1e-12)


def test_resample_l_shape_corner():
    s = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0]], dtype=np.float64)
    assert np.allclose(resample(s, 3), s, rtol=0, atol=1e-12)


@pytest.mark.parametrize("n", [64, 128, 256])
def test_resample_preserves_helix_length(n):
    radius, pitch, turns = 5., 4., 2.
    t = np.linspace(0, 2*np.pi*turns, 5000)
    helix = np.stack([radius*np.cos(t), radius*np.sin(t), pitch*t/(2*np.pi)],
            axis=1)
    exact = turns*np.hypot(2*np.pi*radius, pitch)

    assert abs(arc_length(resample(helix, n)) - exact) <= 0.005*exact


def test_resample_skips_repeated_points():

    s = np.array([[0, 0, 0], [1, 0, 0], [1, 0, 0], [2, 0, 0]], dtype=np.float64)
    assert np.allclose(resample(s, 3)[1], [1, 0, 0])


def test_resample_degenerate():
    with pytest.raises(DegenerateInputError):
        resample([[1, 1, 1], [1, 1, 1]], 5)
    with pytest.raises(InvalidInputError):
        resample([[0, 0, 0], [1, 0, 0]], 1)

# }}}


# {{{ angles

def test_segment_angle():
    assert segment_angle([1, 0, 0], [1, 0, 0]) == 0.
    assert abs(segment_angle([1, 0, 0], [0, 3, 0]) - 90) < 1e-12
    assert abs(segment_angle([1, 0, 0], [-2, 0, 0]) - 180) < 1e-12
    assert abs(segment_angle([1, 0, 0], [1, 1, 0]) - 45) < 1e-12

    with pytest.raises(InvalidInputError):
        segment_angle([0, 0, 0], [1, 0, 0])


def test_segment_angles():
    s = [[0, 0, 0], [1, 0, 0], [2, 0, 0], [2, 1, 0]]
    assert np.allclose(segment_angles(s), [0, 90])

# }}}


# {{{ voxel grids

def test_in_grid_and_nearest_voxel():
    dims = (4, 5, 6)
    assert in_grid([0, 0, 0], dims)
    assert in_grid([3, 4, 5], dims)
    assert not in_grid([3.01, 0, 0], dims)
    assert not in_grid([0, -1e-9, 0], dims)

    assert np.array_equal(nearest_voxel([0.49, 1.5, 2.51]), [0, 2, 3])
    assert np.array_equal(nearest_voxel(np.array([[0.5, 0.5, 0.5]])), [[1, 1, 1]])


def test_trilinear_reproduces_affine_fields():
    rng = np.random.default_rng(3)
    dims = (5, 6, 7)
    coeffs = rng.standard_normal(3)
    f = affine_field(dims, coeffs, 0.25)

    points = rng.uniform(0, 1, size=(1000, 3))*(np.array(dims) - 1)
    expected = 0.25 + points @ coeffs

    for p, val in zip(points, expected, strict=True):
        assert abs(trilinear(f, p) - val) < 1e-12
    assert np.max(np.abs(trilinear_many(f, points) - expected)) < 1e-12

    # the upper boundary is inside the domain
    corner = np.array(dims, dtype=np.float64) - 1
    assert abs(trilinear(f, corner) - (0.25 + corner @ coeffs)) < 1e-12


def test_trilinear_vector_field():
    f = np.zeros((3, 3, 3, 2))
    f[..., 0] = 1
    f[2, 2, 2, 1] = 8
    value = trilinear(f, [1.5, 1.5, 1.5])
    assert np.allclose(value, [1, 1])


def test_trilinear_out_of_bounds():
    f = np.zeros((3, 3, 3))
    with pytest.raises(OutOfBoundsError):
        trilinear(f, [-0.1, 1, 1])
    with pytest.raises(OutOfBoundsError):
        trilinear(f, [1, 1, 2.5])

    values = trilinear_many(f + 1, np.array([[1, 1, 1], [5, 1, 1]]),
            fill_value=-3.)
    assert np.array_equal(values, [1, -3])

# }}}


if __name__ == "__main__":
    import sys
    if len(sys.argv) > 1:
        exec(sys.argv[1])
    else:
        from pytest import main
        main([__file__])

# vim: fdm=marker
