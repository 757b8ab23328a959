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

import io
import json
import logging
from collections import Counter
from dataclasses import replace

import numpy as np
import pytest
from testlib import demo_volume

from tractoracle.container import FileFormatError
from tractoracle.geometry import segment_angles, trilinear_many
from tractoracle.phantom import (
    DEMO_PHANTOMS,
    NEGATIVE_MODES,
    POSITIVE_MODE,
    BundleSpec,
    EmptyInterfaceError,
    PhantomSpec,
    PhantomSpecError,
    generate_phantom,
    interface_seeds,
    load_phantom_spec,
    read_labeled_set,
    read_phantom,
    synthesize_labeled_set,
    write_labeled_set,
    write_phantom,
)
from tractoracle.tensor import write_tensors


logger = logging.getLogger(__name__)


def _disk_size(radius):
    r = int(radius)
    i, j = np.mgrid[-r:r+1, -r:r+1]
    return int(np.sum(i**2 + j**2 <= radius**2))


# {{{ specifications

def test_spec_validation():
    with pytest.raises(PhantomSpecError):
        BundleSpec("spiral", ((0, 0, 0), (1, 1, 1)))
    with pytest.raises(PhantomSpecError):
        BundleSpec("line", ((0, 0, 0), (1, 1, 1), (2, 2, 2)))
    with pytest.raises(PhantomSpecError):
        BundleSpec("arc", ((0, 0, 0), (1, 1, 1)))
    with pytest.raises(PhantomSpecError):
        BundleSpec("line", ((0, 0, 0), (1, 1, 1)), radius=0.5)
    with pytest.raises(PhantomSpecError):
        BundleSpec("line", ((0, 0, 0), (1, 1, 1)), labels=(3, 3))

    line = BundleSpec("line", ((8, 8, 4), (8, 8, 40)))
    with pytest.raises(PhantomSpecError):
        PhantomSpec(dims=(8, 16, 16), bundles=(line,))
    with pytest.raises(PhantomSpecError):
        PhantomSpec(dims=(16, 16, 48), bundles=())


def test_spec_dict_roundtrip(tmp_path):
    spec = DEMO_PHANTOMS["four-bundles"]
    assert PhantomSpec.from_dict(spec.to_dict()) == spec

    path = tmp_path / "spec.json"
    path.write_text(json.dumps(spec.to_dict()))
    assert load_phantom_spec(str(path)) == spec
    assert load_phantom_spec("arc") is DEMO_PHANTOMS["arc"]

    with pytest.raises(PhantomSpecError):
        load_phantom_spec("no-such-phantom")
    with pytest.raises(PhantomSpecError):
        PhantomSpec.from_dict({**spec.to_dict(), "color": "blue"})


def test_generation_errors():
    # tube leaves the grid
    with pytest.raises(PhantomSpecError):
        generate_phantom(PhantomSpec(dims=(16, 16, 48), bundles=(
            BundleSpec("line", ((1, 8, 4), (1, 8, 43)), radius=3),)))

    # ROI beyond the endpoint leaves the grid
    with pytest.raises(PhantomSpecError):
        generate_phantom(PhantomSpec(dims=(16, 16, 48), bundles=(
            BundleSpec("line", ((8, 8, 3), (8, 8, 43)), radius=3),)))

    # two bundles connecting the same ROIs
    with pytest.raises(PhantomSpecError):
        generate_phantom(PhantomSpec(dims=(32, 16, 48), bundles=(
            BundleSpec("line", ((8, 8, 4), (8, 8, 43)), labels=(1, 2)),
            BundleSpec("line", ((24, 8, 4), (24, 8, 43)), labels=(2, 1)),
            )))

# }}}


# {{{ volumes

def test_straight_tube():
    v = demo_volume("straight-tube")
    assert v.dims == (16, 16, 48)
    assert v.bundle_labels == ((1, 2),)
    assert set(np.unique(v.roi_labels)) == {0, 1, 2}

    # the tube is a cylinder of radius 3 between the endpoints
    mask = v.bundle_masks[0]
    assert mask[8, 8, 4] and mask[8, 8, 43] and mask[11, 8, 20]
    assert not mask[8, 8, 3] and not mask[8, 8, 44] and not mask[12, 8, 20]
    assert mask.sum() == 40*_disk_size(3)

    assert np.all(v.wm_mask[mask] == 1)
    assert np.all((v.wm_mask >= 0) & (v.wm_mask <= 1))
    assert v.wm_mask[8, 8, 44] == 0
    assert v.wm_mask[12, 8, 20] < 1e-6
    assert not np.any((v.roi_labels > 0) & mask)

    # peaks point along the tube
    peaks = v.peak_set((8, 8, 20))
    assert len(peaks) == 1
    assert np.allclose(np.abs(peaks.directions[0]), [0, 0, 1], atol=1e-6)
    assert peaks.amplitudes[0] == 1
    assert not v.has_peaks()[0, 0, 0]

    # the caps of the tube touch the ROIs
    assert len(v.interface_voxels()) == 2*_disk_size(3)
    assert set(v.interface_voxels()[:, 2]) == {4, 43}


def test_crossing_voxel_has_two_peaks():
    v = demo_volume("crossing")
    peaks = v.peak_set((8, 24, 24))
    assert len(peaks) == 2
    assert abs(peaks.directions[0] @ peaks.directions[1]) < 1e-6
    assert v.valid_pairs == {frozenset((1, 2)): 0, frozenset((3, 4)): 1}


@pytest.mark.parametrize("name", list(DEMO_PHANTOMS))
def test_demo_phantoms(name):
    v = demo_volume(name)
    spec = DEMO_PHANTOMS[name]
    assert v.dims == spec.dims
    assert v.n_bundles == len(spec.bundles)
    assert v.max_peaks == spec.max_peaks
    assert len(v.interface_voxels())

    norms = np.linalg.norm(v.peaks[..., :3], axis=-1)
    used = v.peaks[..., 3] > 0
    assert np.allclose(norms[used], 1, atol=1e-5)
    assert np.all(norms[~used] == 0)

    for ib, (la, lb) in enumerate(v.bundle_labels):
        assert len(v.bundle_interface_voxels(ib, la))
        assert len(v.bundle_interface_voxels(ib, lb))


def test_phantom_file_roundtrip(tmp_path):
    v = demo_volume("two-arcs-one-crossing")
    buf = io.BytesIO()
    write_phantom(buf, v)
    data = buf.getvalue()

    w = read_phantom(io.BytesIO(data))
    assert w.dims == v.dims
    assert w.bundle_labels == v.bundle_labels
    assert w.voxel_size == v.voxel_size
    for attr in ["wm_mask", "peaks", "roi_labels", "bundle_masks"]:
        assert np.array_equal(getattr(w, attr), getattr(v, attr)), attr

    with pytest.raises(FileFormatError):
        read_phantom(io.BytesIO(b"PHV2" + data[4:]))
    with pytest.raises(FileFormatError):
        read_phantom(io.BytesIO(data[:-1]))
    with pytest.raises(FileFormatError):
        read_phantom(io.BytesIO(data + b"\0"))

    path = tmp_path / "phantom.phv"
    write_phantom(path, v)
    assert path.read_bytes() == data

# }}}


# {{{ seeds

def test_interface_seeds():
    v = demo_volume("straight-tube")
    voxels = v.interface_voxels()

    seeds = interface_seeds(v, 3, rng_seed=5)
    assert seeds.shape == (3*len(voxels), 3)
    assert np.all(np.abs(seeds - np.repeat(voxels, 3, axis=0)) <= 0.5)
    assert np.array_equal(seeds, interface_seeds(v, 3, rng_seed=5))
    assert not np.array_equal(seeds, interface_seeds(v, 3, rng_seed=6))

    centers = interface_seeds(v, 2, rng_seed=0, jitter=False)
    assert np.array_equal(centers, np.repeat(voxels, 2, axis=0))

    with pytest.raises(ValueError):
        interface_seeds(v, 0, rng_seed=0)


def test_no_interface():
    v = demo_volume("straight-tube")
    bare = replace(v, peaks=np.zeros_like(v.peaks))
    with pytest.raises(EmptyInterfaceError):
        interface_seeds(bare, 1, rng_seed=0)

# }}}


# {{{ labeled streamlines

def _endpoint_labels(v, s):
    return tuple(int(v.roi_labels[v.voxel_index(p)]) for p in (s[0], s[-1]))


def test_synthesize_labeled_set():
    v = demo_volume("two-arcs-one-crossing")
    data = synthesize_labeled_set(v, 6, 8, rng_seed=3)

    assert len(data) == 14
    assert data.n_positive == 6
    modes = Counter(data.modes)
    assert modes[POSITIVE_MODE] == 6
    assert all(modes[mode] == 2 for mode in NEGATIVE_MODES)

    for s, target, mode in zip(data.streamlines, data.targets, data.modes,
            strict=True):
        assert s.shape[1] == 3 and len(s) >= 3
        assert (target == 1) == (mode == POSITIVE_MODE)
        if mode == POSITIVE_MODE:
            assert frozenset(_endpoint_labels(v, s)) in v.valid_pairs
        elif mode == "loop":
            assert segment_angles(s).max() > 60
        elif mode == "wm-exit":
            assert trilinear_many(v.wm_mask, s).min() < 0.1

    again = synthesize_labeled_set(v, 6, 8, rng_seed=3)
    assert again.modes == data.modes
    assert all(np.array_equal(a, b)
            for a, b in zip(again.streamlines, data.streamlines, strict=True))

    with pytest.raises(ValueError):
        synthesize_labeled_set(v, 0, 4, rng_seed=0)


def test_single_bundle_has_no_wrong_pair():
    v = demo_volume("straight-tube")
    data = synthesize_labeled_set(v, 2, 9, rng_seed=4)

    modes = Counter(data.modes)
    assert "wrong-pair" not in modes
    assert all(modes[mode] == 3 for mode in NEGATIVE_MODES if mode != "wrong-pair")


def test_labeled_set_file(tmp_path):
    v = demo_volume("two-arcs-one-crossing")
    data = synthesize_labeled_set(v, 3, 4, rng_seed=1)

    path = tmp_path / "data.tnsr"
    write_labeled_set(path, data)
    read = read_labeled_set(path)
    assert read.modes == data.modes
    assert np.array_equal(read.targets, data.targets)
    for a, b in zip(read.streamlines, data.streamlines, strict=True):
        assert np.allclose(a, b, atol=1e-4)

    other = tmp_path / "other.tnsr"
    write_tensors(other, {"w": np.ones(2)}, config={"kind": "oracle"})
    with pytest.raises(FileFormatError):
        read_labeled_set(other)

# }}}


if __name__ == "__main__":
    import sys
    if len(sys.argv) > 1:
        exec(sys.argv[1])
    else:
        from pytest import main
        main([__file__])

# vim: fdm=marker
