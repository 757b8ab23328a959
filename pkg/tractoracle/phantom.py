"""
Synthetic phantoms
------------------

A phantom is built from a :class:`PhantomSpec`: a grid and a number of
bundles, each a tube of constant radius around a parametric centerline.
Inside each tube, every voxel carries one peak tangent to the centerline
(voxels inside several tubes carry one peak per tube, up to
:attr:`PhantomSpec.max_peaks`). The tubes end in flat caps; beyond each cap
lies a slab of region-of-interest (ROI) voxels, two voxels deep and one
voxel wider than the tube, labeled with the endpoint's ROI label. Each
bundle connects the two labels of its endpoints.

The white-matter mask is 1 inside the tubes and decays linearly to 0 over a
one-voxel shell around them.

.. autoexception:: PhantomSpecError
.. autoexception:: EmptyInterfaceError
.. autoexception:: SynthesisError

.. autoclass:: BundleSpec
.. autoclass:: PhantomSpec
.. autoclass:: PeakSet
.. autoclass:: PhantomVolume
.. autoclass:: LabeledStreamlineSet

.. autofunction:: generate_phantom
.. autofunction:: interface_seeds
.. autofunction:: synthesize_labeled_set

.. autodata:: DEMO_PHANTOMS
.. autofunction:: demo_phantom_spec
.. autofunction:: load_phantom_spec

Container files
^^^^^^^^^^^^^^^

.. autofunction:: write_phantom
.. autofunction:: read_phantom
.. autofunction:: write_labeled_set
.. autofunction:: read_labeled_set
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

import itertools
import json
import logging
import os
from dataclasses import dataclass, field
from typing import IO, TYPE_CHECKING, Any

import numpy as np
from immutabledict import immutabledict
from scipy import ndimage
from scipy.spatial import cKDTree
from scipy.special import comb

from pytools import ProcessLogger, log_process, memoize_method

from tractoracle.container import (
    BinaryReader,
    BinaryWriter,
    FileFormatError,
    open_input,
    open_output,
)
from tractoracle.geometry import (
    arc_length,
    nearest_voxel,
    resample,
    segment_angles,
    trilinear,
)
from tractoracle.tensor.checkpoint import read_tensors, write_tensors
from tractoracle.typing import make_rng


if TYPE_CHECKING:
    from collections.abc import Mapping, Sequence

    from tractoracle.typing import BoolArray, FloatArray, IntArray, Seed


logger = logging.getLogger(__name__)


class PhantomSpecError(ValueError):
    pass


class EmptyInterfaceError(ValueError):
    pass


class SynthesisError(RuntimeError):
    pass


BUNDLE_KINDS = ("line", "bezier", "arc")

#: Names of the corruption modes used for implausible examples.
NEGATIVE_MODES = ("early-stop", "wrong-pair", "loop", "wm-exit")
POSITIVE_MODE = "valid"

#: Spacing of the dense centerline samples, in voxels.
CENTERLINE_SPACING = 0.1

#: Depth of the ROI slab beyond each tube cap, in voxels.
ROI_DEPTH = 2.

_TOL = 1e-6


# {{{ specifications

def _circle_through(p0: FloatArray, p1: FloatArray, p2: FloatArray,
        n: int) -> FloatArray:
    u = p1 - p0
    w = p2 - p0
    normal = np.cross(u, w)
    nn = normal @ normal
    if nn < 1e-12:
        raise PhantomSpecError("arc control points are collinear")

    center = p0 + np.cross(u@u * w - w@w * u, normal) / (2*nn)
    radius = np.linalg.norm(p0 - center)
    e1 = (p0 - center) / radius
    e2 = np.cross(normal / np.sqrt(nn), e1)

    def angle(q: FloatArray) -> float:
        rel = q - center
        return float(np.arctan2(rel @ e2, rel @ e1) % (2*np.pi))

    # orient so that p1 comes before p2
    if angle(p1) > angle(p2):
        e2 = -e2
    theta = np.linspace(0., angle(p2), n)
    return (center
            + radius*np.cos(theta)[:, np.newaxis]*e1
            + radius*np.sin(theta)[:, np.newaxis]*e2)


@dataclass(frozen=True)
class BundleSpec:
    """
    .. attribute:: kind

        One of ``"line"`` (2 control points), ``"bezier"`` (at least 3
        control points) or ``"arc"`` (the circular arc through exactly 3
        control points, from the first to the last).

    .. attribute:: control_points
    .. attribute:: radius

        Tube radius in voxels, at least 1.

    .. attribute:: labels

        ROI labels of the first and last endpoint, or *None* to assign
        ``(2b + 1, 2b + 2)`` for the bundle with index *b*.

    .. automethod:: centerline
    """

    kind: str
    control_points: tuple[tuple[float, float, float], ...]
    radius: float = 2.
    labels: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        if self.kind not in BUNDLE_KINDS:
            raise PhantomSpecError(f"unknown bundle kind '{self.kind}', "
                    f"expected one of {', '.join(BUNDLE_KINDS)}")

        object.__setattr__(self, "control_points",
                tuple(tuple(float(x) for x in pt) for pt in self.control_points))
        for pt in self.control_points:
            if len(pt) != 3:
                raise PhantomSpecError(f"control point {pt} is not 3-dimensional")

        npts = len(self.control_points)
        if ((self.kind == "line" and npts != 2)
                or (self.kind == "bezier" and npts < 3)
                or (self.kind == "arc" and npts != 3)):
            raise PhantomSpecError(
                    f"bundle of kind '{self.kind}' cannot have {npts} control points")

        if self.radius < 1:
            raise PhantomSpecError(f"tube radius must be at least 1, got {self.radius}")

        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(int(lb) for lb in self.labels))
            la, lb = self.labels
            if la == lb or not (0 < la < 2**16 and 0 < lb < 2**16):
                raise PhantomSpecError(f"invalid ROI labels {self.labels}")

    def centerline(self, spacing: float = CENTERLINE_SPACING) -> FloatArray:
        """Return points along the centerline, uniformly spaced in arc length
        at approximately *spacing*.
        """
        ctrl = np.array(self.control_points, dtype=np.float64)

        if self.kind == "line":
            fine = ctrl
        elif self.kind == "bezier":
            deg = len(ctrl) - 1
            t = np.linspace(0., 1., 4001)[:, np.newaxis]
            fine = sum(
                    comb(deg, i) * t**i * (1-t)**(deg-i) * ctrl[i]
                    for i in range(deg+1))
        else:
            fine = _circle_through(ctrl[0], ctrl[1], ctrl[2], 4001)

        n = max(2, int(np.ceil(arc_length(fine) / spacing)) + 1)
        return resample(fine, n)

    def to_dict(self) -> dict[str, Any]:
        result: dict[str, Any] = {
                "kind": self.kind,
                "control_points": [list(pt) for pt in self.control_points],
                "radius": self.radius,
                }
        if self.labels is not None:
            result["labels"] = list(self.labels)
        return result


@dataclass(frozen=True)
class PhantomSpec:
    """
    .. attribute:: dims
    .. attribute:: bundles
    .. attribute:: voxel_size
    .. attribute:: max_peaks

        *K*, the number of peak slots per voxel.

    .. attribute:: name

    .. automethod:: endpoint_labels
    .. automethod:: from_dict
    .. automethod:: to_dict
    """

    dims: tuple[int, int, int]
    bundles: tuple[BundleSpec, ...]
    voxel_size: float = 1.
    max_peaks: int = 3
    name: str = "custom"

    def __post_init__(self) -> None:
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "bundles", tuple(self.bundles))
        if len(self.dims) != 3 or any(d < 16 for d in self.dims):
            raise PhantomSpecError(
                    f"phantom dimensions must be 3 values >= 16, got {self.dims}")
        if not self.bundles:
            raise PhantomSpecError("phantom specification names no bundles")
        if not 1 <= self.max_peaks <= 255:
            raise PhantomSpecError(f"max_peaks must be in [1, 255], "
                    f"got {self.max_peaks}")
        if self.voxel_size <= 0:
            raise PhantomSpecError("voxel size must be positive")

    def endpoint_labels(self) -> tuple[tuple[int, int], ...]:
        return tuple(
                bundle.labels if bundle.labels is not None else (2*ib+1, 2*ib+2)
                for ib, bundle in enumerate(self.bundles))

    @staticmethod
    def from_dict(data: Mapping[str, Any]) -> PhantomSpec:
        known = {"dims", "bundles", "voxel_size", "max_peaks", "name"}
        unknown = set(data) - known
        if unknown:
            raise PhantomSpecError(
                    f"unknown phantom specification keys: {', '.join(sorted(unknown))}")
        bundles = []
        for bdata in data["bundles"]:
            bdata = dict(bdata)
            if "labels" in bdata:
                bdata["labels"] = tuple(bdata["labels"])
            bdata["control_points"] = tuple(
                    tuple(pt) for pt in bdata["control_points"])
            bundles.append(BundleSpec(**bdata))
        return PhantomSpec(
                dims=tuple(data["dims"]),  # type: ignore[arg-type]
                bundles=tuple(bundles),
                voxel_size=float(data.get("voxel_size", 1.)),
                max_peaks=int(data.get("max_peaks", 3)),
                name=str(data.get("name", "custom")))

    def to_dict(self) -> dict[str, Any]:
        return {
                "name": self.name,
                "dims": list(self.dims),
                "voxel_size": self.voxel_size,
                "max_peaks": self.max_peaks,
                "bundles": [b.to_dict() for b in self.bundles],
                }


DEMO_PHANTOMS: Mapping[str, PhantomSpec] = immutabledict({
    "straight-tube": PhantomSpec(
        name="straight-tube",
        dims=(16, 16, 48),
        bundles=(
            BundleSpec("line", ((8, 8, 4), (8, 8, 43)), radius=3),
        )),
    "crossing": PhantomSpec(
        name="crossing",
        dims=(16, 48, 48),
        bundles=(
            BundleSpec("line", ((8, 24, 4), (8, 24, 43)), radius=3),
            BundleSpec("line", ((8, 4, 24), (8, 43, 24)), radius=3),
        )),
    "two-arcs-one-crossing": PhantomSpec(
        name="two-arcs-one-crossing",
        dims=(16, 48, 48),
        bundles=(
            BundleSpec("arc", ((8, 6, 8), (8, 20, 28), (8, 38, 40)), radius=2),
            BundleSpec("arc", ((8, 6, 40), (8, 20, 20), (8, 38, 8)), radius=2),
        )),
    "four-bundles": PhantomSpec(
        name="four-bundles",
        dims=(32, 48, 48),
        bundles=(
            BundleSpec("line", ((8, 12, 6), (8, 12, 41)), radius=2),
            BundleSpec("line", ((24, 6, 24), (24, 41, 24)), radius=2),
            BundleSpec("arc", ((8, 24, 6), (8, 36, 24), (8, 24, 41)), radius=2),
            BundleSpec("bezier", ((16, 30, 6), (26, 30, 24), (16, 30, 41)),
                radius=2),
        )),
    "arc": PhantomSpec(
        name="arc",
        dims=(16, 48, 32),
        bundles=(
            BundleSpec("arc", ((8, 8, 6), (8, 24, 20), (8, 40, 6)), radius=2),
        )),
    })


def demo_phantom_spec(name: str) -> PhantomSpec:
    try:
        return DEMO_PHANTOMS[name]
    except KeyError:
        raise PhantomSpecError(f"unknown demo phantom '{name}', expected one of "
                f"{', '.join(DEMO_PHANTOMS)}") from None


def load_phantom_spec(name_or_path: str) -> PhantomSpec:
    """Return the demo specification *name_or_path*, or read a JSON
    specification from that path.
    """
    if name_or_path in DEMO_PHANTOMS:
        return DEMO_PHANTOMS[name_or_path]
    if not os.path.exists(name_or_path):
        raise PhantomSpecError(f"'{name_or_path}' is neither a demo phantom "
                f"({', '.join(DEMO_PHANTOMS)}) nor an existing file")
    with open(name_or_path) as inf:
        return PhantomSpec.from_dict(json.load(inf))

# }}}


# {{{ volumes

@dataclass(frozen=True)
class PeakSet:
    """Peaks of one voxel, sorted by descending amplitude.

    .. attribute:: directions
    .. attribute:: amplitudes
    """
    directions: FloatArray
    amplitudes: FloatArray

    def __len__(self) -> int:
        return len(self.amplitudes)


@dataclass(frozen=True, eq=False)
class PhantomVolume:
    """
    .. attribute:: wm_mask

        ``(X, Y, Z)`` array of ``float32`` in ``[0, 1]``.

    .. attribute:: peaks

        ``(X, Y, Z, K, 4)`` array of ``float32``: per slot, a unit direction
        and an amplitude. Unused slots are zero.

    .. attribute:: roi_labels

        ``(X, Y, Z)`` array of ``uint16``, 0 outside all ROIs.

    .. attribute:: bundle_masks

        ``(B, X, Y, Z)`` boolean array.

    .. attribute:: bundle_labels

        For each bundle, the ROI labels ``(label_a, label_b)`` it connects.

    .. attribute:: voxel_size

    .. autoproperty:: dims
    .. autoproperty:: valid_pairs
    .. automethod:: peak_set
    .. automethod:: interface_voxels
    .. automethod:: bundle_interface_voxels
    """

    wm_mask: FloatArray
    peaks: FloatArray
    roi_labels: IntArray
    bundle_masks: BoolArray
    bundle_labels: tuple[tuple[int, int], ...]
    voxel_size: float = 1.

    def __post_init__(self) -> None:
        dims = self.wm_mask.shape
        if (len(dims) != 3
                or self.peaks.shape[:3] != dims
                or self.peaks.ndim != 5 or self.peaks.shape[4] != 4
                or self.roi_labels.shape != dims
                or self.bundle_masks.shape[1:] != dims
                or len(self.bundle_masks) != len(self.bundle_labels)):
            raise PhantomSpecError("inconsistent phantom volume array shapes")

    @property
    def dims(self) -> tuple[int, int, int]:
        x, y, z = self.wm_mask.shape
        return (x, y, z)

    @property
    def max_peaks(self) -> int:
        return self.peaks.shape[3]

    @property
    def n_bundles(self) -> int:
        return len(self.bundle_labels)

    @property
    @memoize_method
    def valid_pairs(self) -> Mapping[frozenset[int], int]:
        """Maps each unordered pair of ROI labels connected by a bundle to
        that bundle's index.
        """
        return immutabledict({
            frozenset(labels): ib for ib, labels in enumerate(self.bundle_labels)})

    @property
    @memoize_method
    def labels(self) -> tuple[int, ...]:
        return tuple(sorted({lb for pair in self.bundle_labels for lb in pair}))

    def peak_set(self, ijk: Sequence[int]) -> PeakSet:
        i, j, k = (int(c) for c in ijk)
        slots = self.peaks[i, j, k]
        used = slots[:, 3] > 0
        order = np.argsort(-slots[used, 3], kind="stable")
        return PeakSet(
                directions=slots[used, :3][order].astype(np.float64),
                amplitudes=slots[used, 3][order].astype(np.float64))

    @memoize_method
    def has_peaks(self) -> BoolArray:
        return np.any(self.peaks[..., 3] > 0, axis=-1)

    @memoize_method
    def interface_voxels(self) -> IntArray:
        """Return the ``(n, 3)`` indices, in lexicographic order, of voxels that
        carry peaks and are 6-adjacent to an ROI voxel.
        """
        near_roi = ndimage.binary_dilation(
                self.roi_labels > 0,
                structure=ndimage.generate_binary_structure(3, 1))
        return np.argwhere(near_roi & self.has_peaks() & (self.roi_labels == 0))

    @memoize_method
    def bundle_interface_voxels(self, ib: int, label: int) -> IntArray:
        """Return voxels of bundle *ib* that are 6-adjacent to ROI *label*."""
        near_roi = ndimage.binary_dilation(
                self.roi_labels == label,
                structure=ndimage.generate_binary_structure(3, 1))
        return np.argwhere(near_roi & self.bundle_masks[ib])

    @memoize_method
    def dilated_bundle_masks(self, iterations: int = 1) -> BoolArray:
        """Bundle masks dilated with the 26-neighborhood *iterations* times."""
        structure = ndimage.generate_binary_structure(3, 3)
        return np.stack([
            ndimage.binary_dilation(mask, structure=structure,
                iterations=iterations)
            for mask in self.bundle_masks])

    def in_grid(self, p: FloatArray) -> bool:
        return bool(np.all(p >= 0) and np.all(p <= np.array(self.dims) - 1))

    def voxel_index(self, p: FloatArray) -> tuple[int, int, int]:
        """Nearest voxel of *p*, clipped to the grid."""
        i, j, k = np.clip(nearest_voxel(p), 0, np.array(self.dims) - 1)
        return int(i), int(j), int(k)


@dataclass(frozen=True)
class _BundleGeometry:
    in_tube: BoolArray
    outside: FloatArray
    tangents: FloatArray
    roi_start: BoolArray
    roi_end: BoolArray


def _bundle_geometry(bundle: BundleSpec, dims: tuple[int, int, int],
        grid: FloatArray) -> _BundleGeometry:
    samples = bundle.centerline()
    tangents = np.gradient(samples, axis=0)
    tangents /= np.linalg.norm(tangents, axis=1)[:, np.newaxis]

    r = bundle.radius
    upper = np.array(dims, dtype=np.float64) - 1

    if np.any(samples.min(axis=0) - r < 0) or np.any(samples.max(axis=0) + r > upper):
        raise PhantomSpecError(f"tube of {bundle.kind} bundle with radius {r} "
                "extends outside the grid")

    tree = cKDTree(samples)
    dist, idx = tree.query(grid, distance_upper_bound=r + 1.5)
    near = np.isfinite(dist)
    idx = np.where(near, idx, 0)

    outside = np.full(len(grid), np.inf)
    outside[near] = np.maximum(dist[near] - r, 0)
    beyond_cap = np.zeros(len(grid), dtype=bool)

    rois = []
    for end_idx, sign in ((0, -1.), (len(samples) - 1, 1.)):
        endpoint = samples[end_idx]
        outward = sign*tangents[end_idx]

        extent = ROI_DEPTH*outward
        for corner in (endpoint + extent - (r+1), endpoint + extent + (r+1)):
            if np.any(corner < 0) or np.any(corner > upper):
                raise PhantomSpecError(f"ROI beyond endpoint {tuple(endpoint)} "
                        "extends outside the grid")

        rel = grid - endpoint
        axial = rel @ outward
        radial = np.linalg.norm(rel - axial[:, np.newaxis]*outward, axis=1)

        at_cap = near & (idx == end_idx) & (axial > _TOL)
        beyond_cap |= at_cap
        outside[at_cap] = np.hypot(np.maximum(radial[at_cap] - r, 0), axial[at_cap])

        rois.append((axial > _TOL) & (axial <= ROI_DEPTH + _TOL)
                & (radial <= r + 1 + _TOL))

    in_tube = near & (dist <= r + _TOL) & ~beyond_cap
    outside[in_tube] = 0.

    shape = (*dims,)
    return _BundleGeometry(
            in_tube=in_tube.reshape(shape),
            outside=outside.reshape(shape),
            tangents=tangents[idx].reshape(*shape, 3),
            roi_start=rois[0].reshape(shape),
            roi_end=rois[1].reshape(shape))


def generate_phantom(spec: PhantomSpec, rng_seed: Seed = 0) -> PhantomVolume:
    """Build the volume described by *spec*.

    The construction is analytic, so the result depends on *spec* only;
    *rng_seed* is accepted so that all generators of the package share one
    calling convention.

    :raises PhantomSpecError: if a tube or ROI leaves the grid, if an ROI
        label is reused for distinct endpoints, if two ROIs overlap, or if
        an ROI is entirely covered by tubes.
    """
    del rng_seed

    dims = spec.dims
    labels = spec.endpoint_labels()

    # {{{ check labels

    endpoint_of_label: dict[int, FloatArray] = {}
    for bundle, (la, lb) in zip(spec.bundles, labels, strict=True):
        for label, pt in ((la, bundle.control_points[0]),
                (lb, bundle.control_points[-1])):
            pt_ary = np.array(pt)
            prev = endpoint_of_label.get(label)
            if prev is not None and not np.allclose(prev, pt_ary):
                raise PhantomSpecError(
                        f"ROI label {label} used for distinct endpoints "
                        f"{tuple(prev)} and {pt}")
            endpoint_of_label[label] = pt_ary

    pairs = [frozenset(pair) for pair in labels]
    if len(set(pairs)) != len(pairs):
        raise PhantomSpecError("two bundles connect the same pair of ROIs")

    # }}}

    with ProcessLogger(logger, f"generating phantom '{spec.name}'"):
        grid = np.indices(dims, dtype=np.float64).reshape(3, -1).T
        geometries = [_bundle_geometry(bundle, dims, grid) for bundle in spec.bundles]

        k = spec.max_peaks
        peaks = np.zeros((*dims, k, 4), dtype=np.float32)
        n_peaks = np.zeros(dims, dtype=np.int64)
        wm_mask = np.zeros(dims, dtype=np.float64)
        overfull = 0

        for geo in geometries:
            wm_mask = np.maximum(wm_mask, np.clip(1 - geo.outside, 0, 1))

            room = geo.in_tube & (n_peaks < k)
            overfull += int(np.sum(geo.in_tube & ~room))
            vox = np.nonzero(room)
            slot = n_peaks[vox]
            peaks[(*vox, slot)] = np.concatenate(
                    [geo.tangents[vox], np.ones((len(slot), 1))], axis=1)
            n_peaks[vox] += 1

        if overfull:
            logger.warning("%d voxels lie in more than %d tubes; extra peaks "
                    "dropped", overfull, k)

        any_tube = np.any([geo.in_tube for geo in geometries], axis=0)
        roi_labels = np.zeros(dims, dtype=np.uint16)
        for geo, (la, lb) in zip(geometries, labels, strict=True):
            for roi, label in ((geo.roi_start, la), (geo.roi_end, lb)):
                roi = roi & ~any_tube
                clash = roi & (roi_labels != 0) & (roi_labels != label)
                if np.any(clash):
                    raise PhantomSpecError(
                            f"ROI {label} overlaps ROI {roi_labels[clash][0]}")
                roi_labels[roi] = label

        present = set(np.unique(roi_labels).tolist())
        missing = sorted(set(endpoint_of_label) - present)
        if missing:
            raise PhantomSpecError(f"ROIs {missing} have no voxels outside the tubes")

    return PhantomVolume(
            wm_mask=wm_mask.astype(np.float32),
            peaks=peaks,
            roi_labels=roi_labels,
            bundle_masks=np.stack([geo.in_tube for geo in geometries]),
            bundle_labels=tuple((int(la), int(lb)) for la, lb in labels),
            voxel_size=spec.voxel_size)


def interface_seeds(v: PhantomVolume, per_voxel: int, rng_seed: Seed,
        jitter: bool = True) -> FloatArray:
    """Return ``per_voxel`` seed positions for every voxel of
    :meth:`PhantomVolume.interface_voxels`, grouped by voxel. With *jitter*,
    positions are uniform within the voxel (``center + U(-0.5, 0.5)^3``);
    otherwise they are the voxel centers.

    :raises EmptyInterfaceError: if the phantom has no interface voxels.
    """
    if per_voxel < 1:
        raise ValueError(f"per_voxel must be positive, got {per_voxel}")

    voxels = v.interface_voxels()
    if not len(voxels):
        raise EmptyInterfaceError("phantom has no voxels adjacent to both an "
                "ROI and the white matter")

    seeds = np.repeat(voxels.astype(np.float64), per_voxel, axis=0)
    if jitter:
        rng = make_rng(rng_seed)
        seeds += rng.uniform(-0.5, 0.5, size=seeds.shape)
        seeds = np.clip(seeds, 0, np.array(v.dims) - 1)
    return seeds

# }}}


# {{{ container file

MAGIC = b"PHV1"


def write_phantom(target: str | os.PathLike[str] | IO[bytes],
        v: PhantomVolume) -> None:
    """Write *v* in the ``PHV1`` container format: magic, ``u32 dims[3]``,
    ``f32 voxel_size``, ``f32`` WM mask, ``u8 K``, ``f32`` peaks (``4K``
    values per voxel), ``u16`` ROI labels, ``u16`` bundle count, then per
    bundle its two ``u16`` labels and its mask as a bit field padded to a
    byte boundary. Voxels are in row-major ``(x, y, z)`` order.
    """
    with open_output(target) as outf:
        w = BinaryWriter(outf)
        w.write(MAGIC)
        for d in v.dims:
            w.u32(d)
        w.f32(v.voxel_size)
        w.array(v.wm_mask, np.float32)
        w.u8(v.max_peaks)
        w.array(v.peaks, np.float32)
        w.array(v.roi_labels, np.uint16)
        w.u16(v.n_bundles)
        for (la, lb), mask in zip(v.bundle_labels, v.bundle_masks, strict=True):
            w.u16(la)
            w.u16(lb)
            w.write(np.packbits(mask.reshape(-1), bitorder="little").tobytes())


def read_phantom(source: str | os.PathLike[str] | IO[bytes]) -> PhantomVolume:
    """Read a volume written by :func:`write_phantom`.

    :raises FileFormatError: on a magic mismatch, truncation or trailing
        data.
    """
    with open_input(source) as inf:
        r = BinaryReader(inf, "PHV1")
        r.expect_magic(MAGIC)
        dims = (r.u32(), r.u32(), r.u32())
        voxel_size = r.f32()
        wm_mask = r.array(np.float32, dims)
        k = r.u8()
        peaks = r.array(np.float32, (*dims, k, 4))
        roi_labels = r.array(np.uint16, dims)
        n_bundles = r.u16()

        nvox = dims[0]*dims[1]*dims[2]
        labels = []
        masks = []
        for _ in range(n_bundles):
            labels.append((r.u16(), r.u16()))
            bits = np.frombuffer(r.read((nvox + 7) // 8), dtype=np.uint8)
            masks.append(np.unpackbits(bits, count=nvox, bitorder="little")
                    .astype(bool).reshape(dims))

        if not r.at_end():
            raise FileFormatError("PHV1: trailing data after last bundle")

    return PhantomVolume(
            wm_mask=wm_mask,
            peaks=peaks,
            roi_labels=roi_labels,
            bundle_masks=(np.stack(masks) if masks
                else np.zeros((0, *dims), dtype=bool)),
            bundle_labels=tuple(labels),
            voxel_size=voxel_size)

# }}}


# {{{ labeled streamline synthesis

@dataclass(frozen=True, eq=False)
class LabeledStreamlineSet:
    """
    .. attribute:: streamlines
    .. attribute:: targets

        ``uint8`` array of 0 (implausible) and 1 (plausible).

    .. attribute:: modes

        For each streamline, ``"valid"`` or the name of the corruption mode
        in :data:`NEGATIVE_MODES` it was generated with.
    """

    streamlines: tuple[FloatArray, ...]
    targets: IntArray
    modes: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        object.__setattr__(self, "targets", np.asarray(self.targets, dtype=np.uint8))
        if not self.modes:
            object.__setattr__(self, "modes", tuple(
                POSITIVE_MODE if t else "unknown" for t in self.targets))
        if not len(self.streamlines) == len(self.targets) == len(self.modes):
            raise ValueError("streamlines, targets and modes differ in length")
        if np.any(self.targets > 1):
            raise ValueError("targets must be 0 or 1")

    def __len__(self) -> int:
        return len(self.streamlines)

    @property
    def n_positive(self) -> int:
        return int(self.targets.sum())

    def subset(self, indices: Sequence[int] | IntArray) -> LabeledStreamlineSet:
        return LabeledStreamlineSet(
                streamlines=tuple(self.streamlines[i] for i in indices),
                targets=self.targets[np.asarray(indices, dtype=np.int64)],
                modes=tuple(self.modes[i] for i in indices))


def _unit(v: FloatArray) -> FloatArray:
    return v / np.linalg.norm(v)


def _random_perpendicular(d: FloatArray, rng: np.random.Generator) -> FloatArray:
    while True:
        u = rng.standard_normal(3)
        u -= (u @ d)*d
        norm = np.linalg.norm(u)
        if norm > 1e-3:
            return u / norm


class _Walker:
    """Jittered walks through a phantom along the peaks of one bundle. A
    small pull toward the bundle's medial axis keeps the walks from drifting
    out of the tube.
    """

    step = 0.5
    centering = 0.5
    persistence = 0.8
    jitter = 0.3

    def __init__(self, v: PhantomVolume, rng: np.random.Generator) -> None:
        self.v = v
        self.rng = rng
        self.upper = np.array(v.dims, dtype=np.float64) - 1
        self._depth_grads: dict[int, FloatArray] = {}

    def depth_gradient(self, ib: int) -> FloatArray:
        try:
            return self._depth_grads[ib]
        except KeyError:
            depth = ndimage.distance_transform_edt(self.v.bundle_masks[ib])
            grad = np.stack(np.gradient(depth), axis=-1)
            self._depth_grads[ib] = grad
            return grad

    def aligned_peak(self, p: FloatArray, d: FloatArray) -> FloatArray:
        peaks = self.v.peak_set(self.v.voxel_index(p))
        if not len(peaks):
            return d
        cos = peaks.directions @ d
        best = int(np.argmax(np.abs(cos)))
        return peaks.directions[best] * (1. if cos[best] >= 0 else -1.)

    def in_grid(self, p: FloatArray) -> bool:
        return bool(np.all(p >= 0) and np.all(p <= self.upper))

    def label_at(self, p: FloatArray) -> int:
        return int(self.v.roi_labels[self.v.voxel_index(p)])

    def walk(self, ib: int, reverse: bool) -> FloatArray | None:
        """Walk bundle *ib* from one ROI to the other. Returns *None* if the
        walk leaves the bundle.
        """
        la, lb = self.v.bundle_labels[ib]
        if reverse:
            la, lb = lb, la

        starts = self.v.bundle_interface_voxels(ib, la)
        if not len(starts):
            raise EmptyInterfaceError(f"bundle {ib} has no voxels next to ROI {la}")

        vox = starts[self.rng.integers(len(starts))]
        roi_neighbors = [
                vox + off for off in np.vstack([np.eye(3, dtype=np.int64),
                    -np.eye(3, dtype=np.int64)])
                if self.in_grid(vox + off)
                and self.v.roi_labels[tuple(vox + off)] == la]
        roi_vox = roi_neighbors[self.rng.integers(len(roi_neighbors))]

        p = roi_vox + self.rng.uniform(-0.25, 0.25, 3)
        d = _unit(vox - roi_vox).astype(np.float64)
        points = [p]

        grad_field = self.depth_gradient(ib)
        mask = self.v.dilated_bundle_masks()[ib]
        noise = np.zeros(3)
        max_steps = int(4*sum(self.v.dims) / self.step)

        for _ in range(max_steps):
            peak = self.aligned_peak(p, d)
            g = np.asarray(trilinear(grad_field, p))
            g -= (g @ peak)*peak
            noise = (self.persistence*noise
                    + (1 - self.persistence)*self.jitter*self.rng.standard_normal(3))
            d = _unit(peak + self.centering*g + noise)
            p = p + self.step*d
            if not self.in_grid(p):
                return None
            points.append(p)

            label = self.label_at(p)
            if label == lb:
                return np.array(points)
            if label not in (0, la) or not mask[self.v.voxel_index(p)]:
                return None

        return None


def _early_stop(walker: _Walker, base: FloatArray) -> FloatArray:
    frac = walker.rng.uniform(0.2, 0.7)
    return base[:max(3, int(frac*len(base)))]


def _wrong_pair(walker: _Walker, base: FloatArray, ib: int,
        start_label: int) -> FloatArray | None:
    v = walker.v
    valid = v.valid_pairs
    candidates = [lc for lc in v.labels
            if frozenset((start_label, lc)) not in valid and lc != start_label]
    if not candidates:
        return None
    target_label = int(walker.rng.choice(candidates))

    target = np.argwhere(v.roi_labels == target_label).mean(axis=0)

    cut = max(2, int(walker.rng.uniform(0.3, 0.6)*len(base)))
    points = list(base[:cut])
    p = points[-1]
    d = _unit(points[-1] - points[-2])

    for _ in range(int(8*sum(v.dims) / walker.step)):
        d = _unit(d + 0.5*_unit(target - p))
        p = p + walker.step*d
        if not walker.in_grid(p):
            return None
        points.append(p)
        if walker.label_at(p) == target_label:
            return np.array(points)

    return None


def _has_invalid_pair(v: PhantomVolume) -> bool:
    return any(frozenset((la, lb)) not in v.valid_pairs
            for la, lb in itertools.combinations(v.labels, 2))


def _loop(walker: _Walker, base: FloatArray, side: float = 3.) -> FloatArray:
    cut = max(2, int(walker.rng.uniform(0.3, 0.6)*len(base)))
    head = base[:cut]
    d = _unit(head[-1] - head[-2])
    u = _random_perpendicular(d, walker.rng)

    n_side = int(round(side / walker.step))
    p = head[-1]
    loop = []
    for angle in (2*np.pi/3, 4*np.pi/3):
        direction = np.cos(angle)*d + np.sin(angle)*u
        for _ in range(n_side):
            p = p + walker.step*direction
            loop.append(p)
    # close the triangle along the incoming direction
    closing = head[-1] - p
    n_close = max(1, int(round(np.linalg.norm(closing) / walker.step)))
    loop.extend(p + closing*(i+1)/n_close for i in range(n_close))

    return np.concatenate([head, np.array(loop), base[cut:]], axis=0)


def _wm_exit(walker: _Walker, base: FloatArray) -> FloatArray | None:
    v = walker.v
    cut = max(2, int(walker.rng.uniform(0.25, 0.6)*len(base)))
    points = list(base[:cut])
    p = points[-1]
    d = _unit(points[-1] - points[-2])
    u = _random_perpendicular(d, walker.rng)

    extra = None
    for k in range(1, int(4*sum(v.dims) / walker.step)):
        d = _unit(d + min(k, 4)*0.5*u)
        p_next = p + walker.step*d
        if not walker.in_grid(p_next):
            break
        p = p_next
        points.append(p)

        if extra is None and float(trilinear(v.wm_mask, p)) < 0.1:
            extra = int(walker.rng.integers(4, 9))
        if extra is not None:
            extra -= 1
            if extra <= 0:
                break

    if extra is None:
        return None
    return np.array(points)


@log_process(logger)
def synthesize_labeled_set(v: PhantomVolume, n_pos: int, n_neg: int,
        rng_seed: Seed) -> LabeledStreamlineSet:
    """Synthesize *n_pos* plausible and *n_neg* implausible streamlines.

    Plausible streamlines are jittered walks along the peaks of one bundle,
    from inside one of its ROIs to inside the other. Implausible ones
    corrupt such a walk in one of the modes of :data:`NEGATIVE_MODES`,
    assigned round-robin: a premature stop in the white matter, a turn
    toward an ROI the bundle does not connect to, a triangular loop, or an
    exit from the white matter. Phantoms where every pair of ROIs is
    connected by a bundle have no wrong-pair mode. Every streamline is
    reversed with probability 0.5, and the set is returned in random order.

    :raises SynthesisError: if walks keep failing to connect the ROIs.
    """
    if n_pos < 1 or n_neg < 1:
        raise ValueError(f"need at least one example per class, got "
                f"n_pos={n_pos}, n_neg={n_neg}")

    rng = make_rng(rng_seed)
    walker = _Walker(v, rng)

    def base_walk() -> tuple[FloatArray, int, int]:
        for _ in range(200):
            ib = int(rng.integers(v.n_bundles))
            reverse = bool(rng.integers(2))
            points = walker.walk(ib, reverse)
            if points is not None and len(points) >= 4:
                start_label = v.bundle_labels[ib][1 if reverse else 0]
                return points, ib, start_label
        raise SynthesisError("peak walks repeatedly failed to connect ROIs")

    streamlines: list[FloatArray] = []
    modes: list[str] = []

    for _ in range(n_pos):
        points, _, _ = base_walk()
        streamlines.append(points)
        modes.append(POSITIVE_MODE)

    negative_modes = [mode for mode in NEGATIVE_MODES
            if mode != "wrong-pair" or _has_invalid_pair(v)]
    for i in range(n_neg):
        mode = negative_modes[i % len(negative_modes)]
        for _ in range(200):
            base, ib, start_label = base_walk()
            if mode == "early-stop":
                result: FloatArray | None = _early_stop(walker, base)
            elif mode == "wrong-pair":
                result = _wrong_pair(walker, base, ib, start_label)
            elif mode == "loop":
                result = _loop(walker, base)
                if segment_angles(result).max() <= 60:
                    result = None
            else:
                result = _wm_exit(walker, base)

            if result is not None:
                break
        else:
            raise SynthesisError(f"could not synthesize a '{mode}' example")

        streamlines.append(result)
        modes.append(mode)

    streamlines = [s[::-1].copy() if rng.random() < 0.5 else s
            for s in streamlines]
    targets = np.array([1]*n_pos + [0]*n_neg, dtype=np.uint8)

    perm = rng.permutation(len(streamlines))
    return LabeledStreamlineSet(
            streamlines=tuple(streamlines[i] for i in perm),
            targets=targets[perm],
            modes=tuple(modes[i] for i in perm))

# }}}


# {{{ labeled set files

LABELED_SET_KIND = "labeled-set"


def write_labeled_set(target: str | os.PathLike[str] | IO[bytes],
        data: LabeledStreamlineSet) -> None:
    """Write *data* as a ``TNSR`` archive: one ``(n_i, 3)`` tensor per
    streamline, with targets and modes in the configuration preamble.
    """
    write_tensors(target,
            {f"streamline.{i}": s for i, s in enumerate(data.streamlines)},
            config={
                "kind": LABELED_SET_KIND,
                "targets": [int(t) for t in data.targets],
                "modes": list(data.modes),
                })


def read_labeled_set(source: str | os.PathLike[str] | IO[bytes]
        ) -> LabeledStreamlineSet:
    """
    :raises FileFormatError: if *source* is not a labeled streamline set.
    """
    config, tensors = read_tensors(source)
    if config is None or config.get("kind") != LABELED_SET_KIND:
        raise FileFormatError("TNSR: archive is not a labeled streamline set")

    targets = config["targets"]
    try:
        streamlines = tuple(tensors[f"streamline.{i}"].astype(np.float64)
                for i in range(len(targets)))
        return LabeledStreamlineSet(streamlines=streamlines,
                targets=np.array(targets, dtype=np.uint8),
                modes=tuple(config["modes"]))
    except (KeyError, ValueError) as err:
        raise FileFormatError(f"TNSR: malformed labeled set: {err}") from err

# }}}

# vim: foldmethod=marker
