"""
Evaluation against ground truth
-------------------------------

Classification of streamlines into valid, invalid and no connections, and
bundle coverage scores, computed from the exhaustive ROI and bundle maps of
a phantom.

.. autoclass:: EvaluatorConfig
.. autoclass:: ConnectionClass
.. autoclass:: Segment
.. autofunction:: endpoint_label_map
.. autofunction:: segment

.. autoclass:: BundleScores
.. autoclass:: TractometerReport
.. autofunction:: report

Output
^^^^^^

.. autofunction:: format_report
.. autofunction:: format_bundle_table
.. autofunction:: write_report

Summaries over runs
^^^^^^^^^^^^^^^^^^^

.. autodata:: SUMMARY_KEYS
.. autoclass:: ReportSummary
.. autofunction:: summarize_reports
.. autofunction:: format_summary
.. autofunction:: write_summary
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
from immutabledict import immutabledict

from pytools import log_process, memoize

from tractoracle.container import open_output
from tractoracle.geometry import nearest_voxel


if TYPE_CHECKING:
    import os
    from collections.abc import Mapping, Sequence

    from tractoracle.phantom import PhantomVolume
    from tractoracle.tractogram import Tractogram
    from tractoracle.typing import BoolArray, FloatArray, IntArray


logger = logging.getLogger(__name__)


# {{{ configuration

@dataclass(frozen=True)
class EvaluatorConfig:
    """
    .. attribute:: vc_path_fraction

        Fraction of a streamline's points that must lie inside the (dilated)
        mask of the bundle connecting its endpoint ROIs for it to count as a
        valid connection.

    .. attribute:: label_dilation

        Endpoints outside every ROI take the label of the nearest ROI voxel
        within this many voxels (Chebyshev distance). Also the number of
        dilation steps applied to bundle masks for the path test.
    """

    vc_path_fraction: float = 0.9
    label_dilation: int = 1

    def __post_init__(self) -> None:
        if not 0 <= self.vc_path_fraction <= 1:
            raise ValueError("vc_path_fraction must lie in [0, 1], got "
                    f"{self.vc_path_fraction}")
        if self.label_dilation < 0:
            raise ValueError("label_dilation must be nonnegative")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @staticmethod
    def from_dict(data: dict[str, Any]) -> EvaluatorConfig:
        known = {fld.name for fld in fields(EvaluatorConfig)}
        return EvaluatorConfig(**{k: v for k, v in data.items() if k in known})

# }}}


# {{{ segmentation

class ConnectionClass(str, Enum):
    VC = "vc"
    IC = "ic"
    NC = "nc"


@dataclass(frozen=True)
class Segment:
    """
    .. attribute:: kind

        A :class:`ConnectionClass`.

    .. attribute:: bundle

        Index of the bundle for valid connections, else *None*.

    .. attribute:: pair

        The sorted endpoint labels when both endpoints are labeled, else
        *None*.
    """

    kind: ConnectionClass
    bundle: int | None = None
    pair: tuple[int, int] | None = None


def _shifted(ary: IntArray, offset: tuple[int, int, int], pad: int) -> IntArray:
    """Return ``b`` with ``b[x] = ary[x + offset]``, zero beyond the grid."""
    padded = np.pad(ary, pad)
    (x, y, z), (i, j, k) = ary.shape, offset
    return padded[pad+i:pad+i+x, pad+j:pad+j+y, pad+k:pad+k+z]


@memoize
def _label_offsets(dilation: int) -> tuple[tuple[tuple[int, int, int], ...], ...]:
    """Offsets of the cube of radius *dilation* without the origin, grouped
    by increasing Euclidean length.
    """
    r = range(-dilation, dilation + 1)
    by_length: dict[int, list[tuple[int, int, int]]] = {}
    for off in ((i, j, k) for i in r for j in r for k in r):
        d2 = sum(c*c for c in off)
        if d2:
            by_length.setdefault(d2, []).append(off)
    return tuple(tuple(by_length[d2]) for d2 in sorted(by_length))


def endpoint_label_map(roi_labels: IntArray, dilation: int) -> IntArray:
    """Return the label an endpoint in each voxel receives: the voxel's own
    ROI label, else the label of the closest ROI voxel within *dilation*
    voxels. Equidistant candidates resolve to the smallest label.
    """
    roi_labels = np.asarray(roi_labels, dtype=np.int64)
    result = roi_labels.copy()
    no_label = np.iinfo(np.int64).max

    for shell in _label_offsets(dilation):
        candidates = np.full(roi_labels.shape, no_label, dtype=np.int64)
        for off in shell:
            shifted = _shifted(roi_labels, off, dilation)
            candidates = np.where(shifted > 0, np.minimum(candidates, shifted),
                    candidates)
        fill = (result == 0) & (candidates < no_label)
        result[fill] = candidates[fill]

    return result


def _voxels(v: PhantomVolume, points: FloatArray) -> tuple[IntArray, BoolArray]:
    ijk = nearest_voxel(points)
    inside = np.all((ijk >= 0) & (ijk < np.array(v.dims)), axis=-1)
    return np.clip(ijk, 0, np.array(v.dims) - 1), inside


def segment(t: Tractogram, v: PhantomVolume,
        config: EvaluatorConfig | None = None) -> list[Segment]:
    """Classify each streamline of *t*.

    A streamline is a valid connection if both endpoint labels are set, form
    a pair connected by a bundle, and at least ``config.vc_path_fraction`` of
    its points lie in that bundle's dilated mask. If both endpoints are
    labeled otherwise, it is an invalid connection; if not, it makes no
    connection.
    """
    if config is None:
        config = EvaluatorConfig()
    if not len(t):
        return []

    label_map = endpoint_label_map(v.roi_labels, config.label_dilation)
    masks = (v.dilated_bundle_masks(config.label_dilation)
            if config.label_dilation else v.bundle_masks)

    result = []
    for s in t.streamlines:
        # endpoints outside the grid are unlabeled
        (first, last), ends_inside = _voxels(v, s[[0, -1]])
        la = int(label_map[tuple(first)]) if ends_inside[0] else 0
        lb = int(label_map[tuple(last)]) if ends_inside[1] else 0
        if not (la and lb):
            result.append(Segment(ConnectionClass.NC))
            continue

        pair = (min(la, lb), max(la, lb))
        ib = v.valid_pairs.get(frozenset(pair))
        if ib is not None:
            ijk, inside = _voxels(v, s)
            in_mask = inside & masks[ib][ijk[:, 0], ijk[:, 1], ijk[:, 2]]
            if in_mask.mean() >= config.vc_path_fraction:
                result.append(Segment(ConnectionClass.VC, bundle=ib, pair=pair))
                continue

        result.append(Segment(ConnectionClass.IC, pair=pair))

    return result

# }}}


# {{{ report

@dataclass(frozen=True)
class BundleScores:
    """Coverage of one ground-truth bundle by its valid streamlines.
    Percentages are relative to the bundle mask size.

    .. attribute:: bundle
    .. attribute:: labels
    .. attribute:: n_streamlines
    .. attribute:: ol_pct

        Overlap: percentage of bundle voxels traversed.

    .. attribute:: or_pct

        Overreach: traversed voxels outside the bundle.

    .. attribute:: f1_pct

        Dice coefficient between the traversed and bundle voxels.
    """

    bundle: int
    labels: tuple[int, int]
    n_streamlines: int
    ol_pct: float
    or_pct: float
    f1_pct: float

    @property
    def recovered(self) -> bool:
        return self.n_streamlines > 0


@dataclass(frozen=True)
class TractometerReport:
    """
    .. attribute:: n_streamlines
    .. attribute:: vc_pct
    .. attribute:: ic_pct
    .. attribute:: nc_pct
    .. attribute:: vb

        Number of bundles with at least one valid streamline.

    .. attribute:: ib

        Number of distinct ROI pairs joined by invalid streamlines.

    .. attribute:: bundles

        A :class:`BundleScores` for every ground-truth bundle.

    .. attribute:: mean_ol_pct
    .. attribute:: mean_or_pct
    .. attribute:: mean_f1_pct

        Means over recovered bundles, zero if there are none.

    .. attribute:: empty

        *True* if the tractogram had no streamlines; all percentages are then
        zero.
    """

    n_streamlines: int
    vc_pct: float
    ic_pct: float
    nc_pct: float
    vb: int
    ib: int
    bundles: tuple[BundleScores, ...]
    mean_ol_pct: float
    mean_or_pct: float
    mean_f1_pct: float
    empty: bool


def traversed_mask(v: PhantomVolume,
        streamlines: list[FloatArray] | tuple[FloatArray, ...]) -> BoolArray:
    """Mark every voxel containing a point of *streamlines*."""
    mask = np.zeros(v.dims, dtype=bool)
    for s in streamlines:
        ijk, inside = _voxels(v, s)
        ijk = ijk[inside]
        mask[ijk[:, 0], ijk[:, 1], ijk[:, 2]] = True
    return mask


def _bundle_scores(v: PhantomVolume, ib: int,
        streamlines: list[FloatArray]) -> BundleScores:
    labels = v.bundle_labels[ib]
    if not streamlines:
        return BundleScores(ib, labels, 0, 0., 0., 0.)

    truth = v.bundle_masks[ib]
    traversed = traversed_mask(v, streamlines)
    n_truth = int(truth.sum())
    n_overlap = int((traversed & truth).sum())
    n_over = int((traversed & ~truth).sum())
    return BundleScores(
            bundle=ib,
            labels=labels,
            n_streamlines=len(streamlines),
            ol_pct=100*n_overlap/n_truth,
            or_pct=100*n_over/n_truth,
            f1_pct=100*2*n_overlap/(int(traversed.sum()) + n_truth))


@log_process(logger, "evaluating tractogram")
def report(t: Tractogram, v: PhantomVolume,
        config: EvaluatorConfig | None = None) -> TractometerReport:
    segments = segment(t, v, config)
    n = len(segments)

    per_bundle: list[list[FloatArray]] = [[] for _ in range(v.n_bundles)]
    invalid_pairs = set()
    for s, seg in zip(t.streamlines, segments, strict=True):
        if seg.kind == ConnectionClass.VC:
            assert seg.bundle is not None
            per_bundle[seg.bundle].append(s)
        elif seg.kind == ConnectionClass.IC:
            invalid_pairs.add(seg.pair)

    bundles = tuple(_bundle_scores(v, ib, streamlines)
            for ib, streamlines in enumerate(per_bundle))
    recovered = [b for b in bundles if b.recovered]

    def pct(kind: ConnectionClass) -> float:
        return 100*sum(seg.kind == kind for seg in segments)/n if n else 0.

    def mean(values: list[float]) -> float:
        return float(np.mean(values)) if values else 0.

    result = TractometerReport(
            n_streamlines=n,
            vc_pct=pct(ConnectionClass.VC),
            ic_pct=pct(ConnectionClass.IC),
            nc_pct=pct(ConnectionClass.NC),
            vb=len(recovered),
            ib=len(invalid_pairs),
            bundles=bundles,
            mean_ol_pct=mean([b.ol_pct for b in recovered]),
            mean_or_pct=mean([b.or_pct for b in recovered]),
            mean_f1_pct=mean([b.f1_pct for b in recovered]),
            empty=n == 0)

    logger.info("VC %.2f%%, IC %.2f%%, NC %.2f%%, VB %d, IB %d",
            result.vc_pct, result.ic_pct, result.nc_pct, result.vb, result.ib)
    return result

# }}}


# {{{ output

def format_report(r: TractometerReport) -> str:
    """Render *r* as ``key: value`` lines."""
    lines = [
        f"n_streamlines: {r.n_streamlines}",
        f"empty: {str(r.empty).lower()}",
        f"vc_pct: {r.vc_pct:.4f}",
        f"ic_pct: {r.ic_pct:.4f}",
        f"nc_pct: {r.nc_pct:.4f}",
        f"vb: {r.vb}",
        f"ib: {r.ib}",
        f"mean_ol_pct: {r.mean_ol_pct:.4f}",
        f"mean_or_pct: {r.mean_or_pct:.4f}",
        f"mean_f1_pct: {r.mean_f1_pct:.4f}",
        ]
    return "\n".join(lines) + "\n"


def format_bundle_table(r: TractometerReport) -> str:
    """Render the per-bundle scores of *r* as a tab-separated table with a
    header row.
    """
    rows = ["\t".join(
        ["bundle", "label_a", "label_b", "n_streamlines", "ol_pct", "or_pct",
            "f1_pct"])]
    for b in r.bundles:
        rows.append("\t".join([
            str(b.bundle), str(b.labels[0]), str(b.labels[1]),
            str(b.n_streamlines),
            f"{b.ol_pct:.4f}", f"{b.or_pct:.4f}", f"{b.f1_pct:.4f}"]))
    return "\n".join(rows) + "\n"


def write_report(prefix: str | os.PathLike[str],
        r: TractometerReport) -> tuple[str, str]:
    """Write *r* to ``<prefix>.txt`` and the bundle table to
    ``<prefix>.tsv``, atomically.

    :returns: the two paths written.
    """
    text_path = f"{prefix}.txt"
    table_path = f"{prefix}.tsv"
    for path, text in [
            (text_path, format_report(r)),
            (table_path, format_bundle_table(r))]:
        with open_output(path) as outf:
            outf.write(text.encode("utf-8"))
    return text_path, table_path

# }}}


# {{{ summaries over runs

SUMMARY_KEYS = ("vc_pct", "ic_pct", "nc_pct", "vb", "ib",
        "mean_ol_pct", "mean_or_pct", "mean_f1_pct")


@dataclass(frozen=True)
class ReportSummary:
    """Mean and standard deviation of the scores in :data:`SUMMARY_KEYS`
    over repeated runs.

    .. attribute:: n_runs
    .. attribute:: mean
    .. attribute:: std

        Sample standard deviation, zero for a single run.
    """

    n_runs: int
    mean: Mapping[str, float]
    std: Mapping[str, float]


def summarize_reports(reports: Sequence[TractometerReport]) -> ReportSummary:
    """
    :raises ValueError: if *reports* is empty.
    """
    if not reports:
        raise ValueError("no reports to summarize")

    values = np.array([[float(getattr(r, key)) for key in SUMMARY_KEYS]
        for r in reports])
    mean = values.mean(axis=0)
    std = values.std(axis=0, ddof=1) if len(reports) > 1 else np.zeros(len(mean))
    return ReportSummary(
            n_runs=len(reports),
            mean=immutabledict(zip(SUMMARY_KEYS, map(float, mean), strict=True)),
            std=immutabledict(zip(SUMMARY_KEYS, map(float, std), strict=True)))


def format_summary(s: ReportSummary) -> str:
    """Render *s* as ``key: mean ± std`` lines."""
    lines = [f"n_runs: {s.n_runs}"] + [
            f"{key}: {s.mean[key]:.4f} ± {s.std[key]:.4f}" for key in SUMMARY_KEYS]
    return "\n".join(lines) + "\n"


def write_summary(prefix: str | os.PathLike[str], s: ReportSummary
        ) -> tuple[str, str]:
    """Write *s* to ``<prefix>.txt`` and a ``metric``/``mean``/``std`` table
    to ``<prefix>.tsv``.

    :returns: the two paths written.
    """
    table = ["metric\tmean\tstd"] + [
            f"{key}\t{s.mean[key]:.4f}\t{s.std[key]:.4f}" for key in SUMMARY_KEYS]

    text_path = f"{prefix}.txt"
    table_path = f"{prefix}.tsv"
    for path, text in [
            (text_path, format_summary(s)),
            (table_path, "\n".join(table) + "\n")]:
        with open_output(path) as outf:
            outf.write(text.encode("utf-8"))
    return text_path, table_path

# }}}

# vim: foldmethod=marker
