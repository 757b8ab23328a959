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

import os
from typing import TYPE_CHECKING

import numpy as np
from nibabel import streamlines as nib_streamlines


if TYPE_CHECKING:
    from tractoracle.phantom import PhantomVolume
    from tractoracle.tractogram import Tractogram


__doc__ = """
Export of tractograms to TrackVis (``.trk``) and MRtrix (``.tck``) files
through :mod:`nibabel`, for viewing in external tools. There is no import:
the conversion is one-way.

.. autofunction:: voxel_to_rasmm
.. autofunction:: export_tractogram
"""

SUPPORTED_EXTENSIONS = (".trk", ".tck")


def voxel_to_rasmm(v: PhantomVolume) -> np.ndarray:
    """Affine taking voxel coordinates of *v* (voxel centers at integers) to
    millimeters.
    """
    return np.diag([v.voxel_size]*3 + [1.])


def export_tractogram(path: str | os.PathLike[str], t: Tractogram,
        v: PhantomVolume) -> None:
    """Write *t*, given in the voxel frame of *v*, to *path*. The format is
    chosen by the extension.

    :raises ValueError: on an unsupported extension.
    """
    ext = os.path.splitext(os.fspath(path))[1].lower()
    if ext not in SUPPORTED_EXTENSIONS:
        raise ValueError(f"unsupported tractogram extension '{ext}', expected "
                f"one of {', '.join(SUPPORTED_EXTENSIONS)}")

    affine = voxel_to_rasmm(v)
    tractogram = nib_streamlines.Tractogram(
            [s*v.voxel_size for s in t.streamlines],
            affine_to_rasmm=np.eye(4))

    header = None
    if ext == ".trk":
        field = nib_streamlines.Field
        header = {
            field.VOXEL_TO_RASMM: affine,
            field.VOXEL_SIZES: np.array([v.voxel_size]*3, dtype=np.float32),
            field.DIMENSIONS: np.array(v.dims, dtype=np.int16),
            field.VOXEL_ORDER: "RAS",
            }

    nib_streamlines.save(tractogram, os.fspath(path), header=header)
