"""
Tensor archives
---------------

A ``TNSR`` archive is a little-endian sequence of named ``float32`` tensors:

.. code-block:: none

    magic "TNSR"
    u32 tensor count
    per tensor:
        u16 name length, name (UTF-8)
        u8 rank, u32 dims[rank]
        f32 data (row-major)

An optional configuration preamble is stored as the first record, named
``__config__``: a rank-1 tensor holding the bytes of a UTF-8 JSON document,
one byte per element. Byte values are exactly representable in ``float32``,
so the preamble round-trips losslessly.

.. autodata:: CONFIG_RECORD
.. autofunction:: write_tensors
.. autofunction:: read_tensors
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

import json
import logging
from typing import IO, TYPE_CHECKING, Any

import numpy as np

from tractoracle.container import (
    BinaryReader,
    BinaryWriter,
    FileFormatError,
    open_input,
    open_output,
)


if TYPE_CHECKING:
    import os
    from collections.abc import Mapping

    from tractoracle.typing import FloatArray


logger = logging.getLogger(__name__)

MAGIC = b"TNSR"
CONFIG_RECORD = "__config__"


def _encode_config(config: Mapping[str, Any]) -> FloatArray:
    text = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return np.frombuffer(text.encode("utf-8"), dtype=np.uint8).astype(np.float32)


def _decode_config(ary: FloatArray) -> dict[str, Any]:
    raw = np.asarray(ary)
    if raw.ndim != 1 or np.any(raw != np.round(raw)) or np.any(
            (raw < 0) | (raw > 255)):
        raise FileFormatError("TNSR: configuration record is not a byte string")
    return json.loads(raw.astype(np.uint8).tobytes().decode("utf-8"))


def write_tensors(
        target: str | os.PathLike[str] | IO[bytes],
        tensors: Mapping[str, FloatArray],
        config: Mapping[str, Any] | None = None) -> None:
    """Write *tensors* (converted to ``float32``) to *target*, preceded by
    *config* as a preamble record if given. Paths are written atomically.
    """
    records: list[tuple[str, FloatArray]] = []
    if config is not None:
        records.append((CONFIG_RECORD, _encode_config(config)))
    for name, ary in tensors.items():
        if name == CONFIG_RECORD:
            raise ValueError(f"tensor name '{CONFIG_RECORD}' is reserved")
        records.append((name, np.asarray(ary)))

    with open_output(target) as outf:
        w = BinaryWriter(outf)
        w.write(MAGIC)
        w.u32(len(records))
        for name, ary in records:
            encoded = name.encode("utf-8")
            if len(encoded) > 0xFFFF:
                raise ValueError(f"tensor name too long: {name[:32]}...")
            if ary.ndim > 0xFF:
                raise ValueError(f"tensor '{name}' has too many dimensions")
            w.u16(len(encoded))
            w.write(encoded)
            w.u8(ary.ndim)
            for dim in ary.shape:
                w.u32(dim)
            w.array(ary, np.float32)

    logger.debug("wrote %d tensors", len(records))


def read_tensors(
        source: str | os.PathLike[str] | IO[bytes]
        ) -> tuple[dict[str, Any] | None, dict[str, FloatArray]]:
    """Read a ``TNSR`` archive.

    :returns: a tuple ``(config, tensors)``, where *config* is *None* if the
        archive has no preamble. Tensors are ``float32`` arrays.
    :raises FileFormatError: on a wrong magic, truncation or trailing data.
    """
    with open_input(source) as inf:
        r = BinaryReader(inf, "TNSR")
        r.expect_magic(MAGIC)
        count = r.u32()

        config: dict[str, Any] | None = None
        tensors: dict[str, FloatArray] = {}
        for i in range(count):
            name = r.read(r.u16()).decode("utf-8")
            rank = r.u8()
            shape = tuple(r.u32() for _ in range(rank))
            ary = r.array(np.float32, shape)

            if name == CONFIG_RECORD:
                if i != 0:
                    raise FileFormatError("TNSR: configuration record must come "
                            "first")
                config = _decode_config(ary)
            elif name in tensors:
                raise FileFormatError(f"TNSR: duplicate tensor name '{name}'")
            else:
                tensors[name] = ary

        if not r.at_end():
            raise FileFormatError("TNSR: trailing data after last tensor")

    return config, tensors
