"""
Binary containers
-----------------

Helpers shared by the little-endian file formats of the package
(``PHV1`` phantoms, ``TSF1`` tractograms, ``TNSR`` tensor archives).

.. autoexception:: FileFormatError
.. autoclass:: BinaryReader
.. autoclass:: BinaryWriter
.. autofunction:: sniff_magic
.. autofunction:: atomic_open
.. autofunction:: open_input
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

import os
import struct
import tempfile
from collections.abc import Iterator
from contextlib import contextmanager
from typing import IO, TYPE_CHECKING

import numpy as np

from pytools import product


if TYPE_CHECKING:
    import numpy.typing as npt


class FileFormatError(ValueError):
    pass


class BinaryReader:
    """Reads little-endian scalars and arrays from a binary stream, raising
    :exc:`FileFormatError` on truncation.
    """

    def __init__(self, stream: IO[bytes], what: str) -> None:
        self.stream = stream
        self.what = what

    def read(self, nbytes: int) -> bytes:
        data = self.stream.read(nbytes)
        if len(data) != nbytes:
            raise FileFormatError(f"{self.what}: truncated file "
                    f"(wanted {nbytes} bytes, got {len(data)})")
        return data

    def expect_magic(self, magic: bytes) -> None:
        actual = self.stream.read(len(magic))
        if actual != magic:
            raise FileFormatError(f"{self.what}: expected magic {magic!r}, "
                    f"got {actual!r}")

    def scalar(self, fmt: str) -> int | float:
        return struct.unpack(f"<{fmt}", self.read(struct.calcsize(f"<{fmt}")))[0]

    def u8(self) -> int:
        return int(self.scalar("B"))

    def u16(self) -> int:
        return int(self.scalar("H"))

    def u32(self) -> int:
        return int(self.scalar("I"))

    def f32(self) -> float:
        return float(self.scalar("f"))

    def array(self, dtype: npt.DTypeLike, shape: tuple[int, ...]) -> np.ndarray:
        dt = np.dtype(dtype).newbyteorder("<")
        count = product(shape)
        buf = self.read(count*dt.itemsize)
        return np.frombuffer(buf, dtype=dt).reshape(shape).astype(
                dt.newbyteorder("="))

    def at_end(self) -> bool:
        return self.stream.read(1) == b""


class BinaryWriter:
    def __init__(self, stream: IO[bytes]) -> None:
        self.stream = stream

    def write(self, data: bytes) -> None:
        self.stream.write(data)

    def scalar(self, fmt: str, value: int | float) -> None:
        self.stream.write(struct.pack(f"<{fmt}", value))

    def u8(self, value: int) -> None:
        self.scalar("B", value)

    def u16(self, value: int) -> None:
        self.scalar("H", value)

    def u32(self, value: int) -> None:
        self.scalar("I", value)

    def f32(self, value: float) -> None:
        self.scalar("f", value)

    def array(self, ary: npt.ArrayLike, dtype: npt.DTypeLike) -> None:
        dt = np.dtype(dtype).newbyteorder("<")
        self.stream.write(np.ascontiguousarray(ary, dtype=dt).tobytes())


def sniff_magic(stream: IO[bytes], magic: bytes) -> bool:
    """Return whether *stream* starts with *magic*, leaving its position
    unchanged.
    """
    pos = stream.tell()
    try:
        return stream.read(len(magic)) == magic
    finally:
        stream.seek(pos)


def _new_file_mode() -> int:
    # mode open() would give a new file: 0o666 less the umask
    umask = os.umask(0)
    os.umask(umask)
    return 0o666 & ~umask


@contextmanager
def atomic_open(path: str | os.PathLike[str]) -> Iterator[IO[bytes]]:
    """Open a temporary file next to *path* for binary writing and move it
    over *path* when the block exits without an exception. Readers never
    observe a partially written file. The result gets the permissions
    :func:`open` would give a new file.
    """
    dirname = os.path.dirname(os.path.abspath(path))
    fd, tmp_name = tempfile.mkstemp(
            dir=dirname, prefix=f".{os.path.basename(path)}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as outf:
            yield outf
            outf.flush()
            os.fsync(outf.fileno())
        os.chmod(tmp_name, _new_file_mode())
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


@contextmanager
def open_output(target: str | os.PathLike[str] | IO[bytes]) -> Iterator[IO[bytes]]:
    if isinstance(target, (str, os.PathLike)):
        with atomic_open(target) as outf:
            yield outf
    else:
        yield target


@contextmanager
def open_input(source: str | os.PathLike[str] | IO[bytes]) -> Iterator[IO[bytes]]:
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as inf:
            yield inf
    else:
        yield source
