"""KPM1 checkpoint container.

Layout (all integers little-endian u32, reals little-endian f64)::

    b"KPM1" | version=1 | len(descriptor) | descriptor (UTF-8 text)
    | tensor count | per tensor: rank, dims..., raw values (row-major)

The descriptor is free text to this module; models store canonical JSON there.
"""

import struct

import numpy as np

from ..errors import DataError

MAGIC = b"KPM1"
VERSION = 1


def write_checkpoint(path, descriptor, tensors):
    text = descriptor.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(text)))
        fh.write(text)
        fh.write(struct.pack("<I", len(tensors)))
        for t in tensors:
            t = np.ascontiguousarray(t, dtype="<f8")
            fh.write(struct.pack("<I", t.ndim))
            fh.write(struct.pack(f"<{t.ndim}I", *t.shape))
            fh.write(t.tobytes())


def read_checkpoint(path):
    """Return ``(descriptor, [arrays])``."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise DataError(f"{path}: not a KPM1 checkpoint")
    if len(data) < 12:
        raise DataError(f"{path}: truncated checkpoint header")
    version, n = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise DataError(f"{path}: unsupported checkpoint version {version}")
    try:
        off = 12
        descriptor = data[off:off + n].decode("utf-8")
        off += n
        (count,) = struct.unpack_from("<I", data, off)
        off += 4
        tensors = []
        for _ in range(count):
            (rank,) = struct.unpack_from("<I", data, off)
            off += 4
            dims = struct.unpack_from(f"<{rank}I", data, off)
            off += 4 * rank
            size = int(np.prod(dims)) if rank else 1
            arr = np.frombuffer(data, dtype="<f8", count=size, offset=off).reshape(dims)
            tensors.append(arr.astype(float))
            off += 8 * size
    except (struct.error, ValueError) as exc:
        raise DataError(f"{path}: truncated checkpoint ({exc})") from exc
    if off != len(data):
        raise DataError(f"{path}: {len(data) - off} trailing bytes after last tensor")
    return descriptor, tensors
