"""Self-describing binary container used for datasets and checkpoints.

Layout (all integers little-endian)::

    magic      8 bytes
    hlen       uint32
    header     hlen bytes of UTF-8 JSON (sorted keys)
    payload    concatenated arrays, little-endian, C order
    crc32      uint32 over header + payload

The header lists the arrays (name, dtype, shape) in payload order.
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path

import numpy as np

from .errors import ChecksumError, FormatError, TruncatedFileError, VersionError

_DTYPES = {"f8": np.dtype("<f8"), "i8": np.dtype("<i8")}


def _dtype_code(arr: np.ndarray) -> str:
    if arr.dtype.kind == "f":
        return "f8"
    if arr.dtype.kind in "iu":
        return "i8"
    raise TypeError(f"unsupported dtype {arr.dtype}")


def dumps(magic: bytes, schema_version: int, meta: dict, arrays: dict[str, np.ndarray]) -> bytes:
    assert len(magic) == 8
    specs = []
    chunks = []
    for name, arr in arrays.items():
        code = _dtype_code(np.asarray(arr))
        a = np.ascontiguousarray(arr, dtype=_DTYPES[code])
        specs.append({"name": name, "dtype": code, "shape": list(a.shape)})
        chunks.append(a.tobytes())
    header = dict(meta)
    header["schema_version"] = schema_version
    header["arrays"] = specs
    hbytes = json.dumps(header, sort_keys=True, allow_nan=False).encode("utf-8")
    payload = b"".join(chunks)
    crc = zlib.crc32(hbytes + payload) & 0xFFFFFFFF
    return magic + struct.pack("<I", len(hbytes)) + hbytes + payload + struct.pack("<I", crc)


def loads(blob: bytes, magic: bytes, max_version: int) -> tuple[dict, dict[str, np.ndarray]]:
    if len(blob) < 8:
        raise TruncatedFileError("file shorter than magic")
    if blob[:8] != magic:
        raise FormatError(f"bad magic {blob[:8]!r}, expected {magic!r}")
    if len(blob) < 12:
        raise TruncatedFileError("missing header length")
    (hlen,) = struct.unpack("<I", blob[8:12])
    if len(blob) < 12 + hlen:
        raise TruncatedFileError("header truncated")
    hbytes = blob[12:12 + hlen]
    try:
        header = json.loads(hbytes.decode("utf-8"))
        version = int(header["schema_version"])
        specs = header["arrays"]
    except (ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"malformed header: {exc}") from None
    if version > max_version:
        raise VersionError(f"schema version {version} is newer than supported {max_version}")
    nbytes = sum(int(np.prod(s["shape"], dtype=np.int64)) * 8 for s in specs)
    end = 12 + hlen + nbytes
    if len(blob) < end + 4:
        raise TruncatedFileError(f"expected {end + 4} bytes, found {len(blob)}")
    if len(blob) > end + 4:
        raise FormatError("trailing bytes after checksum")
    (crc,) = struct.unpack("<I", blob[end:end + 4])
    if zlib.crc32(blob[12:end]) & 0xFFFFFFFF != crc:
        raise ChecksumError("CRC mismatch")
    arrays = {}
    offset = 12 + hlen
    for s in specs:
        dt = _DTYPES[s["dtype"]]
        count = int(np.prod(s["shape"], dtype=np.int64))
        arr = np.frombuffer(blob, dtype=dt, count=count, offset=offset).reshape(s["shape"])
        arrays[s["name"]] = arr.astype(dt.newbyteorder("="), copy=True)
        offset += count * 8
    return header, arrays


def write(path, blob: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(blob)
    tmp.replace(path)


def read(path) -> bytes:
    return Path(path).read_bytes()
