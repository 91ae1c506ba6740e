"""Writer and reader for the EMBF embedding interchange format.

Re-implemented from the consumer's documented layout so this package
depends only on the published byte contract. Little-endian throughout:

  header   <4sIQI>  magic "EMBF", version 1, record count, dim
  records  per record: <QH> key (example_id u64, position u16),
           then dim float32
  index    per record: <QHQ> (example_id, position, absolute offset of
           the record's key), in write order
  trailer  <Q> absolute offset of the index

Files are written atomically (temp file in the target directory, then
rename), and readers locate the index by seeking 8 bytes from the end.
"""
from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from . import FormatError

MAGIC = b"EMBF"
VERSION = 1

_HEADER = struct.Struct("<4sIQI")
_KEY = struct.Struct("<QH")
_INDEX = struct.Struct("<QHQ")


def write_embeddings(
    path: str | Path, dim: int, records: list[tuple[int, int, np.ndarray]]
) -> None:
    """Write (example_id, position, vector) records with an index footer."""
    path = Path(path)
    chunks: list[bytes] = [_HEADER.pack(MAGIC, VERSION, len(records), dim)]
    offset = _HEADER.size
    index: list[tuple[int, int, int]] = []
    for ex_id, pos, vec in records:
        vec = np.asarray(vec, dtype="<f4")
        if vec.shape != (dim,):
            raise FormatError(
                f"embedding for ({ex_id}, {pos}) has shape {vec.shape}, "
                f"expected ({dim},)"
            )
        index.append((ex_id, pos, offset))
        body = _KEY.pack(ex_id, pos) + vec.tobytes()
        chunks.append(body)
        offset += len(body)
    chunks.extend(_INDEX.pack(*row) for row in index)
    chunks.append(struct.pack("<Q", offset))
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(b"".join(chunks))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_header(path: str | Path) -> tuple[int, int, int]:
    """(version, count, dim) from the file header."""
    path = Path(path)
    with path.open("rb") as fh:
        raw = fh.read(_HEADER.size)
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated embedding header")
    magic, version, count, dim = _HEADER.unpack(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    return version, count, dim


def read_embeddings(
    path: str | Path,
) -> tuple[int, dict[tuple[int, int], np.ndarray]]:
    """(dim, {(example_id, position): float32 vector}) via the index."""
    path = Path(path)
    version, count, dim = read_header(path)
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    out: dict[tuple[int, int], np.ndarray] = {}
    with path.open("rb") as fh:
        fh.seek(-8, os.SEEK_END)
        (footer_offset,) = struct.unpack("<Q", fh.read(8))
        fh.seek(footer_offset)
        rows = []
        for _ in range(count):
            raw = fh.read(_INDEX.size)
            if len(raw) < _INDEX.size:
                raise FormatError(f"{path}: truncated index footer")
            rows.append(_INDEX.unpack(raw))
        for ex_id, pos, off in rows:
            fh.seek(off)
            raw = fh.read(_KEY.size + 4 * dim)
            key = _KEY.unpack_from(raw)
            if key != (ex_id, pos):
                raise FormatError(f"{path}: index/record mismatch at {off}")
            out[key] = np.frombuffer(
                raw, dtype="<f4", offset=_KEY.size
            ).copy()
    return dim, out
