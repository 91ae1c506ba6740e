"""Corpus ingestion, embedding stores, and binary file formats.

Three artifact formats live here:

  - corpus TSV: ``sentence<TAB>logical form<TAB>category`` per line;
    extra columns are tolerated and logged once per file;
  - embedding binary: header (magic ``EMBF``, version, count, dim),
    fixed-size records keyed by (example_id: u64, position: u16) holding
    little-endian float32 vectors, then an index footer for random
    access, then the footer offset as the trailing u64;
  - checkpoint binary: header (magic ``CPNC``, version, K, D, H, C,
    embed_dim, type-table sha256), a tensor table of contents, the
    tensors as little-endian float32 blobs in declared order, and a
    trailing JSON config (which carries the optional vocabulary).

Everything is little-endian; files are written atomically (temp file in
the target directory, then rename).
"""
from __future__ import annotations

import io
import json
import logging
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

EMB_MAGIC = b"EMBF"
CKPT_MAGIC = b"CPNC"
FORMAT_VERSION = 1


class FormatError(ValueError):
    """Malformed corpus or binary file; message carries file:line."""


class MissingEmbedding(KeyError):
    """An embedding store does not cover a requested key."""


# ---------------------------------------------------------------------------
# Corpus TSV


@dataclass(frozen=True)
class Example:
    id: int
    tokens: tuple[str, ...]
    lf_text: str
    category: str
    split: str = "train"  # train | dev | test | gen

    def __post_init__(self) -> None:
        if not self.tokens:
            raise FormatError(f"example {self.id}: empty sentence")
        if not self.lf_text.strip():
            raise FormatError(f"example {self.id}: empty logical form")


def load_tsv(path: str | Path, split: str = "train") -> list[Example]:
    """Load ``sentence<TAB>LF<TAB>category`` rows.  Ids are row ordinals."""
    path = Path(path)
    out: list[Example] = []
    extra_cols = 0
    counts: dict[str, int] = {}
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) < 3:
                raise FormatError(
                    f"{path}:{lineno}: expected 3 tab-separated columns, "
                    f"got {len(parts)}"
                )
            if len(parts) > 3:
                extra_cols += 1
            sentence, lf_text, category = parts[0], parts[1], parts[2]
            tokens = tuple(sentence.split())
            if not tokens:
                raise FormatError(f"{path}:{lineno}: empty sentence")
            if not lf_text.strip():
                raise FormatError(f"{path}:{lineno}: empty logical form")
            out.append(
                Example(
                    id=len(out), tokens=tokens, lf_text=lf_text,
                    category=category.strip(), split=split,
                )
            )
            counts[category.strip()] = counts.get(category.strip(), 0) + 1
    if extra_cols:
        log.warning("%s: %d rows carry extra columns (ignored)", path, extra_cols)
    if not out:
        log.warning("%s: empty corpus file", path)
    else:
        log.info(
            "%s: %d examples across %d categories", path, len(out), len(counts)
        )
    return out


def write_tsv(path: str | Path, examples: list[Example]) -> None:
    payload = "".join(
        f"{' '.join(e.tokens)}\t{e.lf_text}\t{e.category}\n" for e in examples
    )
    _atomic_write_bytes(Path(path), payload.encode("utf-8"))


# ---------------------------------------------------------------------------
# Trajectory records (JSON lines)


def write_trajectories(path: str | Path, records: list[dict]) -> None:
    payload = "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
    _atomic_write_bytes(Path(path), payload.encode("utf-8"))


def read_trajectories(path: str | Path) -> list[dict]:
    out = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: bad JSON record") from exc
    return out


# ---------------------------------------------------------------------------
# Embedding binary format

_EMB_HEADER = struct.Struct("<4sIQI")  # magic, version, count, dim
_EMB_KEY = struct.Struct("<QH")  # example_id, position
_EMB_INDEX = struct.Struct("<QHQ")  # example_id, position, record offset


def write_embeddings(
    path: str | Path,
    dim: int,
    records: list[tuple[int, int, np.ndarray]],
) -> None:
    """Write (example_id, position, vector) records with an index footer."""
    buf = io.BytesIO()
    buf.write(_EMB_HEADER.pack(EMB_MAGIC, FORMAT_VERSION, len(records), dim))
    index: list[tuple[int, int, int]] = []
    for ex_id, pos, vec in records:
        vec = np.asarray(vec, dtype="<f4")
        if vec.shape != (dim,):
            raise FormatError(
                f"embedding for ({ex_id}, {pos}) has shape {vec.shape}, "
                f"expected ({dim},)"
            )
        index.append((ex_id, pos, buf.tell()))
        buf.write(_EMB_KEY.pack(ex_id, pos))
        buf.write(vec.tobytes())
    footer_offset = buf.tell()
    for ex_id, pos, off in index:
        buf.write(_EMB_INDEX.pack(ex_id, pos, off))
    buf.write(struct.pack("<Q", footer_offset))
    _atomic_write_bytes(Path(path), buf.getvalue())


class FileStore:
    """Random-access reader for the embedding binary format.

    Frozen by construction: lookups return copies of the stored float32
    vectors; nothing here participates in training.
    """

    trainable = False

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._fh = self.path.open("rb")
        header = self._fh.read(_EMB_HEADER.size)
        if len(header) < _EMB_HEADER.size:
            raise FormatError(f"{path}: truncated embedding header")
        magic, version, count, dim = _EMB_HEADER.unpack(header)
        if magic != EMB_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        if version != FORMAT_VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        self.count = count
        self.dim = dim
        self._index: dict[tuple[int, int], int] = {}
        self._fh.seek(-8, os.SEEK_END)
        (footer_offset,) = struct.unpack("<Q", self._fh.read(8))
        self._fh.seek(footer_offset)
        for _ in range(count):
            raw = self._fh.read(_EMB_INDEX.size)
            if len(raw) < _EMB_INDEX.size:
                raise FormatError(f"{path}: truncated index footer")
            ex_id, pos, off = _EMB_INDEX.unpack(raw)
            self._index[(ex_id, pos)] = off

    def get(self, example_id: int, position: int) -> np.ndarray:
        off = self._index.get((example_id, position))
        if off is None:
            raise MissingEmbedding((example_id, position))
        self._fh.seek(off)
        raw = self._fh.read(_EMB_KEY.size + 4 * self.dim)
        ex_id, pos = _EMB_KEY.unpack_from(raw)
        if (ex_id, pos) != (example_id, position):
            raise FormatError(f"{self.path}: index/record mismatch at {off}")
        return np.frombuffer(raw, dtype="<f4", offset=_EMB_KEY.size).astype(
            np.float64
        )

    def close(self) -> None:
        self._fh.close()


class TableStore:
    """Trainable per-word-type embedding table (the no-external-model path).

    One row per lowercased content-word type; rows are model parameters
    and receive gradients through the row indices handed to the trainer.
    """

    trainable = True

    def __init__(self, vocab: list[str], dim: int = 64, seed: int = 0):
        self.vocab = sorted(set(w.lower() for w in vocab))
        self.word_to_row = {w: i for i, w in enumerate(self.vocab)}
        self.dim = dim
        rng = np.random.default_rng(seed)
        # scale keeps initial code logits small; matches linear-layer init
        self.table = rng.standard_normal((len(self.vocab), dim)) * 0.02

    @classmethod
    def from_table(cls, vocab: list[str], table: np.ndarray) -> "TableStore":
        """Wrap an existing [V, dim] table (e.g. loaded from a checkpoint)."""
        store = cls(vocab, dim=int(table.shape[1]), seed=0)
        if len(store.vocab) != table.shape[0]:
            raise ValueError(
                f"vocab has {len(store.vocab)} types, table has "
                f"{table.shape[0]} rows"
            )
        store.table = np.asarray(table, dtype=np.float64)
        return store

    def row(self, token: str) -> int:
        idx = self.word_to_row.get(token.lower())
        if idx is None:
            raise MissingEmbedding(token.lower())
        return idx

    def rows(self, tokens: list[str]) -> np.ndarray:
        return np.array([self.row(t) for t in tokens], dtype=np.int64)


def get_embeddings(
    example: Example,
    content_positions: list[int],
    store: TableStore | FileStore,
) -> np.ndarray:
    """[L, dim] float64 matrix for the example's content positions."""
    if isinstance(store, TableStore):
        toks = [example.tokens[p] for p in content_positions]
        return store.table[store.rows(toks)]
    return np.stack([store.get(example.id, p) for p in content_positions])


# ---------------------------------------------------------------------------
# Checkpoint binary format

_CKPT_HEADER = struct.Struct("<4sIIIIII32s")  # magic, ver, K, D, H, C, E, hash


def save_checkpoint(
    path: str | Path,
    params: dict[str, np.ndarray],
    meta: dict[str, int],
    table_sha256: str,
    config: dict,
) -> None:
    """Atomic write: header, tensor TOC, float32 blobs, trailing JSON."""
    buf = io.BytesIO()
    buf.write(
        _CKPT_HEADER.pack(
            CKPT_MAGIC, FORMAT_VERSION,
            meta["K"], meta["D"], meta["H"], meta["C"], meta["E"],
            bytes.fromhex(table_sha256),
        )
    )
    buf.write(struct.pack("<I", len(params)))
    for name, tensor in params.items():
        nb = name.encode("utf-8")
        buf.write(struct.pack("<H", len(nb)))
        buf.write(nb)
        buf.write(struct.pack("<B", tensor.ndim))
        for d in tensor.shape:
            buf.write(struct.pack("<I", d))
    for tensor in params.values():
        buf.write(np.ascontiguousarray(tensor, dtype="<f4").tobytes())
    cfg = json.dumps(config, sort_keys=True).encode("utf-8")
    buf.write(struct.pack("<I", len(cfg)))
    buf.write(cfg)
    _atomic_write_bytes(Path(path), buf.getvalue())


def load_checkpoint(
    path: str | Path,
) -> tuple[dict[str, np.ndarray], dict[str, int], str, dict]:
    """Returns (params as float64, meta, table sha256 hex, config)."""
    raw = Path(path).read_bytes()
    if len(raw) < _CKPT_HEADER.size or raw[:4] != CKPT_MAGIC:
        raise FormatError(f"{path}: not a checkpoint file")
    magic, version, k, d, h, c, e, table_hash = _CKPT_HEADER.unpack_from(raw)
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {version}")
    off = _CKPT_HEADER.size
    (n_tensors,) = struct.unpack_from("<I", raw, off)
    off += 4
    toc: list[tuple[str, tuple[int, ...]]] = []
    for _ in range(n_tensors):
        (name_len,) = struct.unpack_from("<H", raw, off)
        off += 2
        name = raw[off: off + name_len].decode("utf-8")
        off += name_len
        (ndim,) = struct.unpack_from("<B", raw, off)
        off += 1
        dims = struct.unpack_from(f"<{ndim}I", raw, off)
        off += 4 * ndim
        toc.append((name, dims))
    params: dict[str, np.ndarray] = {}
    for name, dims in toc:
        n = int(np.prod(dims)) if dims else 1
        arr = np.frombuffer(raw, dtype="<f4", count=n, offset=off)
        off += 4 * n
        params[name] = arr.reshape(dims).astype(np.float64)
    (cfg_len,) = struct.unpack_from("<I", raw, off)
    off += 4
    config = json.loads(raw[off: off + cfg_len].decode("utf-8"))
    meta = {"K": k, "D": d, "H": h, "C": c, "E": e}
    return params, meta, table_hash.hex(), config


# ---------------------------------------------------------------------------


def _atomic_write_bytes(path: Path, payload: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
