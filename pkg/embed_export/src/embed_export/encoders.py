"""Frozen sentence encoders producing per-piece vectors with char offsets.

Two families behind one interface:

  - ``hash-trigram-{dim}``: built in, weight free, fully deterministic.
    Tokens are chunked into character pieces of up to three characters;
    each piece gets a pseudorandom base vector seeded from its lowercased
    text, a sinusoidal position term is added, and two bidirectional
    mixing passes make every vector depend on both neighbors. Useful
    wherever downloading a pretrained checkpoint is impossible and for
    exercising the full export path in tests.
  - any other id is treated as a pretrained transformer checkpoint and
    loaded through the ``transformers`` library in inference mode; the
    final hidden layer is exported. A missing library or checkpoint
    raises ModelLoadError.

Encoders are frozen: encode() has no state and no randomness beyond the
piece-text hash, so repeated calls are bit-identical.
"""
from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field

import numpy as np

from . import AlignmentError, ModelLoadError

_BUILTIN = re.compile(r"hash-trigram-(\d+)")
_PIECE_CHARS = 3


@dataclass(frozen=True)
class Encoded:
    vectors: np.ndarray  # [n_pieces, dim] float32
    spans: tuple[tuple[int, int], ...]  # char span of each piece


def token_spans(sentence: str) -> list[tuple[int, int]]:
    """Char spans of whitespace tokens, aligned with sentence.split()."""
    return [(m.start(), m.end()) for m in re.finditer(r"\S+", sentence)]


def _piece_seed(text: str) -> int:
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def _position_code(n: int, dim: int) -> np.ndarray:
    # standard sin/cos interleave; scale 0.3 keeps text identity dominant
    pos = np.arange(n, dtype=np.float32)[:, None]  # [n, 1]
    idx = np.arange(dim, dtype=np.float32)[None, :]  # [1, dim]
    angle = pos / np.power(10000.0, 2.0 * np.floor(idx / 2.0) / dim)
    code = np.where(idx % 2 == 0, np.sin(angle), np.cos(angle))
    return (0.3 * code).astype(np.float32)


class HashTrigramEncoder:
    """Deterministic contextual encoder with no external weights."""

    layer = "mix-2"

    def __init__(self, dim: int):
        if not 4 <= dim <= 4096:
            raise ModelLoadError(f"hash-trigram dim {dim} outside [4, 4096]")
        self.dim = dim
        self.name = f"hash-trigram-{dim}"
        self.revision = "builtin-1"
        self._cache: dict[str, np.ndarray] = {}

    def _base(self, text: str) -> np.ndarray:
        vec = self._cache.get(text)
        if vec is None:
            rng = np.random.default_rng(_piece_seed(text))
            vec = rng.standard_normal(self.dim).astype(np.float32)
            self._cache[text] = vec
        return vec

    def encode(self, sentence: str) -> Encoded:
        pieces: list[tuple[int, int]] = []
        for start, end in token_spans(sentence):
            for i in range(start, end, _PIECE_CHARS):
                pieces.append((i, min(i + _PIECE_CHARS, end)))
        if not pieces:
            raise AlignmentError("sentence has no tokens")
        x = np.stack([self._base(sentence[s:e].lower()) for s, e in pieces])
        x = x + _position_code(len(pieces), self.dim)
        for _ in range(2):  # bidirectional context, edge rows self-padded
            left = np.concatenate([x[:1], x[:-1]], axis=0)
            right = np.concatenate([x[1:], x[-1:]], axis=0)
            x = (0.5 * x + 0.25 * left + 0.25 * right).astype(np.float32)
        norm = np.linalg.norm(x, axis=1, keepdims=True)
        x = (x / np.maximum(norm, np.float32(1e-6))).astype(np.float32)
        return Encoded(vectors=x, spans=tuple(pieces))


class TransformerEncoder:
    """Final-hidden-layer export from a pretrained transformer.

    Loaded lazily through ``transformers``; evaluation mode, no grad, so
    repeated exports are deterministic.
    """

    layer = "final-hidden"

    def __init__(self, model_id: str, revision: str = "main"):
        try:
            import torch
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:
            raise ModelLoadError(
                f"{model_id}: not a builtin encoder id and the "
                f"transformers/torch libraries are not installed"
            ) from exc
        try:
            self._tokenizer = AutoTokenizer.from_pretrained(
                model_id, revision=revision
            )
            self._model = AutoModel.from_pretrained(model_id, revision=revision)
        except Exception as exc:  # hub/file errors vary by backend
            raise ModelLoadError(f"{model_id}: {exc}") from exc
        self._torch = torch
        self._model.eval()
        self.dim = int(self._model.config.hidden_size)
        self.name = model_id
        self.revision = revision

    def encode(self, sentence: str) -> Encoded:
        enc = self._tokenizer(
            sentence, return_offsets_mapping=True, return_tensors="pt"
        )
        offsets = enc.pop("offset_mapping")[0].tolist()
        with self._torch.no_grad():
            hidden = self._model(**enc).last_hidden_state[0]
        vectors = hidden.cpu().numpy().astype(np.float32)
        keep = [i for i, (s, e) in enumerate(offsets) if e > s]  # drop specials
        if not keep:
            raise AlignmentError("tokenizer produced no content pieces")
        return Encoded(
            vectors=vectors[keep],
            spans=tuple((int(offsets[i][0]), int(offsets[i][1])) for i in keep),
        )


def load_encoder(model_id: str, revision: str = "main"):
    m = _BUILTIN.fullmatch(model_id)
    if m:
        return HashTrigramEncoder(int(m.group(1)))
    return TransformerEncoder(model_id, revision=revision)
