"""Subword-to-word pooling by character offsets.

A piece belongs to the whitespace token whose span contains its start;
pieces that straddle a token boundary or tokens that receive no pieces
are alignment failures. Word vectors are the mean of their pieces.
"""
from __future__ import annotations

import bisect

import numpy as np

from . import AlignmentError
from .encoders import Encoded


def pool_to_words(
    encoded: Encoded, word_spans: list[tuple[int, int]]
) -> np.ndarray:
    """Mean-pool piece vectors to one vector per whitespace token.

    Returns [n_words, dim] float32, rows in word order.
    """
    if not word_spans:
        raise AlignmentError("no tokens to align to")
    n_words = len(word_spans)
    dim = encoded.vectors.shape[1]
    starts = [s for s, _ in word_spans]
    sums = np.zeros((n_words, dim), dtype=np.float64)
    counts = np.zeros(n_words, dtype=np.int64)
    for vec, (ps, pe) in zip(encoded.vectors, encoded.spans):
        w = bisect.bisect_right(starts, ps) - 1
        if w < 0 or not (word_spans[w][0] <= ps and pe <= word_spans[w][1]):
            raise AlignmentError(
                f"piece [{ps}, {pe}) outside any token span"
            )
        sums[w] += vec
        counts[w] += 1
    if (counts == 0).any():
        missing = int(np.flatnonzero(counts == 0)[0])
        raise AlignmentError(f"token {missing} received no pieces")
    return (sums / counts[:, None]).astype(np.float32)
