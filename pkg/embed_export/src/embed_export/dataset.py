"""Corpus TSV reading and function-word position selection.

Both follow the producer's published contracts, not its code:

  - corpus TSV: ``sentence<TAB>logical form<TAB>category`` per line,
    blank lines skipped, extra columns tolerated; example ids are the
    ordinals of the kept rows; tokens are ``sentence.split()``;
  - funcwords JSON: ``{"version": 1, "strip_words": [...],
    "rc_that_nouns": [...]}``. Stripping drops tokens with no
    alphanumeric character, drops ``strip_words`` members
    (case-insensitive), and keeps ``that`` only when the preceding
    original token is an ``rc_that_nouns`` member.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from . import FormatError


@dataclass(frozen=True)
class CorpusLine:
    id: int
    sentence: str
    tokens: tuple[str, ...]


def read_corpus(path: str | Path) -> list[CorpusLine]:
    path = Path(path)
    out: list[CorpusLine] = []
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
            sentence = parts[0]
            tokens = tuple(sentence.split())
            if not tokens:
                raise FormatError(f"{path}:{lineno}: empty sentence")
            out.append(CorpusLine(id=len(out), sentence=sentence, tokens=tokens))
    if not out:
        raise FormatError(f"{path}: empty corpus file")
    return out


@dataclass(frozen=True)
class StripRules:
    strip_words: frozenset[str]
    rc_that_nouns: frozenset[str]

    @staticmethod
    def from_json_file(path: str | Path) -> "StripRules":
        path = Path(path)
        try:
            obj = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: bad JSON rules file") from exc
        try:
            return StripRules(
                strip_words=frozenset(w.lower() for w in obj["strip_words"]),
                rc_that_nouns=frozenset(w.lower() for w in obj["rc_that_nouns"]),
            )
        except (KeyError, TypeError) as exc:
            raise FormatError(f"{path}: missing rules field {exc}") from exc


def content_positions(tokens: tuple[str, ...], rules: StripRules) -> list[int]:
    """Original positions surviving function-word stripping."""
    kept: list[int] = []
    for pos, tok in enumerate(tokens):
        low = tok.lower()
        if not any(ch.isalnum() for ch in tok):
            continue
        if low == "that":
            prev = tokens[pos - 1].lower() if pos > 0 else None
            if prev not in rules.rc_that_nouns:
                continue
        elif low in rules.strip_words:
            continue
        kept.append(pos)
    return kept
