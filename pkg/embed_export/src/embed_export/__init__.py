"""embed_export: one-shot exporter of frozen contextual embeddings.

Runs a frozen encoder over every sentence of a corpus TSV, mean-pools
subword vectors to whitespace tokens, keeps the content positions that
the consumer's function-word rules select, and writes the EMBF embedding
binary plus a JSON manifest. Consumes the cellparse package only through
its documented file formats and command line.
"""
from __future__ import annotations

__version__ = "0.1.0"


class ModelLoadError(RuntimeError):
    """The requested encoder cannot be constructed or loaded."""


class AlignmentError(ValueError):
    """Subword pieces cannot be attributed to whitespace tokens."""


class FormatError(ValueError):
    """Malformed corpus, rules file, or binary; message carries file:line."""
