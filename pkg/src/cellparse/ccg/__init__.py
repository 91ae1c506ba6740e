"""Symbolic kernel: type inventory, CKY chart, typing, extraction."""
from .chart import AmbiguousParse, Derivation, NoParse, cky_parse, merge_signature, root_type_id
from .derive import (
    DerivationError,
    FunctionWordRules,
    Trajectory,
    build_trajectory,
    derive_types,
    strip_function_words,
)
from .edges import ExtractionError, Lexicon, RoleExhausted, extract_edges
from .types import (
    Atom,
    CCGType,
    Fun,
    TypeTable,
    TypeTableError,
    default_type_table,
    load_type_table,
    parse_structure,
)

__all__ = [
    "AmbiguousParse",
    "Atom",
    "CCGType",
    "Derivation",
    "DerivationError",
    "ExtractionError",
    "Fun",
    "FunctionWordRules",
    "Lexicon",
    "NoParse",
    "RoleExhausted",
    "Trajectory",
    "TypeTable",
    "TypeTableError",
    "build_trajectory",
    "cky_parse",
    "default_type_table",
    "derive_types",
    "extract_edges",
    "load_type_table",
    "merge_signature",
    "parse_structure",
    "root_type_id",
    "strip_function_words",
]
