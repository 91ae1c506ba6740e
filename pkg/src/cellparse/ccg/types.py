"""CCG type inventory: structure expressions and the type table.

The inventory is data, not code: a TSV file with one row per type
(id, name, structure, props).  The default table ships with the package;
alternative tables load through the same path, so the combinatorics in
chart.py stay table-driven.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path


class TypeTableError(ValueError):
    """Raised for malformed type-table files or structure expressions."""


# ---------------------------------------------------------------------------
# Structure expressions


@dataclass(frozen=True)
class Atom:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Fun:
    res: "Struct"
    slash: str  # '/' forward (argument right), '\\' backward (argument left)
    arg: "Struct"

    def __str__(self) -> str:
        def wrap(s: Struct) -> str:
            return f"({s})" if isinstance(s, Fun) else str(s)

        return f"{wrap(self.res)}{self.slash}{wrap(self.arg)}"


Struct = Atom | Fun


def parse_structure(text: str) -> Struct:
    """Parse a structure expression such as ``((S\\NP)/NP)/NP``.

    Slashes associate to the left, so ``A\\B/C`` reads ``(A\\B)/C``.
    """
    tokens = _lex_structure(text)
    pos = 0

    def term() -> Struct:
        nonlocal pos
        if pos >= len(tokens):
            raise TypeTableError(f"truncated structure: {text!r}")
        tok = tokens[pos]
        if tok == "(":
            pos += 1
            inner = expr()
            if pos >= len(tokens) or tokens[pos] != ")":
                raise TypeTableError(f"unbalanced parens in {text!r}")
            pos += 1
            return inner
        if tok in ("/", "\\", ")"):
            raise TypeTableError(f"unexpected {tok!r} in {text!r}")
        pos += 1
        return Atom(tok)

    def expr() -> Struct:
        nonlocal pos
        left = term()
        while pos < len(tokens) and tokens[pos] in ("/", "\\"):
            slash = tokens[pos]
            pos += 1
            left = Fun(left, slash, term())
        return left

    out = expr()
    if pos != len(tokens):
        raise TypeTableError(f"trailing tokens in structure {text!r}")
    return out


def _lex_structure(text: str) -> list[str]:
    out: list[str] = []
    buf = ""
    for ch in text:
        if ch in "()/\\":
            if buf:
                out.append(buf)
                buf = ""
            out.append(ch)
        elif ch.isspace():
            if buf:
                out.append(buf)
                buf = ""
        else:
            buf += ch
    if buf:
        out.append(buf)
    if not out:
        raise TypeTableError("empty structure expression")
    return out


# ---------------------------------------------------------------------------
# Type table


@dataclass(frozen=True)
class CCGType:
    id: int
    name: str
    struct: Struct
    props: dict[str, str] = field(default_factory=dict)

    @property
    def is_nominal(self) -> bool:
        return self.props.get("family") == "nominal"

    @property
    def is_modified(self) -> bool:
        return self.props.get("modified") == "1"

    @property
    def is_verb(self) -> bool:
        return self.props.get("verb") == "1"

    @property
    def arg_roles(self) -> tuple[str, ...]:
        raw = self.props.get("args", "")
        return tuple(r for r in raw.split(",") if r)

    @property
    def subj_role(self) -> str | None:
        return self.props.get("subj")

    @property
    def gap_role(self) -> str | None:
        return self.props.get("gap")

    @property
    def ptype(self) -> str | None:
        return self.props.get("ptype")


class TypeTable:
    """Immutable view of a loaded type inventory."""

    def __init__(self, rows: list[CCGType], raw_bytes: bytes):
        ids = [r.id for r in rows]
        if ids != list(range(len(rows))):
            raise TypeTableError("type ids must be contiguous from 0")
        names = [r.name for r in rows]
        if len(set(names)) != len(names):
            raise TypeTableError("duplicate type names")
        self.rows: tuple[CCGType, ...] = tuple(rows)
        self.by_name: dict[str, CCGType] = {r.name: r for r in rows}
        self.sha256: str = hashlib.sha256(raw_bytes).hexdigest()

    def __len__(self) -> int:
        return len(self.rows)

    def __getitem__(self, type_id: int) -> CCGType:
        return self.rows[type_id]

    @property
    def n_classes(self) -> int:
        """Readout class count, including the empty symbol."""
        return len(self.rows)

    @property
    def empty_id(self) -> int:
        return self.by_name["EMPTY"].id

    def resolve_struct(self, struct: Struct, modified: bool = False) -> CCGType:
        """Map a chart category back to a table row (root labeling).

        Resolution is deterministic: the lowest id whose structure matches
        and whose modified flag agrees.  Shared structures (IV vs PASS)
        resolve to the lowest id; that only matters for fragment roots,
        never for sentence roots (S, S_GAP, NP, NP_MOD are unique).
        """
        for row in self.rows:
            if row.struct == struct and row.is_modified == modified:
                return row
        raise TypeTableError(f"no type row with structure {struct}")


def load_type_table(path: str | Path) -> TypeTable:
    raw = Path(path).read_bytes()
    return _parse_table(raw, str(path))


def default_type_table() -> TypeTable:
    raw = resources.files("cellparse.data").joinpath("types_default.tsv").read_bytes()
    return _parse_table(raw, "types_default.tsv")


def _parse_table(raw: bytes, origin: str) -> TypeTable:
    rows: list[CCGType] = []
    for lineno, line in enumerate(raw.decode("utf-8").splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) < 3:
            raise TypeTableError(f"{origin}:{lineno}: expected at least 3 columns")
        try:
            type_id = int(parts[0])
        except ValueError as exc:
            raise TypeTableError(f"{origin}:{lineno}: bad id {parts[0]!r}") from exc
        name = parts[1].strip()
        struct_text = parts[2].strip()
        struct: Struct = Atom("-") if struct_text == "-" else parse_structure(struct_text)
        props: dict[str, str] = {}
        if len(parts) >= 4 and parts[3].strip():
            for pair in parts[3].strip().split(";"):
                if not pair:
                    continue
                if "=" not in pair:
                    raise TypeTableError(f"{origin}:{lineno}: bad prop {pair!r}")
                k, v = pair.split("=", 1)
                props[k.strip()] = v.strip()
        rows.append(CCGType(type_id, name, struct, props))
    if not rows:
        raise TypeTableError(f"{origin}: empty type table")
    return TypeTable(rows, raw)
