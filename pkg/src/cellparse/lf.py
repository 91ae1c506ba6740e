"""Logical forms: parsing, canonical comparison, and edge projection.

The corpus format is a conjunction of predicates over positional variables
(``x _ i`` refers to token position i in the original sentence), with
definite nominals pulled out as ``* noun ( x _ i )`` prefix clauses and
proper names appearing inline as bare arguments:

    * cat ( x _ 1 ) ; chase . agent ( x _ 2 , x _ 1 ) AND
    chase . theme ( x _ 2 , Emma )

Single-word exposure entries use either a bare name ("Paula") or a
LAMBDA form; both parse to primitive logical forms.

Edges are (head position, role, dependent position) triples; roles are
agent, theme, recipient, ccomp, xcomp, and nmod.<prep>.  Definiteness is
a token attribute, not an edge, and is excluded from edge comparison.
"""
from __future__ import annotations

from dataclasses import dataclass, field

ROLE_NAMES = frozenset({"agent", "theme", "recipient", "ccomp", "xcomp"})


class LFParseError(ValueError):
    """Raised for malformed logical-form text."""


@dataclass(frozen=True)
class Term:
    """One conjunct.

    kind 'unary': lemma ( x_var )           e.g. a noun predicate
    kind 'role':  lemma . role ( x_head , arg )  arg is an int position
                  or a proper-name string
    """

    kind: str
    lemma: str
    var: int = -1  # unary: the predicated variable; role: the head
    role: str = ""
    arg: int | str = -1

    def canonical(self) -> str:
        if self.kind == "unary":
            return f"{self.lemma}(x{self.var})"
        arg = f"x{self.arg}" if isinstance(self.arg, int) else self.arg
        return f"{self.lemma}.{self.role}(x{self.var},{arg})"


@dataclass(frozen=True)
class LogicalForm:
    terms: tuple[Term, ...]
    definites: frozenset[int]
    primitive: bool = False
    primitive_name: str = ""  # bare proper-name entries
    source: str = ""

    def canonical(self) -> str:
        if self.primitive and self.primitive_name:
            return f"name:{self.primitive_name}"
        parts = sorted(t.canonical() for t in self.terms)
        defs = ",".join(f"x{i}" for i in sorted(self.definites))
        head = f"def[{defs}] " if self.definites else ""
        tag = "prim " if self.primitive else ""
        return tag + head + " AND ".join(parts)


@dataclass(frozen=True)
class EdgeSet:
    """Directed labeled edges over original token positions."""

    edges: frozenset[tuple[int, str, int]]
    lemmas: dict[int, str] = field(default_factory=dict)
    definites: frozenset[int] = frozenset()

    def same_edges(self, other: "EdgeSet") -> bool:
        """Edge-level equality; lemmas and definiteness are metadata."""
        return self.edges == other.edges

    def sorted_edges(self) -> list[tuple[int, str, int]]:
        return sorted(self.edges)


def parse_lf(lf_text: str) -> LogicalForm:
    """Parse corpus logical-form text.  Tolerant of spacing variation."""
    text = " ".join(lf_text.split())
    if not text:
        raise LFParseError("empty logical form")

    if text.startswith("LAMBDA "):
        return _parse_lambda(text)

    # bare proper-name exposure entry: a single capitalized token
    if "(" not in text and " " not in text:
        return LogicalForm(
            terms=(), definites=frozenset(), primitive=True,
            primitive_name=text, source=lf_text,
        )

    clauses = [c.strip() for c in text.split(";")]
    definites: set[int] = set()
    terms: list[Term] = []
    for idx, clause in enumerate(clauses):
        if not clause:
            raise LFParseError(f"empty clause in {lf_text!r}")
        is_last = idx == len(clauses) - 1
        if clause.startswith("*"):
            term = _parse_term(clause[1:].strip())
            if term.kind != "unary":
                raise LFParseError(f"definite marker on non-unary: {clause!r}")
            definites.add(term.var)
            terms.append(term)
        elif is_last:
            for part in clause.split(" AND "):
                terms.append(_parse_term(part.strip()))
        else:
            raise LFParseError(f"non-definite prefix clause: {clause!r}")
    return LogicalForm(
        terms=tuple(terms), definites=frozenset(definites), source=lf_text
    )


def _parse_lambda(text: str) -> LogicalForm:
    """LAMBDA-form primitives.  Variables are letters; positions unknown.

    Role structure is preserved (letters mapped to stable negative ids)
    so single-word typing can inspect the frame.
    """
    body = text
    order: list[str] = []
    while body.startswith("LAMBDA "):
        rest = body[len("LAMBDA "):]
        dot = rest.find(" . ")
        if dot < 0:
            raise LFParseError(f"malformed lambda: {text!r}")
        order.append(rest[:dot].strip())
        body = rest[dot + 3:]
    var_ids = {name: -(i + 1) for i, name in enumerate(order)}
    terms = []
    for part in body.split(" AND "):
        terms.append(_parse_term(part.strip(), var_ids))
    return LogicalForm(
        terms=tuple(terms), definites=frozenset(), primitive=True, source=text
    )


def _parse_term(text: str, var_ids: dict[str, int] | None = None) -> Term:
    open_idx = text.find("(")
    if open_idx < 0 or not text.rstrip().endswith(")"):
        raise LFParseError(f"malformed term: {text!r}")
    head = text[:open_idx].strip()
    args_text = text[open_idx + 1: text.rfind(")")].strip()
    head_parts = [p.strip() for p in head.split(".")]
    args = [a.strip() for a in args_text.split(",")]

    def parse_arg(a: str) -> int | str:
        toks = a.split()
        if toks and toks[0] == "x":
            # "x _ 3" or "x_3"
            tail = "".join(toks[1:]).lstrip("_")
            try:
                return int(tail)
            except ValueError as exc:
                raise LFParseError(f"bad variable {a!r} in {text!r}") from exc
        if a.startswith("x_"):
            try:
                return int(a[2:])
            except ValueError:
                pass
        if var_ids is not None and a in var_ids:
            return var_ids[a]
        if " " in a:
            raise LFParseError(f"bad argument {a!r} in {text!r}")
        return a  # proper name

    if len(head_parts) == 1:
        if len(args) != 1:
            raise LFParseError(f"unary term with {len(args)} args: {text!r}")
        var = parse_arg(args[0])
        if not isinstance(var, int):
            raise LFParseError(f"unary term over a name: {text!r}")
        return Term(kind="unary", lemma=head_parts[0], var=var)

    if len(head_parts) == 2:
        lemma, role = head_parts
        if role not in ROLE_NAMES:
            raise LFParseError(f"unknown role {role!r} in {text!r}")
    elif len(head_parts) == 3 and head_parts[1] == "nmod":
        lemma, role = head_parts[0], f"nmod.{head_parts[2]}"
    else:
        raise LFParseError(f"malformed predicate {head!r} in {text!r}")

    if len(args) != 2:
        raise LFParseError(f"role term with {len(args)} args: {text!r}")
    head_var = parse_arg(args[0])
    if not isinstance(head_var, int):
        raise LFParseError(f"role head must be a variable: {text!r}")
    return Term(kind="role", lemma=lemma, var=head_var, role=role, arg=parse_arg(args[1]))


def normalize_for_reformatted_match(a: str, b: str) -> bool:
    """Whitespace- and conjunct-order-invariant logical form equality.

    Variable names are positional in this format, so they are compared
    as-is; only formatting freedom is normalized away.
    """
    return parse_lf(a).canonical() == parse_lf(b).canonical()


def lf_to_edges(lf: LogicalForm, sentence_tokens: list[str]) -> EdgeSet:
    """Project a logical form onto edges over token positions.

    Proper-name arguments bind to the leftmost not-yet-used token equal
    to the name, in source term order.  Control is the one place a name
    legitimately recurs without a second token: a verb that is itself an
    xcomp target binds its first name argument back to that name's first
    token (the controller) instead of consuming a fresh one.
    """
    if lf.primitive:
        return EdgeSet(edges=frozenset(), lemmas={}, definites=frozenset())

    lemmas: dict[int, str] = {}
    for t in lf.terms:
        if t.kind == "unary" and t.lemma != "wh":
            lemmas[t.var] = t.lemma

    role_terms = [t for t in lf.terms if t.kind == "role"]
    for t in role_terms:
        lemmas.setdefault(t.var, t.lemma)
    xcomp_targets = {
        t.arg for t in role_terms if t.role == "xcomp" and isinstance(t.arg, int)
    }

    next_fresh: dict[str, int] = {}
    first_bound: dict[str, int] = {}

    def bind_fresh(name: str) -> int:
        start = next_fresh.get(name, 0)
        for pos in range(start, len(sentence_tokens)):
            if sentence_tokens[pos] == name:
                next_fresh[name] = pos + 1
                first_bound.setdefault(name, pos)
                lemmas[pos] = name
                return pos
        if name in first_bound:
            return first_bound[name]
        raise LFParseError(f"name {name!r} not found in tokens {sentence_tokens}")

    edges: set[tuple[int, str, int]] = set()
    controlled = [t for t in role_terms if t.var in xcomp_targets]
    reused: set[int] = set()

    for t in role_terms:
        if t.var in xcomp_targets and isinstance(t.arg, str):
            continue  # bound below, after all controllers
        dep = t.arg if isinstance(t.arg, int) else bind_fresh(t.arg)
        edges.add((t.var, t.role, dep))

    for t in controlled:
        if not isinstance(t.arg, str):
            continue
        if t.var not in reused and t.arg in first_bound:
            dep = first_bound[t.arg]
        else:
            dep = bind_fresh(t.arg)
        reused.add(t.var)
        edges.add((t.var, t.role, dep))

    return EdgeSet(
        edges=frozenset(edges), lemmas=lemmas, definites=lf.definites
    )
