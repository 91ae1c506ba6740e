"""Deterministic supervision: logical form + tokens -> type trajectory.

The trajectory of a sentence is the pair of aligned type sequences over
its content tokens: the initial types (one lexical type per content
token) and the final state (the empty symbol everywhere except the
derivation root's head position, which carries the root type).

Typing is driven by the logical form, never by a statistical model:
realized argument structure selects the verb type, voice comes from the
auxiliary, and extraction sites (wh, relative clauses) reduce or gap the
type exactly as the merge rules in chart.py expect.

Known shape limits, enforced loudly rather than silently mistyped:
  - relative clauses may nest across clauses but not center-embed
    recursively inside another relative clause;
  - a gapped ditransitive with a realized argument on the other slot
    and no stranded preposition has no type in the inventory.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..lf import EdgeSet, LogicalForm, lf_to_edges
from .chart import Derivation, cky_parse, root_type_id
from .types import TypeTable

WH_SURFACES = frozenset({"who", "what"})


class DerivationError(ValueError):
    """A token cannot be typed from the logical form."""


# ---------------------------------------------------------------------------
# Function words


@dataclass(frozen=True)
class FunctionWordRules:
    """What gets stripped before typing.

    'that' is contextual: retained (relative pronoun) only when the
    preceding original token is a known nominal surface, stripped
    (complementizer) otherwise.
    """

    strip_words: frozenset[str] = frozenset({"a", "the", "was", "did"})
    rc_that_nouns: frozenset[str] = frozenset()

    def keeps_that(self, prev_token: str | None) -> bool:
        return prev_token is not None and prev_token.lower() in self.rc_that_nouns

    def to_json(self) -> str:
        return json.dumps(
            {
                "version": 1,
                "strip_words": sorted(self.strip_words),
                "rc_that_nouns": sorted(self.rc_that_nouns),
            },
            indent=2,
            sort_keys=True,
        )

    @staticmethod
    def from_json(text: str) -> "FunctionWordRules":
        obj = json.loads(text)
        return FunctionWordRules(
            strip_words=frozenset(obj["strip_words"]),
            rc_that_nouns=frozenset(obj["rc_that_nouns"]),
        )


def _is_punct(token: str) -> bool:
    return not any(ch.isalnum() for ch in token)


def strip_function_words(
    tokens: list[str], rules: FunctionWordRules | None = None
) -> tuple[list[str], list[int]]:
    """Drop function words; return (content tokens, original positions)."""
    rules = rules or FunctionWordRules()
    kept: list[str] = []
    positions: list[int] = []
    for pos, tok in enumerate(tokens):
        low = tok.lower()
        if _is_punct(tok):
            continue
        if low == "that":
            prev = tokens[pos - 1] if pos > 0 else None
            if not rules.keeps_that(prev):
                continue
        elif low in rules.strip_words:
            continue
        kept.append(tok)
        positions.append(pos)
    return kept, positions


# ---------------------------------------------------------------------------
# Typing


def derive_types(
    lf: LogicalForm,
    content: list[tuple[int, str]],
    tokens: list[str],
    table: TypeTable,
) -> list[int]:
    """Assign one lexical type id to each content token."""
    edges = lf_to_edges(lf, tokens)
    t = _Typer(lf, edges, content, tokens, table)
    return [t.type_token(pos, tok) for pos, tok in content]


class _Typer:
    def __init__(
        self,
        lf: LogicalForm,
        edges: EdgeSet,
        content: list[tuple[int, str]],
        tokens: list[str],
        table: TypeTable,
    ):
        self.lf = lf
        self.content = content
        self.tokens = tokens
        self.table = table
        self.edges = sorted(edges.edges)
        self.content_pos = [p for p, _ in content]

        self.unary_vars: dict[int, str] = {
            t.var: t.lemma for t in lf.terms if t.kind == "unary"
        }
        self.wh_vars = {
            p for p, tok in content if tok.lower() in WH_SURFACES
        } | {v for v, lemma in self.unary_vars.items() if lemma == "wh"}
        self.that_positions = [p for p, tok in content if tok.lower() == "that"]
        self.event_vars = {
            h for (h, role, d) in self.edges if not role.startswith("nmod.")
        }
        self.xcomp_targets = {d for (h, role, d) in self.edges if role == "xcomp"}
        self.comp_children: dict[int, set[int]] = {}
        for (h, role, d) in self.edges:
            if role in ("ccomp", "xcomp") and isinstance(d, int):
                self.comp_children.setdefault(h, set()).add(d)
        self.name_positions = {
            d
            for (h, role, d) in self.edges
            if isinstance(d, int) and d not in self.unary_vars and d not in self.event_vars
        }

    # -- helpers ----------------------------------------------------------

    def _content_prev(self, pos: int) -> int | None:
        """Original position of the content token before `pos`."""
        prev = None
        for p in self.content_pos:
            if p >= pos:
                break
            prev = p
        return prev

    def _content_next(self, pos: int) -> int | None:
        for p in self.content_pos:
            if p > pos:
                return p
        return None

    def _comp_reaches(self, event: int, verb: int) -> bool:
        """`verb` is reachable from `event` through complement edges."""
        seen = {event}
        stack = [event]
        while stack:
            cur = stack.pop()
            if cur == verb:
                return True
            for d in self.comp_children.get(cur, ()):
                if d not in seen:
                    seen.add(d)
                    stack.append(d)
        return False

    def _is_rc_gap(self, dep: int, verb: int) -> bool:
        """`dep` is the head noun of a relative clause containing `verb`.

        The noun sits immediately before a retained 'that' left of the
        verb, and every event between them lies on a complement chain
        into the verb (long-distance gaps percolate through ccomp).
        A completed clause in between (a verb not on such a chain) means
        the relative clause has closed and `dep` is a realized subject.
        """
        for t in self.that_positions:
            if t < verb and self._content_prev(t) == dep:
                if all(
                    self._comp_reaches(e, verb)
                    for e in self.event_vars
                    if t < e < verb
                ):
                    return True
        return False

    def _tok(self, pos: int) -> str:
        return self.tokens[pos].lower()

    # -- per-token typing --------------------------------------------------

    def type_token(self, pos: int, tok: str) -> int:
        low = tok.lower()
        name = self._type_name(pos, tok, low)
        return self.table.by_name[name].id

    def _type_name(self, pos: int, tok: str, low: str) -> str:
        if pos in self.wh_vars:
            return "WH"
        if low == "that":
            return "RC_THAT"
        if low == "by":
            return "P_BY"
        if low == "to":
            return self._type_to(pos)
        if any(role == f"nmod.{low}" and h < pos <= d
               for (h, role, d) in self.edges if isinstance(d, int)):
            return "P_MOD"
        if pos in self.unary_vars:
            return "NP"
        if pos in self.name_positions:
            return "NP"
        if pos in self.event_vars:
            return self._type_verb(pos)
        raise DerivationError(f"cannot type token {tok!r} at position {pos}")

    def _type_to(self, pos: int) -> str:
        nxt = self._content_next(pos)
        if nxt is not None:
            if any(role == "xcomp" and d == nxt for (_, role, d) in self.edges):
                return "INF"
            if any(role == "recipient" and d == nxt for (_, role, d) in self.edges):
                return "P_TO"
        # stranded: licensed by a leftward (gapped) recipient somewhere
        if any(
            role == "recipient" and isinstance(d, int) and h < pos and d < h
            for (h, role, d) in self.edges
        ):
            return "P_STRAND"
        raise DerivationError(f"cannot type 'to' at position {pos}")

    def _type_verb(self, pos: int) -> str:
        vedges = [(h, r, d) for (h, r, d) in self.edges
                  if h == pos and not r.startswith("nmod.")]
        passive = pos > 0 and self._tok(pos - 1) == "was"
        is_xcomp_target = pos in self.xcomp_targets

        fwd: list[str] = []  # 'np' | 'pp' | 'comp'
        subject_seen = False
        wh_left = False
        rc_gap_roles: list[str] = []

        for (_, role, dep) in vedges:
            if role in ("ccomp", "xcomp"):
                fwd.append("comp")
                continue
            assert isinstance(dep, int)
            if dep > pos:
                if role == "agent" and passive:
                    continue  # by-phrase adjunct
                if role == "recipient" and "to" in (
                    self._tok(q) for q in range(pos + 1, dep)
                ):
                    fwd.append("pp")
                else:
                    fwd.append("np")
            else:
                if dep in self.wh_vars:
                    wh_left = True
                elif is_xcomp_target:
                    continue  # control; filled by the matrix subject
                elif self._is_rc_gap(dep, pos):
                    rc_gap_roles.append(role)
                else:
                    subject_seen = True

        if wh_left and not subject_seen:
            subject_seen = True  # wh is the subject; type unchanged
        if rc_gap_roles and not subject_seen:
            subject_seen = True  # subject relative; type unchanged
            rc_gap_roles = []

        if rc_gap_roles:
            # object-side relative gap with a realized clause-internal subject
            role = rc_gap_roles[0]
            stranded = role == "recipient" and any(
                self._tok(q) == "to" and self._is_clause_final_to(q)
                for q in range(pos + 1, len(self.tokens))
            )
            if stranded:
                pass  # the stranded preposition carries the gap
            elif not fwd:
                return "TV_GAP"
            else:
                raise DerivationError(
                    f"gapped verb at {pos} with realized arguments {fwd}: "
                    "no inventory type"
                )

        kinds = tuple(sorted(fwd))
        if passive:
            by_kind = {(): "PASS", ("np",): "PASS_DO", ("pp",): "PASS_TO"}
            if kinds in by_kind:
                return by_kind[kinds]
            raise DerivationError(f"passive verb at {pos} with arguments {kinds}")
        by_kind = {
            (): "IV",
            ("np",): "TV",
            ("pp",): "TV_TO",
            ("comp",): "CCOMP",
            ("np", "np"): "DTV_DO",
            ("np", "pp"): "DTV_TO",
        }
        if kinds in by_kind:
            return by_kind[kinds]
        raise DerivationError(f"verb at {pos} with arguments {kinds}")

    def _is_clause_final_to(self, q: int) -> bool:
        """A stranded 'to': the next content token, if any, is an event
        outside the current clause (it immediately follows the gap site)."""
        nxt = self._content_next(q)
        return nxt is None or nxt in self.event_vars


# ---------------------------------------------------------------------------
# Trajectories


@dataclass(frozen=True)
class Trajectory:
    tokens: tuple[str, ...]
    content_tokens: tuple[str, ...]
    content_positions: tuple[int, ...]
    initial_ids: tuple[int, ...]
    final_ids: tuple[int, ...]
    derivation: Derivation | None = None

    @property
    def content(self) -> list[tuple[int, str]]:
        return list(zip(self.content_positions, self.content_tokens))

    @property
    def root_content_index(self) -> int:
        if self.derivation is not None:
            return self.derivation.head
        return 0 if len(self.final_ids) == 1 else -1


def _primitive_type_name(lf: LogicalForm, token: str) -> str:
    if lf.primitive_name:
        return "NP"
    roles = {t.role for t in lf.terms if t.kind == "role"}
    if not roles:
        return "NP"
    if roles == {"agent"}:
        return "IV"
    if roles == {"agent", "theme"}:
        return "TV"
    if roles == {"agent", "theme", "recipient"}:
        return "DTV_TO"
    raise DerivationError(f"primitive {token!r} with roles {sorted(roles)}")


def build_trajectory(
    lf: LogicalForm,
    tokens: list[str],
    table: TypeTable,
    rules: FunctionWordRules | None = None,
) -> Trajectory:
    """Strip, type, parse, and package the supervision for one example."""
    content_tokens, positions = strip_function_words(tokens, rules)
    if not content_tokens:
        raise DerivationError(f"no content tokens in {tokens}")
    content = list(zip(positions, content_tokens))

    if len(content) == 1:
        name = _primitive_type_name(lf, content_tokens[0])
        tid = table.by_name[name].id
        return Trajectory(
            tokens=tuple(tokens),
            content_tokens=tuple(content_tokens),
            content_positions=tuple(positions),
            initial_ids=(tid,),
            final_ids=(tid,),
            derivation=None,
        )

    initial = derive_types(lf, content, tokens, table)
    derivation = cky_parse(initial, table)
    final = [table.empty_id] * len(content)
    final[derivation.head] = root_type_id(derivation, table)
    return Trajectory(
        tokens=tuple(tokens),
        content_tokens=tuple(content_tokens),
        content_positions=tuple(positions),
        initial_ids=tuple(initial),
        final_ids=tuple(final),
        derivation=derivation,
    )
