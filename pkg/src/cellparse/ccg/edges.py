"""Edge extraction from derivations, and the surface lexicon behind it.

Extraction walks a derivation bottom-up and emits (head, role, dependent)
edges over original token positions:

  - forward application consumes the functor verb's role queue in order;
  - backward application emits the subject role declared by the verb's
    type (deferring to the lexicon for S\\NP verbs, where unergative and
    unaccusative lemmas differ);
  - nominal modification emits nmod.<prep>; the passive by-adjunct emits
    agent; control fills the embedded verb's subject at the matrix
    subject's attachment;
  - wh and relative-clause merges emit the gap edge.  A wh merge over a
    plain S recovers the gap host by lexicon backtracking: the rightmost
    verb whose consumed forward arguments fall short of its lexical
    frame.  The filled role is the host type's default gap role, which
    deliberately reproduces the known role-ambiguity residue of reduced
    double-object datives.

The lexicon is built from training data only.  Surfaces map to a lemma
and word class; subject role and maximum observed forward valence are
aggregated per lemma, since valence is a property of the verb, not of
its inflection.  An unseen surface falls back to itself as lemma, which
is exactly the base form that bare questions use.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace

from ..lf import EdgeSet, LogicalForm, lf_to_edges
from .chart import Node
from .types import Atom, Fun, Struct, TypeTable

STRAND_ROLES = {"to": "recipient"}
WH_SURFACES = frozenset({"who", "what"})


class ExtractionError(ValueError):
    """The derivation cannot be mapped to edges."""


class RoleExhausted(ExtractionError):
    """A functor consumed more forward arguments than its role queue."""


# ---------------------------------------------------------------------------
# Surface lexicon


@dataclass
class LexEntry:
    lemma: str
    pos_class: str  # noun | proper | verb | prep | wh


@dataclass
class VerbStats:
    """Lemma-level aggregates across all observed inflections."""

    subj_role: str = "theme"  # promoted to agent on active evidence
    max_fwd: int = 0


class Lexicon:
    def __init__(self) -> None:
        self.entries: dict[str, LexEntry] = {}
        self.verb_stats: dict[str, VerbStats] = {}

    # -- construction -------------------------------------------------

    @staticmethod
    def build(pairs: list[tuple[list[str], LogicalForm]]) -> "Lexicon":
        lex = Lexicon()
        for tokens, lf in pairs:
            lex.update(tokens, lf)
        return lex

    def update(self, tokens: list[str], lf: LogicalForm) -> None:
        if lf.primitive:
            self._update_primitive(tokens, lf)
            return
        edges = lf_to_edges(lf, tokens)
        unary_vars = {t.var: t.lemma for t in lf.terms if t.kind == "unary"}
        event_vars = {
            h for (h, r, d) in edges.edges if not r.startswith("nmod.")
        }
        xcomp_targets = {d for (h, r, d) in edges.edges if r == "xcomp"}

        for var, lemma in unary_vars.items():
            tok = tokens[var].lower()
            if lemma == "wh" or tok in WH_SURFACES:
                self._add(tok, LexEntry(tok, "wh"))
            else:
                self._add(tok, LexEntry(lemma, "noun"))
        for pos, tok in enumerate(tokens):
            if tok.lower() in WH_SURFACES:
                self._add(tok.lower(), LexEntry(tok.lower(), "wh"))

        # proper names: dependents that are neither predicated nouns nor events
        for (h, r, d) in edges.edges:
            if d not in unary_vars and d not in event_vars:
                tok = tokens[d]
                self._add(tok.lower(), LexEntry(tok, "proper"))

        for (h, r, d) in edges.edges:
            if r.startswith("nmod."):
                prep = r.split(".", 1)[1]
                for q in range(h + 1, d):
                    if tokens[q].lower() == prep:
                        self._add(prep, LexEntry(prep, "prep"))
                        break

        for v in sorted(event_vars):
            self._update_verb(tokens, edges, v, xcomp_targets)

    def _update_verb(
        self,
        tokens: list[str],
        edges: EdgeSet,
        v: int,
        xcomp_targets: set[int],
    ) -> None:
        tok = tokens[v].lower()
        lemma = edges.lemmas.get(v, tok)
        passive = v > 0 and tokens[v - 1].lower() == "was"
        fwd = 0
        left_roles: list[str] = []
        for (h, r, d) in edges.edges:
            if h != v or r.startswith("nmod."):
                continue
            if r in ("ccomp", "xcomp"):
                fwd += 1
            elif d > v:
                if not (passive and r == "agent"):
                    fwd += 1
            else:
                left_roles.append(r)
        entry = self.entries.get(tok)
        if entry is None or entry.pos_class != "verb":
            self.entries[tok] = LexEntry(lemma, "verb")
        stats = self.verb_stats.setdefault(lemma, VerbStats())
        stats.max_fwd = max(stats.max_fwd, fwd)
        if not passive and v not in xcomp_targets:
            if "agent" in left_roles:
                stats.subj_role = "agent"

    def _update_primitive(self, tokens: list[str], lf: LogicalForm) -> None:
        tok = tokens[0] if tokens else lf.primitive_name
        if lf.primitive_name:
            self._add(tok.lower(), LexEntry(tok, "proper"))
            return
        roles = {t.role for t in lf.terms if t.kind == "role"}
        lemmas = {t.lemma for t in lf.terms}
        lemma = sorted(lemmas)[0] if lemmas else tok.lower()
        if not roles:
            self._add(tok.lower(), LexEntry(lemma, "noun"))
        else:
            fwd = len(roles - {"agent"})
            entry = self.entries.get(tok.lower())
            if entry is None or entry.pos_class != "verb":
                self.entries[tok.lower()] = LexEntry(lemma, "verb")
            stats = self.verb_stats.setdefault(lemma, VerbStats())
            stats.max_fwd = max(stats.max_fwd, fwd)
            if "agent" in roles:
                stats.subj_role = "agent"

    def _add(self, key: str, entry: LexEntry) -> None:
        self.entries.setdefault(key.lower(), entry)

    # -- lookups --------------------------------------------------------

    def lemma(self, token: str) -> str:
        e = self.entries.get(token.lower())
        return e.lemma if e else token.lower()

    def _stats(self, token: str) -> VerbStats | None:
        return self.verb_stats.get(self.lemma(token))

    def subj_role(self, token: str) -> str:
        s = self._stats(token)
        return s.subj_role if s else "agent"

    def max_fwd(self, token: str) -> int:
        s = self._stats(token)
        return s.max_fwd if s else 0

    def rc_that_nouns(self) -> frozenset[str]:
        return frozenset(
            k for k, e in self.entries.items() if e.pos_class in ("noun", "proper")
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "version": 1,
                "entries": {
                    k: {"lemma": e.lemma, "pos_class": e.pos_class}
                    for k, e in sorted(self.entries.items())
                },
                "verb_stats": {
                    k: {"subj_role": s.subj_role, "max_fwd": s.max_fwd}
                    for k, s in sorted(self.verb_stats.items())
                },
            },
            indent=2,
            sort_keys=True,
        )

    @staticmethod
    def from_json(text: str) -> "Lexicon":
        obj = json.loads(text)
        lex = Lexicon()
        for k, e in obj["entries"].items():
            lex.entries[k] = LexEntry(e["lemma"], e["pos_class"])
        for k, s in obj["verb_stats"].items():
            lex.verb_stats[k] = VerbStats(s["subj_role"], s["max_fwd"])
        return lex


# ---------------------------------------------------------------------------
# Extraction


def _contains_sgap(struct: Struct) -> bool:
    if isinstance(struct, Atom):
        return struct.name == "S_GAP"
    return _contains_sgap(struct.res) or _contains_sgap(struct.arg)


@dataclass(frozen=True)
class _Info:
    kind: str  # np | vp | clause | pp | nom_mod | vp_mod | strand | inf | wh | rc | frag
    sem: int  # original position of the semantic head
    cspan: tuple[int, int] = (0, 0)  # content-index span
    verb_pos: int = -1
    roles_left: tuple[str, ...] = ()
    pendings: tuple[tuple[int, str], ...] = ()
    gap: tuple[int, str] | None = None
    inner: int = -1
    prep_pos: int = -1
    inf: bool = False
    rc_gap: tuple[int, str] | None = None
    rc_pendings: tuple[tuple[int, str], ...] = ()


class _Extractor:
    def __init__(
        self,
        content: list[tuple[int, str]],
        table: TypeTable,
        lexicon: Lexicon,
    ):
        self.content = content
        self.table = table
        self.lex = lexicon
        self.edges: set[tuple[int, str, int]] = set()
        # verb registry: original position -> mutable consumption state
        self.verbs: dict[int, dict] = {}

    def run(self, derivation: Node) -> EdgeSet:
        self.walk(derivation)
        lemmas = {pos: self.lex.lemma(tok) for pos, tok in self.content}
        return EdgeSet(edges=frozenset(self.edges), lemmas=lemmas)

    # -- tree walk -------------------------------------------------------

    def walk(self, node: Node) -> _Info:
        if node.is_leaf:
            return self.leaf(node)
        l = self.walk(node.children[0])
        r = self.walk(node.children[1])
        handler = {
            "FWD_APP": self.fwd_app,
            "BWD_APP": self.bwd_app,
            "WH_MERGE": self.wh_merge,
            "RC_MERGE": self.rc_merge,
        }.get(node.rule)
        if handler is None:
            raise ExtractionError(f"unknown rule {node.rule}")
        info = handler(node, l, r)
        return replace(info, cspan=node.span)

    def leaf(self, node: Node) -> _Info:
        cidx = node.span[0]
        pos, tok = self.content[cidx]
        assert node.type_id is not None
        row = self.table[node.type_id]
        span = node.span
        if row.is_verb:
            self.verbs[pos] = {"token": tok, "row": row, "consumed": 0, "cidx": cidx}
            gap = (pos, row.gap_role or "theme") if _contains_sgap(row.struct) else None
            return _Info(
                kind="vp", sem=pos, cspan=span, verb_pos=pos,
                roles_left=row.arg_roles, gap=gap,
            )
        if row.ptype == "mod":
            return _Info(kind="prep_mod", sem=pos, cspan=span, prep_pos=pos)
        if row.ptype == "to":
            return _Info(kind="prep_to", sem=pos, cspan=span, prep_pos=pos)
        if row.ptype == "by":
            return _Info(kind="prep_by", sem=pos, cspan=span, prep_pos=pos)
        if row.props.get("marker") == "inf":
            return _Info(kind="inf", sem=pos, cspan=span)
        if row.props.get("strand") == "1":
            return _Info(kind="strand", sem=pos, cspan=span, prep_pos=pos)
        if row.name == "WH":
            return _Info(kind="wh", sem=pos, cspan=span)
        if row.name == "RC_THAT":
            return _Info(kind="rc", sem=pos, cspan=span)
        if row.is_nominal:
            return _Info(kind="np", sem=pos, cspan=span)
        return _Info(kind="frag", sem=pos, cspan=span)

    # -- rules -------------------------------------------------------------

    def fwd_app(self, node: Node, l: _Info, r: _Info) -> _Info:
        if l.kind == "prep_mod":
            return _Info(kind="nom_mod", sem=l.sem, prep_pos=l.prep_pos, inner=r.sem)
        if l.kind == "prep_to":
            return _Info(kind="pp", sem=r.sem)
        if l.kind == "prep_by":
            return _Info(kind="vp_mod", sem=l.sem, inner=r.sem)
        if l.kind == "inf":
            return _Info(
                kind="clause", sem=r.sem, verb_pos=r.verb_pos,
                pendings=r.pendings, inf=True, gap=r.gap,
            )
        if l.kind == "vp":
            if not l.roles_left:
                raise RoleExhausted(
                    f"verb at {l.verb_pos} has no forward role left"
                )
            role = l.roles_left[0]
            self.verbs[l.verb_pos]["consumed"] += 1
            pend = l.pendings + r.pendings
            if role == "comp":
                label = "xcomp" if r.inf else "ccomp"
                self.edges.add((l.verb_pos, label, r.sem))
                if label == "xcomp":
                    subj = self.lex.subj_role(self._verb_token(r.sem))
                    pend = pend + ((r.sem, subj),)
            else:
                self.edges.add((l.verb_pos, role, r.sem))
            return _Info(
                kind="vp", sem=l.sem, verb_pos=l.verb_pos,
                roles_left=l.roles_left[1:], pendings=pend,
                gap=l.gap or r.gap,
            )
        raise ExtractionError(f"forward application from {l.kind}")

    def bwd_app(self, node: Node, l: _Info, r: _Info) -> _Info:
        if r.kind == "nom_mod":
            if r.rc_gap is not None:
                self.edges.add((r.rc_gap[0], r.rc_gap[1], l.sem))
                for (vp, vr) in r.rc_pendings:
                    self.edges.add((vp, vr, l.sem))
            else:
                prep = self.lex.lemma(self._content_token(r.prep_pos))
                self.edges.add((l.sem, f"nmod.{prep}", r.inner))
            return _Info(kind="np", sem=l.sem)
        if r.kind == "vp_mod":
            self.edges.add((l.verb_pos, "agent", r.inner))
            return l
        if r.kind == "strand":
            prep_tok = self._content_token(r.prep_pos).lower()
            role = STRAND_ROLES.get(prep_tok)
            if role is None:
                raise ExtractionError(f"stranded {prep_tok!r} has no gap role")
            host = self._gap_host(l.cspan)
            if host is None:
                raise ExtractionError("stranded preposition with no gap host")
            return _Info(
                kind="clause", sem=l.sem, verb_pos=l.verb_pos,
                pendings=l.pendings, gap=(host, role),
            )
        if r.kind == "vp":
            role = self._subj_role(r.verb_pos)
            self.edges.add((r.verb_pos, role, l.sem))
            for (vp, vr) in r.pendings:
                self.edges.add((vp, vr, l.sem))
            return _Info(
                kind="clause", sem=r.sem, verb_pos=r.verb_pos,
                inf=r.inf, gap=r.gap,
            )
        raise ExtractionError(f"backward application onto {r.kind}")

    def wh_merge(self, node: Node, l: _Info, r: _Info) -> _Info:
        w = l.sem
        if r.kind == "vp":
            role = self._subj_role(r.verb_pos)
            self.edges.add((r.verb_pos, role, w))
            for (vp, vr) in r.pendings:
                self.edges.add((vp, vr, w))
        elif r.gap is not None:
            self.edges.add((r.gap[0], r.gap[1], w))
        else:
            host = self._gap_host(r.cspan)
            if host is None:
                raise ExtractionError("wh question with no gap host")
            role = self.verbs[host]["row"].gap_role or "theme"
            self.edges.add((host, role, w))
        return _Info(kind="clause", sem=w)

    def rc_merge(self, node: Node, l: _Info, r: _Info) -> _Info:
        if r.kind == "vp":
            role = self._subj_role(r.verb_pos)
            return _Info(
                kind="nom_mod", sem=l.sem,
                rc_gap=(r.verb_pos, role), rc_pendings=r.pendings,
            )
        if r.gap is not None:
            return _Info(
                kind="nom_mod", sem=l.sem, rc_gap=r.gap, rc_pendings=r.pendings
            )
        raise ExtractionError("relative clause without a gap")

    # -- helpers -------------------------------------------------------------

    def _content_token(self, pos: int) -> str:
        for p, tok in self.content:
            if p == pos:
                return tok
        raise ExtractionError(f"position {pos} is not a content token")

    def _verb_token(self, pos: int) -> str:
        rec = self.verbs.get(pos)
        if rec is None:
            raise ExtractionError(f"no verb at position {pos}")
        return rec["token"]

    def _subj_role(self, verb_pos: int) -> str:
        rec = self.verbs.get(verb_pos)
        if rec is None:
            raise ExtractionError(f"no verb at position {verb_pos}")
        declared = rec["row"].subj_role
        if declared == "lex" or declared is None:
            return self.lex.subj_role(rec["token"])
        return declared

    def _gap_host(self, cspan: tuple[int, int]) -> int | None:
        """Rightmost verb in the span whose consumption falls short of its
        lexical frame."""
        best: tuple[int, int] | None = None
        for pos, rec in self.verbs.items():
            if not cspan[0] <= rec["cidx"] < cspan[1]:
                continue
            if rec["consumed"] < self.lex.max_fwd(rec["token"]):
                if best is None or rec["cidx"] > best[0]:
                    best = (rec["cidx"], pos)
        return best[1] if best else None


def extract_edges(
    derivation: Node,
    content: list[tuple[int, str]],
    table: TypeTable,
    lexicon: Lexicon | None = None,
) -> EdgeSet:
    """Edges entailed by a derivation over the given content tokens.

    With no lexicon, type-level defaults apply everywhere (used by the
    parser's ambiguity probe and by tests)."""
    return _Extractor(content, table, lexicon or Lexicon()).run(derivation)
