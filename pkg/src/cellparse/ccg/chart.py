"""CKY parsing over type sequences.

Chart categories are (structure, modified) pairs, so the engine is driven
entirely by the loaded type table.  Combinators:

  FWD_APP   X/Y + Y  -> X      (argument on the right)
  BWD_APP   Y + X\\Y -> X      (argument on the left)
  WH_MERGE  WH + {S\\NP, S, S_GAP} -> S
  RC_MERGE  RC_THAT + {S\\NP, S_GAP} -> NP\\NP

plus one percolation case, tagged FWD_APP: a clause-taking functor
(S\\NP)/S applied to a gapped clause S_GAP yields S_GAP\\NP.

Three structural conventions carry the attachment discipline:
  - NP-family argument slots accept both plain and modified nominals,
    except the slot of a nominal modifier (structure NP\\NP), which takes
    a plain NP only.  Its result is a modified nominal.  This forces
    right-nested attachment of stacked modifiers and keeps the chart
    deterministic on them.
  - Self-modifier functors (X\\X) and the stranded-preposition functor
    (S_GAP\\S) leave headship with their argument.
  - A wh-merged clause is closed: it fills no argument slot and feeds no
    further merge, so stranded prepositions and modifiers must attach
    before the wh word does.

A parse is accepted when every complete derivation of the span agrees on
the root category and on the probe-edge set (head pairings at each merge).
Disagreement raises AmbiguousParse; an empty chart raises NoParse.
"""
from __future__ import annotations

from dataclasses import dataclass

from .types import Atom, Fun, Struct, TypeTable

_S = Atom("S")
_NP = Atom("NP")
_S_GAP = Atom("S_GAP")
_WH = Atom("WH")
_RC = Atom("RC_THAT")
_VP = Fun(_S, "\\", _NP)  # S\NP
_NOM_MOD = Fun(_NP, "\\", _NP)  # NP\NP
_STRAND = Fun(_S_GAP, "\\", _S)  # S_GAP\S


class NoParse(ValueError):
    """No complete derivation covers the token span."""


class AmbiguousParse(ValueError):
    """Multiple complete derivations disagree on root or probe edges."""


@dataclass(frozen=True)
class Cat:
    struct: Struct
    modified: bool = False
    closed: bool = False  # wh-merged root; combines with nothing

    def __str__(self) -> str:
        return f"{self.struct}" + ("+mod" if self.modified else "") + (
            "+q" if self.closed else ""
        )


@dataclass(frozen=True)
class Node:
    """One derivation node.  Leaves carry their input type id."""

    span: tuple[int, int]  # [i, j) over the content positions
    cat: Cat
    rule: str  # LEX | FWD_APP | BWD_APP | WH_MERGE | RC_MERGE
    head: int  # content index of the syntactic head leaf
    children: tuple["Node", ...] = ()
    type_id: int | None = None  # leaves only

    @property
    def is_leaf(self) -> bool:
        return self.rule == "LEX"


Derivation = Node


def _is_self_modifier(struct: Struct) -> bool:
    return isinstance(struct, Fun) and struct.slash == "\\" and struct.res == struct.arg


def _arg_matches(functor_struct: Struct, arg_struct: Struct, item: Cat) -> bool:
    if item.closed:
        return False  # a completed question fills no argument slot
    if arg_struct == _NP:
        if functor_struct == _NOM_MOD and item.modified:
            return False  # nominal modifiers do not restack
        return item.struct == _NP
    return item.struct == arg_struct and not item.modified


def _gap_result(res: Struct) -> Struct:
    """Substitute the outermost result atom S with S_GAP."""
    if res == _S:
        return _S_GAP
    if isinstance(res, Fun):
        return Fun(_gap_result(res.res), res.slash, res.arg)
    return res


def combine(left: Cat, right: Cat) -> list[tuple[str, Cat, str]]:
    """All ways to merge two adjacent categories.

    Returns (rule, result category, head_side) with head_side in {l, r}.
    """
    out: list[tuple[str, Cat, str]] = []

    # forward application, left functor
    ls = left.struct
    if isinstance(ls, Fun) and ls.slash == "/" and not left.modified:
        if _arg_matches(ls, ls.arg, right):
            out.append(("FWD_APP", Cat(ls.res), "l"))
        elif (
            ls.arg == _S
            and right.struct == _S_GAP
            and not right.modified
            and not right.closed
        ):
            # gap percolation through a clause-taking functor
            out.append(("FWD_APP", Cat(_gap_result(ls.res)), "l"))

    # backward application, right functor
    rs = right.struct
    if isinstance(rs, Fun) and rs.slash == "\\" and not right.modified:
        if _arg_matches(rs, rs.arg, left):
            if rs == _NOM_MOD:
                out.append(("BWD_APP", Cat(_NP, modified=True), "l"))
            elif _is_self_modifier(rs) or rs == _STRAND:
                out.append(("BWD_APP", Cat(rs.res), "l"))
            else:
                out.append(("BWD_APP", Cat(rs.res), "r"))

    if (
        left.struct == _WH
        and not right.modified
        and not right.closed
        and right.struct in (_VP, _S, _S_GAP)
    ):
        out.append(("WH_MERGE", Cat(_S, closed=True), "l"))

    if (
        left.struct == _RC
        and not right.modified
        and not right.closed
        and right.struct in (_VP, _S_GAP)
    ):
        out.append(("RC_MERGE", Cat(_NOM_MOD), "l"))

    return out


def _probe_edges(node: Node) -> frozenset[tuple[int, int, str]]:
    """Head pairings at each merge; the structural fingerprint used for
    the ambiguity check (extraction consumes exactly these pairings)."""
    acc: set[tuple[int, int, str]] = set()

    def walk(n: Node) -> None:
        if n.is_leaf:
            return
        l, r = n.children
        acc.add((l.head, r.head, n.rule))
        walk(l)
        walk(r)

    walk(node)
    return frozenset(acc)


def cky_parse(types: list[int], table: TypeTable, cap: int = 16) -> Derivation:
    """Parse a type-id sequence into the unique accepted derivation.

    Raises NoParse when the chart has no complete item and AmbiguousParse
    when complete derivations disagree (root category or probe edges),
    or when more than `cap` complete derivations exist.
    """
    n = len(types)
    if n == 0:
        raise NoParse("empty type sequence")
    for t in types:
        if not 0 <= t < len(table):
            raise NoParse(f"type id {t} outside table")
        if table[t].name == "EMPTY":
            raise NoParse("EMPTY symbol in input sequence")

    # chart[(i, j)][cat] -> list of backpointers; a backpointer is either
    # ('LEX', type_id) or (rule, k, left_cat, right_cat)
    chart: dict[tuple[int, int], dict[Cat, list[tuple]]] = {}
    for i, t in enumerate(types):
        row = table[t]
        cat = Cat(row.struct, row.is_modified)
        chart[(i, i + 1)] = {cat: [("LEX", t)]}

    for width in range(2, n + 1):
        for i in range(0, n - width + 1):
            j = i + width
            cell: dict[Cat, list[tuple]] = {}
            for k in range(i + 1, j):
                for lcat in chart.get((i, k), {}):
                    for rcat in chart.get((k, j), {}):
                        for rule, res, head_side in combine(lcat, rcat):
                            cell.setdefault(res, []).append(
                                (rule, k, lcat, rcat, head_side)
                            )
            if cell:
                chart[(i, j)] = cell

    roots = chart.get((0, n), {})
    if not roots:
        raise NoParse(f"no complete derivation over {n} types")

    derivs: list[Node] = []
    for cat in roots:
        derivs.extend(_enumerate(chart, 0, n, cat, cap + 1))
        if len(derivs) > cap:
            raise AmbiguousParse(f"more than {cap} complete derivations")

    if len(derivs) > 1:
        probes = {(_probe_edges(d), d.cat) for d in derivs}
        if len(probes) > 1:
            raise AmbiguousParse(
                f"{len(derivs)} derivations with {len(probes)} distinct "
                "root/probe signatures"
            )
    return derivs[0]


def _enumerate(
    chart: dict[tuple[int, int], dict[Cat, list[tuple]]],
    i: int,
    j: int,
    cat: Cat,
    limit: int,
) -> list[Node]:
    out: list[Node] = []
    for bp in chart[(i, j)][cat]:
        if bp[0] == "LEX":
            out.append(Node((i, j), cat, "LEX", head=i, type_id=bp[1]))
        else:
            rule, k, lcat, rcat, head_side = bp
            for lnode in _enumerate(chart, i, k, lcat, limit):
                for rnode in _enumerate(chart, k, j, rcat, limit):
                    head = lnode.head if head_side == "l" else rnode.head
                    out.append(
                        Node((i, j), cat, rule, head=head, children=(lnode, rnode))
                    )
                    if len(out) >= limit:
                        return out
        if len(out) >= limit:
            return out
    return out


def root_type_id(derivation: Derivation, table: TypeTable) -> int:
    """Table id for the derivation root (the final-state supervision symbol)."""
    if derivation.is_leaf:
        assert derivation.type_id is not None
        return derivation.type_id
    return table.resolve_struct(derivation.cat.struct, derivation.cat.modified).id


def merge_signature(derivation: Derivation) -> list[tuple[str, str, str]]:
    """(left category, right category, rule) for every merge, in tree order.

    The train-side index of these directed merges is what coverage and
    mechanism classification consume.
    """
    acc: list[tuple[str, str, str]] = []

    def walk(n: Node) -> None:
        if n.is_leaf:
            return
        l, r = n.children
        walk(l)
        walk(r)
        acc.append((str(l.cat), str(r.cat), n.rule))

    walk(derivation)
    return acc
