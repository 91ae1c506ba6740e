"""Failure analysis over gold structures: sub-pattern decomposition,
mechanism classification, and type n-gram training coverage.

Everything here is a pure function of gold data (logical forms, gold
type sequences, gold derivations) plus a read-only index built over the
training set.  Model output enters only through the accuracy column of
a decomposition table, so retraining the model never changes a label.

Two failure mechanisms are distinguished:

  A  forward-argument extraction: a verb occurs with a type outside
     the set that verb receives anywhere in training, with wh material
     to its left (the question context forces a reduced argument frame).
  B  subject-side modifier: a modified NP is consumed by backward
     application and no such directed merge occurs in training.

An example matching neither is `covered`; one matching both carries
both labels (no overlap is expected on the shipped corpora, and the
tests assert none occurs).
"""
from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable

from .ccg.chart import Node, merge_signature
from .ccg.derive import Trajectory
from .ccg.types import Atom, Fun, TypeTable
from .lf import LogicalForm

MECH_A = "A_forward_arg_extraction"
MECH_B = "B_subject_side_modifier"
COVERED = "covered"

_GAP_ROLES = ("agent", "theme", "recipient")


# ---------------------------------------------------------------------------
# Training coverage index


@dataclass(frozen=True)
class TrainCoverage:
    """Read-only index over gold training structures."""

    ngrams: dict[int, frozenset[tuple[str, ...]]]  # n -> set of name n-grams
    merges: frozenset[tuple[str, str, str]]  # (left cat, right cat, rule)
    word_types: dict[str, frozenset[str]]  # lowercased token -> type names


def initial_names(traj: Trajectory, table: TypeTable) -> tuple[str, ...]:
    return tuple(table[t].name for t in traj.initial_ids)


def _ngrams(names: tuple[str, ...], n: int) -> list[tuple[str, ...]]:
    return [names[i:i + n] for i in range(len(names) - n + 1)]


def build_coverage(
    trajectories: Iterable[Trajectory], table: TypeTable, ns: tuple[int, ...] = (2, 3)
) -> TrainCoverage:
    grams: dict[int, set] = {n: set() for n in ns}
    merges: set[tuple[str, str, str]] = set()
    word_types: dict[str, set[str]] = defaultdict(set)
    for traj in trajectories:
        names = initial_names(traj, table)
        for n in ns:
            grams[n].update(_ngrams(names, n))
        if traj.derivation is not None:
            merges.update(merge_signature(traj.derivation))
        for tok, name in zip(traj.content_tokens, names):
            word_types[tok.lower()].add(name)
    return TrainCoverage(
        ngrams={n: frozenset(g) for n, g in grams.items()},
        merges=frozenset(merges),
        word_types={w: frozenset(s) for w, s in word_types.items()},
    )


def ngram_coverage(
    train: TrainCoverage | Iterable[Trajectory],
    test: Trajectory,
    n: int,
    table: TypeTable | None = None,
) -> list[tuple[str, ...]]:
    """The test example's type n-grams absent from training, in first-
    occurrence order without repeats.  `table` is required to build the
    index when `train` is an iterable of trajectories."""
    if not isinstance(train, TrainCoverage):
        if table is None:
            raise ValueError("table required when building coverage inline")
        train = build_coverage(train, table, ns=(n,))
    if table is None:
        raise ValueError("table required to name the test types")
    names = initial_names(test, table)
    seen = train.ngrams.get(n, frozenset())
    out: list[tuple[str, ...]] = []
    for g in _ngrams(names, n):
        if g not in seen and g not in out:
            out.append(g)
    return out


def novel_merges(
    coverage: TrainCoverage, traj: Trajectory
) -> list[tuple[str, str, str]]:
    """Directed merges in the gold derivation absent from training."""
    if traj.derivation is None:
        return []
    out: list[tuple[str, str, str]] = []
    for trip in merge_signature(traj.derivation):
        if trip not in coverage.merges and trip not in out:
            out.append(trip)
    return out


# ---------------------------------------------------------------------------
# Mechanism classification


def classify_mechanism(
    traj: Trajectory, coverage: TrainCoverage, table: TypeTable
) -> frozenset[str]:
    """{A}, {B}, {A, B}, or {covered}; gold structures only."""
    labels: set[str] = set()

    names = initial_names(traj, table)
    wh_left = False
    for tok, tid, name in zip(traj.content_tokens, traj.initial_ids, names):
        if name == "WH":
            wh_left = True
            continue
        if not table[tid].is_verb:
            continue
        seen = coverage.word_types.get(tok.lower(), frozenset())
        if wh_left and name not in seen:
            labels.add(MECH_A)
            break

    if traj.derivation is not None:
        for trip in merge_signature(traj.derivation):
            left, _, rule = trip
            if rule == "BWD_APP" and left == "NP+mod" and trip not in coverage.merges:
                labels.add(MECH_B)
                break

    return frozenset(labels) if labels else frozenset({COVERED})


# ---------------------------------------------------------------------------
# Sub-pattern decomposition


@dataclass(frozen=True)
class SubPatternLabel:
    gap_role: str  # agent | theme | recipient | none
    gap_voice: str  # active | passive | none
    has_rc: bool
    rc_attachment: str  # main_subject | embedded | object_side | none

    def key(self) -> str:
        rc = self.rc_attachment if self.has_rc else "none"
        return f"role={self.gap_role}|voice={self.gap_voice}|rc={rc}"


def _functor_takes_clause(node: Node) -> bool:
    s = node.cat.struct
    return isinstance(s, Fun) and s.arg == Atom("S")


def _is_rc_modified_np(node: Node) -> bool:
    """BWD_APP merging an NP with a relative clause built by RC_MERGE."""
    return (
        not node.is_leaf
        and node.rule == "BWD_APP"
        and node.children[1].rule == "RC_MERGE"
    )


def _rc_attachment(derivation: Node) -> str:
    """Where the RC-modified NP is consumed: main_subject, embedded, or
    object_side.  Precedence when several RCs occur: main_subject, then
    embedded, then object_side (the failure-relevant site wins)."""
    found: set[str] = set()

    def consume(node: Node, embedded: bool) -> None:
        if node.is_leaf:
            return
        l, r = node.children
        if _is_rc_modified_np(r) and node.rule == "FWD_APP":
            found.add("object_side")
        if _is_rc_modified_np(l) and node.rule == "BWD_APP":
            found.add("embedded" if embedded else "main_subject")
        child_embedded = embedded or node.rule == "RC_MERGE" or (
            node.rule == "FWD_APP" and _functor_takes_clause(l)
        )
        consume(l, child_embedded)
        consume(r, child_embedded)

    consume(derivation, False)
    for label in ("main_subject", "embedded", "object_side"):
        if label in found:
            return label
    return "none"


def classify_subpattern(
    lf: LogicalForm, traj: Trajectory, table: TypeTable
) -> SubPatternLabel:
    """Gold-structure features: wh-gap role and voice, RC presence and
    attachment site."""
    gap_role, gap_voice = "none", "none"
    wh_vars = [t.var for t in lf.terms if t.kind == "unary" and t.lemma == "wh"]
    if wh_vars:
        w = wh_vars[0]
        for t in lf.terms:
            if t.kind == "role" and t.arg == w and t.role in _GAP_ROLES:
                gap_role = t.role
                if t.var in traj.content_positions:
                    ci = traj.content_positions.index(t.var)
                    name = table[traj.initial_ids[ci]].name
                    gap_voice = "passive" if name.startswith("PASS") else "active"
                break

    names = initial_names(traj, table)
    has_rc = "RC_THAT" in names
    attachment = "none"
    if has_rc and traj.derivation is not None:
        attachment = _rc_attachment(traj.derivation)
    return SubPatternLabel(
        gap_role=gap_role,
        gap_voice=gap_voice,
        has_rc=has_rc,
        rc_attachment=attachment,
    )


# ---------------------------------------------------------------------------
# Decomposition tables


@dataclass(frozen=True)
class DecompositionRow:
    key: str
    n: int
    accuracy: float


@dataclass(frozen=True)
class Decomposition:
    category: str
    metric: str
    rows: tuple[DecompositionRow, ...]  # sorted by key
    subtotal_pass: int  # examples in rows at exactly 1.0
    subtotal_fail: int  # examples in rows at exactly 0.0
    total_n: int
    total_accuracy: float

    @property
    def is_dichotomous(self) -> bool:
        return all(r.accuracy in (0.0, 1.0) for r in self.rows)


def decompose_category(
    records: list,
    labels: dict[int, SubPatternLabel],
    metric: str = "trajectory",
) -> Decomposition:
    """Per-sub-pattern accuracy for one category of evaluation records."""
    if not records:
        raise ValueError("no records to decompose")
    cats = {r.category for r in records}
    if len(cats) != 1:
        raise ValueError(f"records span several categories: {sorted(cats)}")

    hits: dict[str, int] = defaultdict(int)
    counts: dict[str, int] = defaultdict(int)
    total_hits = 0
    for r in records:
        key = labels[r.example_id].key()
        counts[key] += 1
        ok = int(r.value(metric))
        hits[key] += ok
        total_hits += ok

    rows = tuple(
        DecompositionRow(key, counts[key], hits[key] / counts[key])
        for key in sorted(counts)
    )
    return Decomposition(
        category=cats.pop(),
        metric=metric,
        rows=rows,
        subtotal_pass=sum(r.n for r in rows if r.accuracy == 1.0),
        subtotal_fail=sum(r.n for r in rows if r.accuracy == 0.0),
        total_n=len(records),
        total_accuracy=total_hits / len(records),
    )


def render_decomposition_text(d: Decomposition) -> str:
    width = max([len("sub-pattern")] + [len(r.key) for r in d.rows])
    head = f"{d.category}  ({d.metric}, n={d.total_n})"
    lines = [head, "-" * len(head)]
    for r in d.rows:
        lines.append(f"{r.key:<{width}}  {r.n:>6}  {100 * r.accuracy:5.1f}")
    lines.append("-" * len(head))
    lines.append(f"{'pass subtotal':<{width}}  {d.subtotal_pass:>6}")
    lines.append(f"{'fail subtotal':<{width}}  {d.subtotal_fail:>6}")
    lines.append(f"{'total':<{width}}  {d.total_n:>6}  {100 * d.total_accuracy:5.1f}")
    return "\n".join(lines) + "\n"


def render_decomposition_json(d: Decomposition) -> str:
    doc = {
        "category": d.category,
        "metric": d.metric,
        "rows": [
            {"key": r.key, "n": r.n, "accuracy": round(r.accuracy, 6)}
            for r in d.rows
        ],
        "subtotal_pass": d.subtotal_pass,
        "subtotal_fail": d.subtotal_fail,
        "total_n": d.total_n,
        "total_accuracy": round(d.total_accuracy, 6),
        "is_dichotomous": d.is_dichotomous,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
