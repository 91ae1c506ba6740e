"""Exact-match metrics and per-category score tables.

Two levels of correctness are scored for every example:

  type level   predicted initial types equal gold at every content
               position (the information-bearing metric: the chart
               parse from initial types is deterministic, so initial
               correctness entails structural correctness whenever the
               types parse at all).
  edge level   chart-parse the predicted types, extract edges, compare
               with the edge projection of the gold logical form.

A companion final-state flag compares the rolled-out readout against
the gold final pattern; it is diagnostic and also feeds the headline
"trajectory" metric (initial and final both exact).

Edge comparison operates on edge sets over original token positions;
formatting freedom in the logical form was already removed by the LF
parser, so no further normalization is needed here.

Reports are byte-stable: identical records render identical text.
"""
from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .ccg.chart import AmbiguousParse, NoParse, cky_parse
from .ccg.derive import FunctionWordRules, strip_function_words
from .ccg.edges import ExtractionError, Lexicon, extract_edges
from .ccg.types import TypeTable
from .dataio import Example, FileStore, TableStore, get_embeddings
from .lf import lf_to_edges, parse_lf
from .nca import predict

METRICS = ("trajectory", "initial", "final", "edge")


@dataclass(frozen=True)
class EvalRecord:
    example_id: int
    category: str
    predicted_initial: tuple[int, ...]
    predicted_final: tuple[int, ...]
    type_match: bool
    final_match: bool
    edge_match: bool
    cky_ok: bool
    failure_note: str = ""

    @property
    def trajectory_match(self) -> bool:
        return self.type_match and self.final_match

    def value(self, metric: str) -> bool:
        if metric == "trajectory":
            return self.trajectory_match
        if metric == "initial":
            return self.type_match
        if metric == "final":
            return self.final_match
        if metric == "edge":
            return self.edge_match
        raise ValueError(f"unknown metric {metric!r}")


def type_exact_match(predicted: tuple[int, ...], gold: tuple[int, ...]) -> bool:
    """True iff equal length and equal at every position."""
    return len(predicted) == len(gold) and tuple(predicted) == tuple(gold)


def _edge_check(
    predicted: tuple[int, ...],
    lf_text: str,
    tokens: list[str],
    table: TypeTable,
    rules: FunctionWordRules | None = None,
    lexicon: Lexicon | None = None,
) -> tuple[bool, bool, str]:
    """(edge_match, cky_ok, failure_note) for a predicted type sequence."""
    lf = parse_lf(lf_text)
    content_tokens, positions = strip_function_words(tokens, rules)
    if len(predicted) != len(content_tokens):
        return False, False, "length-mismatch"
    content = list(zip(positions, content_tokens))
    try:
        derivation = cky_parse(list(predicted), table)
    except NoParse:
        return False, False, "no-parse"
    except AmbiguousParse:
        return False, False, "ambiguous-parse"
    try:
        got = extract_edges(derivation, content, table, lexicon)
    except ExtractionError as e:
        return False, True, f"extraction: {e}"
    gold = lf_to_edges(lf, tokens)
    if got.same_edges(gold):
        return True, True, ""
    return False, True, "edge-mismatch"


def edge_exact_match(
    predicted: tuple[int, ...],
    lf_text: str,
    tokens: list[str],
    table: TypeTable,
    rules: FunctionWordRules | None = None,
    lexicon: Lexicon | None = None,
) -> bool:
    """Parse predicted types, extract edges, compare with the LF edges."""
    return _edge_check(predicted, lf_text, tokens, table, rules, lexicon)[0]


def _predicted_by_example(
    params: dict[str, np.ndarray],
    examples: list[Example],
    records: dict[int, dict],
    store: TableStore | FileStore,
    t_steps: int,
) -> dict[int, tuple[tuple[int, ...], tuple[int, ...]]]:
    """Batched inference grouped by content length; id -> (pred0, predT)."""
    buckets: dict[int, list[Example]] = defaultdict(list)
    for ex in examples:
        rec = records.get(ex.id)
        if rec is None:
            raise KeyError(f"no trajectory record for example {ex.id}")
        buckets[len(rec["content_positions"])].append(ex)

    out: dict[int, tuple[tuple[int, ...], tuple[int, ...]]] = {}
    for length in sorted(buckets):
        batch = buckets[length]
        emb = np.stack([
            get_embeddings(ex, list(records[ex.id]["content_positions"]), store)
            for ex in batch
        ])  # [B, L, E]
        pred0, pred_t = predict(params, emb, t_steps)
        for row, ex in enumerate(batch):
            out[ex.id] = (tuple(pred0[row].tolist()), tuple(pred_t[row].tolist()))
    return out


def evaluate_model(
    params: dict[str, np.ndarray],
    examples: list[Example],
    records: dict[int, dict],
    store: TableStore | FileStore,
    table: TypeTable,
    t_steps: int,
    rules: FunctionWordRules | None = None,
    lexicon: Lexicon | None = None,
    oracle_types: bool = False,
) -> list[EvalRecord]:
    """Score every example; with oracle_types the gold initial types stand
    in for model predictions (measures type-to-edge fidelity alone)."""
    if oracle_types:
        predicted = {
            ex.id: (
                tuple(records[ex.id]["initial_ids"]),
                tuple(records[ex.id]["final_ids"]),
            )
            for ex in examples
        }
    else:
        predicted = _predicted_by_example(params, examples, records, store, t_steps)

    out: list[EvalRecord] = []
    for ex in examples:
        rec = records[ex.id]
        pred0, pred_t = predicted[ex.id]
        tm = type_exact_match(pred0, tuple(rec["initial_ids"]))
        fm = type_exact_match(pred_t, tuple(rec["final_ids"]))
        em, cky_ok, note = _edge_check(
            pred0, ex.lf_text, list(ex.tokens), table, rules, lexicon
        )
        if not tm and not note:
            note = "type-mismatch"
        out.append(EvalRecord(
            example_id=ex.id,
            category=ex.category,
            predicted_initial=pred0,
            predicted_final=pred_t,
            type_match=tm,
            final_match=fm,
            edge_match=em,
            cky_ok=cky_ok,
            failure_note=note,
        ))
    return out


# ---------------------------------------------------------------------------
# Category tables


@dataclass(frozen=True)
class CategoryRow:
    category: str
    n: int  # examples per seed; 0 when the category never occurs
    mean: float | None  # None for empty categories
    std: float | None


@dataclass(frozen=True)
class CategoryTable:
    metric: str
    n_seeds: int
    rows: tuple[CategoryRow, ...]
    overall: CategoryRow


def category_report(
    per_seed: list[list[EvalRecord]],
    metric: str = "trajectory",
    expected: tuple[str, ...] | None = None,
) -> CategoryTable:
    """Mean and std across seeds, per category plus a weighted overall row.

    Every seed must cover the same categories with the same counts; an
    `expected` list adds empty rows for categories with no records, so
    missing data is reported rather than dropped.
    """
    if not per_seed:
        raise ValueError("need records from at least one seed")
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")

    counts0 = defaultdict(int)
    for r in per_seed[0]:
        counts0[r.category] += 1
    for s, recs in enumerate(per_seed[1:], start=1):
        counts = defaultdict(int)
        for r in recs:
            counts[r.category] += 1
        if counts != counts0:
            raise ValueError(f"seed {s} category counts differ from seed 0")

    accs: dict[str, list[float]] = defaultdict(list)
    overall: list[float] = []
    for recs in per_seed:
        hits = defaultdict(int)
        for r in recs:
            hits[r.category] += int(r.value(metric))
        for cat, n in counts0.items():
            accs[cat].append(hits[cat] / n)
        overall.append(sum(hits.values()) / len(recs))

    cats = sorted(counts0)
    if expected is not None:
        cats = sorted(set(cats) | set(expected))

    rows = []
    for cat in cats:
        if cat not in counts0:
            rows.append(CategoryRow(cat, 0, None, None))
            continue
        vals = np.array(accs[cat])
        rows.append(CategoryRow(cat, counts0[cat],
                                float(vals.mean()), float(vals.std())))
    ovals = np.array(overall)
    return CategoryTable(
        metric=metric,
        n_seeds=len(per_seed),
        rows=tuple(rows),
        overall=CategoryRow("overall", sum(counts0.values()),
                            float(ovals.mean()), float(ovals.std())),
    )


def render_text(tbl: CategoryTable) -> str:
    """Aligned text table; byte-stable for identical inputs."""
    width = max([len("category")] + [len(r.category) for r in tbl.rows] + [7])

    def line(row: CategoryRow) -> str:
        if row.mean is None:
            score = "-"
        else:
            score = f"{100 * row.mean:5.1f} +- {100 * (row.std or 0):4.1f}"
        return f"{row.category:<{width}}  {row.n:>6}  {score}"

    head = f"{'category':<{width}}  {'n':>6}  {tbl.metric} % ({tbl.n_seeds} seeds)"
    rule = "-" * len(head)
    body = [line(r) for r in tbl.rows]
    return "\n".join([head, rule] + body + [rule, line(tbl.overall)]) + "\n"


def render_json(tbl: CategoryTable) -> str:
    """Machine-readable report; byte-stable for identical inputs."""
    def row(r: CategoryRow) -> dict:
        return {
            "category": r.category,
            "n": r.n,
            "mean": None if r.mean is None else round(r.mean, 6),
            "std": None if r.std is None else round(r.std, 6),
        }

    doc = {
        "metric": tbl.metric,
        "n_seeds": tbl.n_seeds,
        "rows": [row(r) for r in tbl.rows],
        "overall": row(tbl.overall),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
