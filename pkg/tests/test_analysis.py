"""Analysis oracles: hand-labeled sub-patterns, mechanism classification
on the synthetic corpus, n-gram coverage against enumerated sets."""
from __future__ import annotations

import json

import pytest

from cellparse.analysis import (
    COVERED,
    MECH_A,
    MECH_B,
    SubPatternLabel,
    build_coverage,
    classify_mechanism,
    classify_subpattern,
    decompose_category,
    initial_names,
    ngram_coverage,
    novel_merges,
    render_decomposition_json,
    render_decomposition_text,
)
from cellparse.ccg import build_trajectory
from cellparse.evaluate import EvalRecord
from cellparse.lf import parse_lf
from cellparse.synth import SynthConfig, gen_synthetic


def traj_of(sentence: str, lf: str, table, rules=None):
    return build_trajectory(parse_lf(lf), sentence.split(), table, rules)


# ---------------------------------------------------------------------------
# n-gram coverage


def test_training_example_has_no_novel_ngrams(table):
    tr = traj_of("Emma chased the cat .",
                 "* cat ( x _ 3 ) ; chase . agent ( x _ 1 , Emma ) AND "
                 "chase . theme ( x _ 1 , x _ 3 )", table)
    for n in (2, 3):
        assert ngram_coverage([tr], tr, n, table) == []


def test_novel_ngrams_enumerated_by_hand(table):
    train = [traj_of("Emma chased the cat .",
                     "* cat ( x _ 3 ) ; chase . agent ( x _ 1 , Emma ) AND "
                     "chase . theme ( x _ 1 , x _ 3 )", table)]
    test = traj_of("Who chased a cat ?",
                   "wh ( x _ 0 ) AND cat ( x _ 3 ) AND "
                   "chase . agent ( x _ 1 , x _ 0 ) AND "
                   "chase . theme ( x _ 1 , x _ 3 )", table)
    assert initial_names(test, table) == ("WH", "TV", "NP")
    assert ngram_coverage(train, test, 2, table) == [("WH", "TV")]
    assert ngram_coverage(train, test, 3, table) == [("WH", "TV", "NP")]


def test_long_distance_question_has_one_novel_trigram(table):
    train = [
        traj_of("Emma said that Liam slept .",
                "say . agent ( x _ 1 , Emma ) AND say . ccomp ( x _ 1 , x _ 4 ) "
                "AND sleep . agent ( x _ 4 , Liam )", table),
        traj_of("What did Emma see ?",
                "wh ( x _ 0 ) AND see . agent ( x _ 3 , Emma ) AND "
                "see . theme ( x _ 3 , x _ 0 )", table),
    ]
    test = traj_of("What did Emma say that Liam found ?",
                   "wh ( x _ 0 ) AND say . agent ( x _ 3 , Emma ) AND "
                   "say . ccomp ( x _ 3 , x _ 6 ) AND "
                   "find . agent ( x _ 6 , Liam ) AND "
                   "find . theme ( x _ 6 , x _ 0 )", table)
    assert ngram_coverage(train, test, 3, table) == [("WH", "NP", "CCOMP")]


def test_single_type_sequence_has_no_bigrams(table):
    tr = traj_of("Emma .", "Emma", table)
    assert ngram_coverage([tr], tr, 2, table) == []


def test_novel_ngrams_dedup_in_first_occurrence_order(table):
    train = [traj_of("Emma slept .",
                     "sleep . agent ( x _ 1 , Emma )", table)]
    test = traj_of(
        "Emma saw the cat on the mat in the box .",
        "* cat ( x _ 3 ) ; * mat ( x _ 6 ) ; * box ( x _ 9 ) ; "
        "see . agent ( x _ 1 , Emma ) AND see . theme ( x _ 1 , x _ 3 ) AND "
        "cat . nmod . on ( x _ 3 , x _ 6 ) AND mat . nmod . in ( x _ 6 , x _ 9 )",
        table)
    got = ngram_coverage(train, test, 2, table)
    assert got == [("NP", "TV"), ("TV", "NP"), ("NP", "P_MOD"), ("P_MOD", "NP")]
    assert len(got) == len(set(got))


# ---------------------------------------------------------------------------
# sub-pattern labels


def test_agent_gap_active_no_rc(table):
    lf = ("wh ( x _ 0 ) AND cake ( x _ 3 ) AND car ( x _ 6 ) AND "
          "chase . agent ( x _ 1 , x _ 0 ) AND "
          "chase . theme ( x _ 1 , x _ 3 ) AND "
          "cake . nmod . beside ( x _ 3 , x _ 6 )")
    tr = traj_of("Who chased a cake beside a car ?", lf, table)
    label = classify_subpattern(parse_lf(lf), tr, table)
    assert label == SubPatternLabel("agent", "active", False, "none")


def test_theme_gap_passive(table):
    lf = "wh ( x _ 0 ) AND eat . theme ( x _ 2 , x _ 0 )"
    tr = traj_of("What was eaten ?", lf, table)
    label = classify_subpattern(parse_lf(lf), tr, table)
    assert label.gap_role == "theme"
    assert label.gap_voice == "passive"
    assert not label.has_rc


def test_no_wh_means_no_gap(table):
    lf = "sleep . agent ( x _ 1 , Emma )"
    tr = traj_of("Emma slept .", lf, table)
    label = classify_subpattern(parse_lf(lf), tr, table)
    assert label.gap_role == "none" and label.gap_voice == "none"


def test_rc_on_main_subject(table, rules):
    lf = ("* cake ( x _ 1 ) ; eat . theme ( x _ 6 , x _ 1 ) AND "
          "eat . agent ( x _ 6 , Emma ) AND "
          "find . agent ( x _ 4 , Liam ) AND find . theme ( x _ 4 , x _ 1 )")
    tr = traj_of("The cake that Liam found was eaten by Emma .", lf, table, rules)
    label = classify_subpattern(parse_lf(lf), tr, table)
    assert label.has_rc
    assert label.rc_attachment == "main_subject"


def test_rc_inside_complement_clause(table, rules):
    lf = ("* cat ( x _ 4 ) ; say . agent ( x _ 1 , Emma ) AND "
          "say . ccomp ( x _ 1 , x _ 8 ) AND "
          "find . agent ( x _ 7 , Liam ) AND "
          "find . theme ( x _ 7 , x _ 4 ) AND sleep . agent ( x _ 8 , x _ 4 )")
    tr = traj_of("Emma said that the cat that Liam found slept .", lf, table, rules)
    label = classify_subpattern(parse_lf(lf), tr, table)
    assert label.rc_attachment == "embedded"


def test_rc_on_object(table, rules):
    lf = ("* cat ( x _ 3 ) ; find . agent ( x _ 1 , Emma ) AND "
          "find . theme ( x _ 1 , x _ 3 ) AND "
          "chase . agent ( x _ 6 , Liam ) AND chase . theme ( x _ 6 , x _ 3 )")
    tr = traj_of("Emma found the cat that Liam chased .", lf, table, rules)
    label = classify_subpattern(parse_lf(lf), tr, table)
    assert label.rc_attachment == "object_side"
    assert label.key() == "role=none|voice=none|rc=object_side"


# ---------------------------------------------------------------------------
# mechanism classification on the synthetic corpus

SMALL = SynthConfig(counts={
    "intrans": 30, "trans": 40, "trans_pp1": 30, "trans_pp2": 25,
    "whq_subj": 30, "whq_subj_pp": 30,
    "pp_deep": 20, "whq_subj_pp_deep": 20, "subj_pp": 20, "whq_obj": 20,
})


@pytest.fixture(scope="module")
def synth_split(table):
    train_ex, gen_ex = gen_synthetic(SMALL, seed=7)
    def build(exs):
        return [
            (ex, build_trajectory(parse_lf(ex.lf_text), list(ex.tokens), table, None))
            for ex in exs
        ]
    return build(train_ex), build(gen_ex)


def test_train_examples_all_covered(table, synth_split):
    train, _ = synth_split
    cov = build_coverage([t for _, t in train], table)
    for ex, tr in train:
        assert classify_mechanism(tr, cov, table) == frozenset({COVERED}), ex.category
        assert novel_merges(cov, tr) == []


def test_gen_categories_map_to_mechanisms(table, synth_split):
    train, gen = synth_split
    cov = build_coverage([t for _, t in train], table)
    expected = {
        "pp_deep": frozenset({COVERED}),
        "whq_subj_pp_deep": frozenset({COVERED}),
        "whq_obj": frozenset({MECH_A}),
        "subj_pp": frozenset({MECH_B}),
    }
    for ex, tr in gen:
        got = classify_mechanism(tr, cov, table)
        assert got == expected[ex.category], (ex.category, ex.tokens)


def test_covered_implies_no_novel_merge_bigrams(table, synth_split):
    train, gen = synth_split
    cov = build_coverage([t for _, t in train], table)
    for ex, tr in gen:
        if classify_mechanism(tr, cov, table) == frozenset({COVERED}):
            assert novel_merges(cov, tr) == [], ex.category


def test_subject_modifier_merge_is_the_novel_bigram(table, synth_split):
    train, gen = synth_split
    cov = build_coverage([t for _, t in train], table)
    for ex, tr in gen:
        if ex.category != "subj_pp":
            continue
        novel = novel_merges(cov, tr)
        assert any(l == "NP+mod" and rule == "BWD_APP" for l, _, rule in novel), (
            ex.tokens, novel,
        )


def test_mechanisms_never_overlap_here(table, synth_split):
    train, gen = synth_split
    cov = build_coverage([t for _, t in train], table)
    for _, tr in gen:
        got = classify_mechanism(tr, cov, table)
        assert not (MECH_A in got and MECH_B in got)


# ---------------------------------------------------------------------------
# decomposition tables


def rec(cat: str, i: int, ok: bool) -> EvalRecord:
    return EvalRecord(
        example_id=i, category=cat, predicted_initial=(), predicted_final=(),
        type_match=ok, final_match=ok, edge_match=ok, cky_ok=ok,
    )


def label(role: str, rc: str = "none") -> SubPatternLabel:
    return SubPatternLabel(role, "active" if role != "none" else "none",
                           rc != "none", rc)


def test_decompose_category_hand_computed():
    records = [rec("q", 0, True), rec("q", 1, True), rec("q", 2, True),
               rec("q", 3, False), rec("q", 4, False)]
    labels = {0: label("agent"), 1: label("agent"), 2: label("agent"),
              3: label("theme"), 4: label("theme")}
    d = decompose_category(records, labels)
    assert d.total_n == 5
    assert d.total_accuracy == pytest.approx(0.6)
    assert d.subtotal_pass == 3 and d.subtotal_fail == 2
    assert d.is_dichotomous
    keys = [r.key for r in d.rows]
    assert keys == sorted(keys) and len(keys) == 2


def test_decompose_flags_fractional_rows():
    records = [rec("q", 0, True), rec("q", 1, False)]
    labels = {0: label("agent"), 1: label("agent")}
    d = decompose_category(records, labels)
    assert not d.is_dichotomous
    assert d.subtotal_pass == 0 and d.subtotal_fail == 0
    assert d.rows[0].accuracy == pytest.approx(0.5)


def test_decompose_rejects_bad_input():
    with pytest.raises(ValueError):
        decompose_category([], {})
    with pytest.raises(ValueError, match="categories"):
        decompose_category([rec("a", 0, True), rec("b", 1, True)],
                           {0: label("none"), 1: label("none")})


def test_decomposition_renderers_byte_stable():
    records = [rec("q", 0, True), rec("q", 1, False)]
    labels = {0: label("agent"), 1: label("theme", "object_side")}
    d = decompose_category(records, labels)
    assert render_decomposition_text(d) == render_decomposition_text(d)
    one = render_decomposition_json(d)
    assert one == render_decomposition_json(d)
    doc = json.loads(one)
    assert doc["total_n"] == 2
    assert [r["key"] for r in doc["rows"]] == sorted(r["key"] for r in doc["rows"])
