from __future__ import annotations

import pytest

from cellparse.ccg import FunctionWordRules, Lexicon, default_type_table
from cellparse.lf import parse_lf

# Hand-written training sentences: every verb class, both dative frames,
# both voices, nominal modification.  The lexicon and function-word rules
# in the fixtures derive from these (and only these).
TRAIN_SENTENCES: list[tuple[str, str]] = [
    ("Emma slept .", "sleep . agent ( x _ 1 , Emma )"),
    ("The cake froze .", "* cake ( x _ 1 ) ; freeze . theme ( x _ 2 , x _ 1 )"),
    (
        "Emma chased the cat .",
        "* cat ( x _ 3 ) ; chase . agent ( x _ 1 , Emma ) AND "
        "chase . theme ( x _ 1 , x _ 3 )",
    ),
    (
        "Emma gave Liam a cake .",
        "cake ( x _ 4 ) AND give . agent ( x _ 1 , Emma ) AND "
        "give . recipient ( x _ 1 , Liam ) AND give . theme ( x _ 1 , x _ 4 )",
    ),
    (
        "Emma gave a cake to Liam .",
        "cake ( x _ 3 ) AND give . agent ( x _ 1 , Emma ) AND "
        "give . theme ( x _ 1 , x _ 3 ) AND give . recipient ( x _ 1 , Liam )",
    ),
    ("The cake was eaten .", "* cake ( x _ 1 ) ; eat . theme ( x _ 3 , x _ 1 )"),
    ("Emma ate a cake .",
     "cake ( x _ 3 ) AND eat . agent ( x _ 1 , Emma ) AND eat . theme ( x _ 1 , x _ 3 )"),
    ("Emma cut a cake .",
     "cake ( x _ 3 ) AND cut . agent ( x _ 1 , Emma ) AND cut . theme ( x _ 1 , x _ 3 )"),
    (
        "Emma said that Liam slept .",
        "say . agent ( x _ 1 , Emma ) AND say . ccomp ( x _ 1 , x _ 4 ) AND "
        "sleep . agent ( x _ 4 , Liam )",
    ),
    (
        "Emma wanted to sleep .",
        "want . agent ( x _ 1 , Emma ) AND want . xcomp ( x _ 1 , x _ 3 ) AND "
        "sleep . agent ( x _ 3 , Emma )",
    ),
    (
        "The cat on the mat slept .",
        "* cat ( x _ 1 ) ; * mat ( x _ 4 ) ; cat . nmod . on ( x _ 1 , x _ 4 ) "
        "AND sleep . agent ( x _ 5 , x _ 1 )",
    ),
    (
        "Emma saw the cat on the mat in the box .",
        "* cat ( x _ 3 ) ; * mat ( x _ 6 ) ; * box ( x _ 9 ) ; "
        "see . agent ( x _ 1 , Emma ) AND see . theme ( x _ 1 , x _ 3 ) AND "
        "cat . nmod . on ( x _ 3 , x _ 6 ) AND mat . nmod . in ( x _ 6 , x _ 9 )",
    ),
    (
        "Noah found the cake beside the box .",
        "* cake ( x _ 3 ) ; * box ( x _ 6 ) ; find . agent ( x _ 1 , Noah ) AND "
        "find . theme ( x _ 1 , x _ 3 ) AND cake . nmod . beside ( x _ 3 , x _ 6 )",
    ),
]


@pytest.fixture(scope="session")
def table():
    return default_type_table()


@pytest.fixture(scope="session")
def lexicon():
    pairs = [(s.split(), parse_lf(lf)) for s, lf in TRAIN_SENTENCES]
    return Lexicon.build(pairs)


@pytest.fixture(scope="session")
def rules(lexicon):
    return FunctionWordRules(rc_that_nouns=lexicon.rc_that_nouns())
