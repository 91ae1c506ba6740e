"""Synthetic mini-grammar corpus for desk-scale verification.

The corpus is built so the train/generalization split carries a sharp
structural dichotomy:

  covered generalizations (expected to transfer)
    - pp_deep: object-side PP chains deeper (3-6) than any train chain
      (1-2); every local window already occurs in train.
    - whq_subj_pp_deep: subject questions over those deeper chains.

  withheld generalizations (expected to fail categorically)
    - subj_pp: PP chains on the subject.  Train modifies objects only,
      so the clause-level merge that consumes a modified subject never
      occurs in train, and neither do the local windows around it.
    - whq_obj: object questions.  Transitive verbs occur in train only
      with a realized object (full type), while the question uses the
      object-reduced type; a per-word-type encoder cannot produce it.

Verb surfaces in the transitive class are chosen to be identical in base
and past form (cut, hit, ...), so object questions introduce no new word
types: the failure is purely structural, never vocabulary.

Question categories carry extra mass (800 each by default): the wh-root
pattern puts the clause head at the left edge, a minority configuration
whose basin collapses under long-horizon training if underrepresented.

Generation is deterministic per (config, seed).
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .dataio import Example

PROPER = ("Emma", "Liam", "Olivia", "Noah", "Mia", "Ethan", "Ava", "Lucas")
ANIMATE = ("girl", "boy", "cat", "dog", "duck", "bird", "horse", "bear")
INANIMATE = ("cake", "box", "mat", "car", "house", "table", "book", "shell")
# past form == base form for every verb here, by design (see module doc)
TRANS = ("cut", "hit", "shut", "split", "hurt", "read")
UNERG = (("slept", "sleep"), ("smiled", "smile"), ("laughed", "laugh"),
         ("danced", "dance"))
UNACC = (("froze", "freeze"), ("rolled", "roll"), ("shattered", "shatter"),
         ("grew", "grow"))
PREPS = ("on", "in", "beside")

TRAIN_CATEGORIES = ("intrans", "trans", "trans_pp1", "trans_pp2",
                    "whq_subj", "whq_subj_pp")
GEN_CATEGORIES = ("pp_deep", "whq_subj_pp_deep", "subj_pp", "whq_obj")


@dataclass(frozen=True)
class SynthConfig:
    counts: dict[str, int] = field(
        default_factory=lambda: {
            "intrans": 400, "trans": 700, "trans_pp1": 600, "trans_pp2": 500,
            "whq_subj": 800, "whq_subj_pp": 800,
            "pp_deep": 300, "whq_subj_pp_deep": 300,
            "subj_pp": 300, "whq_obj": 300,
        }
    )
    whq_subj_pp_depths: tuple[int, ...] = (1, 2)
    pp_deep_depths: tuple[int, ...] = (3, 4, 5, 6)
    whq_deep_depths: tuple[int, ...] = (3, 4)
    subj_pp_depths: tuple[int, ...] = (1, 2)

    def to_json(self) -> str:
        return json.dumps(
            {
                "counts": self.counts,
                "whq_subj_pp_depths": list(self.whq_subj_pp_depths),
                "pp_deep_depths": list(self.pp_deep_depths),
                "whq_deep_depths": list(self.whq_deep_depths),
                "subj_pp_depths": list(self.subj_pp_depths),
            },
            indent=2,
            sort_keys=True,
        )

    @staticmethod
    def from_json(text: str) -> "SynthConfig":
        obj = json.loads(text)
        return SynthConfig(
            counts=dict(obj["counts"]),
            whq_subj_pp_depths=tuple(obj.get("whq_subj_pp_depths", (1, 2))),
            pp_deep_depths=tuple(obj.get("pp_deep_depths", (3, 4, 5, 6))),
            whq_deep_depths=tuple(obj.get("whq_deep_depths", (3, 4))),
            subj_pp_depths=tuple(obj.get("subj_pp_depths", (1, 2))),
        )

    @staticmethod
    def load(path: str | Path) -> "SynthConfig":
        return SynthConfig.from_json(Path(path).read_text(encoding="utf-8"))


class _Sentence:
    """Token list plus logical-form clauses, with position bookkeeping."""

    def __init__(self) -> None:
        self.tokens: list[str] = []
        self.prefix: list[str] = []  # definite clauses, ';'-joined
        self.conjs: list[str] = []

    def add(self, token: str) -> int:
        self.tokens.append(token)
        return len(self.tokens) - 1

    def def_noun(self, noun: str) -> int:
        self.add("the")
        pos = self.add(noun)
        self.prefix.append(f"* {noun} ( x _ {pos} )")
        return pos

    def lf(self) -> str:
        body = " AND ".join(self.conjs)
        if self.prefix:
            return " ; ".join(self.prefix + [body])
        return body


def _subject(s: _Sentence, rng: random.Random, animate: bool) -> tuple[int | str, int]:
    """Returns (LF argument, position).  Proper names appear bare."""
    if animate and rng.random() < 0.5:
        name = rng.choice(PROPER)
        return name, s.add(name)
    noun = rng.choice(ANIMATE if animate else INANIMATE)
    pos = s.def_noun(noun)
    return pos, pos


def _arg(ref: int | str) -> str:
    return ref if isinstance(ref, str) else f"x _ {ref}"


def _pp_chain(s: _Sentence, rng: random.Random, head_pos: int,
              head_noun: str, depth: int) -> None:
    """Attach a right-nested PP chain to the noun at head_pos."""
    pool = [n for n in INANIMATE if n != head_noun]
    rng.shuffle(pool)
    prev_pos, prev_noun = head_pos, head_noun
    for level in range(depth):
        prep = rng.choice(PREPS)
        s.add(prep)
        noun = pool[level]
        pos = s.def_noun(noun)
        s.conjs.append(f"{prev_noun} . nmod . {prep} ( x _ {prev_pos} , x _ {pos} )")
        prev_pos, prev_noun = pos, noun


def _gen_intrans(rng: random.Random) -> tuple[str, str]:
    s = _Sentence()
    if rng.random() < 0.6:
        subj, _ = _subject(s, rng, animate=True)
        verb, lemma = rng.choice(UNERG)
        role = "agent"
    else:
        subj, _ = _subject(s, rng, animate=False)
        verb, lemma = rng.choice(UNACC)
        role = "theme"
    vpos = s.add(verb)
    s.add(".")
    s.conjs.append(f"{lemma} . {role} ( x _ {vpos} , {_arg(subj)} )")
    return " ".join(s.tokens), s.lf()


def _gen_trans(rng: random.Random, depth: int) -> tuple[str, str]:
    s = _Sentence()
    subj, _ = _subject(s, rng, animate=True)
    verb = rng.choice(TRANS)
    vpos = s.add(verb)
    s.conjs.append(f"{verb} . agent ( x _ {vpos} , {_arg(subj)} )")
    _object_np_first(s, rng, vpos, depth)
    s.add(".")
    return " ".join(s.tokens), s.lf()


def _object_np_first(s: _Sentence, rng: random.Random, vpos: int,
                     depth: int) -> int:
    """Object with the theme conjunct emitted before the chain's nmods."""
    noun = rng.choice(INANIMATE)
    pos = s.def_noun(noun)
    s.conjs.append(f"{s.tokens[vpos]} . theme ( x _ {vpos} , x _ {pos} )")
    if depth:
        _pp_chain(s, rng, pos, noun, depth)
    return pos


def _gen_whq_subj(rng: random.Random, depth: int | None) -> tuple[str, str]:
    s = _Sentence()
    kind = rng.random()
    if depth is not None or kind < 0.6:
        wh = s.add("Who")
        verb = rng.choice(TRANS)
        vpos = s.add(verb)
        s.conjs.append(f"wh ( x _ {wh} )")
        s.conjs.append(f"{verb} . agent ( x _ {vpos} , x _ {wh} )")
        _object_np_first(s, rng, vpos, depth or 0)
    elif kind < 0.8:
        wh = s.add("Who")
        verb, lemma = rng.choice(UNERG)
        vpos = s.add(verb)
        s.conjs.append(f"wh ( x _ {wh} )")
        s.conjs.append(f"{lemma} . agent ( x _ {vpos} , x _ {wh} )")
    else:
        wh = s.add("What")
        verb, lemma = rng.choice(UNACC)
        vpos = s.add(verb)
        s.conjs.append(f"wh ( x _ {wh} )")
        s.conjs.append(f"{lemma} . theme ( x _ {vpos} , x _ {wh} )")
    s.add("?")
    return " ".join(s.tokens), s.lf()


def _gen_subj_pp(rng: random.Random, depth: int) -> tuple[str, str]:
    s = _Sentence()
    if rng.random() < 0.6:
        noun = rng.choice(ANIMATE)
        verb, lemma = rng.choice(UNERG)
        role = "agent"
    else:
        noun = rng.choice(INANIMATE)
        verb, lemma = rng.choice(UNACC)
        role = "theme"
    pos = s.def_noun(noun)
    _pp_chain(s, rng, pos, noun, depth)
    vpos = s.add(verb)
    s.add(".")
    s.conjs.append(f"{lemma} . {role} ( x _ {vpos} , x _ {pos} )")
    return " ".join(s.tokens), s.lf()


def _gen_whq_obj(rng: random.Random) -> tuple[str, str]:
    s = _Sentence()
    wh = s.add("What")
    s.add("did")
    subj, _ = _subject(s, rng, animate=True)
    verb = rng.choice(TRANS)
    vpos = s.add(verb)
    s.add("?")
    s.conjs.append(f"wh ( x _ {wh} )")
    s.conjs.append(f"{verb} . agent ( x _ {vpos} , {_arg(subj)} )")
    s.conjs.append(f"{verb} . theme ( x _ {vpos} , x _ {wh} )")
    return " ".join(s.tokens), s.lf()


def _make(rng: random.Random, category: str, cfg: SynthConfig) -> tuple[str, str]:
    if category == "intrans":
        return _gen_intrans(rng)
    if category == "trans":
        return _gen_trans(rng, 0)
    if category == "trans_pp1":
        return _gen_trans(rng, 1)
    if category == "trans_pp2":
        return _gen_trans(rng, 2)
    if category == "whq_subj":
        return _gen_whq_subj(rng, None)
    if category == "whq_subj_pp":
        return _gen_whq_subj(rng, rng.choice(cfg.whq_subj_pp_depths))
    if category == "pp_deep":
        return _gen_trans(rng, rng.choice(cfg.pp_deep_depths))
    if category == "whq_subj_pp_deep":
        return _gen_whq_subj(rng, rng.choice(cfg.whq_deep_depths))
    if category == "subj_pp":
        return _gen_subj_pp(rng, rng.choice(cfg.subj_pp_depths))
    if category == "whq_obj":
        return _gen_whq_obj(rng)
    raise ValueError(f"unknown category {category!r}")


def gen_synthetic(
    config: SynthConfig | None = None, seed: int = 0
) -> tuple[list[Example], list[Example]]:
    """Deterministic (train, gen) corpus pair for the given config."""
    cfg = config or SynthConfig()
    rng = random.Random(seed)
    train: list[Example] = []
    gen: list[Example] = []
    for category in TRAIN_CATEGORIES + GEN_CATEGORIES:
        count = cfg.counts.get(category, 0)
        dest, split = (train, "train") if category in TRAIN_CATEGORIES else (gen, "gen")
        for _ in range(count):
            sentence, lf = _make(rng, category, cfg)
            dest.append(
                Example(
                    id=len(dest), tokens=tuple(sentence.split()),
                    lf_text=lf, category=category, split=split,
                )
            )
    return train, gen
