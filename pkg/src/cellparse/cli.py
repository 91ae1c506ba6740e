"""Command-line pipeline: synth, derive, train, eval, analyze, audit.

Each subcommand validates its inputs before touching the filesystem and
exits nonzero with a one-line message on any module error.  All output
files are deterministic given the flags; randomness sits behind --seed.
"""
from __future__ import annotations

import argparse
import json
import multiprocessing
import os
import sys
from collections import Counter, defaultdict
from dataclasses import asdict
from pathlib import Path

from .analysis import (
    build_coverage,
    classify_mechanism,
    classify_subpattern,
    decompose_category,
    ngram_coverage,
    render_decomposition_json,
    render_decomposition_text,
)
from .ccg import (
    AmbiguousParse,
    DerivationError,
    ExtractionError,
    FunctionWordRules,
    Lexicon,
    NoParse,
    Trajectory,
    TypeTable,
    TypeTableError,
    build_trajectory,
    default_type_table,
    load_type_table,
)
from .dataio import (
    Example,
    FileStore,
    FormatError,
    TableStore,
    load_checkpoint,
    load_tsv,
    read_trajectories,
    write_trajectories,
    write_tsv,
)
from .evaluate import (
    METRICS,
    EvalRecord,
    category_report,
    evaluate_model,
    render_json,
    render_text,
)
from .lf import LFParseError, parse_lf
from .nca import NcaConfig
from .synth import SynthConfig, gen_synthetic
from .train import TrainConfig, train

# error classes a gold example can legitimately trip on its way through
# the symbolic pipeline; anything else is a bug and propagates
_EXAMPLE_ERRORS = (LFParseError, DerivationError, NoParse, AmbiguousParse,
                   ExtractionError)


class CliError(Exception):
    """User-facing failure: message to stderr, exit code 1."""


# ---------------------------------------------------------------------------
# Shared argument plumbing


def _existing(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise CliError(f"{what} not found: {path}")
    return p


def _load_table(args: argparse.Namespace) -> TypeTable:
    if getattr(args, "type_table", None):
        return load_type_table(_existing(args.type_table, "type table"))
    return default_type_table()


def _load_rules(args: argparse.Namespace) -> FunctionWordRules | None:
    if getattr(args, "rules", None):
        return FunctionWordRules.from_json(
            _existing(args.rules, "rules file").read_text(encoding="utf-8")
        )
    return None


def _corpus_lexicon(examples: list[Example]) -> Lexicon:
    """Lexicon over the parseable part of a corpus (bad rows just skip)."""
    pairs = []
    for ex in examples:
        try:
            pairs.append((list(ex.tokens), parse_lf(ex.lf_text)))
        except LFParseError:
            continue
    return Lexicon.build(pairs)


def _default_rules(examples: list[Example]) -> FunctionWordRules:
    """Stripping rules with 'that'-retention contexts read off the corpus."""
    return FunctionWordRules(rc_that_nouns=_corpus_lexicon(examples).rc_that_nouns())


def _traj_record(example_id: int, traj: Trajectory) -> dict:
    return {
        "example_id": example_id,
        "tokens": list(traj.tokens),
        "content_positions": list(traj.content_positions),
        "content_tokens": list(traj.content_tokens),
        "initial_ids": list(traj.initial_ids),
        "final_ids": list(traj.final_ids),
    }


def _records_by_id(path: str, examples: list[Example]) -> dict[int, dict]:
    by_id = {rec["example_id"]: rec for rec in read_trajectories(path)}
    missing = [ex.id for ex in examples if ex.id not in by_id]
    if missing:
        raise CliError(
            f"{len(missing)} examples lack trajectory records "
            f"(first: {missing[:5]}); run derive on this corpus first"
        )
    return by_id


def _emit(text: str) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


# ---------------------------------------------------------------------------
# derive


# worker globals: a Pool initializer fills these once per process so the
# type table and rules are not re-pickled for every example
_W_TABLE: TypeTable | None = None
_W_RULES: FunctionWordRules | None = None


def _derive_init(table_path: str | None, rules_json: str | None) -> None:
    global _W_TABLE, _W_RULES
    _W_TABLE = load_type_table(table_path) if table_path else default_type_table()
    _W_RULES = FunctionWordRules.from_json(rules_json) if rules_json else None


def _derive_one(task: tuple[int, tuple[str, ...], str]) -> tuple:
    example_id, tokens, lf_text = task
    try:
        traj = build_trajectory(parse_lf(lf_text), list(tokens), _W_TABLE, _W_RULES)
    except _EXAMPLE_ERRORS as exc:
        return ("err", example_id, type(exc).__name__, str(exc))
    return ("ok", example_id, _traj_record(example_id, traj))


def cmd_derive(args: argparse.Namespace) -> int:
    examples = load_tsv(_existing(args.data, "corpus"), split=args.split)
    table = _load_table(args)
    rules = _load_rules(args) or _default_rules(examples)

    jobs = args.jobs or os.cpu_count() or 1
    tasks = [(ex.id, ex.tokens, ex.lf_text) for ex in examples]
    if jobs > 1 and len(tasks) >= 4 * jobs:
        with multiprocessing.Pool(
            jobs, initializer=_derive_init,
            initargs=(args.type_table, rules.to_json()),
        ) as pool:
            results = pool.map(_derive_one, tasks, chunksize=max(1, len(tasks) // (4 * jobs)))
    else:
        _derive_init(args.type_table, rules.to_json())
        results = [_derive_one(t) for t in tasks]

    by_category: dict[str, Counter] = defaultdict(Counter)
    records: list[dict] = []
    failures: list[dict] = []
    cat_of = {ex.id: ex.category for ex in examples}
    for res in results:
        by_category[cat_of[res[1]]]["total"] += 1
        if res[0] == "ok":
            records.append(res[2])
            by_category[cat_of[res[1]]]["derived"] += 1
        else:
            failures.append(
                {"example_id": res[1], "error": res[2], "message": res[3]}
            )

    records.sort(key=lambda r: r["example_id"])
    write_trajectories(args.out, records)
    if args.funcwords_out:
        Path(args.funcwords_out).write_text(rules.to_json(), encoding="utf-8")

    manifest = {
        "total": len(examples),
        "derived": len(records),
        "failed": len(failures),
        "failures_by_class": dict(
            sorted(Counter(f["error"] for f in failures).items())
        ),
        "failures": sorted(failures, key=lambda f: f["example_id"]),
        "by_category": {
            cat: {"total": c["total"], "derived": c["derived"]}
            for cat, c in sorted(by_category.items())
        },
        "table_sha256": table.sha256,
    }
    if args.manifest_out:
        Path(args.manifest_out).write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    _emit(
        f"derive: {len(records)}/{len(examples)} trajectories -> {args.out} "
        f"(table {table.sha256[:12]})"
    )
    if failures:
        classes = ", ".join(
            f"{k}={v}" for k, v in sorted(manifest["failures_by_class"].items())
        )
        print(f"cellparse: error: {len(failures)} examples failed derivation "
              f"({classes})", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# synth


def cmd_synth(args: argparse.Namespace) -> int:
    if args.config:
        cfg = SynthConfig.from_json(
            _existing(args.config, "synth config").read_text(encoding="utf-8")
        )
    else:
        cfg = SynthConfig()
    train_ex, gen_ex = gen_synthetic(cfg, seed=args.seed)
    write_tsv(args.train_out, train_ex)
    write_tsv(args.gen_out, gen_ex)
    if args.config_out:
        Path(args.config_out).write_text(cfg.to_json(), encoding="utf-8")
    _emit(
        f"synth: train={len(train_ex)} gen={len(gen_ex)} seed={args.seed} "
        f"-> {args.train_out} {args.gen_out}"
    )
    return 0


# ---------------------------------------------------------------------------
# train


def _make_store(spec: str, vocab: list[str], dim: int, seed: int):
    if spec == "table":
        return TableStore(vocab, dim=dim, seed=seed)
    if spec.startswith("file:"):
        return FileStore(_existing(spec[5:], "embedding file"))
    raise CliError(f"--embeddings must be 'table' or 'file:PATH', got {spec!r}")


def cmd_train(args: argparse.Namespace) -> int:
    examples = load_tsv(_existing(args.data, "corpus"), split="train")
    records = _records_by_id(_existing(args.trajectories, "trajectory file"),
                             examples)
    table = _load_table(args)

    if args.train_config:
        cfg = TrainConfig.from_json(json.loads(
            _existing(args.train_config, "train config").read_text(encoding="utf-8")
        ))
    else:
        cfg = TrainConfig()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)

    model = {"embed_dim": 64, "n_codes": 32, "state_dim": 64, "hidden_dim": 128}
    if args.model_config:
        loaded = json.loads(
            _existing(args.model_config, "model config").read_text(encoding="utf-8")
        )
        unknown = set(loaded) - set(model)
        if unknown:
            raise CliError(f"unknown model config keys: {sorted(unknown)}")
        model.update(loaded)
    nca_cfg = NcaConfig(n_types=len(table), t_max=cfg.t_max, **model)

    vocab = sorted({
        tok.lower() for ex in examples
        for tok in records[ex.id]["content_tokens"]
    })
    store = _make_store(args.embeddings, vocab, nca_cfg.embed_dim, cfg.seed)
    if store.dim != nca_cfg.embed_dim:
        raise CliError(
            f"embedding dim {store.dim} does not match model embed_dim "
            f"{nca_cfg.embed_dim}"
        )

    _, history = train(
        examples, records, store, cfg, nca_cfg,
        table_hash=table.sha256,
        checkpoint_path=args.checkpoint,
        log_path=args.log,
    )
    last = history[-1]
    _emit(
        f"train: seed={cfg.seed} epochs={cfg.epochs} "
        f"acc_initial={last['acc_initial']:.4f} acc_final={last['acc_final']:.4f} "
        f"-> {args.checkpoint}"
    )
    return 0


# ---------------------------------------------------------------------------
# eval


def _checkpoint_paths(args: argparse.Namespace) -> list[str]:
    paths = list(args.checkpoint or [])
    if args.seeds:
        if len(paths) != 1 or "{seed}" not in paths[0]:
            raise CliError(
                "--seeds needs a single --checkpoint template containing {seed}"
            )
        seeds = [int(s) for s in args.seeds.split(",") if s.strip() != ""]
        if not seeds:
            raise CliError("--seeds is empty")
        paths = [paths[0].format(seed=s) for s in seeds]
    return paths


def _eval_one_checkpoint(
    path: str,
    args: argparse.Namespace,
    examples: list[Example],
    records: dict[int, dict],
    table: TypeTable,
    rules: FunctionWordRules | None,
    lexicon: Lexicon | None,
) -> list[EvalRecord]:
    params, _meta, table_hash, config = load_checkpoint(_existing(path, "checkpoint"))
    if table_hash != table.sha256:
        raise CliError(
            f"{path}: checkpoint was trained against a different type table "
            f"({table_hash[:12]} vs {table.sha256[:12]})"
        )
    if config["vocab"] is not None:
        store = TableStore.from_table(config["vocab"], params["embed"])
    elif args.embeddings and args.embeddings.startswith("file:"):
        store = FileStore(_existing(args.embeddings[5:], "embedding file"))
    else:
        raise CliError(
            f"{path}: checkpoint carries no embedding table; "
            "pass --embeddings file:PATH"
        )
    t_steps = args.t_steps if args.t_steps is not None else config["train"]["t_max"]
    return evaluate_model(
        params, examples, records, store, table, t_steps,
        rules=rules, lexicon=lexicon,
    )


def _note_counts(recs: list[EvalRecord]) -> dict[str, int]:
    return dict(sorted(Counter(
        r.failure_note for r in recs if r.failure_note
    ).items()))


def cmd_eval(args: argparse.Namespace) -> int:
    examples = load_tsv(_existing(args.data, "corpus"), split="gen")
    records = _records_by_id(_existing(args.trajectories, "trajectory file"),
                             examples)
    table = _load_table(args)
    rules = _load_rules(args)
    lexicon = None
    if args.lexicon_from:
        lex_examples = load_tsv(_existing(args.lexicon_from, "lexicon corpus"))
        lexicon = _corpus_lexicon(lex_examples)
        if rules is None:
            rules = FunctionWordRules(rc_that_nouns=lexicon.rc_that_nouns())

    if args.oracle_types:
        per_seed = [evaluate_model(
            {}, examples, records, None, table, 0,
            rules=rules, lexicon=lexicon, oracle_types=True,
        )]
    else:
        paths = _checkpoint_paths(args)
        if not paths:
            raise CliError("pass --checkpoint (or --oracle-types)")
        per_seed = [
            _eval_one_checkpoint(p, args, examples, records, table, rules, lexicon)
            for p in paths
        ]

    if args.records_out:
        with Path(args.records_out).open("w", encoding="utf-8") as fh:
            for seed_index, recs in enumerate(per_seed):
                for r in recs:
                    doc = asdict(r)
                    doc["predicted_initial"] = list(doc["predicted_initial"])
                    doc["predicted_final"] = list(doc["predicted_final"])
                    doc["trajectory_match"] = r.trajectory_match
                    doc["seed_index"] = seed_index
                    fh.write(json.dumps(doc, sort_keys=True) + "\n")

    if args.oracle_types:
        # the symbolic pipeline alone: type fidelity is exact by
        # construction, edge agreement isolates the ambiguity class
        initial_tbl = category_report(per_seed, metric="initial")
        edge_tbl = category_report(per_seed, metric="edge")
        notes = _note_counts(per_seed[0])
        if args.format == "json":
            _emit(json.dumps({
                "initial": json.loads(render_json(initial_tbl)),
                "edge": json.loads(render_json(edge_tbl)),
                "failure_notes": notes,
            }, indent=2, sort_keys=True))
        else:
            _emit(render_text(initial_tbl))
            _emit(render_text(edge_tbl))
            note_str = ", ".join(f"{k}={v}" for k, v in notes.items()) or "none"
            _emit(f"edge failure notes: {note_str}")
        return 0

    tbl = category_report(per_seed, metric=args.metric)
    _emit(render_json(tbl) if args.format == "json" else render_text(tbl))
    return 0


# ---------------------------------------------------------------------------
# analyze


def _derive_all(
    examples: list[Example], table: TypeTable, rules: FunctionWordRules | None
) -> tuple[dict[int, Trajectory], dict[str, int]]:
    out: dict[int, Trajectory] = {}
    failures: Counter = Counter()
    for ex in examples:
        try:
            out[ex.id] = build_trajectory(
                parse_lf(ex.lf_text), list(ex.tokens), table, rules
            )
        except _EXAMPLE_ERRORS as exc:
            failures[type(exc).__name__] += 1
    return out, dict(sorted(failures.items()))


def _load_eval_records(path: str, seed_index: int) -> dict[str, list[EvalRecord]]:
    per_cat: dict[str, list[EvalRecord]] = defaultdict(list)
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        doc = json.loads(line)
        if doc.get("seed_index", 0) != seed_index:
            continue
        per_cat[doc["category"]].append(EvalRecord(
            example_id=doc["example_id"],
            category=doc["category"],
            predicted_initial=tuple(doc["predicted_initial"]),
            predicted_final=tuple(doc["predicted_final"]),
            type_match=doc["type_match"],
            final_match=doc["final_match"],
            edge_match=doc["edge_match"],
            cky_ok=doc["cky_ok"],
            failure_note=doc.get("failure_note", ""),
        ))
    return per_cat


def cmd_analyze(args: argparse.Namespace) -> int:
    train_ex = load_tsv(_existing(args.train_data, "training corpus"), "train")
    gen_ex = load_tsv(_existing(args.data, "generalization corpus"), "gen")
    table = _load_table(args)
    rules = _load_rules(args) or _default_rules(train_ex + gen_ex)
    ns = tuple(int(n) for n in args.ngrams.split(","))

    train_trajs, train_failures = _derive_all(train_ex, table, rules)
    gen_trajs, gen_failures = _derive_all(gen_ex, table, rules)
    coverage = build_coverage(train_trajs.values(), table, ns=ns)

    eval_records = (
        _load_eval_records(_existing(args.records, "evaluation records"),
                           args.seed_index)
        if args.records else {}
    )

    categories: dict[str, dict] = {}
    for ex in gen_ex:
        traj = gen_trajs.get(ex.id)
        if traj is None:
            continue
        cat = categories.setdefault(ex.category, {
            "n": 0,
            "mechanisms": Counter(),
            "subpatterns": Counter(),
            "novel_ngrams": {n: {"examples_with_novel": 0, "distinct": set()}
                             for n in ns},
        })
        cat["n"] += 1
        mech = classify_mechanism(traj, coverage, table)
        cat["mechanisms"]["+".join(sorted(mech))] += 1
        label = classify_subpattern(parse_lf(ex.lf_text), traj, table)
        cat["subpatterns"][label.key()] += 1
        for n in ns:
            novel = ngram_coverage(coverage, traj, n, table=table)
            if novel:
                cat["novel_ngrams"][n]["examples_with_novel"] += 1
                cat["novel_ngrams"][n]["distinct"].update(novel)

    doc = {
        "train": {
            "examples": len(train_ex),
            "derived": len(train_trajs),
            "failures_by_class": train_failures,
        },
        "gen": {
            "examples": len(gen_ex),
            "derived": len(gen_trajs),
            "failures_by_class": gen_failures,
        },
        "categories": {},
    }
    decompositions: dict[str, object] = {}
    for cat in sorted(categories):
        info = categories[cat]
        entry = {
            "n": info["n"],
            "mechanisms": dict(sorted(info["mechanisms"].items())),
            "subpatterns": dict(sorted(info["subpatterns"].items())),
            "novel_ngrams": {
                str(n): {
                    "examples_with_novel": v["examples_with_novel"],
                    "distinct": sorted(" ".join(g) for g in v["distinct"]),
                }
                for n, v in info["novel_ngrams"].items()
            },
        }
        if cat in eval_records:
            labels = {
                ex.id: classify_subpattern(
                    parse_lf(ex.lf_text), gen_trajs[ex.id], table
                )
                for ex in gen_ex
                if ex.category == cat and ex.id in gen_trajs
            }
            decomp = decompose_category(eval_records[cat], labels, args.metric)
            decompositions[cat] = decomp
            entry["decomposition"] = json.loads(render_decomposition_json(decomp))
        doc["categories"][cat] = entry

    if args.format == "json":
        _emit(json.dumps(doc, indent=2, sort_keys=True))
        return 0

    lines = [
        f"train: {doc['train']['derived']}/{doc['train']['examples']} derived",
        f"gen:   {doc['gen']['derived']}/{doc['gen']['examples']} derived",
        "",
    ]
    for cat in sorted(categories):
        entry = doc["categories"][cat]
        lines.append(f"{cat}  (n={entry['n']})")
        mech = ", ".join(f"{k}={v}" for k, v in entry["mechanisms"].items())
        lines.append(f"  mechanisms:   {mech}")
        subs = ", ".join(f"{k}={v}" for k, v in entry["subpatterns"].items())
        lines.append(f"  sub-patterns: {subs}")
        for n in ns:
            v = entry["novel_ngrams"][str(n)]
            lines.append(
                f"  novel {n}-grams: {v['examples_with_novel']}/{entry['n']} "
                f"examples, {len(v['distinct'])} distinct"
            )
        lines.append("")
    _emit("\n".join(lines))
    for cat in sorted(decompositions):
        _emit(render_decomposition_text(decompositions[cat]))
    return 0


# ---------------------------------------------------------------------------
# audit


def cmd_audit(args: argparse.Namespace) -> int:
    examples = load_tsv(_existing(args.data, "corpus"))
    table = _load_table(args)
    rules = _load_rules(args) or _default_rules(examples)
    lexicon = _corpus_lexicon(examples)

    trajs, failures = _derive_all(examples, table, rules)
    derived = [ex for ex in examples if ex.id in trajs]
    records = {ex.id: _traj_record(ex.id, trajs[ex.id]) for ex in derived}
    recs = evaluate_model(
        {}, derived, records, None, table, 0,
        rules=rules, lexicon=lexicon, oracle_types=True,
    )
    edge_ok = sum(r.edge_match for r in recs)
    notes = _note_counts(recs)

    doc = {
        "total": len(examples),
        "derived": len(derived),
        "derivation_failures": failures,
        "edge_agreement": {
            "match": edge_ok,
            "total": len(recs),
            "rate": round(edge_ok / len(recs), 6) if recs else None,
        },
        "failure_notes": notes,
        "table_sha256": table.sha256,
    }
    if args.format == "json":
        _emit(json.dumps(doc, indent=2, sort_keys=True))
        return 0

    lines = [f"audit: {len(examples)} examples (table {table.sha256[:12]})"]
    fail_str = ", ".join(f"{k}={v}" for k, v in failures.items()) or "none"
    lines.append(f"derived: {len(derived)}/{len(examples)} (failures: {fail_str})")
    if recs:
        lines.append(
            f"type->edge agreement: {edge_ok}/{len(recs)} "
            f"({100 * edge_ok / len(recs):.1f}%)"
        )
    note_str = ", ".join(f"{k}={v}" for k, v in notes.items()) or "none"
    lines.append(f"failure notes: {note_str}")
    _emit("\n".join(lines))
    return 0


# ---------------------------------------------------------------------------
# parser


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cellparse",
        description="Deterministic type supervision and the cellular model "
                    "over it: corpus synthesis, derivation, training, "
                    "evaluation, analysis, and pipeline audit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus pair")
    p.add_argument("--train-out", required=True)
    p.add_argument("--gen-out", required=True)
    p.add_argument("--config", help="SynthConfig JSON (defaults built in)")
    p.add_argument("--config-out", help="write the effective config JSON here")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("derive", help="corpus TSV -> trajectory supervision")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="trajectory JSONL path")
    p.add_argument("--split", default="train")
    p.add_argument("--type-table")
    p.add_argument("--rules", help="function-word rules JSON")
    p.add_argument("--funcwords-out", help="write the rules JSON used")
    p.add_argument("--manifest-out", help="write the coverage manifest here")
    p.add_argument("--jobs", type=int, default=None,
                   help="worker processes (default: all cores)")
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("train", help="trajectories + embeddings -> checkpoint")
    p.add_argument("--data", required=True)
    p.add_argument("--trajectories", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--log", help="JSONL training log")
    p.add_argument("--embeddings", default="table",
                   help="'table' (trainable) or 'file:PATH' (frozen)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--train-config", help="TrainConfig JSON file")
    p.add_argument("--model-config",
                   help="JSON file with embed_dim/n_codes/state_dim/hidden_dim")
    p.add_argument("--type-table")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="checkpoints + corpus -> category tables")
    p.add_argument("--data", required=True)
    p.add_argument("--trajectories", required=True)
    p.add_argument("--checkpoint", action="append",
                   help="repeatable; with --seeds, a template containing {seed}")
    p.add_argument("--seeds", help="comma list substituted into --checkpoint")
    p.add_argument("--oracle-types", action="store_true",
                   help="score the gold types themselves (no model)")
    p.add_argument("--metric", choices=METRICS, default="trajectory")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--t-steps", type=int, default=None)
    p.add_argument("--type-table")
    p.add_argument("--rules")
    p.add_argument("--lexicon-from", help="corpus TSV for extraction lexicon")
    p.add_argument("--embeddings", help="'file:PATH' for frozen-embedding runs")
    p.add_argument("--records-out", help="write per-example records JSONL")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("analyze",
                       help="coverage, mechanisms, sub-pattern decomposition")
    p.add_argument("--train-data", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--records", help="eval records JSONL (enables decomposition)")
    p.add_argument("--seed-index", type=int, default=0)
    p.add_argument("--metric", choices=METRICS, default="trajectory")
    p.add_argument("--ngrams", default="2,3", help="comma list of n-gram sizes")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--type-table")
    p.add_argument("--rules")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("audit", help="gold-type pipeline fidelity report")
    p.add_argument("--data", required=True)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--type-table")
    p.add_argument("--rules")
    p.set_defaults(func=cmd_audit)

    return parser


def run(argv: list[str]) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"cellparse: error: {exc}", file=sys.stderr)
        return 1
    except (FormatError, TypeTableError, LFParseError, OSError,
            ValueError, KeyError) as exc:
        print(f"cellparse: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main(argv: list[str] | None = None) -> int:
    return run(sys.argv[1:] if argv is None else list(argv))


if __name__ == "__main__":
    sys.exit(main())
