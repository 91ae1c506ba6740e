"""Command line: export embeddings, cross-check an export against its
producers.

  embed-export export --data c.tsv --model hash-trigram-64 \
      --out c.emb --funcwords funcwords.json
  embed-export crosscheck --binary c.emb --manifest c.emb.manifest.json \
      --trajectories c_traj.jsonl

Exit codes: 0 success, 1 failed check or operational error, 2 usage.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import AlignmentError, FormatError, ModelLoadError
from .binary import read_header, read_embeddings
from .dataset import StripRules, content_positions, read_corpus
from .export import ExportManifest, export, positions_digest


class CliError(Exception):
    pass


def _existing(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise CliError(f"{what} not found: {path}")
    return p


def _cmd_export(args: argparse.Namespace) -> int:
    manifest = export(
        _existing(args.data, "corpus"),
        args.model,
        args.out,
        _existing(args.funcwords, "funcwords rules"),
        manifest_path=args.manifest,
        revision=args.revision,
    )
    print(
        f"export: {manifest.count} records dim={manifest.embed_dim} "
        f"model={manifest.model_name}@{manifest.model_revision} -> {args.out}"
    )
    return 0


def _traj_positions(path: Path) -> dict[int, set[int]]:
    out: dict[int, set[int]] = {}
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                out[int(rec["example_id"])] = set(rec["content_positions"])
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise FormatError(f"{path}:{lineno}: bad trajectory record") from exc
    return out


def _by_example(keys: list[tuple[int, int]]) -> dict[int, set[int]]:
    out: dict[int, set[int]] = {}
    for ex_id, pos in keys:
        out.setdefault(ex_id, set()).add(pos)
    return out


def _diff_positions(
    binary_sets: dict[int, set[int]], expected: dict[int, set[int]], source: str
) -> list[str]:
    problems = []
    for ex_id in sorted(set(binary_sets) | set(expected)):
        got, want = binary_sets.get(ex_id, set()), expected.get(ex_id, set())
        if got != want:
            problems.append(
                f"example {ex_id}: binary {sorted(got)} != {source} {sorted(want)}"
            )
    return problems


def _cmd_crosscheck(args: argparse.Namespace) -> int:
    binary = _existing(args.binary, "embedding binary")
    manifest = ExportManifest.from_json_file(
        _existing(args.manifest, "manifest")
    )
    version, count, dim = read_header(binary)
    problems: list[str] = []
    if count != manifest.count:
        problems.append(f"header count {count} != manifest count {manifest.count}")
    if dim != manifest.embed_dim:
        problems.append(f"header dim {dim} != manifest embed_dim {manifest.embed_dim}")

    _, vectors = read_embeddings(binary)
    keys = sorted(vectors)
    digest = positions_digest(keys)
    if digest != manifest.positions_sha256:
        problems.append("binary position set does not match manifest digest")

    if args.trajectories:
        expected = _traj_positions(_existing(args.trajectories, "trajectories"))
        problems += _diff_positions(_by_example(keys), expected, "trajectories")
    if args.data:
        if not args.funcwords:
            raise CliError("--data requires --funcwords")
        rules = StripRules.from_json_file(_existing(args.funcwords, "funcwords rules"))
        expected = {
            line.id: set(content_positions(line.tokens, rules))
            for line in read_corpus(_existing(args.data, "corpus"))
        }
        problems += _diff_positions(_by_example(keys), expected, "stripping")

    if problems:
        for p in problems[:20]:
            print(f"crosscheck: {p}", file=sys.stderr)
        if len(problems) > 20:
            print(f"crosscheck: ... {len(problems) - 20} more", file=sys.stderr)
        return 1
    print(f"crosscheck: ok ({count} records, dim={dim})")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embed-export",
        description="Export frozen contextual embeddings for content-word "
        "positions into the EMBF binary format.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("export", help="corpus TSV -> EMBF binary + manifest")
    p.add_argument("--data", required=True, help="corpus TSV")
    p.add_argument("--model", required=True, help="encoder id")
    p.add_argument("--out", required=True, help="EMBF binary path")
    p.add_argument("--funcwords", required=True, help="stripping rules JSON")
    p.add_argument("--manifest", help="manifest path (default OUT.manifest.json)")
    p.add_argument("--revision", default="main", help="encoder revision")
    p.set_defaults(func=_cmd_export)

    p = sub.add_parser(
        "crosscheck", help="verify a binary against its manifest and producers"
    )
    p.add_argument("--binary", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--trajectories", help="producer trajectory JSONL to compare")
    p.add_argument("--data", help="corpus TSV to re-strip and compare")
    p.add_argument("--funcwords", help="rules JSON for --data")
    p.set_defaults(func=_cmd_crosscheck)
    return parser


def run(argv: list[str]) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"embed-export: error: {exc}", file=sys.stderr)
        return 1
    except (ModelLoadError, AlignmentError, FormatError, OSError, ValueError) as exc:
        print(f"embed-export: error: {exc}", file=sys.stderr)
        return 1


def main(argv: list[str] | None = None) -> None:
    sys.exit(run(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    main()
