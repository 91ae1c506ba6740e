"""One-shot export: corpus TSV -> EMBF binary + JSON manifest.

The whole original sentence is encoded first; function-word stripping
only selects which pooled word vectors are written, so every kept vector
saw full sentence context. Records are written in dataset order with
positions ascending, which together with frozen encoders makes exports
byte-deterministic.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path

from .align import pool_to_words
from .binary import write_embeddings
from .dataset import StripRules, content_positions, read_corpus
from .encoders import load_encoder, token_spans

ALIGNMENT_POLICY = "mean-subword"


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def positions_digest(keys: list[tuple[int, int]]) -> str:
    """Order-independent digest of the exported (example, position) set."""
    payload = "\n".join(f"{ex}\t{pos}" for ex, pos in sorted(keys))
    return hashlib.sha256(payload.encode("ascii")).hexdigest()


@dataclass(frozen=True)
class ExportManifest:
    model_name: str
    model_revision: str
    layer: str
    dataset_path: str
    dataset_sha256: str
    funcwords_sha256: str
    embed_dim: int
    count: int
    alignment: str
    positions_sha256: str

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @staticmethod
    def from_json_file(path: str | Path) -> "ExportManifest":
        return ExportManifest(**json.loads(Path(path).read_text("utf-8")))


def export(
    data_path: str | Path,
    model_id: str,
    out_path: str | Path,
    funcwords_path: str | Path,
    manifest_path: str | Path | None = None,
    revision: str = "main",
) -> ExportManifest:
    """Encode, align, select, write. Returns the written manifest."""
    data_path = Path(data_path)
    out_path = Path(out_path)
    funcwords_path = Path(funcwords_path)
    rules = StripRules.from_json_file(funcwords_path)
    corpus = read_corpus(data_path)
    encoder = load_encoder(model_id, revision=revision)

    records = []
    for line in corpus:
        encoded = encoder.encode(line.sentence)
        words = pool_to_words(encoded, token_spans(line.sentence))
        for pos in content_positions(line.tokens, rules):
            records.append((line.id, pos, words[pos]))
    write_embeddings(out_path, encoder.dim, records)

    manifest = ExportManifest(
        model_name=encoder.name,
        model_revision=encoder.revision,
        layer=encoder.layer,
        dataset_path=str(data_path),
        dataset_sha256=_sha256_file(data_path),
        funcwords_sha256=_sha256_file(funcwords_path),
        embed_dim=encoder.dim,
        count=len(records),
        alignment=ALIGNMENT_POLICY,
        positions_sha256=positions_digest([(ex, pos) for ex, pos, _ in records]),
    )
    if manifest_path is None:
        manifest_path = out_path.with_name(out_path.name + ".manifest.json")
    Path(manifest_path).write_text(manifest.to_json(), encoding="utf-8")
    return manifest
