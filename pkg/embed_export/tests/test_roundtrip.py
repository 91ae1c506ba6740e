"""Round-trip acceptance: export against a real producer corpus.

Builds a 100-sentence sample with the producer's CLI, exports embeddings
for it, and then checks the four interchange properties end to end:

  1. the binary loads through the producer's dataio reader;
  2. manifest and binary header agree;
  3. exported position sets equal the producer's stripping, per example;
  4. two exports of the same inputs are byte-identical.
"""
from __future__ import annotations

import hashlib
import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from embed_export.binary import read_embeddings, read_header
from embed_export.export import ExportManifest, export

MODEL = "hash-trigram-32"

pytestmark = pytest.mark.skipif(
    shutil.which("cellparse") is None,
    reason="producer CLI not on PATH",
)


def _run(*args: str) -> subprocess.CompletedProcess:
    proc = subprocess.run(args, capture_output=True, text=True)
    assert proc.returncode == 0, f"{args}: rc={proc.returncode}\n{proc.stderr}"
    return proc


@pytest.fixture(scope="module")
def sample(tmp_path_factory):
    """100-sentence corpus + trajectories + funcwords, via the producer CLI."""
    root = tmp_path_factory.mktemp("sample")
    counts = {
        "intrans": 20, "trans": 20, "trans_pp1": 20, "trans_pp2": 20,
        "whq_subj": 10, "whq_subj_pp": 10,
        "pp_deep": 2, "whq_subj_pp_deep": 2, "subj_pp": 2, "whq_obj": 2,
    }
    cfg = root / "syncfg.json"
    cfg.write_text(json.dumps({"counts": counts}))
    _run(
        "cellparse", "synth", "--config", str(cfg), "--seed", "3",
        "--train-out", str(root / "sample.tsv"),
        "--gen-out", str(root / "unused_gen.tsv"),
    )
    _run(
        "cellparse", "derive", "--data", str(root / "sample.tsv"),
        "--out", str(root / "traj.jsonl"),
        "--funcwords-out", str(root / "funcwords.json"),
    )
    n = sum(1 for line in (root / "sample.tsv").read_text().splitlines() if line)
    assert n == 100
    return root


@pytest.fixture(scope="module")
def exported(sample):
    manifest = export(
        sample / "sample.tsv", MODEL, sample / "sample.emb",
        sample / "funcwords.json",
    )
    return sample, manifest


def test_binary_loads_via_producer_dataio(exported):
    dataio = pytest.importorskip("cellparse.dataio")
    root, manifest = exported
    store = dataio.FileStore(root / "sample.emb")
    assert (store.count, store.dim) == (manifest.count, manifest.embed_dim)
    _, ours = read_embeddings(root / "sample.emb")
    for key in sorted(ours)[:50]:
        theirs = store.get(*key)
        assert theirs.shape == (manifest.embed_dim,)
        assert np.allclose(theirs, ours[key].astype(np.float64))
    store.close()


def test_manifest_matches_header_and_disk(exported):
    root, manifest = exported
    version, count, dim = read_header(root / "sample.emb")
    assert version == 1
    assert count == manifest.count
    assert dim == manifest.embed_dim == 32
    on_disk = ExportManifest.from_json_file(root / "sample.emb.manifest.json")
    assert on_disk == manifest
    assert manifest.model_name == MODEL
    assert manifest.alignment == "mean-subword"
    assert len(manifest.dataset_sha256) == 64


def test_positions_match_producer_stripping(exported):
    root, manifest = exported
    _, vectors = read_embeddings(root / "sample.emb")
    got: dict[int, set[int]] = {}
    for ex_id, pos in vectors:
        got.setdefault(ex_id, set()).add(pos)
    want: dict[int, set[int]] = {}
    with (root / "traj.jsonl").open() as fh:
        for line in fh:
            rec = json.loads(line)
            want[rec["example_id"]] = set(rec["content_positions"])
    assert len(want) == 100
    assert got == want
    assert manifest.count == sum(len(v) for v in want.values())


def test_export_is_byte_deterministic(exported):
    root, first = exported
    again = export(
        root / "sample.tsv", MODEL, root / "again.emb",
        root / "funcwords.json", manifest_path=root / "again.manifest.json",
    )
    a = (root / "sample.emb").read_bytes()
    b = (root / "again.emb").read_bytes()
    assert hashlib.sha256(a).hexdigest() == hashlib.sha256(b).hexdigest()
    assert again == first
    assert (root / "again.manifest.json").read_text() == (
        root / "sample.emb.manifest.json"
    ).read_text()


def test_single_content_word_yields_one_record(tmp_path, sample):
    data = tmp_path / "one.tsv"
    data.write_text("the cake .\t* cake ( x _ 1 )\tfragment\n")
    manifest = export(
        data, MODEL, tmp_path / "one.emb", sample / "funcwords.json"
    )
    assert manifest.count == 1
    _, vectors = read_embeddings(tmp_path / "one.emb")
    assert set(vectors) == {(0, 1)}


def test_cli_export_and_crosscheck(sample, tmp_path):
    out = tmp_path / "cli.emb"
    manifest = tmp_path / "cli.manifest.json"
    _run(
        sys.executable, "-m", "embed_export.cli", "export",
        "--data", str(sample / "sample.tsv"), "--model", MODEL,
        "--out", str(out), "--funcwords", str(sample / "funcwords.json"),
        "--manifest", str(manifest),
    )
    proc = _run(
        sys.executable, "-m", "embed_export.cli", "crosscheck",
        "--binary", str(out), "--manifest", str(manifest),
        "--trajectories", str(sample / "traj.jsonl"),
        "--data", str(sample / "sample.tsv"),
        "--funcwords", str(sample / "funcwords.json"),
    )
    assert "crosscheck: ok" in proc.stdout

    # a manifest for different data must fail the check
    wrong = subprocess.run(
        [
            sys.executable, "-m", "embed_export.cli", "crosscheck",
            "--binary", str(out), "--manifest", str(manifest),
            "--trajectories", str(sample / "traj.jsonl"),
        ],
        capture_output=True, text=True,
    )
    assert wrong.returncode == 0  # same inputs: still fine
    (tmp_path / "short.jsonl").write_text(
        json.dumps({"example_id": 0, "content_positions": [0]}) + "\n"
    )
    bad = subprocess.run(
        [
            sys.executable, "-m", "embed_export.cli", "crosscheck",
            "--binary", str(out), "--manifest", str(manifest),
            "--trajectories", str(tmp_path / "short.jsonl"),
        ],
        capture_output=True, text=True,
    )
    assert bad.returncode == 1
    assert "crosscheck:" in bad.stderr
