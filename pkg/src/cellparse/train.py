"""Training loop: AdamW over the hand-derived gradients, plus the
curriculum that makes the discrete bottleneck trainable.

Two schedules run over the same anneal window and are then held flat:
the code temperature decays geometrically (1.0 -> 0.1) while the number
of rollout steps ramps linearly (1 -> T_max, integer valued).  Early
epochs therefore supervise the encoder through the final loss directly
(T = 1); later epochs push the update dynamics to carry information
over longer horizons while the encoder is shaped by the initial-type
loss alone.

Batches are exact-length buckets: every example in a batch has the same
number of content tokens, so no padding enters the grid and boundary
cells always see the true zero pad.  Everything is bit-reproducible
from (config, seed): shuffles and noise draws come from per-epoch
seeded generators, and optimizer steps run in a fixed batch order.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .dataio import Example, FileStore, TableStore, save_checkpoint
from .nca import (
    NcaConfig,
    PARAM_ORDER,
    check_finite,
    init_params,
    loss_and_grads,
    sample_gumbel,
)

__all__ = [
    "AdamW",
    "CoverageError",
    "TrainConfig",
    "evaluate_loss",
    "schedule",
    "train",
]


class CoverageError(RuntimeError):
    """A training example has no derived trajectory to supervise with."""


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 80
    batch_size: int = 32
    lr: float = 1e-3
    weight_decay: float = 1e-4
    temp_start: float = 1.0
    temp_end: float = 0.1
    temp_anneal_epochs: int = 50
    t_start: int = 1
    t_max: int = 60
    w_init: float = 1.0
    w_final: float = 1.0
    seed: int = 0

    def to_json(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_json(data: dict) -> "TrainConfig":
        return TrainConfig(**data)

    def with_seed(self, seed: int) -> "TrainConfig":
        return replace(self, seed=seed)


def schedule(cfg: TrainConfig, epoch: int) -> tuple[float, int]:
    """(temperature, rollout steps) for a zero-based epoch index.

    Temperature: geometric decay temp_start -> temp_end over the anneal
    window, held afterwards.  Steps: linear integer ramp t_start ->
    t_max over the same window, held afterwards.
    """
    a = cfg.temp_anneal_epochs
    frac = min(epoch, a) / a
    temp = cfg.temp_start * (cfg.temp_end / cfg.temp_start) ** frac
    t_steps = cfg.t_start + int(round((cfg.t_max - cfg.t_start) * frac))
    return float(temp), t_steps


class AdamW:
    """Decoupled weight decay: a zero-gradient parameter with no moment
    history shrinks by exactly (1 - lr * wd) per step."""

    def __init__(
        self,
        params: dict[str, np.ndarray],
        lr: float,
        weight_decay: float,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
    ):
        self.lr = lr
        self.weight_decay = weight_decay
        self.b1, self.b2 = betas
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        bc1 = 1.0 - self.b1 ** self.t
        bc2 = 1.0 - self.b2 ** self.t
        for name, p in params.items():
            g = grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            p *= 1.0 - self.lr * self.weight_decay
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


# ---------------------------------------------------------------------------
# Batch assembly

@dataclass(frozen=True)
class _Item:
    example_id: int
    positions: tuple[int, ...]
    rows: np.ndarray | None  # table row ids, when the store is trainable
    initial: np.ndarray
    final: np.ndarray


def _build_items(
    examples: list[Example],
    trajectories: dict[int, dict],
    store: TableStore | FileStore,
) -> dict[int, list[_Item]]:
    """Group supervision by content length; exact-length buckets."""
    buckets: dict[int, list[_Item]] = {}
    for ex in examples:
        rec = trajectories.get(ex.id)
        if rec is None:
            raise CoverageError(f"example {ex.id} has no derived trajectory")
        positions = tuple(rec["content_positions"])
        rows = None
        if store.trainable:
            toks = [ex.tokens[p] for p in positions]
            rows = store.rows(toks)
        item = _Item(
            example_id=ex.id,
            positions=positions,
            rows=rows,
            initial=np.asarray(rec["initial_ids"], dtype=np.int64),
            final=np.asarray(rec["final_ids"], dtype=np.int64),
        )
        buckets.setdefault(len(positions), []).append(item)
    return buckets


def _batch_arrays(
    batch: list[_Item],
    store: TableStore | FileStore,
    embed: np.ndarray | None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray | None]:
    initial = np.stack([it.initial for it in batch])
    final = np.stack([it.final for it in batch])
    if store.trainable:
        rows = np.stack([it.rows for it in batch])  # [B, L]
        emb = embed[rows]
        return emb, initial, final, rows
    emb = np.stack([
        np.stack([store.get(it.example_id, p) for p in it.positions])
        for it in batch
    ])
    return emb, initial, final, None


# ---------------------------------------------------------------------------
# The loop

def _config_hash(cfg: TrainConfig, nca_cfg: NcaConfig) -> str:
    payload = json.dumps(
        {"train": cfg.to_json(), "nca": asdict(nca_cfg)}, sort_keys=True
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def train(
    examples: list[Example],
    trajectories: dict[int, dict],
    store: TableStore | FileStore,
    cfg: TrainConfig,
    nca_cfg: NcaConfig,
    table_hash: str = "",
    checkpoint_path: str | Path | None = None,
    log_path: str | Path | None = None,
) -> tuple[dict[str, np.ndarray], list[dict]]:
    """Train one model; returns (params, per-epoch history).

    The trainable embedding table, when present, joins the parameter
    dict under the name "embed" and is optimized like any other tensor.
    """
    params = init_params(nca_cfg, seed=cfg.seed)
    if store.trainable:
        if store.dim != nca_cfg.embed_dim:
            raise ValueError("embedding table dim does not match model")
        params["embed"] = store.table

    buckets = _build_items(examples, trajectories, store)
    optimizer = AdamW(params, cfg.lr, cfg.weight_decay)

    header = {
        "seed": cfg.seed,
        "config_hash": _config_hash(cfg, nca_cfg),
        "table_hash": table_hash,
        "examples": len(examples),
    }
    history: list[dict] = []
    log_fh = Path(log_path).open("w", encoding="utf-8") if log_path else None
    if log_fh:
        log_fh.write(json.dumps(header, sort_keys=True) + "\n")

    try:
        for epoch in range(cfg.epochs):
            temp, t_steps = schedule(cfg, epoch)
            shuffle_rng = np.random.default_rng([cfg.seed, 101, epoch])
            noise_rng = np.random.default_rng([cfg.seed, 202, epoch])

            batches: list[list[_Item]] = []
            for length in sorted(buckets):
                items = buckets[length]
                order = shuffle_rng.permutation(len(items))
                for lo in range(0, len(items), cfg.batch_size):
                    batches.append([items[i] for i in order[lo: lo + cfg.batch_size]])
            shuffle_rng.shuffle(batches)

            loss_sum = 0.0
            init_correct = final_correct = positions = 0
            for batch in batches:
                emb, initial, final, rows = _batch_arrays(
                    batch, store, params.get("embed")
                )
                gumbel = sample_gumbel(noise_rng, emb.shape[:2] + (nca_cfg.n_codes,))
                loss, grads, demb, stats = loss_and_grads(
                    params, emb, initial, final, t_steps, temp, gumbel,
                    cfg.w_init, cfg.w_final,
                )
                if rows is not None:
                    g_embed = np.zeros_like(params["embed"])
                    np.add.at(g_embed, rows.reshape(-1), demb.reshape(-1, demb.shape[-1]))
                    grads["embed"] = g_embed
                check_finite(grads, f"epoch {epoch}")
                optimizer.step(params, grads)

                loss_sum += loss * stats["positions"]
                init_correct += stats["initial_correct"]
                final_correct += stats["final_correct"]
                positions += stats["positions"]

            record = {
                "epoch": epoch,
                "loss": loss_sum / positions,
                "acc_initial": init_correct / positions,
                "acc_final": final_correct / positions,
                "temperature": temp,
                "t_steps": t_steps,
            }
            history.append(record)
            if log_fh:
                log_fh.write(json.dumps(record, sort_keys=True) + "\n")
                log_fh.flush()
    finally:
        if log_fh:
            log_fh.close()

    if checkpoint_path is not None:
        ordered = {name: params[name] for name in PARAM_ORDER}
        if "embed" in params:
            ordered["embed"] = params["embed"]
        meta = {
            "K": nca_cfg.n_codes,
            "D": nca_cfg.state_dim,
            "H": nca_cfg.hidden_dim,
            "C": nca_cfg.n_types,
            "E": nca_cfg.embed_dim,
        }
        config = {
            "train": cfg.to_json(),
            "nca": asdict(nca_cfg),
            "vocab": list(store.vocab) if store.trainable else None,
        }
        save_checkpoint(checkpoint_path, ordered, meta, table_hash, config)

    return params, history


def evaluate_loss(
    params: dict[str, np.ndarray],
    examples: list[Example],
    trajectories: dict[int, dict],
    store: TableStore | FileStore,
    t_steps: int,
    w_init: float = 1.0,
    w_final: float = 1.0,
) -> dict:
    """The dual objective in its deterministic limit: argmax codes, no
    noise.  This is the loss a perfectly predicting model drives to zero
    (the sampled train-time loss keeps a noise floor from code flips).
    """
    from .nca import cross_entropy, encode_batch, nca_step, readout

    buckets = _build_items(examples, trajectories, store)
    loss_sum = 0.0
    init_correct = final_correct = positions = 0
    for length in sorted(buckets):
        batch = buckets[length]
        emb, initial, final, _ = _batch_arrays(batch, store, params.get("embed"))
        state0, _ = encode_batch(params, emb, 1.0, mode="infer")
        loss0, _, pred0 = cross_entropy(readout(params, state0), initial)
        x = state0
        for _ in range(t_steps):
            x, _ = nca_step(params, x)
        loss_t, _, pred_t = cross_entropy(readout(params, x), final)
        n = initial.size
        loss_sum += (w_init * loss0 + w_final * loss_t) * n
        init_correct += int((pred0 == initial).sum())
        final_correct += int((pred_t == final).sum())
        positions += n
    return {
        "loss": loss_sum / positions,
        "acc_initial": init_correct / positions,
        "acc_final": final_correct / positions,
    }
