"""The learnable stack: encoder projection, discrete bottleneck, local
update dynamics, per-position readout.  Forward and hand-derived backward.

Shapes use B = batch, L = sequence length, E = embedding dim, K = codes,
D = state dim, H = hidden width, C = readout classes.  All math is
float64; checkpoints store float32.

Gradient contract (the detached rollout): of the T update steps applied
between the initial state and the final readout, only the last step
backpropagates; the state entering it is treated as a constant.  With
T = 1 that entering state is the encoder output itself, so early in the
curriculum the final-state loss reaches the encoder; afterwards the
encoder learns from the initial-type loss alone.

The straight-through bottleneck: forward uses the hard one-hot code,
backward uses the soft softmax Jacobian.  A soft-forward debug mode
exists so the backward formulas can be checked against central finite
differences (the hard path is not differentiable; the soft path is what
the estimator claims to follow).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erf

LN_EPS = 1e-5
GUMBEL_EPS = 1e-20

# checkpoint tensor order; embed (the trainable table) rides last when present
PARAM_ORDER = (
    "enc_w", "code_book", "w1", "b1", "w2", "b2", "ln_g", "ln_b", "read_w",
)


class NonFinite(FloatingPointError):
    """A forward state or gradient left the finite range."""


@dataclass(frozen=True)
class NcaConfig:
    n_types: int  # C, includes the empty symbol
    embed_dim: int  # E
    n_codes: int = 32  # K
    state_dim: int = 64  # D
    hidden_dim: int = 128  # H
    t_max: int = 60

    @property
    def shapes(self) -> dict[str, tuple[int, ...]]:
        e, k, d, h, c = (
            self.embed_dim, self.n_codes, self.state_dim,
            self.hidden_dim, self.n_types,
        )
        return {
            "enc_w": (e, k),
            "code_book": (k, d),
            "w1": (3 * d, h),
            "b1": (h,),
            "w2": (h, d),
            "b2": (d,),
            "ln_g": (d,),
            "ln_b": (d,),
            "read_w": (d, c),
        }


def init_params(cfg: NcaConfig, seed: int = 0) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(seed)

    def xavier(shape: tuple[int, ...]) -> np.ndarray:
        scale = np.sqrt(2.0 / (shape[0] + shape[-1]))
        return rng.standard_normal(shape) * scale

    shapes = cfg.shapes
    return {
        "enc_w": xavier(shapes["enc_w"]),
        # unit-variance codes match the scale of LayerNormed states
        "code_book": rng.standard_normal(shapes["code_book"]),
        "w1": xavier(shapes["w1"]),
        "b1": np.zeros(shapes["b1"]),
        "w2": xavier(shapes["w2"]),
        "b2": np.zeros(shapes["b2"]),
        "ln_g": np.ones(shapes["ln_g"]),
        "ln_b": np.zeros(shapes["ln_b"]),
        "read_w": xavier(shapes["read_w"]),
    }


def param_count(params: dict[str, np.ndarray]) -> int:
    return int(sum(p.size for p in params.values()))


def check_finite(named: dict[str, np.ndarray], where: str) -> None:
    for name, arr in named.items():
        if not np.all(np.isfinite(arr)):
            raise NonFinite(f"{where}: non-finite values in {name}")


# ---------------------------------------------------------------------------
# Primitives

_SQRT2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def _gelu(h: np.ndarray) -> np.ndarray:
    return 0.5 * h * (1.0 + erf(h / _SQRT2))


def _gelu_grad(h: np.ndarray) -> np.ndarray:
    phi_cdf = 0.5 * (1.0 + erf(h / _SQRT2))
    phi_pdf = np.exp(-0.5 * h * h) * _INV_SQRT_2PI
    return phi_cdf + h * phi_pdf


def softmax(a: np.ndarray) -> np.ndarray:
    m = a.max(axis=-1, keepdims=True)
    e = np.exp(a - m)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(
    logits: np.ndarray, targets: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean CE over all positions.  Returns (loss, dlogits, argmax)."""
    flat = logits.reshape(-1, logits.shape[-1])
    t = targets.reshape(-1)
    m = flat.max(axis=-1, keepdims=True)
    z = flat - m
    log_z = np.log(np.exp(z).sum(axis=-1, keepdims=True))
    logp = z - log_z
    n = flat.shape[0]
    loss = -float(logp[np.arange(n), t].mean())
    d = np.exp(logp)
    d[np.arange(n), t] -= 1.0
    d /= n
    return loss, d.reshape(logits.shape), flat.argmax(axis=-1).reshape(targets.shape)


# ---------------------------------------------------------------------------
# Local update step

def _windows(x: np.ndarray) -> np.ndarray:
    """[B, L, D] -> [B, L, 3D] width-3 windows with zero boundary padding."""
    b, length, d = x.shape
    pad = np.zeros((b, 1, d))
    xe = np.concatenate([pad, x, pad], axis=1)
    return np.concatenate([xe[:, :-2], xe[:, 1:-1], xe[:, 2:]], axis=-1)


def _windows_backward(dw: np.ndarray) -> np.ndarray:
    d = dw.shape[-1] // 3
    dx = dw[:, :, d: 2 * d].copy()
    dx[:, :-1] += dw[:, 1:, :d]
    dx[:, 1:] += dw[:, :-1, 2 * d:]
    return dx


def nca_step(
    params: dict[str, np.ndarray], x: np.ndarray, need_cache: bool = False
) -> tuple[np.ndarray, dict | None]:
    """One shared local update: window-3 linear, GELU, linear, Tanh, LN.

    Full state replacement; strictly local (radius 1 per step).
    """
    w = _windows(x)
    h = w @ params["w1"] + params["b1"]
    g = _gelu(h)
    u = g @ params["w2"] + params["b2"]
    t = np.tanh(u)
    mu = t.mean(axis=-1, keepdims=True)
    var = t.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    n = (t - mu) * inv
    y = n * params["ln_g"] + params["ln_b"]
    cache = {"w": w, "h": h, "g": g, "t": t, "inv": inv, "n": n} if need_cache else None
    return y, cache


def nca_step_backward(
    params: dict[str, np.ndarray], cache: dict, dy: np.ndarray
) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Backward through one step.  Returns (dx, parameter gradients)."""
    n, inv, t = cache["n"], cache["inv"], cache["t"]
    d_ln_g = (dy * n).sum(axis=(0, 1))
    d_ln_b = dy.sum(axis=(0, 1))
    dn = dy * params["ln_g"]
    dt = inv * (
        dn
        - dn.mean(axis=-1, keepdims=True)
        - n * (dn * n).mean(axis=-1, keepdims=True)
    )
    du = dt * (1.0 - t * t)
    g, h, w = cache["g"], cache["h"], cache["w"]
    gh = g.reshape(-1, g.shape[-1])
    d_w2 = gh.T @ du.reshape(-1, du.shape[-1])
    d_b2 = du.sum(axis=(0, 1))
    dg = du @ params["w2"].T
    dh = dg * _gelu_grad(h)
    wf = w.reshape(-1, w.shape[-1])
    d_w1 = wf.T @ dh.reshape(-1, dh.shape[-1])
    d_b1 = dh.sum(axis=(0, 1))
    dw = dh @ params["w1"].T
    dx = _windows_backward(dw)
    grads = {
        "w1": d_w1, "b1": d_b1, "w2": d_w2, "b2": d_b2,
        "ln_g": d_ln_g, "ln_b": d_ln_b,
    }
    return dx, grads


def rollout(
    params: dict[str, np.ndarray], x0: np.ndarray, t_steps: int
) -> tuple[np.ndarray, np.ndarray]:
    """Apply t_steps updates; returns (entering state, final state).

    The entering state (input to the last step) is what the backward pass
    treats as constant.  t_steps = 1 returns (x0, step(x0)).
    """
    if t_steps < 1:
        raise ValueError("rollout needs at least one step")
    x = x0
    for _ in range(t_steps - 1):
        x, _ = nca_step(params, x)
    if not np.all(np.isfinite(x)):
        raise NonFinite("rollout produced non-finite state")
    y, _ = nca_step(params, x)
    return x, y


# ---------------------------------------------------------------------------
# Encoder: projection + straight-through discrete bottleneck

def sample_gumbel(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    u = rng.random(shape)
    return -np.log(-np.log(u + GUMBEL_EPS) + GUMBEL_EPS)


def _one_hot(idx: np.ndarray, k: int) -> np.ndarray:
    out = np.zeros(idx.shape + (k,))
    np.put_along_axis(out, idx[..., None], 1.0, axis=-1)
    return out


def encode_batch(
    params: dict[str, np.ndarray],
    emb: np.ndarray,
    temperature: float,
    mode: str = "train",
    gumbel: np.ndarray | None = None,
    soft_forward: bool = False,
) -> tuple[np.ndarray, dict]:
    """[B, L, E] embeddings -> (state0 [B, L, D], cache).

    train: Gumbel-Softmax with straight-through (hard forward, soft
    gradient); infer: argmax of the clean logits, noise- and
    temperature-free.  soft_forward is the differentiable debug path.
    """
    logits = emb @ params["enc_w"]
    k = logits.shape[-1]
    if mode == "infer":
        hard = _one_hot(logits.argmax(axis=-1), k)
        state0 = hard @ params["code_book"]
        return state0, {"codes": hard}
    if gumbel is None:
        raise ValueError("train mode needs gumbel noise")
    a = (logits + gumbel) / temperature
    soft = softmax(a)
    hard = _one_hot(a.argmax(axis=-1), k)
    used = soft if soft_forward else hard
    state0 = used @ params["code_book"]
    cache = {
        "emb": emb, "soft": soft, "used": used,
        "temperature": temperature, "codes": hard,
    }
    return state0, cache


def encode_backward(
    params: dict[str, np.ndarray], cache: dict, dstate0: np.ndarray
) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Straight-through backward.  Returns (demb, gradients)."""
    used, soft = cache["used"], cache["soft"]
    d_code_book = used.reshape(-1, used.shape[-1]).T @ dstate0.reshape(
        -1, dstate0.shape[-1]
    )
    dsoft = dstate0 @ params["code_book"].T
    da = soft * (dsoft - (dsoft * soft).sum(axis=-1, keepdims=True))
    dlogits = da / cache["temperature"]
    demb = dlogits @ params["enc_w"].T
    emb = cache["emb"]
    d_enc_w = emb.reshape(-1, emb.shape[-1]).T @ dlogits.reshape(
        -1, dlogits.shape[-1]
    )
    return demb, {"enc_w": d_enc_w, "code_book": d_code_book}


# ---------------------------------------------------------------------------
# Readout and the full supervised loss

def readout(params: dict[str, np.ndarray], x: np.ndarray) -> np.ndarray:
    """Per-position logits; no bias, no cross-position interaction."""
    return x @ params["read_w"]


def loss_and_grads(
    params: dict[str, np.ndarray],
    emb: np.ndarray,
    initial: np.ndarray,
    final: np.ndarray,
    t_steps: int,
    temperature: float,
    gumbel: np.ndarray | None,
    w_init: float = 1.0,
    w_final: float = 1.0,
    soft_forward: bool = False,
) -> tuple[float, dict[str, np.ndarray], np.ndarray, dict]:
    """Dual-point supervision on one exact-length batch.

    loss = w_init * CE(readout(state0), initial)
         + w_final * CE(readout(rollout(state0, T)), final)

    Returns (loss, grads, demb, stats).  demb feeds the trainable
    embedding table when one is in use.
    """
    if t_steps < 1:
        raise ValueError("need at least one update step")
    state0, enc_cache = encode_batch(
        params, emb, temperature, "train", gumbel, soft_forward
    )
    logits0 = readout(params, state0)
    loss0, dlogits0, pred0 = cross_entropy(logits0, initial)

    enter = state0
    for _ in range(t_steps - 1):
        enter, _ = nca_step(params, enter)
    if not np.all(np.isfinite(enter)):
        raise NonFinite("rollout produced non-finite state")
    x_final, step_cache = nca_step(params, enter, need_cache=True)
    logits_t = readout(params, x_final)
    loss_t, dlogits_t, pred_t = cross_entropy(logits_t, final)

    loss = w_init * loss0 + w_final * loss_t
    dlogits0 = dlogits0 * w_init
    dlogits_t = dlogits_t * w_final

    d_read_w = (
        state0.reshape(-1, state0.shape[-1]).T
        @ dlogits0.reshape(-1, dlogits0.shape[-1])
        + x_final.reshape(-1, x_final.shape[-1]).T
        @ dlogits_t.reshape(-1, dlogits_t.shape[-1])
    )
    d_final = dlogits_t @ params["read_w"].T
    d_enter, step_grads = nca_step_backward(params, step_cache, d_final)

    dstate0 = dlogits0 @ params["read_w"].T
    if t_steps == 1:
        dstate0 = dstate0 + d_enter  # entering state IS the encoder output
    demb, enc_grads = encode_backward(params, enc_cache, dstate0)

    grads = {**enc_grads, **step_grads, "read_w": d_read_w}
    stats = {
        "loss_initial": loss0,
        "loss_final": loss_t,
        "initial_correct": int((pred0 == initial).sum()),
        "final_correct": int((pred_t == final).sum()),
        "positions": int(initial.size),
    }
    return loss, grads, demb, stats


def predict(
    params: dict[str, np.ndarray], emb: np.ndarray, t_steps: int
) -> tuple[np.ndarray, np.ndarray]:
    """Inference: (initial type ids, final type ids), both [B, L]."""
    state0, _ = encode_batch(params, emb, 1.0, mode="infer")
    pred0 = readout(params, state0).argmax(axis=-1)
    _, x_final = rollout(params, state0, t_steps)
    pred_t = readout(params, x_final).argmax(axis=-1)
    return pred0, pred_t
