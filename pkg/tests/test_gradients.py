"""Finite-difference oracle for every hand-derived gradient, plus the
structural invariants of the update dynamics.

Central differences with step 1e-5 in float64; per-tensor relative error
must stay below 1e-4.  A reduced profile (D=8, K=8, H=16, L<=6) keeps
the sweeps cheap.  The discrete bottleneck is checked on the soft
forward path with frozen noise: that path is differentiable, and its
gradient is exactly what the straight-through estimator backpropagates.

The detached-rollout contract gets its own sweep: with T > 1 the
analytic gradients must match finite differences of a loss in which the
state entering the last step is frozen at its unperturbed value.
"""
from __future__ import annotations

import numpy as np
import pytest

from cellparse.nca import (
    NcaConfig,
    NonFinite,
    check_finite,
    cross_entropy,
    encode_batch,
    init_params,
    loss_and_grads,
    nca_step,
    param_count,
    predict,
    readout,
    rollout,
    sample_gumbel,
)

FD_STEP = 1e-5
TOL = 1e-4

B, L = 2, 4
CFG = NcaConfig(n_types=5, embed_dim=6, n_codes=8, state_dim=8, hidden_dim=16)
W_INIT, W_FINAL = 0.7, 1.3
TAU = 0.7


def fd_grad(f, x: np.ndarray) -> np.ndarray:
    """Central differences, mutating x in place one entry at a time."""
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = x[idx]
        x[idx] = orig + FD_STEP
        fp = f()
        x[idx] = orig - FD_STEP
        fm = f()
        x[idx] = orig
        g[idx] = (fp - fm) / (2.0 * FD_STEP)
    return g


def rel_err(analytic: np.ndarray, fd: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(fd))), 1e-8)
    return float(np.max(np.abs(analytic - fd))) / scale


def make_problem(seed: int = 3):
    rng = np.random.default_rng(seed)
    params = init_params(CFG, seed=seed)
    emb = rng.standard_normal((B, L, CFG.embed_dim))
    initial = rng.integers(0, CFG.n_types, size=(B, L))
    final = rng.integers(0, CFG.n_types, size=(B, L))
    gumbel = sample_gumbel(np.random.default_rng(seed + 1), (B, L, CFG.n_codes))
    return params, emb, initial, final, gumbel


# ---------------------------------------------------------------------------
# Gradient checks against central finite differences

def test_gradcheck_every_tensor_t1():
    params, emb, initial, final, gumbel = make_problem()

    def f():
        return loss_and_grads(
            params, emb, initial, final, 1, TAU, gumbel,
            W_INIT, W_FINAL, soft_forward=True,
        )[0]

    _, grads, demb, _ = loss_and_grads(
        params, emb, initial, final, 1, TAU, gumbel,
        W_INIT, W_FINAL, soft_forward=True,
    )
    for name in params:
        err = rel_err(grads[name], fd_grad(f, params[name]))
        assert err < TOL, f"{name}: rel err {err:.2e}"
    err = rel_err(demb, fd_grad(f, emb))
    assert err < TOL, f"embeddings: rel err {err:.2e}"


def test_gradcheck_detached_rollout_t3():
    """Analytic grads must match FD with the entering state frozen."""
    t_steps = 3
    params, emb, initial, final, gumbel = make_problem(seed=5)

    state0, _ = encode_batch(params, emb, TAU, "train", gumbel, soft_forward=True)
    enter = state0
    for _ in range(t_steps - 1):
        enter, _ = nca_step(params, enter)
    enter_frozen = enter.copy()

    def f_frozen():
        s0, _ = encode_batch(params, emb, TAU, "train", gumbel, soft_forward=True)
        loss0, _, _ = cross_entropy(readout(params, s0), initial)
        x_final, _ = nca_step(params, enter_frozen)
        loss_t, _, _ = cross_entropy(readout(params, x_final), final)
        return W_INIT * loss0 + W_FINAL * loss_t

    _, grads, demb, _ = loss_and_grads(
        params, emb, initial, final, t_steps, TAU, gumbel,
        W_INIT, W_FINAL, soft_forward=True,
    )
    for name in params:
        err = rel_err(grads[name], fd_grad(f_frozen, params[name]))
        assert err < TOL, f"{name}: rel err {err:.2e}"
    err = rel_err(demb, fd_grad(f_frozen, emb))
    assert err < TOL, f"embeddings: rel err {err:.2e}"


def test_encoder_gradient_routing_by_horizon():
    """Final loss reaches the encoder at T=1 and only then."""
    params, emb, initial, final, gumbel = make_problem(seed=9)
    _, g1, demb1, _ = loss_and_grads(
        params, emb, initial, final, 1, TAU, gumbel, w_init=0.0, w_final=1.0
    )
    assert np.abs(g1["enc_w"]).max() > 0
    assert np.abs(demb1).max() > 0

    _, g3, demb3, _ = loss_and_grads(
        params, emb, initial, final, 3, TAU, gumbel, w_init=0.0, w_final=1.0
    )
    assert np.abs(g3["enc_w"]).max() == 0
    assert np.abs(g3["code_book"]).max() == 0
    assert np.abs(demb3).max() == 0


def test_zero_final_weight_kills_update_grads():
    params, emb, initial, final, gumbel = make_problem(seed=11)
    _, grads, _, _ = loss_and_grads(
        params, emb, initial, final, 4, TAU, gumbel, w_init=1.0, w_final=0.0
    )
    for name in ("w1", "b1", "w2", "b2", "ln_g", "ln_b"):
        assert np.abs(grads[name]).max() == 0, name


# ---------------------------------------------------------------------------
# Structural invariants of the update step

def test_uniform_logits_cross_entropy_is_log_c():
    logits = np.zeros((3, 4, CFG.n_types))
    targets = np.zeros((3, 4), dtype=int)
    loss, _, _ = cross_entropy(logits, targets)
    assert abs(loss - np.log(CFG.n_types)) < 1e-12


def test_zero_grid_gives_zero_logits():
    params = init_params(CFG, seed=0)
    x = np.zeros((1, 5, CFG.state_dim))
    assert np.all(readout(params, x) == 0.0)


def test_all_zero_grid_gives_constant_output():
    params = init_params(CFG, seed=1)
    y, _ = nca_step(params, np.zeros((1, 6, CFG.state_dim)))
    assert np.allclose(y, y[:, :1, :])


def test_locality_cone():
    """A perturbation at position j cannot reach beyond j +- t in t steps."""
    rng = np.random.default_rng(2)
    params = init_params(CFG, seed=2)
    length, j = 13, 6
    x = rng.standard_normal((1, length, CFG.state_dim))
    x2 = x.copy()
    x2[0, j] += rng.standard_normal(CFG.state_dim)
    for t in (1, 3, 5):
        a, b = x, x2
        for _ in range(t):
            a, _ = nca_step(params, a)
            b, _ = nca_step(params, b)
        inside = np.arange(length)[np.abs(np.arange(length) - j) <= t]
        outside = np.arange(length)[np.abs(np.arange(length) - j) > t]
        assert np.array_equal(a[:, outside], b[:, outside]), f"t={t} leaked"
        assert not np.allclose(a[:, inside], b[:, inside]), f"t={t} inert"


def test_rollout_composition_and_single_step():
    rng = np.random.default_rng(4)
    params = init_params(CFG, seed=4)
    x0 = rng.standard_normal((2, 5, CFG.state_dim))

    enter, final = rollout(params, x0, 1)
    step_out, _ = nca_step(params, x0)
    assert np.array_equal(enter, x0)
    assert np.array_equal(final, step_out)

    x = x0
    for _ in range(5):
        x, _ = nca_step(params, x)
    _, final5 = rollout(params, x0, 5)
    assert np.array_equal(final5, x)


def test_long_rollout_stays_finite():
    rng = np.random.default_rng(6)
    params = init_params(CFG, seed=6)
    x0 = rng.standard_normal((2, 7, CFG.state_dim)) * 3.0
    _, final = rollout(params, x0, 60)
    assert np.all(np.isfinite(final))


def test_inference_is_deterministic():
    rng = np.random.default_rng(8)
    params = init_params(CFG, seed=8)
    emb = rng.standard_normal((2, 6, CFG.embed_dim))
    a0, at = predict(params, emb, 7)
    b0, bt = predict(params, emb, 7)
    assert np.array_equal(a0, b0) and np.array_equal(at, bt)
    s1, _ = encode_batch(params, emb, 0.5, mode="infer")
    s2, _ = encode_batch(params, emb, 99.0, mode="infer")
    assert np.array_equal(s1, s2)


def test_high_temperature_softmax_near_uniform():
    params, emb, _, _, gumbel = make_problem(seed=13)
    _, cache = encode_batch(params, emb, 1e6, "train", gumbel)
    assert np.abs(cache["soft"] - 1.0 / CFG.n_codes).max() < 1e-3


def test_hard_mode_codes_are_one_hot():
    params, emb, initial, final, gumbel = make_problem(seed=15)
    state0, cache = encode_batch(params, emb, TAU, "train", gumbel)
    codes = cache["codes"]
    assert np.all(codes.sum(axis=-1) == 1.0)
    assert np.all((codes == 0) | (codes == 1))
    loss, grads, _, _ = loss_and_grads(
        params, emb, initial, final, 2, TAU, gumbel
    )
    assert np.isfinite(loss)
    check_finite(grads, "test")


def test_param_count_inside_budget():
    cfg = NcaConfig(n_types=25, embed_dim=768, n_codes=32, state_dim=64,
                    hidden_dim=192)
    n = param_count(init_params(cfg, seed=0))
    assert 81_000 * 0.8 <= n <= 81_000 * 1.2, n


def test_non_finite_state_raises():
    params = init_params(CFG, seed=10)
    params["ln_b"] = params["ln_b"] + np.nan
    x0 = np.zeros((1, 4, CFG.state_dim))
    with pytest.raises(NonFinite):
        rollout(params, x0, 2)


def test_check_finite_rejects_bad_grads():
    with pytest.raises(NonFinite):
        check_finite({"w": np.array([1.0, np.inf])}, "unit")
