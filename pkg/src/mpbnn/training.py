"""Reverse-mode gradients through the moment pass, and the SGD loop.

Every layer's backward rule is hand-derived from its forward moment
formulas, including the dependence of the gated activation's rates on the
input statistics.  Key identities used below, with α = μ/σ, Φ/φ the
standard normal CDF/PDF, q = Φ(α) the keep probability:

    gated:  ∂q/∂μ = φ(α)/σ,      ∂q/∂var = -φ(α)·α/(2·var)
    rect.:  ∂mean'/∂μ = Φ(α),    ∂mean'/∂var = φ(α)/(2σ)
            ∂E[r²]/∂μ = 2·mean', ∂E[r²]/∂var = Φ(α)
            ⇒ ∂var'/∂μ = 2·mean'·(1-Φ), ∂var'/∂var = Φ - mean'·φ/σ

Where σ is below the deterministic floor the rates/gains are constants of
the input and their derivative terms are zero (the rectifier-limit
subgradient convention).

Finite differences are kept as a test oracle only; this module is the
production gradient path.
"""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass

import numpy as np

from . import moments, objective
from .moments import FULL
from .network import (
    DENSE,
    DROPOUT,
    HEAD_HETEROSCEDASTIC,
    MP_GELU,
    ModelConfig,
    ParameterSet,
    forward_batch,
    init_parameters,
)

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def single_thread_blas():
    """Pin BLAS to one thread; threaded GEMM loses badly on these tiny shapes."""
    try:
        from threadpoolctl import threadpool_limits

        return threadpool_limits(limits=1)
    except ImportError:
        return contextlib.nullcontext()


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float
    epochs: int
    batch_size: int
    seed: int

    def __post_init__(self):
        if not self.learning_rate > 0.0:
            raise ValueError(f"learning rate must be positive, got {self.learning_rate}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch size must be >= 1, got {self.batch_size}")


@dataclass
class GradientSet:
    """Loss gradients, shaped exactly like a ParameterSet."""

    weights: list
    biases: list


# ---------------------------------------------------------------------------
# Per-layer backward kernels.  Adjoint conventions: g_mean is dL/d(mean) with
# shape (B, n); g_cov is dL/d(cov) over the raw stored entries, (B, n, n) in
# full mode (not assumed symmetric) or (B, n) in diag mode.
# ---------------------------------------------------------------------------


def _dense_bwd(ctx, g_mean, g_cov, mode):
    in_mean, in_cov, w, swt = ctx
    g_mean_in = g_mean @ w
    g_b = g_mean.sum(axis=0)
    g_w = g_mean.T @ in_mean
    if mode == FULL:
        g_sym = 0.5 * (g_cov + np.swapaxes(g_cov, -1, -2))
        gw_stack = moments._stack_rmul(g_sym, w)
        # wᵀ g w = (g w)ᵀ w for symmetric g
        g_cov_in = moments._stack_rmul(gw_stack.transpose(0, 2, 1), w)
        # Σ_b g_b (W Σ_b), with (W Σ_b) = (Σ_b Wᵀ)ᵀ from the forward cache
        g_w += 2.0 * np.tensordot(g_sym, swt, axes=([0, 2], [0, 2]))
    else:
        g_cov_in = g_cov @ (w * w)
        g_w += 2.0 * w * (g_cov.T @ in_cov)
    return g_mean_in, g_cov_in, g_w, g_b


def _dropout_bwd(ctx, g_mean, g_cov, mode):
    in_mean, p = ctx
    q = 1.0 - p
    if mode == FULL:
        g_diag = np.einsum("bii->bi", g_cov)
        g_mean_in = q * g_mean + g_diag * (2.0 * p * q * in_mean)
        g_cov_in = (q * q) * g_cov
        np.einsum("bii->bi", g_cov_in)[...] = q * g_diag
    else:
        g_mean_in = q * g_mean + g_cov * (2.0 * p * q * in_mean)
        g_cov_in = q * g_cov
    return g_mean_in, g_cov_in


def _gate_rate_derivs(mean, var, sigma, det):
    """(∂q/∂μ, ∂q/∂var) for q = Φ(μ/σ); zero in the deterministic limit."""
    safe_sigma = np.where(det, 1.0, sigma)
    safe_var = np.where(det, 1.0, var)
    alpha = mean / safe_sigma
    pdf = _INV_SQRT_2PI * np.exp(-0.5 * alpha * alpha)
    dq_dmu = np.where(det, 0.0, pdf / safe_sigma)
    dq_dvar = np.where(det, 0.0, -pdf * alpha / (2.0 * safe_var))
    return dq_dmu, dq_dvar


def _offdiag_gain_adjoint(g_cov, in_cov, gain):
    """dL/d(gain_i) from off-diagonal terms cov'_ij = gain_i gain_j cov_ij."""
    m = (g_cov + np.swapaxes(g_cov, -1, -2)) * in_cov
    return np.matmul(m, gain[..., None])[..., 0] - np.einsum("bii->bi", m) * gain


def _mp_gelu_bwd(ctx, g_mean, g_cov, mode):
    mean, var, in_cov, p, q, sigma, det = ctx
    dq_dmu, dq_dvar = _gate_rate_derivs(mean, var, sigma, det)
    if mode == FULL:
        g_diag = np.einsum("bii->bi", g_cov)
        g_q = _offdiag_gain_adjoint(g_cov, in_cov, q)
    else:
        g_diag = g_cov
        g_q = np.zeros_like(g_cov)
    # var' = q·var + (q - q²)·μ²  ⇒  ∂var'/∂q = var + (1 - 2q)·μ²
    g_q += g_mean * mean + g_diag * (var + (1.0 - 2.0 * q) * mean * mean)
    g_mean_in = q * g_mean + g_diag * (2.0 * p * q * mean) + g_q * dq_dmu
    g_var_in = q * g_diag + g_q * dq_dvar
    if mode == FULL:
        g_cov_in = g_cov * (q[:, :, None] * q[:, None, :])
        np.einsum("bii->bi", g_cov_in)[...] = g_var_in
    else:
        g_cov_in = g_var_in
    return g_mean_in, g_cov_in


def _relu_bwd(ctx, g_mean, g_cov, mode):
    mean, var, in_cov, sigma, det, cdf, pdf, out_mean = ctx
    safe_sigma = np.where(det, 1.0, sigma)
    safe_var = np.where(det, 1.0, var)
    alpha = mean / safe_sigma
    dm_dvar = np.where(det, 0.0, pdf / (2.0 * safe_sigma))
    dv_dmu = 2.0 * out_mean * (1.0 - cdf)
    dv_dvar = np.where(det, 0.0, cdf - out_mean * pdf / safe_sigma)
    if mode == FULL:
        g_diag = np.einsum("bii->bi", g_cov)
        g_gain = _offdiag_gain_adjoint(g_cov, in_cov, cdf)
        dgain_dmu = np.where(det, 0.0, pdf / safe_sigma)
        dgain_dvar = np.where(det, 0.0, -pdf * alpha / (2.0 * safe_var))
        g_mean_in = g_mean * cdf + g_diag * dv_dmu + g_gain * dgain_dmu
        g_var_in = g_mean * dm_dvar + g_diag * dv_dvar + g_gain * dgain_dvar
        g_cov_in = g_cov * (cdf[:, :, None] * cdf[:, None, :])
        np.einsum("bii->bi", g_cov_in)[...] = g_var_in
    else:
        g_mean_in = g_mean * cdf + g_cov * dv_dmu
        g_cov_in = g_mean * dm_dvar + g_cov * dv_dvar
    return g_mean_in, g_cov_in


def _forward_tape(config, params, xs):
    """Batched forward pass recording per-layer backward contexts."""
    mode = config.covariance_mode
    mean = np.asarray(xs, dtype=float)
    cov = moments._zero_cov(mean.shape[0], mean.shape[1], mode)
    tape = []
    dense_i = 0
    for layer_i, layer in enumerate(config.layers):
        if layer.kind == DENSE:
            mean, cov, ctx = moments._dense_fwd(
                mean, cov, params.weights[dense_i], params.biases[dense_i], mode
            )
            tape.append((layer_i, layer.kind, dense_i, ctx))
            dense_i += 1
        elif layer.kind == DROPOUT:
            mean, cov, ctx = moments._dropout_fwd(mean, cov, layer.rate, mode)
            tape.append((layer_i, layer.kind, None, ctx))
        elif layer.kind == MP_GELU:
            mean, cov, ctx = moments._mp_gelu_fwd(mean, cov, mode)
            tape.append((layer_i, layer.kind, None, ctx))
        else:
            mean, cov, ctx = moments._relu_fwd(mean, cov, mode)
            tape.append((layer_i, layer.kind, None, ctx))
    return mean, cov, tape


def loss_and_gradients(config: ModelConfig, params: ParameterSet, xs, ys):
    """Mean negative expected log-likelihood over a batch, with exact gradients.

    Returns (loss, GradientSet); the .grad_* accumulators on `params` are
    overwritten with the same values.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim != 2 or xs.shape[0] == 0:
        raise ValueError("batch must be a non-empty (B, Q) array")
    if ys.shape != (xs.shape[0],):
        raise ValueError(f"labels shape {ys.shape} does not match batch {xs.shape}")
    mode = config.covariance_mode
    batch = xs.shape[0]

    mean, cov, tape = _forward_tape(config, params, xs)
    if config.head == HEAD_HETEROSCEDASTIC:
        ell, octx = objective._ell2_fwd(mean, cov, ys, mode)
        g_mean, g_cov = objective._ell2_bwd(octx, np.full(batch, -1.0 / batch))
    else:
        ell, octx = objective._ell1_fwd(mean, cov, ys, mode)
        g_mean, g_cov = objective._ell1_bwd(octx, np.full(batch, -1.0 / batch))
    loss = -float(np.mean(ell))
    if not math.isfinite(loss):
        raise FloatingPointError("non-finite training loss")

    grads = GradientSet(
        [np.zeros_like(w) for w in params.weights],
        [np.zeros_like(b) for b in params.biases],
    )
    for layer_i, kind, dense_i, ctx in reversed(tape):
        if kind == DENSE:
            g_mean, g_cov, g_w, g_b = _dense_bwd(ctx, g_mean, g_cov, mode)
            grads.weights[dense_i] = g_w
            grads.biases[dense_i] = g_b
            if not (np.all(np.isfinite(g_w)) and np.all(np.isfinite(g_b))):
                raise FloatingPointError(f"non-finite gradient in layer {layer_i} (dense)")
        elif kind == DROPOUT:
            g_mean, g_cov = _dropout_bwd(ctx, g_mean, g_cov, mode)
        elif kind == MP_GELU:
            g_mean, g_cov = _mp_gelu_bwd(ctx, g_mean, g_cov, mode)
        else:
            g_mean, g_cov = _relu_bwd(ctx, g_mean, g_cov, mode)
        if not np.all(np.isfinite(g_mean)):
            raise FloatingPointError(f"non-finite gradient in layer {layer_i} ({kind})")

    for gw, gb, pw, pb in zip(grads.weights, grads.biases, params.grad_weights, params.grad_biases):
        pw[...] = gw
        pb[...] = gb
    return loss, grads


def sgd_step(params: ParameterSet, grads: GradientSet, lr: float) -> ParameterSet:
    """Plain SGD: w ← w − lr·g.  No momentum, no weight decay.  In place."""
    for w, g in zip(params.weights, grads.weights):
        w -= lr * g
    for b, g in zip(params.biases, grads.biases):
        b -= lr * g
    return params


def train(config: ModelConfig, train_config: TrainConfig, xs, ys, params=None):
    """Seeded epoch loop over shuffled mini-batches.

    Shuffling is a fresh full permutation per epoch; the last batch may be
    short.  Returns (params, per-epoch mean loss trace).  When `params` is
    None they are initialized from the training seed.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    n = xs.shape[0]
    if n == 0:
        raise ValueError("empty training set")
    init_ss, shuffle_ss = np.random.SeedSequence(train_config.seed).spawn(2)
    if params is None:
        params = init_parameters(config, init_ss)
    rng = np.random.default_rng(shuffle_ss)
    bs = train_config.batch_size
    trace = []
    with single_thread_blas():
        for _ in range(train_config.epochs):
            perm = rng.permutation(n)
            total = 0.0
            for start in range(0, n, bs):
                idx = perm[start : start + bs]
                loss, grads = loss_and_gradients(config, params, xs[idx], ys[idx])
                sgd_step(params, grads, train_config.learning_rate)
                total += loss * idx.size
            trace.append(total / n)
    return params, trace


def evaluate_model(config: ModelConfig, params: ParameterSet, xs, ys):
    """Mean predictive NLL and RMSE over a dataset (standardized space)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    mean, cov = forward_batch(config, params, xs)
    pm, pv = objective._predictive_batch(mean, cov, config.head, config.covariance_mode)
    nll = 0.5 * (objective.LOG_2PI + np.log(pv) + (ys - pm) ** 2 / pv)
    return {
        "nll": float(np.mean(nll)),
        "rmse": objective.rmse(pm, ys),
        "pred_mean": pm,
        "pred_var": pv,
    }
