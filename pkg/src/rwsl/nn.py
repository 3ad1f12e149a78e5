"""Dense feed-forward network machinery: ReLU MLPs with manual backprop,
inverted dropout, decoupled-weight-decay Adam, and the two training losses.

All math is plain float64 numpy. Forward passes record everything backward
needs in a ``ForwardCache``; gradients are exact (finite-difference tested).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

# probability floor inside KL logs; avoids log(0) with negligible bias
KL_FLOOR = 1e-12


@dataclass
class MlpModel:
    """Stack of linear layers with ReLU on hidden layers, linear output."""

    layer_dims: tuple
    weights: list
    biases: list

    def parameters(self) -> list:
        return list(self.weights) + list(self.biases)

    def copy(self) -> "MlpModel":
        return MlpModel(self.layer_dims,
                        [w.copy() for w in self.weights],
                        [b.copy() for b in self.biases])


def init_mlp(layer_dims, rng: np.random.Generator) -> MlpModel:
    """Fan-scaled uniform weight init, zero biases."""
    dims = tuple(int(d) for d in layer_dims)
    if len(dims) < 2:
        raise ValueError("need at least input and output dims")
    weights, biases = [], []
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (d_in + d_out))
        weights.append(rng.uniform(-limit, limit, size=(d_in, d_out)))
        biases.append(np.zeros(d_out))
    return MlpModel(dims, weights, biases)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def row_softmax(x: np.ndarray) -> np.ndarray:
    e = np.exp(x - x.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


@dataclass
class ForwardCache:
    inputs: list            # matmul input per layer (post-dropout)
    relu_masks: list        # s > 0 per hidden layer
    masks: list             # dropout masks per hidden layer (None if unused)
    dropout: float
    training: bool
    mix_eps: float
    mixed: list             # whether a hidden layer was mixed


def mlp_forward(model: MlpModel, x: np.ndarray, dropout: float = 0.0,
                training: bool = False, rng: Optional[np.random.Generator] = None,
                masks: Optional[list] = None, mix: Optional[list] = None,
                mix_eps: float = 0.0):
    """Run the stack; returns (output, hidden activations, cache).

    Hidden activations are the post-ReLU values before mixing/dropout.
    ``mix`` optionally blends constant per-layer arrays into hidden layers:
    h~ = (1 - mix_eps) * h + mix_eps * mix[l]. Dropout uses inverted
    scaling, applied only when ``training``; pass ``masks`` to replay a
    recorded mask set (used by gradient checks).
    """
    if x.shape[1] != model.layer_dims[0]:
        raise ValueError(f"input dim {x.shape[1]} != layer dim {model.layer_dims[0]}")
    n_layers = len(model.weights)
    if mix is not None and len(mix) != n_layers - 1:
        raise ValueError(f"expected {n_layers - 1} mix arrays, got {len(mix)}")
    use_dropout = training and dropout > 0.0
    if use_dropout and rng is None and masks is None:
        raise ValueError("training dropout needs an rng or recorded masks")
    a = x
    hidden, inputs, relu_masks, mask_rec, mixed = [], [], [], [], []
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        inputs.append(a)
        s = a @ w + b
        if i == n_layers - 1:
            out = s
            break
        rmask = s > 0.0
        h = np.where(rmask, s, 0.0)
        relu_masks.append(rmask)
        hidden.append(h)
        if mix is not None:
            h = (1.0 - mix_eps) * h + mix_eps * mix[i]
            mixed.append(True)
        else:
            mixed.append(False)
        if use_dropout:
            m = masks[i] if masks is not None else (rng.random(h.shape) >= dropout)
            mask_rec.append(m)
            a = h * (m / (1.0 - dropout))
        else:
            mask_rec.append(None)
            a = h
    cache = ForwardCache(inputs, relu_masks, mask_rec, dropout,
                         use_dropout, mix_eps, mixed)
    return out, hidden, cache


@dataclass
class Grads:
    d_weights: list
    d_biases: list
    d_input: np.ndarray


def mlp_backward(model: MlpModel, cache: ForwardCache,
                 output_gradient: np.ndarray) -> Grads:
    """Exact gradients of the cached forward pass.

    ``output_gradient`` is the loss gradient w.r.t. the (linear) output.
    Mixed-in arrays are treated as constants, so their branch contributes
    the (1 - mix_eps) factor only.
    """
    n_layers = len(model.weights)
    if len(cache.inputs) != n_layers:
        raise ValueError("cache does not match model (stale forward state?)")
    d_weights = [None] * n_layers
    d_biases = [None] * n_layers
    g = output_gradient
    for i in range(n_layers - 1, -1, -1):
        d_weights[i] = cache.inputs[i].T @ g
        d_biases[i] = g.sum(axis=0)
        g = g @ model.weights[i].T
        if i > 0:
            if cache.training and cache.masks[i - 1] is not None:
                g = g * (cache.masks[i - 1] / (1.0 - cache.dropout))
            if cache.mixed[i - 1]:
                g = g * (1.0 - cache.mix_eps)
            g = g * cache.relu_masks[i - 1]
    return Grads(d_weights, d_biases, g)


# ---------------------------------------------------------------------------
# optimizer


@dataclass
class AdamWState:
    m: list
    v: list
    step: int = 0

    @classmethod
    def for_params(cls, params) -> "AdamWState":
        return cls(m=[np.zeros_like(p) for p in params],
                   v=[np.zeros_like(p) for p in params])


def adamw_step(params, grads, state: AdamWState, lr: float,
               weight_decay: float = 0.0, beta1: float = 0.9,
               beta2: float = 0.999, eps: float = 1e-8) -> None:
    """One Adam step with decoupled weight decay, updating params in place.

    Decay multiplies each parameter by (1 - lr * weight_decay) separately
    from the moment-normalized gradient step, so zero gradients leave a
    pure geometric decay trajectory.
    """
    state.step += 1
    t = state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if weight_decay:
            p *= 1.0 - lr * weight_decay
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        m_hat = m / (1.0 - beta1 ** t)
        v_hat = v / (1.0 - beta2 ** t)
        p -= lr * m_hat / (np.sqrt(v_hat) + eps)


# ---------------------------------------------------------------------------
# losses


def mse_loss(x_in: np.ndarray, x_rec: np.ndarray):
    """Reconstruction loss ||x_in - x_rec||_F^2 / (2N) and its gradient
    (x_rec - x_in) / N w.r.t. the reconstruction. N = number of rows."""
    if x_in.shape != x_rec.shape:
        raise ValueError(f"shape mismatch {x_in.shape} vs {x_rec.shape}")
    n = x_in.shape[0]
    diff = x_rec - x_in
    loss = float(np.sum(diff * diff)) / (2.0 * n)
    return loss, diff / n


def kl_divergence(t: np.ndarray, p: np.ndarray):
    """KL(t || p) summed over rows, plus the gradient w.r.t. p's pre-softmax
    logits (p - t), valid when p is a row-softmax output.

    Both arguments must be row-stochastic within 1e-6; p is floored at
    KL_FLOOR inside the log.
    """
    if t.shape != p.shape:
        raise ValueError(f"shape mismatch {t.shape} vs {p.shape}")
    for name, dist in (("t", t), ("p", p)):
        if np.any(dist < 0.0):
            raise ValueError(f"{name} has negative entries")
        if np.any(np.abs(dist.sum(axis=1) - 1.0) > 1e-6):
            raise ValueError(f"rows of {name} do not sum to 1")
    safe_p = np.maximum(p, KL_FLOOR)
    terms = np.where(t > 0.0, t * (np.log(np.maximum(t, KL_FLOOR)) - np.log(safe_p)), 0.0)
    # the true value is nonnegative; drop the summation's epsilon noise
    return max(float(terms.sum()), 0.0), p - t
