"""Self-supervised co-training of the autoencoder and the cluster DNN.

``pretrain_autoencoder`` fits a symmetric MLP autoencoder on reconstruction
loss. ``train_rwsl`` then runs the co-train loop: per iteration the encoder
activations are snapshotted, the target distribution is refreshed from the
encoder's soft assignments on a fixed cadence, and each mini-batch jointly
updates encoder, decoder and DNN on

    total = reconstruction + beta * KL(target || dnn) + gamma * KL(target || encoder)

where the DNN's hidden layers blend in the snapshot encoder activations
with weight ``epsilon_mix``. Snapshot activations are recomputed per batch
from the frozen iteration-start parameters, so memory stays batch-bounded
while every batch in an iteration sees the same blend values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .clustering import (ClusterState, dead_cluster_count, hard_assign, kmeans,
                         soft_assign, soft_assign_kl_grad, target_distribution)
from .errors import DivergenceError
from .graph import CsrGraph, as_features, as_labels
from .nn import (AdamWState, MlpModel, adamw_step, init_mlp, kl_divergence,
                 mlp_backward, mlp_forward, mse_loss, row_softmax)


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters; defaults follow the citation-network setup.

    ``architecture`` lists encoder layer widths after the input layer, the
    last entry being the embedding width. The co-train DNN mirrors the
    hidden widths and ends in a K-way output. ``ae_input`` selects whether
    the autoencoder consumes filtered or raw attributes (the co-train DNN
    always consumes filtered ones). ``kmeans_sample_cap`` optionally bounds
    the number of embeddings used for centroid initialization (0 = all);
    large-graph benchmarks use it to keep init memory flat.
    """

    architecture: tuple = (512, 2048, 32)
    learning_rate: float = 1e-4
    pretrain_lr: float = 1e-4
    n_epochs: int = 100
    pretrain_n_epochs: int = 30
    batch_size: int = 256
    beta: float = 0.01
    gamma_loss: float = 0.1
    epsilon_mix: float = 0.2
    v_dof: float = 1.0
    update_p: int = 1
    dropout_rate: float = 0.01
    weight_decay: float = 0.01
    seed: int = 0
    ae_input: str = "filtered"
    kmeans_sample_cap: int = 0
    kmeans_max_iters: int = 100

    def __post_init__(self):
        arch = tuple(int(d) for d in self.architecture)
        object.__setattr__(self, "architecture", arch)
        if not arch or any(d < 1 for d in arch):
            raise ValueError("architecture must be a non-empty tuple of widths >= 1")
        if self.learning_rate <= 0 or self.pretrain_lr <= 0:
            raise ValueError("learning rates must be positive")
        if self.n_epochs < 0 or self.pretrain_n_epochs < 0:
            raise ValueError("epoch counts must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.beta < 0 or self.gamma_loss < 0:
            raise ValueError("loss weights must be >= 0")
        if not 0.0 <= self.epsilon_mix <= 1.0:
            raise ValueError("epsilon_mix must be in [0, 1]")
        if self.v_dof <= 0:
            raise ValueError("v_dof must be positive")
        if self.update_p < 1:
            raise ValueError("update_p must be >= 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")
        if self.ae_input not in ("filtered", "raw"):
            raise ValueError("ae_input must be 'filtered' or 'raw'")
        if self.kmeans_sample_cap < 0:
            raise ValueError("kmeans_sample_cap must be >= 0")


def _batch_slices(n: int, batch_size: int):
    for lo in range(0, n, batch_size):
        yield lo, min(lo + batch_size, n)


def _forward_batched(model: MlpModel, x: np.ndarray, batch_size: int) -> np.ndarray:
    out = np.empty((x.shape[0], model.layer_dims[-1]))
    for lo, hi in _batch_slices(x.shape[0], batch_size):
        out[lo:hi] = mlp_forward(model, x[lo:hi])[0]
    return out


def pretrain_autoencoder(x_in: np.ndarray, dims, cfg: TrainConfig):
    """Train a symmetric autoencoder by mini-batch reconstruction.

    ``dims`` are the full encoder layer widths (input first, embedding
    last); the decoder mirrors them. With ``pretrain_n_epochs == 0`` the
    freshly initialized, untrained pair is returned. Deterministic for a
    given config seed; raises ``DivergenceError`` on non-finite loss.
    """
    x_in = as_features(x_in)
    dims = tuple(int(d) for d in dims)
    if dims[0] != x_in.shape[1]:
        raise ValueError(f"input dim {x_in.shape[1]} != encoder dim {dims[0]}")
    rng = np.random.default_rng([cfg.seed, 1])
    encoder = init_mlp(dims, rng)
    decoder = init_mlp(dims[::-1], rng)
    if cfg.pretrain_n_epochs == 0:
        return encoder, decoder
    params = encoder.parameters() + decoder.parameters()
    opt = AdamWState.for_params(params)
    n = x_in.shape[0]
    for _ in range(cfg.pretrain_n_epochs):
        order = rng.permutation(n)
        for lo, hi in _batch_slices(n, cfg.batch_size):
            xb = x_in[order[lo:hi]]
            z, _, ecache = mlp_forward(encoder, xb, cfg.dropout_rate, True, rng)
            xr, _, dcache = mlp_forward(decoder, z, cfg.dropout_rate, True, rng)
            loss, d_xr = mse_loss(xb, xr)
            if not np.isfinite(loss):
                raise DivergenceError("autoencoder pretraining diverged; lower pretrain_lr")
            dg = mlp_backward(decoder, dcache, d_xr)
            eg = mlp_backward(encoder, ecache, dg.d_input)
            grads = eg.d_weights + eg.d_biases + dg.d_weights + dg.d_biases
            adamw_step(params, grads, opt, cfg.pretrain_lr, cfg.weight_decay)
    return encoder, decoder


@dataclass
class TrainResult:
    """Outputs of the co-train loop."""

    cluster: ClusterState
    z_final: Optional[np.ndarray]
    loss_history: np.ndarray        # columns: iteration, mse, kl_dnn, kl_enc, total
    dead_cluster_events: int
    encoder: MlpModel
    decoder: MlpModel
    dnn: MlpModel
    optimizer: AdamWState = field(repr=False, default=None)
    rng_state: dict = field(repr=False, default=None)

    @property
    def assignments(self) -> np.ndarray:
        return self.cluster.r

    @property
    def p_h(self) -> np.ndarray:
        return self.cluster.p_h

    @property
    def p_z(self) -> np.ndarray:
        return self.cluster.p_z


def train_rwsl(g: CsrGraph, x_filtered: np.ndarray, x_raw: Optional[np.ndarray],
               n_clusters: int, cfg: TrainConfig, *,
               encoder: Optional[MlpModel] = None,
               decoder: Optional[MlpModel] = None,
               return_embeddings: bool = True) -> TrainResult:
    """Run the full co-train loop and return assignments plus diagnostics.

    Steps: (1) pretrain the autoencoder on filtered or raw attributes per
    ``cfg.ae_input`` (skipped when a pretrained pair is passed in);
    (2) initialize centroids by k-means on the embeddings; (3) per
    iteration snapshot the encoder, refresh the soft assignment and target
    every ``update_p`` iterations; (4) per shuffled mini-batch blend the
    snapshot activations into the DNN hidden layers and take one optimizer
    step on the combined loss; (5) finalize with a full-graph evaluation
    pass and a hard argmax assignment.

    Deterministic for a given (inputs, config) pair. ``return_embeddings``
    can be disabled to avoid materializing the N x embedding matrix.
    """
    x_filtered = as_features(x_filtered)
    if x_filtered.shape[0] != g.n_nodes:
        raise ValueError("filtered features row count != n_nodes")
    if n_clusters < 2:
        raise ValueError("n_clusters must be >= 2")
    if cfg.ae_input == "raw":
        if x_raw is None:
            raise ValueError("ae_input='raw' requires raw features")
        ae_x = as_features(x_raw)
        if ae_x.shape != x_filtered.shape:
            raise ValueError("raw and filtered features must have identical shape")
    else:
        ae_x = x_filtered

    n, d = ae_x.shape
    enc_dims = (d, *cfg.architecture)
    if encoder is None or decoder is None:
        encoder, decoder = pretrain_autoencoder(ae_x, enc_dims, cfg)
    elif encoder.layer_dims != enc_dims:
        raise ValueError(f"pretrained encoder dims {encoder.layer_dims} != {enc_dims}")

    rng = np.random.default_rng([cfg.seed, 2])
    dnn = init_mlp((d, *cfg.architecture[:-1], n_clusters), rng)

    # centroid init from (optionally subsampled) embeddings
    if cfg.kmeans_sample_cap and n > cfg.kmeans_sample_cap:
        sample = np.sort(rng.choice(n, size=cfg.kmeans_sample_cap, replace=False))
        emb = _forward_batched(encoder, ae_x[sample], cfg.batch_size)
    else:
        emb = _forward_batched(encoder, ae_x, cfg.batch_size)
    centroids, _ = kmeans(emb, n_clusters, seed=cfg.seed, max_iters=cfg.kmeans_max_iters)
    del emb

    params = encoder.parameters() + decoder.parameters() + dnn.parameters()
    opt = AdamWState.for_params(params)

    beta, gamma, eps, v = cfg.beta, cfg.gamma_loss, cfg.epsilon_mix, cfg.v_dof
    target = None
    dead_events = 0
    history = np.zeros((cfg.n_epochs, 5))

    def _p_z_from(model: MlpModel) -> np.ndarray:
        p = np.empty((n, n_clusters))
        for lo, hi in _batch_slices(n, cfg.batch_size):
            z = mlp_forward(model, ae_x[lo:hi])[0]
            p[lo:hi] = soft_assign(z, centroids, v)
        return p

    for it in range(cfg.n_epochs):
        snapshot = encoder.copy()
        if it % cfg.update_p == 0:
            p_z_iter = _p_z_from(snapshot)
            dead_events += dead_cluster_count(p_z_iter)
            target = target_distribution(p_z_iter)
        order = rng.permutation(n)
        batch_losses = []
        for lo, hi in _batch_slices(n, cfg.batch_size):
            idx = order[lo:hi]
            t_b = target[idx]
            xa_b = ae_x[idx]

            # frozen iteration-start activations for blending
            _, mix_hidden, _ = mlp_forward(snapshot, xa_b)

            z, _, ecache = mlp_forward(encoder, xa_b, cfg.dropout_rate, True, rng)
            xr, _, dcache = mlp_forward(decoder, z, cfg.dropout_rate, True, rng)
            l_mse, d_xr = mse_loss(xa_b, xr)

            logits, _, hcache = mlp_forward(dnn, x_filtered[idx], cfg.dropout_rate,
                                            True, rng, mix=mix_hidden, mix_eps=eps)
            if not (np.isfinite(z).all() and np.isfinite(logits).all()):
                raise DivergenceError("co-training diverged; lower learning_rate")

            q_z = soft_assign(z, centroids, v)
            l_z, _ = kl_divergence(t_b, q_z)
            d_z_kl = soft_assign_kl_grad(t_b, q_z, z, centroids, v)

            p_h = row_softmax(logits)
            l_h, d_logits = kl_divergence(t_b, p_h)

            l_tot = l_mse + beta * l_h + gamma * l_z
            if not np.isfinite(l_tot):
                raise DivergenceError("co-training diverged; lower learning_rate")

            dg = mlp_backward(decoder, dcache, d_xr)
            eg = mlp_backward(encoder, ecache, dg.d_input + gamma * d_z_kl)
            hg = mlp_backward(dnn, hcache, beta * d_logits)
            grads = (eg.d_weights + eg.d_biases + dg.d_weights + dg.d_biases
                     + hg.d_weights + hg.d_biases)
            adamw_step(params, grads, opt, cfg.learning_rate, cfg.weight_decay)
            batch_losses.append((l_mse, l_h, l_z, l_tot))

        mean = np.mean(batch_losses, axis=0)
        history[it] = (it, *mean)

    # final evaluation pass (no dropout), batch-bounded
    p_z = _p_z_from(encoder)
    p_h = np.empty((n, n_clusters))
    z_final = np.empty((n, cfg.architecture[-1])) if return_embeddings else None
    for lo, hi in _batch_slices(n, cfg.batch_size):
        z, mix_hidden, _ = mlp_forward(encoder, ae_x[lo:hi])
        if return_embeddings:
            z_final[lo:hi] = z
        logits, _, _ = mlp_forward(dnn, x_filtered[lo:hi], mix=mix_hidden, mix_eps=eps)
        p_h[lo:hi] = row_softmax(logits)
    if target is None:
        target = target_distribution(p_z)
    assignments = as_labels(hard_assign(p_h), n_clusters)

    state = ClusterState(n_clusters, centroids, p_z, p_h, target, assignments)
    return TrainResult(
        cluster=state,
        z_final=z_final,
        loss_history=history,
        dead_cluster_events=dead_events,
        encoder=encoder,
        decoder=decoder,
        dnn=dnn,
        optimizer=opt,
        rng_state=rng.bit_generator.state,
    )


# ---------------------------------------------------------------------------
# checkpointing

_CHECKPOINT_VERSION = 1


def save_checkpoint(path, models: dict, meta: Optional[dict] = None,
                    optimizer: Optional[AdamWState] = None,
                    rng_state: Optional[dict] = None,
                    arrays: Optional[dict] = None) -> None:
    """Versioned binary dump of model parameters plus optimizer/RNG state."""
    blob = {}
    spec = {"version": _CHECKPOINT_VERSION, "models": {}, "meta": meta or {}}
    for name, model in models.items():
        spec["models"][name] = list(model.layer_dims)
        for i, (w, b) in enumerate(zip(model.weights, model.biases)):
            blob[f"{name}_w{i}"] = w
            blob[f"{name}_b{i}"] = b
    if optimizer is not None:
        spec["optimizer_step"] = optimizer.step
        for i, (m, v) in enumerate(zip(optimizer.m, optimizer.v)):
            blob[f"opt_m{i}"] = m
            blob[f"opt_v{i}"] = v
    if rng_state is not None:
        spec["rng_state"] = rng_state
    for name, arr in (arrays or {}).items():
        blob[f"arr_{name}"] = arr
    blob["spec"] = np.array(json.dumps(spec))
    np.savez(path, **blob)


def load_checkpoint(path):
    """Inverse of ``save_checkpoint``; returns (models, arrays, meta, optimizer, rng_state)."""
    with np.load(path, allow_pickle=False) as data:
        spec = json.loads(str(data["spec"]))
        if spec["version"] != _CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {spec['version']}")
        models = {}
        for name, dims in spec["models"].items():
            n_layers = len(dims) - 1
            models[name] = MlpModel(
                tuple(dims),
                [data[f"{name}_w{i}"] for i in range(n_layers)],
                [data[f"{name}_b{i}"] for i in range(n_layers)],
            )
        optimizer = None
        if "optimizer_step" in spec:
            m, v, i = [], [], 0
            while f"opt_m{i}" in data:
                m.append(data[f"opt_m{i}"])
                v.append(data[f"opt_v{i}"])
                i += 1
            optimizer = AdamWState(m=m, v=v, step=spec["optimizer_step"])
        arrays = {k[4:]: data[k] for k in data.files if k.startswith("arr_")}
    return models, arrays, spec["meta"], optimizer, spec.get("rng_state")


def loss_history_to_csv(history: np.ndarray, path) -> None:
    """Loss curve CSV with columns iteration, L_MSE, L_H, L_Z, L_tot."""
    with open(path, "w") as fh:
        fh.write("iteration,L_MSE,L_H,L_Z,L_tot\n")
        for row in history:
            fh.write(f"{int(row[0])},{row[1]:.17g},{row[2]:.17g},{row[3]:.17g},{row[4]:.17g}\n")
