"""Lateness regressor: learned time-of-day embedding, a dense encoder that
can be initialized from autoencoder pretraining, and a small regression head.

The network is written directly in numpy with hand-derived backpropagation so
gradients can be verified against finite differences. Training minimizes RMSE
with mini-batch Adam steps; targets are standardized internally and mapped
back to seconds at prediction time. Raw outputs are clamped to a small
positive floor so downstream shortest-path weights are strictly positive.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .labeling import Dataset
from .network import ATTRIBUTE_NAMES, PERIOD_ORDER, SegmentAttributes, TimePeriod

N_PERIODS = len(PERIOD_ORDER)
N_NUMERIC = len(ATTRIBUTE_NAMES)

PREDICTION_FLOOR_S = 0.1


class TrainingDiverged(RuntimeError):
    """Raised when the loss stops being finite; try a smaller step size."""


@dataclass
class ModelConfig:
    embedding_dim: int = 4
    encoder_widths: tuple[int, ...] = (32, 16)
    head_widths: tuple[int, ...] = (16, 1)
    learning_rate: float = 1e-3
    batch_size: int = 256
    patience: int = 10
    max_epochs: int = 200
    pretrain_epochs: int = 80

    @property
    def input_dim(self) -> int:
        return N_NUMERIC + self.embedding_dim

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        cfg = cls()
        for key in d:
            if not hasattr(cfg, key):
                raise ValueError(f"unknown model config key: {key}")
        kwargs = dict(d)
        for k in ("encoder_widths", "head_widths"):
            if k in kwargs:
                kwargs[k] = tuple(kwargs[k])
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {
            "embedding_dim": self.embedding_dim,
            "encoder_widths": list(self.encoder_widths),
            "head_widths": list(self.head_widths),
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "patience": self.patience,
            "max_epochs": self.max_epochs,
            "pretrain_epochs": self.pretrain_epochs,
        }


@dataclass
class DenseLayer:
    w: np.ndarray  # (n_in, n_out)
    b: np.ndarray  # (n_out,)

    def copy(self) -> "DenseLayer":
        return DenseLayer(self.w.copy(), self.b.copy())


def _init_layers(rng: np.random.Generator, widths: list[int]) -> list[DenseLayer]:
    layers = []
    for n_in, n_out in zip(widths, widths[1:]):
        bound = np.sqrt(6.0 / (n_in + n_out))
        layers.append(
            DenseLayer(
                w=rng.uniform(-bound, bound, size=(n_in, n_out)),
                b=np.zeros(n_out),
            )
        )
    return layers


def _forward(layers: list[DenseLayer], x: np.ndarray) -> list[np.ndarray]:
    """Activations after each layer; tanh on all but the last (linear) layer."""
    acts = [x]
    for i, layer in enumerate(layers):
        z = acts[-1] @ layer.w + layer.b
        acts.append(z if i == len(layers) - 1 else np.tanh(z))
    return acts


def _backward(
    layers: list[DenseLayer], acts: list[np.ndarray], g_out: np.ndarray
) -> tuple[list[DenseLayer], np.ndarray]:
    """Gradients for each layer plus the gradient w.r.t. the input batch."""
    grads = [None] * len(layers)
    g = g_out
    for i in range(len(layers) - 1, -1, -1):
        if i != len(layers) - 1:
            g = g * (1.0 - acts[i + 1] ** 2)  # through tanh
        grads[i] = DenseLayer(w=acts[i].T @ g, b=g.sum(axis=0))
        g = g @ layers[i].w.T
    return grads, g


@dataclass
class PretrainedEncoder:
    """Encoder layers and jointly trained embedding from AE pretraining."""

    embedding: np.ndarray
    encoder: list[DenseLayer]
    reconstruction_curve: list[float] = field(default_factory=list)

    def copy(self) -> "PretrainedEncoder":
        return PretrainedEncoder(
            self.embedding.copy(), [l.copy() for l in self.encoder], list(self.reconstruction_curve)
        )


@dataclass
class LatenessModel:
    """Trained regressor mapping (segment attributes, period) to seconds."""

    embedding: np.ndarray  # (5, d_emb)
    encoder: list[DenseLayer]
    head: list[DenseLayer]
    feature_mean: np.ndarray
    feature_std: np.ndarray
    target_mean: float
    target_std: float
    clamp_floor_s: float = PREDICTION_FLOOR_S
    seed: int = 0
    config: ModelConfig = field(default_factory=ModelConfig)

    def layers(self) -> list[DenseLayer]:
        return self.encoder + self.head

    def parameters(self) -> list[tuple[str, np.ndarray]]:
        named = [("embedding", self.embedding)]
        for i, layer in enumerate(self.encoder):
            named += [(f"encoder.{i}.w", layer.w), (f"encoder.{i}.b", layer.b)]
        for i, layer in enumerate(self.head):
            named += [(f"head.{i}.w", layer.w), (f"head.{i}.b", layer.b)]
        return named

    def raw_output_std(self, z: np.ndarray, period_idx: np.ndarray) -> np.ndarray:
        x = np.concatenate([z, self.embedding[period_idx]], axis=1)
        return _forward(self.layers(), x)[-1][:, 0]

    def raw_output_s(self, z: np.ndarray, period_idx: np.ndarray) -> np.ndarray:
        return self.raw_output_std(z, period_idx) * self.target_std + self.target_mean

    def normalize(self, raw: np.ndarray) -> np.ndarray:
        return (raw - self.feature_mean) / self.feature_std

    def save_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), sort_keys=True), encoding="utf-8")

    def to_json_dict(self) -> dict:
        def layer_doc(layer: DenseLayer) -> dict:
            return {
                "shape": list(layer.w.shape),
                "w": [float(v) for v in layer.w.reshape(-1)],
                "b": [float(v) for v in layer.b],
            }

        return {
            "embedding_dim": int(self.embedding.shape[1]),
            "embedding": [[float(v) for v in row] for row in self.embedding],
            "encoder": [layer_doc(l) for l in self.encoder],
            "head": [layer_doc(l) for l in self.head],
            "feature_mean": [float(v) for v in self.feature_mean],
            "feature_std": [float(v) for v in self.feature_std],
            "target_mean": float(self.target_mean),
            "target_std": float(self.target_std),
            "clamp_floor_s": float(self.clamp_floor_s),
            "seed": int(self.seed),
            "hyperparameters": self.config.to_dict(),
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "LatenessModel":
        def layer_from(d: dict) -> DenseLayer:
            shape = tuple(d["shape"])
            return DenseLayer(
                w=np.array(d["w"], dtype=np.float64).reshape(shape),
                b=np.array(d["b"], dtype=np.float64),
            )

        return cls(
            embedding=np.array(doc["embedding"], dtype=np.float64),
            encoder=[layer_from(d) for d in doc["encoder"]],
            head=[layer_from(d) for d in doc["head"]],
            feature_mean=np.array(doc["feature_mean"], dtype=np.float64),
            feature_std=np.array(doc["feature_std"], dtype=np.float64),
            target_mean=doc["target_mean"],
            target_std=doc["target_std"],
            clamp_floor_s=doc["clamp_floor_s"],
            seed=doc["seed"],
            config=ModelConfig.from_dict(doc["hyperparameters"]),
        )

    @classmethod
    def load_json(cls, path: str | Path) -> "LatenessModel":
        return cls.from_json_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class TrainReport:
    seeds: list[int]
    runs: dict[str, dict]  # run name -> {"train": [...], "val": [...], "epochs": int}
    final_test_rmse: float | None = None

    def to_json_dict(self) -> dict:
        return {"seeds": self.seeds, "runs": self.runs, "final_test_rmse": self.final_test_rmse}


class _Adam:
    def __init__(self, arrays: list[np.ndarray], lr: float):
        self.arrays = arrays
        self.lr = lr
        self.beta1, self.beta2, self.eps = 0.9, 0.999, 1e-8
        self.m = [np.zeros_like(a) for a in arrays]
        self.v = [np.zeros_like(a) for a in arrays]
        self.t = 0

    def step(self, grads: list[np.ndarray]) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for a, g, m, v in zip(self.arrays, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            a -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


def _init_model(dataset: Dataset, config: ModelConfig, seed: int) -> LatenessModel:
    rng = np.random.default_rng(seed)
    embedding = rng.normal(0.0, 0.1, size=(N_PERIODS, config.embedding_dim))
    encoder = _init_layers(rng, [config.input_dim, *config.encoder_widths])
    head = _init_layers(rng, [config.encoder_widths[-1], *config.head_widths])
    t = dataset.targets
    return LatenessModel(
        embedding=embedding,
        encoder=encoder,
        head=head,
        feature_mean=dataset.feature_mean.copy(),
        feature_std=dataset.feature_std.copy(),
        target_mean=float(t.mean()) if t.size else 0.0,
        target_std=max(float(t.std()), 1e-9) if t.size else 1.0,
        seed=seed,
        config=config,
    )


def _rmse_loss_grad(out: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Batch RMSE and its gradient w.r.t. the raw outputs."""
    err = out - target
    with np.errstate(over="ignore", invalid="ignore"):
        loss = float(np.sqrt(np.mean(err**2)))
    if loss == 0.0:
        return 0.0, np.zeros_like(out)
    return loss, err / (err.size * loss)


def _model_arrays(model: LatenessModel) -> list[np.ndarray]:
    arrays = [model.embedding]
    for layer in model.encoder + model.head:
        arrays += [layer.w, layer.b]
    return arrays


def _batch_grads(
    model: LatenessModel, z: np.ndarray, period_idx: np.ndarray, g_out: np.ndarray
) -> list[np.ndarray]:
    """Gradient arrays in the same order as `_model_arrays`, given dL/d(out)."""
    layers = model.layers()
    x = np.concatenate([z, model.embedding[period_idx]], axis=1)
    acts = _forward(layers, x)
    layer_grads, g_input = _backward(layers, acts, g_out[:, None])
    g_emb = np.zeros_like(model.embedding)
    np.add.at(g_emb, period_idx, g_input[:, N_NUMERIC:])
    arrays = [g_emb]
    for lg in layer_grads:
        arrays += [lg.w, lg.b]
    return arrays


def rmse_seconds(model: LatenessModel, dataset: Dataset, mask: np.ndarray) -> float:
    if not mask.any():
        return float("nan")
    with np.errstate(over="ignore", invalid="ignore"):
        out = model.raw_output_s(dataset.features[mask], dataset.period_idx[mask])
        return float(np.sqrt(np.mean((out - dataset.targets[mask]) ** 2)))


def train_regressor(
    dataset: Dataset,
    config: ModelConfig,
    seed: int,
    encoder_init: PretrainedEncoder | None = None,
) -> tuple[LatenessModel, TrainReport]:
    """Mini-batch training on the train split with early stopping on the
    validation split (patience in epochs); keeps the best-validation weights.

    With `encoder_init`, the encoder and embedding start from autoencoder
    weights and are fine-tuned end to end.
    """
    rng = np.random.default_rng(seed)
    model = _init_model(dataset, config, seed)
    if encoder_init is not None:
        model.embedding = encoder_init.embedding.copy()
        model.encoder = [l.copy() for l in encoder_init.encoder]

    train_idx = np.flatnonzero(dataset.mask(0))
    if train_idx.size == 0:
        raise ValueError("dataset has an empty train split")
    has_val = dataset.mask(1).any()
    tz = (dataset.targets - model.target_mean) / model.target_std

    adam = _Adam(_model_arrays(model), config.learning_rate)
    best_val = float("inf")
    best_state = [a.copy() for a in _model_arrays(model)]
    patience_left = config.patience
    train_curve: list[float] = []
    val_curve: list[float] = []

    for _ in range(config.max_epochs):
        order = rng.permutation(train_idx)
        for start in range(0, order.size, config.batch_size):
            batch = order[start : start + config.batch_size]
            out = model.raw_output_std(dataset.features[batch], dataset.period_idx[batch])
            loss, g_out = _rmse_loss_grad(out, tz[batch])
            if not np.isfinite(loss):
                raise TrainingDiverged(
                    "training loss is not finite; try a smaller learning rate"
                )
            grads = _batch_grads(
                model, dataset.features[batch], dataset.period_idx[batch], g_out
            )
            adam.step(grads)

        train_rmse = rmse_seconds(model, dataset, dataset.mask(0))
        val_rmse = rmse_seconds(model, dataset, dataset.mask(1)) if has_val else train_rmse
        if not (np.isfinite(train_rmse) and np.isfinite(val_rmse)):
            raise TrainingDiverged("training loss is not finite; try a smaller learning rate")
        train_curve.append(train_rmse)
        val_curve.append(val_rmse)
        if val_rmse < best_val:
            best_val = val_rmse
            best_state = [a.copy() for a in _model_arrays(model)]
            patience_left = config.patience
        else:
            patience_left -= 1
            if patience_left <= 0:
                break

    for a, saved in zip(_model_arrays(model), best_state):
        a[...] = saved

    test_rmse = rmse_seconds(model, dataset, dataset.mask(2)) if dataset.mask(2).any() else None
    run_name = "pretrained" if encoder_init is not None else "scratch"
    report = TrainReport(
        seeds=[seed],
        runs={
            run_name: {
                "train": train_curve,
                "val": val_curve,
                "epochs": len(train_curve),
                "final_val_rmse": val_curve[-1] if val_curve else None,
                "best_val_rmse": best_val if best_val != float("inf") else None,
            }
        },
        final_test_rmse=test_rmse,
    )
    return model, report


def train_comparison(
    dataset: Dataset, config: ModelConfig, seed: int
) -> tuple[LatenessModel, TrainReport]:
    """Train from scratch and from AE-pretrained weights under the same seed;
    returns the pretrained model and a report holding both curves."""
    pre = pretrain_autoencoder(dataset, seed, config)
    model_pre, rep_pre = train_regressor(dataset, config, seed, encoder_init=pre)
    _, rep_scratch = train_regressor(dataset, config, seed, encoder_init=None)
    report = TrainReport(
        seeds=[seed],
        runs={**rep_pre.runs, **rep_scratch.runs},
        final_test_rmse=rep_pre.final_test_rmse,
    )
    return model_pre, report


def pretrain_autoencoder(
    dataset: Dataset, seed: int, config: ModelConfig | None = None
) -> PretrainedEncoder:
    """Self-supervised pretraining: the encoder compresses the concatenated
    feature-plus-embedding vector and a decoder shaped like the regression
    head (widened to the input dimension) reconstructs it under MSE.

    The embedding table trains jointly. A zero-epoch budget returns the
    seeded initialization unchanged.
    """
    config = config or ModelConfig()
    rng = np.random.default_rng(seed)
    embedding = rng.normal(0.0, 0.1, size=(N_PERIODS, config.embedding_dim))
    encoder = _init_layers(rng, [config.input_dim, *config.encoder_widths])
    decoder_widths = [config.encoder_widths[-1], *config.head_widths[:-1], config.input_dim]
    decoder = _init_layers(rng, decoder_widths)

    result = PretrainedEncoder(embedding=embedding, encoder=encoder)
    if config.pretrain_epochs <= 0 or dataset.targets.size == 0:
        return result

    arrays = [embedding]
    for layer in encoder + decoder:
        arrays += [layer.w, layer.b]
    adam = _Adam(arrays, config.learning_rate)
    n = dataset.targets.size

    for _ in range(config.pretrain_epochs):
        order = rng.permutation(n)
        epoch_losses = []
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            z = dataset.features[batch]
            p = dataset.period_idx[batch]
            x = np.concatenate([z, embedding[p]], axis=1)
            target = x.copy()  # reconstruct current values; target not backpropagated
            enc_acts = _forward(encoder, x)
            dec_acts = _forward(decoder, enc_acts[-1])
            recon = dec_acts[-1]
            err = recon - target
            loss = float(np.mean(err**2))
            if not np.isfinite(loss):
                raise TrainingDiverged(
                    "autoencoder loss is not finite; try a smaller learning rate"
                )
            epoch_losses.append(loss)
            g_recon = 2.0 * err / err.size
            dec_grads, g_hidden = _backward(decoder, dec_acts, g_recon)
            enc_grads, g_input = _backward(encoder, enc_acts, g_hidden)
            g_emb = np.zeros_like(embedding)
            np.add.at(g_emb, p, g_input[:, N_NUMERIC:])
            grad_arrays = [g_emb]
            for lg in enc_grads + dec_grads:
                grad_arrays += [lg.w, lg.b]
            adam.step(grad_arrays)
        result.reconstruction_curve.append(float(np.mean(epoch_losses)))
    return result


def predict(model: LatenessModel, attrs: SegmentAttributes, period: TimePeriod) -> float:
    """Predicted lateness in seconds, clamped to the positive floor."""
    raw = np.array(attrs.as_vector(), dtype=np.float64)
    for name, value in zip(ATTRIBUTE_NAMES, raw):
        if not np.isfinite(value):
            raise ValueError(f"non-finite feature {name}={value!r}")
    z = model.normalize(raw)[None, :]
    idx = np.array([PERIOD_ORDER.index(period)])
    out = float(model.raw_output_s(z, idx)[0])
    return max(model.clamp_floor_s, out)


def predict_batch(
    model: LatenessModel, attr_rows: np.ndarray, period: TimePeriod
) -> np.ndarray:
    """Vectorized `predict` over raw attribute rows for one period."""
    if not np.isfinite(attr_rows).all():
        bad = np.argwhere(~np.isfinite(attr_rows))[0]
        raise ValueError(f"non-finite feature {ATTRIBUTE_NAMES[bad[1]]} in row {bad[0]}")
    z = (attr_rows - model.feature_mean) / model.feature_std
    idx = np.full(attr_rows.shape[0], PERIOD_ORDER.index(period))
    out = model.raw_output_s(z, idx)
    return np.maximum(model.clamp_floor_s, out)


def sample_loss_and_grads(
    model: LatenessModel, z: np.ndarray, period_idx: int, target_s: float
) -> tuple[float, list[np.ndarray]]:
    """Single-sample RMSE (|error| in seconds) and analytic parameter grads."""
    out = model.raw_output_s(z[None, :], np.array([period_idx]))[0]
    err = out - target_s
    loss = abs(err)
    sign = 0.0 if err == 0.0 else (1.0 if err > 0.0 else -1.0)
    # d|err|/d(raw std output) = sign * target_std
    g_out = np.array([sign * model.target_std])
    grads = _batch_grads(model, z[None, :], np.array([period_idx]), g_out)
    return loss, grads


def gradient_check(
    model: LatenessModel,
    z: np.ndarray,
    period_idx: int,
    target_s: float,
    h: float = 1e-5,
) -> float:
    """Max relative error between analytic and central-difference gradients
    of the single-sample RMSE loss over every parameter.

    Central differences on a float64 loss of magnitude L resolve gradients
    only down to roughly eps*L/h; parameters whose analytic and numeric
    gradients are both below that resolution (with a safety margin, never
    below 1e-12) are skipped rather than compared against rounding noise.
    """
    loss, analytic = sample_loss_and_grads(model, z, period_idx, target_s)
    resolution_floor = max(1e-12, 5e-11 * max(1.0, abs(loss)) / h)
    arrays = _model_arrays(model)
    max_rel = 0.0
    for arr, grad in zip(arrays, analytic):
        flat = arr.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            lp = _loss_only(model, z, period_idx, target_s)
            flat[i] = orig - h
            lm = _loss_only(model, z, period_idx, target_s)
            flat[i] = orig
            numeric = (lp - lm) / (2.0 * h)
            a = gflat[i]
            if abs(a) < resolution_floor and abs(numeric) < resolution_floor:
                continue
            rel = abs(a - numeric) / max(abs(a), abs(numeric))
            if rel > max_rel:
                max_rel = rel
    return max_rel


def _loss_only(model: LatenessModel, z: np.ndarray, period_idx: int, target_s: float) -> float:
    out = model.raw_output_s(z[None, :], np.array([period_idx]))[0]
    return abs(out - target_s)


def embedding_coords(model: LatenessModel) -> dict[TimePeriod, tuple[float, float]]:
    """Top-2 PCA scores of the mean-centered period embedding rows.

    A rank-deficient table zero-fills the missing component; component signs
    are fixed so the largest-magnitude loading is positive.
    """
    table = model.embedding
    centered = table - table.mean(axis=0, keepdims=True)
    u, s, vt = np.linalg.svd(centered, full_matrices=False)
    coords = np.zeros((table.shape[0], 2))
    for comp in range(min(2, s.size)):
        if s[comp] <= 1e-12:
            continue
        scores = u[:, comp] * s[comp]
        loading = vt[comp]
        if loading[np.argmax(np.abs(loading))] < 0:
            scores = -scores
        coords[:, comp] = scores
    return {p: (float(coords[i, 0]), float(coords[i, 1])) for i, p in enumerate(PERIOD_ORDER)}
