"""Feed-forward binary toxicity classifier over fixed-size embeddings.

Architecture: input -> ReLU hidden layers -> single logit; trained with
binary cross entropy on logits and Adam. The default geometry
(1024 -> 512 -> 128 -> 1) has 590,593 parameters.

Weight init is He-uniform U(-sqrt(6/fan_in), +sqrt(6/fan_in)) drawn from
a splitmix64 stream so initialization is bit-reproducible across
platforms; biases start at zero.

Model file (MTXM): magic ``MTXM``, u8 version = 1, u32 LE header length,
UTF-8 JSON header {config, metadata, param_count, checksum}, then
parameters as f32 LE in layer order, each layer's weights row-major
[out x in] followed by its biases. The checksum is FNV-1a 64 of the
parameter payload bytes.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from .corpus import ScoreRecord
from .errors import FormatError, ValidationError
from .evaluation import roc_auc

MTXM_MAGIC = b"MTXM"
MTXM_VERSION = 1

_MASK64 = (1 << 64) - 1
_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15


def splitmix64_stream(seed: int, n: int) -> np.ndarray:
    """First n outputs of the splitmix64 generator as uint64."""
    idx = np.arange(1, n + 1, dtype=np.uint64)
    z = (np.uint64(seed & _MASK64) + idx * np.uint64(_SPLITMIX_GAMMA))
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def splitmix64_uniform(seed: int, n: int) -> np.ndarray:
    """n doubles in [0, 1) from the splitmix64 stream."""
    return splitmix64_stream(seed, n).astype(np.float64) / 2.0**64


def derive_seed(seed: int, name: str) -> int:
    """Fan a global seed out to a per-purpose seed (FNV-1a 64 mixing)."""
    h = 0xCBF29CE484222325
    for b in name.encode("utf-8"):
        h = ((h ^ b) * 0x100000001B3) & _MASK64
    return (seed ^ h) & _MASK64


def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h = ((h ^ b) * 0x100000001B3) & _MASK64
    return h


@dataclass(frozen=True)
class MlpConfig:
    input_dim: int = 1024
    hidden_dims: tuple[int, ...] = (512, 128)
    activation: str = "relu"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(self.hidden_dims))
        if not self.hidden_dims:
            raise ValidationError("at least one hidden layer is required")
        if self.input_dim <= 0 or any(d <= 0 for d in self.hidden_dims):
            raise ValidationError("layer dimensions must be positive")
        if self.activation != "relu":
            raise ValidationError(f"unsupported activation {self.activation!r}")

    def layer_shapes(self) -> list[tuple[int, int]]:
        dims = (self.input_dim, *self.hidden_dims, 1)
        return [(dims[i + 1], dims[i]) for i in range(len(dims) - 1)]


def param_count(config: MlpConfig) -> int:
    """Total weights + biases, final hidden->1 layer included."""
    return sum(out * inp + out for out, inp in config.layer_shapes())


@dataclass
class MlpModel:
    config: MlpConfig
    weights: list[np.ndarray]  # per layer, [out x in]
    biases: list[np.ndarray]  # per layer, [out]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        shapes = self.config.layer_shapes()
        if len(self.weights) != len(shapes) or len(self.biases) != len(shapes):
            raise ValidationError("layer count does not match config")
        for (out, inp), w, b in zip(shapes, self.weights, self.biases):
            if w.shape != (out, inp) or b.shape != (out,):
                raise ValidationError(
                    f"layer shape mismatch: got {w.shape}/{b.shape}, want ({out},{inp})/({out},)"
                )
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValidationError("non-finite parameter")

    @property
    def name(self) -> str:
        return self.metadata.get("name", "mlp")

    def flat_params(self) -> np.ndarray:
        chunks = []
        for w, b in zip(self.weights, self.biases):
            chunks.append(w.ravel())
            chunks.append(b)
        return np.concatenate(chunks)

    def param_checksum(self) -> int:
        return fnv1a64(self.flat_params().astype("<f4").tobytes())

    def astype(self, dtype) -> "MlpModel":
        return MlpModel(
            config=self.config,
            weights=[w.astype(dtype) for w in self.weights],
            biases=[b.astype(dtype) for b in self.biases],
            metadata=dict(self.metadata),
        )


def init_model(config: MlpConfig, metadata: dict | None = None, dtype=np.float64) -> MlpModel:
    """He-uniform weights, zero biases, from the splitmix64 stream."""
    weights, biases = [], []
    for li, (out, inp) in enumerate(config.layer_shapes()):
        u = splitmix64_uniform(derive_seed(config.seed, f"layer{li}"), out * inp)
        limit = np.sqrt(6.0 / inp)
        weights.append(((2.0 * u - 1.0) * limit).reshape(out, inp).astype(dtype))
        biases.append(np.zeros(out, dtype=dtype))
    return MlpModel(config=config, weights=weights, biases=biases, metadata=metadata or {})


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def forward_logits(model: MlpModel, X: np.ndarray) -> np.ndarray:
    """Logits for a batch X of shape [n, input_dim]."""
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[1] != model.config.input_dim:
        raise ValidationError(
            f"input shape {X.shape} does not match input_dim {model.config.input_dim}"
        )
    if not np.all(np.isfinite(X)):
        raise ValidationError("non-finite input")
    H = X
    for w, b in zip(model.weights[:-1], model.biases[:-1]):
        H = np.maximum(H @ w.T + b, 0)
    return (H @ model.weights[-1].T + model.biases[-1]).ravel()


def forward_logit(model: MlpModel, x: np.ndarray) -> float:
    """Single-vector logit; sigmoid of it is the toxicity score."""
    x = np.asarray(x)
    if x.shape != (model.config.input_dim,):
        raise ValidationError(
            f"input length {x.shape} does not match input_dim {model.config.input_dim}"
        )
    return float(forward_logits(model, x[None, :])[0])


def bce_with_logits(logit, label, positive_weight: float = 1.0):
    """Numerically stable binary cross entropy on logits.

    max(z,0) - z*y + log(1+exp(-|z|)), with positive samples scaled by
    positive_weight. Safe for |z| up to at least 1e4.
    """
    z = np.asarray(logit, dtype=np.float64)
    y = np.asarray(label, dtype=np.float64)
    loss = np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))
    w = np.where(y == 1.0, positive_weight, 1.0)
    out = w * loss
    return float(out) if out.ndim == 0 else out


def loss_and_grad(model: MlpModel, X, y, positive_weight: float = 1.0):
    """Mean BCE loss over the batch and its gradient in model shape.

    Returns (loss, grads) with grads = list of (dW, db) per layer.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.size == 0:
        raise ValidationError("empty batch")
    n = X.shape[0]
    # forward, keeping hidden activations
    acts = [X]
    H = X
    for w, b in zip(model.weights[:-1], model.biases[:-1]):
        H = np.maximum(H @ w.T + b, 0)
        acts.append(H)
    z = (H @ model.weights[-1].T + model.biases[-1]).ravel()
    loss = float(np.mean(bce_with_logits(z, y, positive_weight)))
    # d(mean loss)/dz, with positive samples scaled
    w_s = np.where(y == 1.0, positive_weight, 1.0)
    dz = (w_s * (sigmoid(z) - y) / n)[:, None]  # [n, 1]
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(model.weights)
    delta = dz
    for li in range(len(model.weights) - 1, -1, -1):
        grads[li] = (delta.T @ acts[li], delta.sum(axis=0))
        if li > 0:
            delta = (delta @ model.weights[li]) * (acts[li] > 0)
    return loss, grads


@dataclass
class AdamState:
    m: list[tuple[np.ndarray, np.ndarray]]
    v: list[tuple[np.ndarray, np.ndarray]]

    @classmethod
    def zeros_like(cls, model: MlpModel) -> "AdamState":
        zz = lambda a: np.zeros_like(a, dtype=np.float64)
        return cls(
            m=[(zz(w), zz(b)) for w, b in zip(model.weights, model.biases)],
            v=[(zz(w), zz(b)) for w, b in zip(model.weights, model.biases)],
        )


def adam_update(
    state: AdamState,
    model: MlpModel,
    grads,
    t: int,
    lr: float = 0.001,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One in-place Adam step with bias correction; t starts at 1."""
    if t < 1:
        raise ValidationError("step index must be >= 1")
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    for li, (dw, db) in enumerate(grads):
        for slot, grad, params in (
            (0, dw, model.weights),
            (1, db, model.biases),
        ):
            if grad.shape != params[li].shape:
                raise ValidationError(f"gradient shape mismatch in layer {li}")
            m = state.m[li][slot]
            v = state.v[li][slot]
            m *= beta1
            m += (1.0 - beta1) * grad
            v *= beta2
            v += (1.0 - beta2) * grad**2
            params[li] = params[li] - lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    batch_size: int = 256
    max_epochs: int = 100
    early_stop_patience: int = 10
    language_filter: frozenset[str] | None = None  # None = all
    modality_filter: frozenset[str] | None = None
    positive_weight: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be positive")
        if not (0 < self.adam_beta1 < 1 and 0 < self.adam_beta2 < 1):
            raise ValidationError("Adam betas must lie in (0, 1)")
        if self.batch_size < 1:
            raise ValidationError("batch_size must be >= 1")
        if self.positive_weight < 1.0:
            raise ValidationError("positive_weight must be >= 1")
        for f in ("language_filter", "modality_filter"):
            v = getattr(self, f)
            if v is not None:
                object.__setattr__(self, f, frozenset(v))


# Presets mirroring the zero-shot vs supervised training regimes.
ZS_LANGUAGES = frozenset({"eng", "spa"})


@dataclass(frozen=True)
class LabeledEmbedding:
    utterance_id: str
    lang: str
    modality: str
    vector: np.ndarray
    label: int


@dataclass
class TrainReport:
    epoch_losses: list[float] = field(default_factory=list)
    epoch_dev_aucs: list[float] = field(default_factory=list)
    stopped_epoch: int = 0
    best_dev_auc: float = float("nan")
    param_checksum: int = 0


def _filtered_matrix(items, cfg: TrainConfig, input_dim: int, what: str):
    sel = [
        it
        for it in items
        if (cfg.language_filter is None or it.lang in cfg.language_filter)
        and (cfg.modality_filter is None or it.modality in cfg.modality_filter)
    ]
    if not sel:
        raise ValidationError(f"{what} set is empty after language/modality filters")
    X = np.stack([np.asarray(it.vector, dtype=np.float64) for it in sel])
    if X.shape[1] != input_dim:
        raise ValidationError(f"{what} vectors have dim {X.shape[1]}, expected {input_dim}")
    y = np.array([it.label for it in sel], dtype=np.float64)
    return X, y


def train(
    train_items,
    dev_items,
    mlp_config: MlpConfig,
    train_config: TrainConfig,
    metadata: dict | None = None,
) -> tuple[MlpModel, TrainReport]:
    """Deterministic full training loop with early stopping on dev AUC.

    Returns the parameters of the best dev-AUC epoch, cast to float32 so
    persisted models score identically to in-memory ones.
    """
    X, y = _filtered_matrix(train_items, train_config, mlp_config.input_dim, "train")
    Xd, yd = _filtered_matrix(dev_items, train_config, mlp_config.input_dim, "dev")
    if len(set(yd.tolist())) < 2:
        raise ValidationError("dev set has a single class; AUC is undefined")

    model = init_model(
        replace(mlp_config, seed=derive_seed(train_config.seed, "init") ^ mlp_config.seed),
        metadata=metadata,
    )
    report = TrainReport()
    if train_config.max_epochs == 0:
        model = model.astype(np.float32)
        report.param_checksum = model.param_checksum()
        return model, report

    state = AdamState.zeros_like(model)
    rng = np.random.default_rng(derive_seed(train_config.seed, "shuffle"))
    best_params = None
    best_auc = -1.0
    best_epoch = 0
    step = 0
    n = X.shape[0]
    for epoch in range(1, train_config.max_epochs + 1):
        order = rng.permutation(n)
        losses = []
        for start in range(0, n, train_config.batch_size):
            idx = order[start : start + train_config.batch_size]
            loss, grads = loss_and_grad(
                model, X[idx], y[idx], train_config.positive_weight
            )
            step += 1
            adam_update(
                state,
                model,
                grads,
                step,
                lr=train_config.learning_rate,
                beta1=train_config.adam_beta1,
                beta2=train_config.adam_beta2,
                eps=train_config.adam_epsilon,
            )
            losses.append(loss)
        dev_auc = roc_auc(sigmoid(forward_logits(model, Xd)), yd)
        report.epoch_losses.append(float(np.mean(losses)))
        report.epoch_dev_aucs.append(dev_auc)
        if dev_auc > best_auc:
            best_auc = dev_auc
            best_epoch = epoch
            best_params = ([w.copy() for w in model.weights], [b.copy() for b in model.biases])
        if epoch - best_epoch >= train_config.early_stop_patience:
            break
    model.weights, model.biases = best_params
    report.stopped_epoch = epoch
    report.best_dev_auc = best_auc
    model = model.astype(np.float32)
    report.param_checksum = model.param_checksum()
    return model, report


def score_batch(model: MlpModel, embeddings) -> list[ScoreRecord]:
    """Sigmoid scores for EmbeddingRecords; order preserved."""
    records = list(embeddings)
    if not records:
        return []
    for rec in records:
        if np.asarray(rec.vector).shape != (model.config.input_dim,):
            raise ValidationError(
                f"embedding for {rec.utterance_id!r} has wrong dimension "
                f"{np.asarray(rec.vector).shape}, expected ({model.config.input_dim},)"
            )
    X = np.stack([np.asarray(r.vector, dtype=model.weights[0].dtype) for r in records])
    scores = sigmoid(forward_logits(model, X))
    return [
        ScoreRecord(
            utterance_id=rec.utterance_id,
            provider=model.name,
            score=float(s),
            category="overall",
            score_side="native",
        )
        for rec, s in zip(records, scores)
    ]


def persist_model(model: MlpModel, path) -> None:
    payload = model.flat_params().astype("<f4").tobytes()
    header = {
        "config": {
            "input_dim": model.config.input_dim,
            "hidden_dims": list(model.config.hidden_dims),
            "activation": model.config.activation,
            "seed": model.config.seed,
        },
        "metadata": model.metadata,
        "param_count": param_count(model.config),
        "checksum": fnv1a64(payload),
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MTXM_MAGIC)
        fh.write(struct.pack("<BI", MTXM_VERSION, len(header_bytes)))
        fh.write(header_bytes)
        fh.write(payload)


def load_model(path) -> MlpModel:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MTXM_MAGIC:
        raise FormatError(f"{path}: bad magic {data[:4]!r}")
    version, header_len = struct.unpack_from("<BI", data, 4)
    if version != MTXM_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    header = json.loads(data[9 : 9 + header_len].decode("utf-8"))
    cfg = MlpConfig(
        input_dim=header["config"]["input_dim"],
        hidden_dims=tuple(header["config"]["hidden_dims"]),
        activation=header["config"]["activation"],
        seed=header["config"]["seed"],
    )
    payload = data[9 + header_len :]
    expected = param_count(cfg)
    if header["param_count"] != expected:
        raise FormatError(
            f"{path}: header param_count {header['param_count']} "
            f"does not match config ({expected})"
        )
    if len(payload) != 4 * expected:
        raise FormatError(
            f"{path}: payload holds {len(payload) // 4} parameters, expected {expected}"
        )
    if fnv1a64(payload) != header["checksum"]:
        raise FormatError(f"{path}: checksum failure")
    flat = np.frombuffer(payload, dtype="<f4")
    weights, biases = [], []
    offset = 0
    for out, inp in cfg.layer_shapes():
        weights.append(flat[offset : offset + out * inp].reshape(out, inp).copy())
        offset += out * inp
        biases.append(flat[offset : offset + out].copy())
        offset += out
    return MlpModel(config=cfg, weights=weights, biases=biases, metadata=header["metadata"])
