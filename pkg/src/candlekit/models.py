"""Model zoo: MiniCNN, two-stream CNN, CAE, CNN1D, training, and metrics.

MiniCNN is B blocks of [Conv3x3, ReLU, Conv3x3, ReLU, MaxPool2x2] with the
given channel widths, then Flatten -> Dense -> ReLU -> Dense(1) -> Sigmoid;
the single output is the predicted strength probability. The two-stream
model runs one such tower on the history chart and an independent tower on
the pattern crop, concatenates the flattened features, and fuses them with
the same dense head. The CAE compresses 3-channel sub-chart images to a
latent vector and mirrors back up with nearest-neighbor upsampling; CNN1D
classifies the per-window sequence of latent vectors and uses half the
MiniCNN block count (rounded up).

Splits are chronological by default: samples sorted by their series index,
train first, validation next, test last, so there is no look-ahead
leakage. Merged
datasets split chronologically within each member and concatenate the
partitions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    BadParams,
    EmptyPartition,
    LengthMismatch,
    ShapeMismatch,
)
from .nn import (
    Conv1D,
    Conv2D,
    Dense,
    Flatten,
    MaxPool1D,
    MaxPool2D,
    NearestUpsample2D,
    ReLU,
    Reshape,
    Sequential,
    Sigmoid,
    adam_step,
    loss_bce,
    loss_mse,
    output_shape,
    sgd_step,
)
from .rng import Rng, derive_seed

VARIANTS = ("mini_cnn", "two_stream", "cae", "cnn1d")

_PREDICT_CHUNK = 256


@dataclass(frozen=True)
class ModelConfig:
    variant: str = "mini_cnn"
    input_shape: tuple[int, ...] = (3, 64, 64)
    block_widths: tuple[int, ...] = (8, 16, 32)
    fc_dim: int = 64
    pattern_shape: tuple[int, ...] = (3, 32, 32)
    pattern_widths: tuple[int, ...] = (8, 16)
    latent_dim: int = 32
    seq_len: int = 28
    seed: int = 0

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise BadParams(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if not self.block_widths or not self.pattern_widths:
            raise BadParams("block widths must be nonempty")
        if self.fc_dim < 1 or self.latent_dim < 1 or self.seq_len < 1:
            raise BadParams("fc_dim, latent_dim, seq_len must be >= 1")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 32
    lr: float = 1e-3
    optimizer: str = "adam"
    seed: int = 0
    train_frac: float = 0.7
    val_frac: float = 0.15
    chronological: bool = True

    def __post_init__(self) -> None:
        if self.epochs < 0:
            raise BadParams("epochs must be >= 0")
        if self.batch_size < 1:
            raise BadParams("batch_size must be >= 1")
        if self.optimizer not in ("adam", "sgd"):
            raise BadParams(f"optimizer must be adam or sgd, got {self.optimizer!r}")
        if not (0 < self.train_frac < 1 and 0 < self.val_frac < 1):
            raise BadParams("split fractions must be in (0, 1)")
        if self.train_frac + self.val_frac >= 1:
            raise BadParams("train_frac + val_frac must be < 1")


@dataclass
class TrainingSet:
    """Arrays for one classification run; ``pattern`` only for two-stream."""

    inputs: np.ndarray
    labels: np.ndarray
    order: np.ndarray
    pattern: np.ndarray | None = None
    member: np.ndarray | None = None
    sample_ids: tuple[str, ...] = ()

    def __len__(self) -> int:
        return int(self.inputs.shape[0])


@dataclass
class SubchartDataset:
    """Per-sample stacks of sub-chart images for the decompose pipeline."""

    subcharts: np.ndarray  # (N, S, C, H, W)
    labels: np.ndarray
    order: np.ndarray
    member: np.ndarray | None = None


def _tower_specs(in_ch: int, widths: tuple[int, ...]) -> list:
    specs: list = []
    c = in_ch
    for w in widths:
        specs.extend(
            [Conv2D(c, w, 3, 1, 1), ReLU(), Conv2D(w, w, 3, 1, 1), ReLU(), MaxPool2D(2, 2)]
        )
        c = w
    specs.append(Flatten())
    return specs


def _chain_shape(specs: list, in_shape: tuple[int, ...]) -> tuple[int, ...]:
    shape = tuple(in_shape)
    for spec in specs:
        shape = output_shape(spec, shape)
    return shape


class MiniCNN:
    variant = "mini_cnn"

    def __init__(self, cfg: ModelConfig) -> None:
        self.cfg = cfg
        tower = _tower_specs(cfg.input_shape[0], cfg.block_widths)
        self.tower_len = len(tower)
        flat = _chain_shape(tower, cfg.input_shape)[0]
        specs = tower + [Dense(flat, cfg.fc_dim), ReLU(), Dense(cfg.fc_dim, 1), Sigmoid()]
        self.net = Sequential(specs, cfg.input_shape, derive_seed(cfg.seed, "mini_cnn"))

    def forward(self, x: np.ndarray):
        y, caches = self.net.forward(x)
        return y.reshape(-1), caches

    def backward(self, grad: np.ndarray, caches) -> None:
        self.net.backward(grad.reshape(-1, 1), caches)

    def trainable(self):
        return self.net.trainable()

    def arrays(self):
        return self.net.arrays()

    def set_arrays(self, arrays) -> None:
        self.net.set_arrays(arrays)


class TwoStream:
    variant = "two_stream"

    def __init__(self, cfg: ModelConfig) -> None:
        self.cfg = cfg
        self.hist_tower = Sequential(
            _tower_specs(cfg.input_shape[0], cfg.block_widths),
            cfg.input_shape,
            derive_seed(cfg.seed, "two_stream.hist"),
        )
        self.pattern_tower = Sequential(
            _tower_specs(cfg.pattern_shape[0], cfg.pattern_widths),
            cfg.pattern_shape,
            derive_seed(cfg.seed, "two_stream.pattern"),
        )
        self.hist_features = self.hist_tower.output_shape[0]
        pat_features = self.pattern_tower.output_shape[0]
        self.head = Sequential(
            [Dense(self.hist_features + pat_features, cfg.fc_dim), ReLU(), Dense(cfg.fc_dim, 1), Sigmoid()],
            (self.hist_features + pat_features,),
            derive_seed(cfg.seed, "two_stream.head"),
        )

    def forward(self, batch):
        x_hist, x_pat = batch
        f_hist, c_hist = self.hist_tower.forward(x_hist)
        f_pat, c_pat = self.pattern_tower.forward(x_pat)
        fused = np.concatenate([f_hist, f_pat], axis=1)
        y, c_head = self.head.forward(fused)
        return y.reshape(-1), (c_hist, c_pat, c_head)

    def backward(self, grad: np.ndarray, caches) -> None:
        c_hist, c_pat, c_head = caches
        d_fused = self.head.backward(grad.reshape(-1, 1), c_head)
        self.hist_tower.backward(d_fused[:, : self.hist_features], c_hist)
        self.pattern_tower.backward(d_fused[:, self.hist_features :], c_pat)

    def trainable(self):
        return self.hist_tower.trainable() + self.pattern_tower.trainable() + self.head.trainable()

    def arrays(self):
        return self.hist_tower.arrays() + self.pattern_tower.arrays() + self.head.arrays()

    def set_arrays(self, arrays) -> None:
        n_h = len(self.hist_tower.arrays())
        n_p = len(self.pattern_tower.arrays())
        self.hist_tower.set_arrays(arrays[:n_h])
        self.pattern_tower.set_arrays(arrays[n_h : n_h + n_p])
        self.head.set_arrays(arrays[n_h + n_p :])


class CAEModel:
    variant = "cae"

    def __init__(self, cfg: ModelConfig) -> None:
        self.cfg = cfg
        c, h, w = cfg.input_shape
        w1, w2 = cfg.block_widths[0], cfg.block_widths[min(1, len(cfg.block_widths) - 1)]
        enc = [
            Conv2D(c, w1, 3, 1, 1), ReLU(), MaxPool2D(2, 2),
            Conv2D(w1, w2, 3, 1, 1), ReLU(), MaxPool2D(2, 2),
            Flatten(),
        ]
        bottleneck_hw = (w2, h // 4, w // 4)
        flat = w2 * (h // 4) * (w // 4)
        enc.append(Dense(flat, cfg.latent_dim))
        self.encoder = Sequential(enc, cfg.input_shape, derive_seed(cfg.seed, "cae.enc"))
        dec = [
            Dense(cfg.latent_dim, flat), ReLU(), Reshape(bottleneck_hw),
            NearestUpsample2D(2), Conv2D(w2, w1, 3, 1, 1), ReLU(),
            NearestUpsample2D(2), Conv2D(w1, c, 3, 1, 1), Sigmoid(),
        ]
        self.decoder = Sequential(dec, (cfg.latent_dim,), derive_seed(cfg.seed, "cae.dec"))
        if self.decoder.output_shape != cfg.input_shape:
            raise ShapeMismatch(
                f"decoder reproduces {self.decoder.output_shape}, input is {cfg.input_shape}; "
                "height/width must be divisible by 4"
            )

    def forward(self, x: np.ndarray):
        z, c_enc = self.encoder.forward(x)
        recon, c_dec = self.decoder.forward(z)
        return recon, (c_enc, c_dec)

    def backward(self, grad: np.ndarray, caches) -> None:
        c_enc, c_dec = caches
        dz = self.decoder.backward(grad, c_dec)
        self.encoder.backward(dz, c_enc)

    def encode(self, x: np.ndarray) -> np.ndarray:
        out = [self.encoder.predict(x[i : i + _PREDICT_CHUNK]) for i in range(0, len(x), _PREDICT_CHUNK)]
        return np.concatenate(out, axis=0)

    def trainable(self):
        return self.encoder.trainable() + self.decoder.trainable()

    def arrays(self):
        return self.encoder.arrays() + self.decoder.arrays()

    def set_arrays(self, arrays) -> None:
        n_e = len(self.encoder.arrays())
        self.encoder.set_arrays(arrays[:n_e])
        self.decoder.set_arrays(arrays[n_e:])


class CNN1DModel:
    variant = "cnn1d"

    def __init__(self, cfg: ModelConfig) -> None:
        self.cfg = cfg
        n_blocks = math.ceil(len(cfg.block_widths) / 2)
        widths = cfg.block_widths[:n_blocks]
        specs: list = []
        c = cfg.latent_dim
        for w in widths:
            specs.extend([Conv1D(c, w, 3, 1, 1), ReLU(), MaxPool1D(2, 2)])
            c = w
        specs.append(Flatten())
        flat = _chain_shape(specs, (cfg.latent_dim, cfg.seq_len))[0]
        specs.extend([Dense(flat, 1), Sigmoid()])
        self.net = Sequential(specs, (cfg.latent_dim, cfg.seq_len), derive_seed(cfg.seed, "cnn1d"))

    def forward(self, x: np.ndarray):
        y, caches = self.net.forward(x)
        return y.reshape(-1), caches

    def backward(self, grad: np.ndarray, caches) -> None:
        self.net.backward(grad.reshape(-1, 1), caches)

    def trainable(self):
        return self.net.trainable()

    def arrays(self):
        return self.net.arrays()

    def set_arrays(self, arrays) -> None:
        self.net.set_arrays(arrays)


Model = MiniCNN | TwoStream | CAEModel | CNN1DModel


def build_model(cfg: ModelConfig) -> Model:
    cls = {
        "mini_cnn": MiniCNN,
        "two_stream": TwoStream,
        "cae": CAEModel,
        "cnn1d": CNN1DModel,
    }[cfg.variant]
    return cls(cfg)


# --- evaluation -----------------------------------------------------------


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    f1: float
    auc: float | None
    tp: int
    fp: int
    tn: int
    fn: int
    n: int
    threshold: float

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "f1": self.f1,
            "auc": self.auc,
            "confusion": {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn},
            "n": self.n,
            "threshold": self.threshold,
        }


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks, ties receive the mean rank of their group."""
    n = len(values)
    order = np.argsort(values, kind="stable")
    sorted_v = values[order]
    ranks = np.empty(n, dtype=np.float64)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and sorted_v[j + 1] == sorted_v[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def evaluate(probs, labels, threshold: float = 0.5) -> EvalReport:
    """Accuracy, F1, and pair-counting AUC at the given threshold.

    AUC gives half credit to ties and is None when the labels hold a
    single class; the other metrics are still reported in that case.
    Positive prediction iff prob >= threshold.
    """
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels)
    if probs.shape != labels.shape or probs.ndim != 1 or len(probs) == 0:
        raise LengthMismatch(f"probs {probs.shape} vs labels {labels.shape}")
    pos = labels.astype(np.float64) == 1.0
    pred = probs >= threshold
    tp = int(np.sum(pred & pos))
    fp = int(np.sum(pred & ~pos))
    fn = int(np.sum(~pred & pos))
    tn = int(np.sum(~pred & ~pos))
    n = len(probs)
    accuracy = (tp + tn) / n
    f1 = 2 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) > 0 else 0.0

    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        auc = None
    else:
        ranks = _average_ranks(probs)
        auc = float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))
    return EvalReport(
        accuracy=accuracy, f1=f1, auc=auc, tp=tp, fp=fp, tn=tn, fn=fn, n=n, threshold=threshold
    )


def _batch_inputs(ts: TrainingSet, idx: np.ndarray, variant: str):
    if variant == "two_stream":
        if ts.pattern is None:
            raise ShapeMismatch("two_stream needs a pattern stream in the training set")
        return ts.inputs[idx], ts.pattern[idx]
    return ts.inputs[idx]


def predict(model: Model, inputs) -> np.ndarray:
    """Deterministic forward pass over a batch; probabilities in (0, 1)."""
    if model.variant == "two_stream":
        x_hist, x_pat = inputs
        chunks = [
            model.forward((x_hist[i : i + _PREDICT_CHUNK], x_pat[i : i + _PREDICT_CHUNK]))[0]
            for i in range(0, len(x_hist), _PREDICT_CHUNK)
        ]
    else:
        chunks = [
            model.forward(inputs[i : i + _PREDICT_CHUNK])[0]
            for i in range(0, len(inputs), _PREDICT_CHUNK)
        ]
    return np.concatenate(chunks, axis=0)


# --- splits and training ---------------------------------------------------


def split_indices(
    order: np.ndarray,
    member: np.ndarray | None,
    tc: TrainConfig,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Train/val/test index arrays; chronological within each member."""
    n = len(order)
    members = member if member is not None else np.zeros(n, dtype=np.int64)
    train: list[int] = []
    val: list[int] = []
    test: list[int] = []
    shuffler = Rng(derive_seed(tc.seed, "split-shuffle"))
    for m in np.unique(members):
        idx = np.nonzero(members == m)[0]
        idx = idx[np.argsort(order[idx], kind="stable")]
        if not tc.chronological:
            idx = list(idx)
            shuffler.shuffle(idx)
            idx = np.asarray(idx)
        k = len(idx)
        n_train = int(k * tc.train_frac)
        n_val = int(k * tc.val_frac)
        train.extend(idx[:n_train])
        val.extend(idx[n_train : n_train + n_val])
        test.extend(idx[n_train + n_val :])
    if not train or not val or not test:
        raise EmptyPartition(
            f"split of {n} samples left an empty partition "
            f"({len(train)}/{len(val)}/{len(test)})"
        )
    return np.asarray(train), np.asarray(val), np.asarray(test)


@dataclass
class EpochStats:
    epoch: int
    train_loss: float | None
    val_accuracy: float
    val_f1: float
    val_auc: float | None


@dataclass
class TrainReport:
    entries: list[EpochStats] = field(default_factory=list)
    n_train: int = 0
    n_val: int = 0
    n_test: int = 0

    def to_json(self) -> str:
        rows = [
            {
                "epoch": e.epoch,
                "train_loss": e.train_loss,
                "val_accuracy": e.val_accuracy,
                "val_f1": e.val_f1,
                "val_auc": e.val_auc,
            }
            for e in self.entries
        ]
        doc = {
            "epochs": rows,
            "n_train": self.n_train,
            "n_val": self.n_val,
            "n_test": self.n_test,
        }
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"

    def best_val_accuracy(self) -> float:
        return max(e.val_accuracy for e in self.entries)

    def final_val_accuracy(self) -> float:
        return self.entries[-1].val_accuracy


def _optimizer_step(model: Model, tc: TrainConfig) -> None:
    if tc.optimizer == "adam":
        adam_step(model.trainable(), tc.lr)
    else:
        sgd_step(model.trainable(), tc.lr)


def _val_stats(model: Model, ts: TrainingSet, idx: np.ndarray, epoch: int,
               train_loss: float | None) -> EpochStats:
    probs = predict(model, _batch_inputs(ts, idx, model.variant))
    rep = evaluate(probs, ts.labels[idx])
    return EpochStats(
        epoch=epoch,
        train_loss=train_loss,
        val_accuracy=rep.accuracy,
        val_f1=rep.f1,
        val_auc=rep.auc,
    )


def train(model: Model, ts: TrainingSet, tc: TrainConfig) -> TrainReport:
    """Mini-batch BCE training; epoch 0 records the untrained val metrics."""
    tr, va, te = split_indices(ts.order, ts.member, tc)
    report = TrainReport(n_train=len(tr), n_val=len(va), n_test=len(te))
    report.entries.append(_val_stats(model, ts, va, 0, None))
    shuffle_rng = Rng(derive_seed(tc.seed, "batch-shuffle"))
    for epoch in range(1, tc.epochs + 1):
        idx = list(tr)
        shuffle_rng.shuffle(idx)
        losses = []
        for start in range(0, len(idx), tc.batch_size):
            batch = np.asarray(idx[start : start + tc.batch_size])
            probs, caches = model.forward(_batch_inputs(ts, batch, model.variant))
            value, grad = loss_bce(probs, ts.labels[batch].astype(probs.dtype))
            model.backward(grad, caches)
            _optimizer_step(model, tc)
            losses.append(value)
        report.entries.append(_val_stats(model, ts, va, epoch, float(np.mean(losses))))
    return report


@dataclass
class SubchartPipelineResult:
    cae: CAEModel
    cnn1d: CNN1DModel
    cae_epoch_mse: list[float]  # index 0 is the pre-training MSE
    encoded_shape: tuple[int, ...]
    report: TrainReport


def _recon_mse(cae: CAEModel, images: np.ndarray) -> float:
    total = 0.0
    for i in range(0, len(images), _PREDICT_CHUNK):
        chunk = images[i : i + _PREDICT_CHUNK]
        recon, _ = cae.forward(chunk)
        total += float(np.sum((recon - chunk) ** 2))
    return total / images.size


def train_subchart_pipeline(ds: SubchartDataset, tc: TrainConfig, cfg: ModelConfig) -> SubchartPipelineResult:
    """Two-phase decompose pipeline.

    Phase 1 trains the CAE on the training partition's sub-chart images
    with MSE. Phase 2 freezes the encoder, encodes every sample's sub-chart
    sequence into a (latent_dim, S) tensor, and trains CNN1D on the
    strength labels with BCE.
    """
    n, s = ds.subcharts.shape[0], ds.subcharts.shape[1]
    tr, _va, _te = split_indices(ds.order, ds.member, tc)

    cae_cfg = replace(cfg, variant="cae", input_shape=tuple(ds.subcharts.shape[2:]))
    cae = CAEModel(cae_cfg)
    train_imgs = ds.subcharts[tr].reshape((-1,) + ds.subcharts.shape[2:])
    epoch_mse = [_recon_mse(cae, train_imgs)]
    shuffle_rng = Rng(derive_seed(tc.seed, "cae-shuffle"))
    for _epoch in range(1, tc.epochs + 1):
        idx = list(range(len(train_imgs)))
        shuffle_rng.shuffle(idx)
        for start in range(0, len(idx), tc.batch_size):
            batch = train_imgs[np.asarray(idx[start : start + tc.batch_size])]
            recon, caches = cae.forward(batch)
            _, grad = loss_mse(recon, batch)
            cae.backward(grad, caches)
            _optimizer_step(cae, tc)
        epoch_mse.append(_recon_mse(cae, train_imgs))

    latent = cae.encode(ds.subcharts.reshape((-1,) + ds.subcharts.shape[2:]))
    encoded = np.ascontiguousarray(
        latent.reshape(n, s, cfg.latent_dim).transpose(0, 2, 1)
    )
    clf_ts = TrainingSet(
        inputs=encoded, labels=ds.labels, order=ds.order, member=ds.member
    )
    cnn1d = CNN1DModel(replace(cfg, variant="cnn1d", seq_len=s))
    report = train(cnn1d, clf_ts, tc)
    return SubchartPipelineResult(
        cae=cae,
        cnn1d=cnn1d,
        cae_epoch_mse=epoch_mse,
        encoded_shape=tuple(encoded.shape),
        report=report,
    )
