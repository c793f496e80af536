"""Synthetic blobs dataset and a two-layer ReLU network with exact gradients.

Simulated devices use this to produce real gradients and a measurable test
accuracy; it is deliberately tiny so gradients can be checked against finite
differences.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from chainreduce.params import DimensionError, ParamVector, TrainHyper, central_aggregate, sgd_step


@dataclass
class SyntheticDataset:
    X: np.ndarray
    y: np.ndarray
    num_classes: int
    seed: int
    train_idx: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    test_idx: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __post_init__(self):
        if len(self.X) != len(self.y):
            raise ValueError("X and y lengths differ")
        if len(self.y) and (self.y.min() < 0 or self.y.max() >= self.num_classes):
            raise ValueError("label out of range")

    def __len__(self) -> int:
        return len(self.y)

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    @property
    def samples(self) -> list[tuple[np.ndarray, int]]:
        return [(self.X[i], int(self.y[i])) for i in range(len(self))]

    def train(self) -> tuple[np.ndarray, np.ndarray]:
        return self.X[self.train_idx], self.y[self.train_idx]

    def test(self) -> tuple[np.ndarray, np.ndarray]:
        return self.X[self.test_idx], self.y[self.test_idx]

    def to_csv(self, path: str | Path) -> None:
        """Feature columns, label, then a split column (train/test)."""
        split = np.full(len(self), "", dtype=object)
        split[self.train_idx] = "train"
        split[self.test_idx] = "test"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{j}" for j in range(self.dim)] + ["label", "split"])
            for i in range(len(self)):
                w.writerow([repr(float(v)) for v in self.X[i]] + [int(self.y[i]), split[i]])

    @classmethod
    def from_csv(cls, path: str | Path, num_classes: int | None = None, seed: int = 0) -> "SyntheticDataset":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        n_feat = header.index("label")
        X = np.array([[float(v) for v in r[:n_feat]] for r in body], dtype=np.float64)
        y = np.array([int(r[n_feat]) for r in body], dtype=np.int64)
        has_split = "split" in header
        train = [i for i, r in enumerate(body) if not has_split or r[n_feat + 1] == "train"]
        test = [i for i, r in enumerate(body) if has_split and r[n_feat + 1] == "test"]
        k = num_classes if num_classes is not None else int(y.max()) + 1
        return cls(X, y, k, seed, np.array(train, dtype=np.int64), np.array(test, dtype=np.int64))


def generate_blobs(num_classes: int, per_class: int, dim: int, spread: float, seed: int,
                   test_fraction: float = 0.2) -> SyntheticDataset:
    """One isotropic Gaussian cluster per class, centres uniform in [-2, 2]^dim."""
    if num_classes < 1 or per_class < 1 or dim < 1:
        raise ValueError("counts must be positive")
    if not spread > 0:
        raise ValueError("spread must be positive")
    rng = np.random.default_rng(seed)
    centres = rng.uniform(-2.0, 2.0, size=(num_classes, dim))
    X = np.concatenate([c + spread * rng.standard_normal((per_class, dim)) for c in centres])
    y = np.repeat(np.arange(num_classes), per_class)
    order = rng.permutation(len(y))
    n_test = int(round(test_fraction * len(y)))
    return SyntheticDataset(X, y, num_classes, seed,
                            np.sort(order[n_test:]), np.sort(order[:n_test]))


@dataclass(frozen=True)
class Layout:
    input_dim: int
    hidden_dim: int
    num_classes: int

    @property
    def size(self) -> int:
        i, h, k = self.input_dim, self.hidden_dim, self.num_classes
        return i * h + h + h * k + k


@dataclass
class ToyModel:
    weights: ParamVector
    layout: Layout

    def __post_init__(self):
        if len(self.weights) != self.layout.size:
            raise DimensionError(f"expected {self.layout.size} weights, got {len(self.weights)}")

    @classmethod
    def init(cls, layout: Layout, seed: int) -> "ToyModel":
        rng = np.random.default_rng(seed)
        i, h, k = layout.input_dim, layout.hidden_dim, layout.num_classes
        w1 = rng.standard_normal((i, h)) * math.sqrt(2.0 / i)
        w2 = rng.standard_normal((h, k)) * math.sqrt(2.0 / h)
        flat = np.concatenate([w1.ravel(), np.zeros(h), w2.ravel(), np.zeros(k)])
        return cls(ParamVector(flat), layout)

    def unpack(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        i, h, k = self.layout.input_dim, self.layout.hidden_dim, self.layout.num_classes
        v = self.weights.values
        a, b, c = i * h, i * h + h, i * h + h + h * k
        return v[:a].reshape(i, h), v[a:b], v[b:c].reshape(h, k), v[c:]

    def with_weights(self, weights: ParamVector) -> "ToyModel":
        return ToyModel(weights, self.layout)

    def logits(self, X: np.ndarray) -> np.ndarray:
        w1, b1, w2, b2 = self.unpack()
        return np.maximum(X @ w1 + b1, 0.0) @ w2 + b2


def _check_batch(model: ToyModel, X: np.ndarray) -> None:
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("batch must be a non-empty 2-D array")
    if X.shape[1] != model.layout.input_dim:
        raise DimensionError(f"feature dim {X.shape[1]} != {model.layout.input_dim}")


def forward_loss_grad(model: ToyModel, X: np.ndarray, y: np.ndarray) -> tuple[float, ParamVector]:
    """Mean softmax cross-entropy over the batch and its exact gradient."""
    _check_batch(model, X)
    w1, b1, w2, b2 = model.unpack()
    n = X.shape[0]
    pre = X @ w1 + b1
    hid = np.maximum(pre, 0.0)
    z = hid @ w2 + b2
    z = z - z.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    loss = -float(logp[np.arange(n), y].mean())

    dz = np.exp(logp)
    dz[np.arange(n), y] -= 1.0
    dz /= n
    gw2 = hid.T @ dz
    gb2 = dz.sum(axis=0)
    dpre = (dz @ w2.T) * (pre > 0)
    gw1 = X.T @ dpre
    gb1 = dpre.sum(axis=0)
    grad = np.concatenate([gw1.ravel(), gb1, gw2.ravel(), gb2])
    return loss, ParamVector(grad, 1.0)


def evaluate(model: ToyModel, X: np.ndarray, y: np.ndarray) -> float:
    """Fraction of argmax-correct predictions (ties go to the lowest class)."""
    _check_batch(model, X)
    return float(np.mean(np.argmax(model.logits(X), axis=1) == y))


@dataclass
class Partition:
    order: np.ndarray  # shuffled training indices
    ranges: dict[int, tuple[int, int]]

    def indices(self, device: int) -> np.ndarray:
        lo, hi = self.ranges[device]
        return self.order[lo:hi]

    def sizes(self) -> dict[int, int]:
        return {d: hi - lo for d, (lo, hi) in self.ranges.items()}


def partition_dataset(ds: SyntheticDataset, num_devices: int, seed: int | None = None) -> Partition:
    """Contiguous near-equal shards of the shuffled training set."""
    if num_devices < 1:
        raise ValueError("num_devices must be >= 1")
    n = len(ds.train_idx)
    if num_devices > n:
        raise ValueError(f"{num_devices} devices but only {n} training samples")
    rng = np.random.default_rng(ds.seed if seed is None else seed)
    order = ds.train_idx[rng.permutation(n)]
    base, extra = divmod(n, num_devices)
    ranges, lo = {}, 0
    for d in range(num_devices):
        hi = lo + base + (1 if d < extra else 0)
        ranges[d] = (lo, hi)
        lo = hi
    return Partition(order, ranges)


def batches_per_epoch(shard_size: int, batch_size: int) -> int:
    return max(1, math.ceil(shard_size / batch_size))


def epoch_batches(indices: np.ndarray, batch_size: int, n_batches: int, rng: np.random.Generator) -> list[np.ndarray]:
    """``n_batches`` minibatches from a fresh shuffle; wraps around if the shard is short."""
    perm = indices[rng.permutation(len(indices))]
    need = n_batches * batch_size
    if need > len(perm):
        perm = np.resize(perm, need)
    return [perm[b * batch_size:(b + 1) * batch_size] for b in range(n_batches)]


def train_central(ds: SyntheticDataset, layout: Layout, hyper: TrainHyper, seed: int) -> tuple[ToyModel, list[float]]:
    """Single-process minibatch SGD baseline; returns the model and per-epoch mean loss."""
    model = ToyModel.init(layout, seed)
    rng = np.random.default_rng(seed + 1)
    X, y = ds.X, ds.y
    n_batches = batches_per_epoch(len(ds.train_idx), hyper.batch_size)
    losses = []
    for _ in range(hyper.epochs):
        epoch_loss = []
        for idx in epoch_batches(ds.train_idx, hyper.batch_size, n_batches, rng):
            loss, g = forward_loss_grad(model, X[idx], y[idx])
            epoch_loss.append(loss)
            model = model.with_weights(sgd_step(model.weights, central_aggregate([g]), hyper.eta))
        losses.append(float(np.mean(epoch_loss)))
    return model, losses
