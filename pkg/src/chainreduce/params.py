"""Parameter vectors and the gradient aggregation rules.

Three ways of turning per-device gradients into one global gradient:

* ``central_aggregate``  - the parameter-server mean.
* ``neighbor_aggregate`` - fixed-graph neighbour averaging (biased baseline).
* ``pair_aggregate``     - theta-weighted pairwise merge; any full reduce of
  N gradients through it reproduces the central mean exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


class DimensionError(ValueError):
    """Vectors taking part in one operation have different lengths."""


class InvariantError(ValueError):
    """A ParamVector invariant (theta >= 1) was violated."""


@dataclass(frozen=True, eq=False)
class ParamVector:
    """Flat float64 vector plus the aggregation weight ``theta``."""

    values: np.ndarray
    theta: float = 1.0

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64, copy=True).reshape(-1)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        if not self.theta >= 1:
            raise InvariantError(f"theta must be >= 1, got {self.theta}")

    def __len__(self) -> int:
        return self.values.shape[0]

    def with_theta(self, theta: float) -> "ParamVector":
        return ParamVector(self.values, theta)

    def allclose(self, other: "ParamVector", atol: float = 0.0) -> bool:
        return len(self) == len(other) and bool(np.all(np.abs(self.values - other.values) <= atol))

    def to_dict(self) -> dict:
        return {"values": self.values.tolist(), "theta": self.theta}

    @classmethod
    def from_dict(cls, d: dict) -> "ParamVector":
        return cls(np.asarray(d["values"], dtype=np.float64), d.get("theta", 1.0))


@dataclass(frozen=True)
class GradientMessage:
    """Wire tuple (gradient, theta) tagged with sender and iteration."""

    sender_id: int
    gradient: ParamVector
    iteration: int

    def __post_init__(self):
        if self.iteration < 0:
            raise ValueError("iteration must be non-negative")

    @property
    def theta(self) -> float:
        return self.gradient.theta

    def to_dict(self) -> dict:
        return {"sender_id": self.sender_id, "iteration": self.iteration, **self.gradient.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "GradientMessage":
        return cls(int(d["sender_id"]), ParamVector.from_dict(d), int(d["iteration"]))


@dataclass(frozen=True)
class TrainHyper:
    eta: float = 0.1
    epochs: int = 20
    agg_rounds_per_epoch: int | None = None  # None: aggregate after every batch
    batch_size: int = 16

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.agg_rounds_per_epoch is not None and self.agg_rounds_per_epoch < 1:
            raise ValueError("agg_rounds_per_epoch must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def _check_lengths(vectors: Sequence[ParamVector]) -> int:
    n = len(vectors[0])
    for v in vectors[1:]:
        if len(v) != n:
            raise DimensionError(f"length mismatch: {n} vs {len(v)}")
    return n


def central_aggregate(gradients: Sequence[ParamVector]) -> ParamVector:
    """Elementwise mean of all gradients, theta = N."""
    if len(gradients) == 0:
        raise ValueError("central_aggregate needs at least one gradient")
    _check_lengths(gradients)
    stacked = np.stack([g.values for g in gradients])
    return ParamVector(stacked.mean(axis=0), float(len(gradients)))


def neighbor_aggregate(own: ParamVector, neighbors: Sequence[ParamVector], m: int) -> ParamVector:
    """Inner term of neighbour averaging: (sum(neighbors) + m*own) / (2m).

    The caller applies the outer 1/n mean over receiving devices.
    """
    if m < 1 or m != len(neighbors):
        raise ValueError(f"m={m} does not match {len(neighbors)} neighbours")
    _check_lengths([own, *neighbors])
    total = np.sum([g.values for g in neighbors], axis=0) + m * own.values
    return ParamVector(total / (2 * m))


def neighbor_round(gradients: Sequence[ParamVector], in_edges: dict[int, Sequence[int]]) -> ParamVector:
    """Full neighbour averaging on a fixed directed graph.

    ``in_edges[j]`` lists the devices that send to ``j``; the result is the mean
    over receivers j of ``neighbor_aggregate``.
    """
    receivers = [j for j, srcs in in_edges.items() if len(srcs) > 0]
    if not receivers:
        raise ValueError("graph has no edges")
    parts = [
        neighbor_aggregate(gradients[j], [gradients[i] for i in in_edges[j]], len(in_edges[j])).values
        for j in receivers
    ]
    return ParamVector(np.mean(parts, axis=0))


def pair_aggregate(receiver: ParamVector, incoming: ParamVector) -> ParamVector:
    """Theta-weighted merge of two partial aggregates; thetas add."""
    if len(receiver) != len(incoming):
        raise DimensionError(f"length mismatch: {len(receiver)} vs {len(incoming)}")
    ti, tj = receiver.theta, incoming.theta
    if ti <= 0 or tj <= 0:
        raise InvariantError("theta must be positive")
    total = ti + tj
    return ParamVector((ti * receiver.values + tj * incoming.values) / total, total)


def sgd_step(weights: ParamVector, global_gradient: ParamVector, eta: float) -> ParamVector:
    if len(weights) != len(global_gradient):
        raise DimensionError(f"length mismatch: {len(weights)} vs {len(global_gradient)}")
    if not eta > 0:
        raise ValueError("eta must be positive")
    return ParamVector(weights.values - eta * global_gradient.values, 1.0)


def chain_reduce(gradients: Sequence[ParamVector], pairs: Sequence[tuple[int, int]]) -> tuple[int, ParamVector]:
    """Apply (sender, receiver) pairs in order and return (survivor, result).

    Every index must send exactly once except the survivor.
    """
    held: dict[int, ParamVector] = dict(enumerate(gradients))
    for s, r in pairs:
        if s not in held or r not in held or s == r:
            raise ValueError(f"invalid pair {s}->{r}")
        held[r] = pair_aggregate(held[r], held.pop(s))
    if len(held) != 1:
        raise ValueError(f"pairs leave {len(held)} partial aggregates")
    (survivor, result), = held.items()
    return survivor, result
