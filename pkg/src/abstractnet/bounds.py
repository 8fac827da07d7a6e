"""Worst-case output error of an abstraction over its input set, and the naive
robustness check built on it.

The per-layer error recurrence runs in original coordinates: each original
neuron's bound is propagated through the absolute original weight matrix, and
the epsilon measured when its layer was merged is added on top. Summed abstract
columns must not be used here: members with opposite-sign outgoing weights
would cancel and hide real error. The public vectors are abstract-indexed by
taking, per surviving neuron, the worst bound over its cluster's members.

The perturbation term, by contrast, propagates through the abstract network
itself, so there the abstract matrices are the right ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .abstraction import AbstractionRecord
from .errors import ValidationError
from .verifier import Verdict


@dataclass(frozen=True, eq=False)
class ErrorBounds:
    """Per-layer bounds on |abstract activation - original activation| over X.

    ``per_layer[i]`` has the abstract width of layer i+1 and bounds the gap
    between each surviving neuron's value and every original neuron it stands
    for. ``original_per_layer`` keeps the underlying per-original-neuron bounds.
    """

    per_layer: tuple[np.ndarray, ...]
    original_per_layer: tuple[np.ndarray, ...]

    @property
    def output(self) -> np.ndarray:
        return self.per_layer[-1]


def clustering_error(record: AbstractionRecord) -> ErrorBounds:
    """Accumulated abstraction error per layer, layer by layer.

    The input layer is exact. Each later layer inherits the previous layer's
    error through the absolute original weights and adds the epsilons the merge
    introduced there.
    """
    orig = record.original_net
    eps = record.original_epsilons()
    original = [np.zeros(orig.layer_sizes[0])]
    for j, w in enumerate(orig.weights):
        original.append(np.abs(w) @ original[-1] + eps[j + 1])
    per_layer = []
    for i, vec in enumerate(original):
        layer = i + 1
        if layer == 1 or layer == orig.num_layers:
            per_layer.append(vec.copy())
        else:
            clusters = record.clustering_for(layer).clusters
            per_layer.append(
                np.array([vec[list(members)].max() for members in clusters])
            )
    return ErrorBounds(per_layer=tuple(per_layer), original_per_layer=tuple(original))


def total_error(record: AbstractionRecord, delta) -> np.ndarray:
    """Output error bound combining input perturbation and abstraction error.

    Valid for |x' - x| <= delta with x in the abstraction's input set: the
    abstract output at x' differs from the original output at x by at most this
    vector, element-wise.
    """
    abstract = record.abstract_net
    d = np.asarray(delta, dtype=np.float64)
    if d.ndim == 0:
        d = np.full(abstract.layer_sizes[0], float(d))
    if d.shape != (abstract.layer_sizes[0],):
        raise ValidationError(
            f"delta must be scalar or ({abstract.layer_sizes[0]},), got shape {d.shape}"
        )
    if np.any(d < 0):
        raise ValidationError("delta must be non-negative")
    acc = d
    for w in abstract.weights:
        acc = np.abs(w) @ acc
    return acc + clustering_error(record).output


def naive_robust_check(record: AbstractionRecord, x, delta) -> Verdict:
    """Robust iff some output dominates all others even after the error budget.

    Compares abstract outputs at x padded by the total error bound; sound for
    points of the abstraction's input set. Failure yields UNKNOWN, never a
    counterexample.
    """
    T = total_error(record, delta)
    y = record.abstract_net.forward(x)
    if y.ndim != 1:
        raise ValidationError("naive_robust_check expects a single input")
    for i in range(y.shape[0]):
        rival = np.delete(y + T, i)
        if rival.size == 0 or y[i] - T[i] > rival.max():
            return Verdict.ROBUST
    return Verdict.UNKNOWN
