"""Interval bound propagation and robustness verdicts.

Bounds are propagated through each affine layer by splitting the weight matrix
into its positive and negative parts, then clamped at zero by ReLU on hidden
layers. The output layer follows the network's output activation, so bounds
always enclose the network's actual outputs over the input box.

Verdicts are deliberately three-valued: interval analysis can prove robustness
(strict margin between the target's lower bound and every competitor's upper
bound) but its failure proves nothing, so the negative verdict is reserved for
an explicit counterexample found by sampling.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ValidationError
from .network import Network, RobustnessQuery


class Verdict(Enum):
    ROBUST = "robust"
    NOT_ROBUST = "not_robust"
    UNKNOWN = "unknown"


@dataclass(frozen=True, eq=False)
class LayerBounds:
    """Per-layer post-activation bounds. Arrays are (width,) or (n_queries, width)."""

    lower: tuple[np.ndarray, ...]
    upper: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.lower) != len(self.upper):
            raise ValidationError("lower/upper layer counts differ")
        for lo, up in zip(self.lower, self.upper):
            if lo.shape != up.shape:
                raise ValidationError("lower/upper shapes differ")
            if np.any(lo > up + 1e-12):
                raise ValidationError("lower bound exceeds upper bound")

    @property
    def output_lower(self) -> np.ndarray:
        return self.lower[-1]

    @property
    def output_upper(self) -> np.ndarray:
        return self.upper[-1]


def _box(net: Network, x, delta):
    x = np.asarray(x, dtype=np.float64)
    d = np.asarray(delta, dtype=np.float64)
    if d.ndim == 0:
        d = np.broadcast_to(d, x.shape).copy()
    if d.shape != x.shape:
        raise ValidationError(f"delta shape {d.shape} does not match x shape {x.shape}")
    if np.any(d < 0):
        raise ValidationError("delta must be non-negative")
    if x.shape[-1] != net.layer_sizes[0]:
        raise ValidationError(
            f"input must have {net.layer_sizes[0]} features, got shape {x.shape}"
        )
    return x - d, x + d


def ibp_bounds(net: Network, x, delta) -> LayerBounds:
    """Interval bounds for every layer over the box [x - delta, x + delta].

    ``x`` may be one input (d,) or a batch (n, d); ``delta`` a scalar or an
    array broadcastable to x. At delta = 0 the bounds collapse to the forward
    trace up to float round-off.
    """
    lo, up = _box(net, x, delta)
    lows = [lo]
    ups = [up]
    last = len(net.weights) - 1
    for j, (w, b) in enumerate(zip(net.weights, net.biases)):
        wp = np.maximum(w, 0.0)
        wn = np.minimum(w, 0.0)
        new_up = ups[-1] @ wp.T + lows[-1] @ wn.T + b
        new_lo = lows[-1] @ wp.T + ups[-1] @ wn.T + b
        if j < last or net.output_activation == "relu":
            new_up = np.maximum(new_up, 0.0)
            new_lo = np.maximum(new_lo, 0.0)
        lows.append(new_lo)
        ups.append(new_up)
    return LayerBounds(tuple(lows), tuple(ups))


def check_robust(bounds: LayerBounds, target: int) -> Verdict:
    """ROBUST iff the target's lower bound strictly beats every other upper bound.

    Interval failure is never a counterexample, so the alternative is UNKNOWN.
    """
    lo = bounds.output_lower
    up = bounds.output_upper
    if lo.ndim != 1:
        raise ValidationError("check_robust expects single-query bounds")
    if not 0 <= target < lo.shape[0]:
        raise ValidationError(f"target {target} out of range for {lo.shape[0]} outputs")
    others = np.delete(up, target)
    if others.size == 0 or lo[target] > others.max():
        return Verdict.ROBUST
    return Verdict.UNKNOWN


def robust_mask(bounds: LayerBounds, targets: np.ndarray) -> np.ndarray:
    """Batched check_robust: boolean per query (True = proven robust)."""
    lo = bounds.output_lower
    up = bounds.output_upper
    if lo.ndim != 2:
        raise ValidationError("robust_mask expects batched bounds")
    targets = np.asarray(targets, dtype=np.int64)
    n, m = up.shape
    if m == 1:
        return np.ones(n, dtype=bool)
    masked = up.copy()
    masked[np.arange(n), targets] = -np.inf
    return lo[np.arange(n), targets] > masked.max(axis=1)


def verify_query(net: Network, query: RobustnessQuery) -> Verdict:
    """Try to prove the network's own prediction at x stable over the box."""
    target = int(net.classify(query.x))
    return check_robust(ibp_bounds(net, query.x, query.delta), target)


def falsify(
    net: Network, query: RobustnessQuery, samples: int = 1000, seed: int = 0
) -> np.ndarray | None:
    """Search the box for an input classified differently from x.

    Returns the first counterexample found (a witness for NOT_ROBUST) or None.
    Sampling failure proves nothing.
    """
    if samples < 1:
        raise ValidationError(f"samples must be positive, got {samples}")
    target = int(net.classify(query.x))
    rng = np.random.default_rng(seed)
    points = rng.uniform(
        query.x - query.delta, query.x + query.delta, size=(samples, query.x.shape[0])
    )
    labels = net.classify(points)
    hits = np.flatnonzero(labels != target)
    if hits.size:
        return points[hits[0]].copy()
    return None
