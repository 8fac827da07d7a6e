"""Neuron clustering by activation similarity.

Neurons are points in R^n: one row of an activation matrix per neuron, one
column per input. Lloyd's algorithm with k-means++ seeding groups I/O-similar
neurons; each cluster elects the member closest to its centroid as the
representative, and every member gets an epsilon measuring how far its
activation row lies from the representative's.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import ActivationMatrix
from .errors import ValidationError

EPSILON_NORMS = ("l2", "linf")

KMEANS_MAX_ITER = 300


@dataclass(frozen=True, eq=False)
class LayerClustering:
    """A partition of one layer's neurons with representatives and epsilons.

    ``clusters[c]`` lists member neuron indices (sorted); ``representatives[c]``
    is a member of cluster c. Clusters are ordered by representative index, which
    is also the neuron order of the merged layer. ``epsilons[i]`` is the distance
    from neuron i's activation row to its representative's row (0 at the
    representative itself).
    """

    layer: int
    clusters: tuple[tuple[int, ...], ...]
    representatives: tuple[int, ...]
    epsilons: np.ndarray

    def __post_init__(self):
        eps = np.asarray(self.epsilons, dtype=np.float64)
        object.__setattr__(self, "epsilons", eps)
        n = eps.shape[0]
        seen = sorted(i for c in self.clusters for i in c)
        if seen != list(range(n)):
            raise ValidationError("clusters must partition the layer's neuron indices")
        if len(self.representatives) != len(self.clusters):
            raise ValidationError("one representative per cluster required")
        for rep, members in zip(self.representatives, self.clusters):
            if rep not in members:
                raise ValidationError(f"representative {rep} is not a member of its cluster")
        if list(self.representatives) != sorted(self.representatives):
            raise ValidationError("clusters must be ordered by representative index")
        if np.any(eps < 0):
            raise ValidationError("epsilons must be non-negative")

    @property
    def num_neurons(self) -> int:
        return self.epsilons.shape[0]

    @property
    def num_clusters(self) -> int:
        return len(self.clusters)

    def neuron_map(self) -> np.ndarray:
        """Original neuron index -> index of its cluster in the merged layer."""
        out = np.empty(self.num_neurons, dtype=np.int64)
        for c, members in enumerate(self.clusters):
            for m in members:
                out[m] = c
        return out

    def abstract_epsilons(self) -> np.ndarray:
        """Per-cluster worst-case epsilon: max over the cluster's members."""
        return np.array(
            [self.epsilons[list(members)].max() for members in self.clusters],
            dtype=np.float64,
        )


def _wcss(points: np.ndarray, centroids: np.ndarray, assign: np.ndarray) -> float:
    diffs = points - centroids[assign]
    return float(np.sum(diffs * diffs))


def _kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: spread initial centroids by squared-distance sampling."""
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = np.sum((points - points[chosen[0]]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # all remaining points coincide with a centroid; pick any unused index
            remaining = [i for i in range(n) if i not in chosen]
            chosen.append(int(rng.choice(remaining)))
        else:
            probs = d2 / total
            chosen.append(int(rng.choice(n, p=probs)))
        d2 = np.minimum(d2, np.sum((points - points[chosen[-1]]) ** 2, axis=1))
    return points[chosen].copy()


def kmeans(points: np.ndarray, k: int, seed: int = 0, max_iter: int = KMEANS_MAX_ITER):
    """Lloyd's algorithm on rows of ``points``; returns k lists of row indices.

    Deterministic for a fixed seed. Stops when assignments no longer change or
    after ``max_iter`` iterations. Empty clusters are repaired by stealing the
    point currently farthest from its own centroid. Duplicate rows are fine:
    with more clusters than distinct rows, some clusters end up sharing a value.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] == 0:
        raise ValidationError(f"points must be a non-empty 2-d array, got shape {points.shape}")
    n = points.shape[0]
    if not 1 <= k <= n:
        raise ValidationError(f"k must be in [1, {n}], got {k}")
    if k == n:
        return [[i] for i in range(n)]
    rng = np.random.default_rng(seed)
    centroids = _kmeans_pp_init(points, k, rng)
    assign = np.full(n, -1, dtype=np.int64)
    prev_obj = np.inf
    for _ in range(max_iter):
        d2 = (
            np.sum(points * points, axis=1)[:, None]
            - 2.0 * points @ centroids.T
            + np.sum(centroids * centroids, axis=1)[None, :]
        )
        new_assign = np.argmin(d2, axis=1)
        # repair empty clusters: steal the point farthest from its centroid
        for c in range(k):
            if not np.any(new_assign == c):
                dist_own = np.sum((points - centroids[new_assign]) ** 2, axis=1)
                counts = np.bincount(new_assign, minlength=k)
                dist_own[counts[new_assign] <= 1] = -1.0  # do not empty another cluster
                thief = int(np.argmax(dist_own))
                new_assign[thief] = c
                centroids[c] = points[thief]
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for c in range(k):
            members = points[assign == c]
            centroids[c] = members.mean(axis=0)
        obj = _wcss(points, centroids, assign)
        # Lloyd's updates may only improve the objective
        assert obj <= prev_obj + 1e-9 * max(1.0, abs(prev_obj)), "objective increased"
        prev_obj = obj
    return [sorted(np.flatnonzero(assign == c).tolist()) for c in range(k)]


def pick_representative(cluster, points: np.ndarray, centroid: np.ndarray | None = None) -> int:
    """Member whose row is closest to the cluster centroid; ties pick the lowest index."""
    members = sorted(int(i) for i in cluster)
    if not members:
        raise ValidationError("cluster is empty")
    rows = points[members]
    if centroid is None:
        centroid = rows.mean(axis=0)
    d2 = np.sum((rows - centroid) ** 2, axis=1)
    return members[int(np.argmin(d2))]


def epsilon_vector(points: np.ndarray, clusters, representatives, norm: str = "l2") -> np.ndarray:
    """Distance of each neuron's activation row to its representative's row.

    "l2" is the Euclidean norm over the input columns; "linf" the max absolute
    coordinate gap (never larger, so downstream bounds only tighten).
    """
    if norm not in EPSILON_NORMS:
        raise ValidationError(f"norm must be one of {EPSILON_NORMS}, got {norm!r}")
    points = np.asarray(points, dtype=np.float64)
    eps = np.zeros(points.shape[0], dtype=np.float64)
    for members, rep in zip(clusters, representatives):
        for m in members:
            gap = points[m] - points[rep]
            eps[m] = np.linalg.norm(gap) if norm == "l2" else np.max(np.abs(gap), initial=0.0)
    return eps


def cluster_layer(act: ActivationMatrix, k: int, seed: int = 0, norm: str = "l2") -> LayerClustering:
    """Cluster one layer's activation rows and package the result."""
    points = act.values
    raw = kmeans(points, k, seed=seed)
    paired = []
    for members in raw:
        rep = pick_representative(members, points)
        paired.append((rep, tuple(members)))
    paired.sort()
    reps = tuple(rep for rep, _ in paired)
    clusters = tuple(members for _, members in paired)
    eps = epsilon_vector(points, clusters, reps, norm=norm)
    return LayerClustering(layer=act.layer, clusters=clusters, representatives=reps, epsilons=eps)
