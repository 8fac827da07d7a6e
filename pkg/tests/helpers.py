"""Shared builders for the hand-checked toy networks used across tests."""

import numpy as np

from abstractnet import Network, merge_cluster
from abstractnet.abstraction import AbstractionRecord, _fingerprint
from abstractnet.clustering import LayerClustering


def toy_abstract_network() -> Network:
    """2-2-1-2 ReLU net: forward(1,1) = (9,2); box IBP at x=0, delta=1 gives
    output bounds [5,13] and [0,4]."""
    w1 = np.array([[1.0, 1.0], [1.0, -1.0]])
    w2 = np.array([[1.0, 1.0]])
    w3 = np.array([[2.0], [1.0]])
    biases = (np.zeros(2), np.zeros(1), np.array([5.0, 0.0]))
    return Network((w1, w2, w3), biases, output_activation="identity")


def toy_original_network() -> Network:
    """2-2-2-2 net whose two hidden-3 neurons are exact duplicates; merging them
    reproduces toy_abstract_network bit for bit."""
    w1 = np.array([[1.0, 1.0], [1.0, -1.0]])
    w2 = np.array([[1.0, 1.0], [1.0, 1.0]])
    w3 = np.array([[1.0, 1.0], [0.0, 1.0]])
    biases = (np.zeros(2), np.zeros(2), np.array([5.0, 0.0]))
    return Network((w1, w2, w3), biases, output_activation="identity")


def toy_record(e: float = 0.0) -> AbstractionRecord:
    """Record for the duplicate merge with the deleted neuron's radius set to e."""
    original = toy_original_network()
    merged = merge_cluster(original, 3, (0, 1), 0)
    c2 = LayerClustering(2, ((0,), (1,)), (0, 1), (0.0, 0.0))
    c3 = LayerClustering(3, ((0, 1),), (0,), (0.0, float(e)))
    X = np.array([[1.0, 1.0], [0.5, -0.5]])
    return AbstractionRecord(
        original, merged, (c2, c3), 0, "l2", _fingerprint(X), X.shape[0]
    )


def random_network(rng, sizes=None) -> Network:
    """Gaussian-weight ReLU net; random sizes up to 4 hidden layers of width <= 10."""
    if sizes is None:
        depth = int(rng.integers(1, 5))
        sizes = [int(rng.integers(2, 11)) for _ in range(depth + 2)]
    ws = tuple(rng.normal(0.0, 1.0, (o, i)) for i, o in zip(sizes[:-1], sizes[1:]))
    bs = tuple(rng.normal(0.0, 0.5, o) for o in sizes[1:])
    return Network(ws, bs, output_activation="identity")


def random_k_l(rng, net: Network) -> dict[int, int]:
    return {
        layer: int(rng.integers(1, net.width(layer) + 1)) for layer in net.hidden_layers
    }


def strip_timings(report):
    """Drop every timing field so reports can be compared for determinism."""
    if isinstance(report, dict):
        return {
            k: strip_timings(v) for k, v in report.items() if k not in ("time", "timings")
        }
    if isinstance(report, list):
        return [strip_timings(v) for v in report]
    return report
