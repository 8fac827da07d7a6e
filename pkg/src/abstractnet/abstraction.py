"""Shrinking a network by merging I/O-similar neurons within layers.

Merging a cluster keeps one representative neuron: the other members' incoming
rows and bias entries are deleted, and the representative's outgoing column
becomes the sum of all members' outgoing columns, so downstream neurons see the
representative's activation in place of each deleted member's.

Layers are abstracted in order, shallow to deep, and each layer is clustered on
the activations of the *current* partially-merged network, so epsilons absorb
upstream drift over the input set.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .clustering import LayerClustering, cluster_layer
from .data import LabeledDataset, accuracy, collect_activations, split_dataset
from .errors import FormatError, ValidationError
from .network import Network


def _identity_clustering(layer: int, width: int) -> LayerClustering:
    return LayerClustering(
        layer=layer,
        clusters=tuple((i,) for i in range(width)),
        representatives=tuple(range(width)),
        epsilons=np.zeros(width),
    )


def _merge_layer(net: Network, layer: int, clustering: LayerClustering) -> Network:
    """Merge all clusters of one hidden layer at once."""
    if not 2 <= layer <= net.num_layers - 1:
        raise ValidationError(f"layer must be hidden (2..{net.num_layers - 1}), got {layer}")
    if clustering.num_neurons != net.width(layer):
        raise ValidationError(
            f"clustering covers {clustering.num_neurons} neurons, layer {layer} "
            f"has {net.width(layer)}"
        )
    ws = list(net.weights)
    bs = list(net.biases)
    j_in = layer - 2
    j_out = layer - 1
    reps = list(clustering.representatives)
    ws[j_in] = ws[j_in][reps, :]
    bs[j_in] = bs[j_in][reps]
    cols = [ws[j_out][:, list(members)].sum(axis=1) for members in clustering.clusters]
    ws[j_out] = np.stack(cols, axis=1)
    return Network(tuple(ws), tuple(bs), net.output_activation)


def merge_cluster(net: Network, layer: int, cluster, representative: int) -> Network:
    """Merge one cluster of neurons in a hidden layer into its representative.

    ``cluster`` holds 0-based neuron indices of ``layer`` (1-based, 2..L-1);
    the representative must be a member. All other neurons stay singletons.
    A singleton cluster returns an identical network.
    """
    if not 2 <= layer <= net.num_layers - 1:
        raise ValidationError(f"layer must be hidden (2..{net.num_layers - 1}), got {layer}")
    width = net.width(layer)
    members = sorted(int(i) for i in cluster)
    if not members:
        raise ValidationError("cluster is empty")
    if members[0] < 0 or members[-1] >= width or len(set(members)) != len(members):
        raise ValidationError(f"cluster {members} is not a set of valid neuron indices")
    if representative not in members:
        raise ValidationError(f"representative {representative} is not in the cluster")
    groups = [(i, (i,)) for i in range(width) if i not in members]
    groups.append((int(representative), tuple(members)))
    groups.sort()
    clustering = LayerClustering(
        layer=layer,
        clusters=tuple(g for _, g in groups),
        representatives=tuple(r for r, _ in groups),
        epsilons=np.zeros(width),
    )
    return _merge_layer(net, layer, clustering)


def _fingerprint(X: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(str(X.shape).encode())
    h.update(np.ascontiguousarray(X, dtype=np.float64).tobytes())
    return "sha256:" + h.hexdigest()


@dataclass(frozen=True, eq=False)
class AbstractionRecord:
    """Everything produced by one abstraction run.

    Holds both networks plus, per hidden layer of the original, the clusters,
    representatives, and per-original-neuron epsilons measured during merging.
    The record is self-contained: error bounds and lifted interval bounds are
    functions of the record (and a query) alone.
    """

    original_net: Network
    abstract_net: Network
    clusterings: tuple[LayerClustering, ...]
    seed: int = 0
    epsilon_norm: str = "l2"
    input_fingerprint: str = ""
    num_inputs: int = 0

    def __post_init__(self):
        orig = self.original_net
        if len(self.clusterings) != orig.num_layers - 2:
            raise ValidationError(
                f"expected one clustering per hidden layer ({orig.num_layers - 2}), "
                f"got {len(self.clusterings)}"
            )
        for offset, cl in enumerate(self.clusterings):
            layer = offset + 2
            if cl.layer != layer:
                raise ValidationError(f"clustering {offset} labeled layer {cl.layer}, expected {layer}")
            if cl.num_neurons != orig.width(layer):
                raise ValidationError(
                    f"layer {layer}: clustering covers {cl.num_neurons} neurons, "
                    f"original has {orig.width(layer)}"
                )
            if cl.num_clusters != self.abstract_net.width(layer):
                raise ValidationError(
                    f"layer {layer}: {cl.num_clusters} clusters but abstract width "
                    f"{self.abstract_net.width(layer)}"
                )
        if (
            orig.layer_sizes[0] != self.abstract_net.layer_sizes[0]
            or orig.layer_sizes[-1] != self.abstract_net.layer_sizes[-1]
        ):
            raise ValidationError("input and output widths must survive abstraction unchanged")

    @property
    def k_l(self) -> dict[int, int]:
        """Cluster count per hidden layer (1-based layer index)."""
        return {cl.layer: cl.num_clusters for cl in self.clusterings}

    def clustering_for(self, layer: int) -> LayerClustering:
        if not 2 <= layer <= self.original_net.num_layers - 1:
            raise ValidationError(f"no clustering for layer {layer}")
        return self.clusterings[layer - 2]

    def neuron_map(self, layer: int) -> np.ndarray:
        """Original neuron index -> abstract neuron index for one layer.

        Input and output layers map to themselves.
        """
        L = self.original_net.num_layers
        if layer == 1 or layer == L:
            return np.arange(self.original_net.width(layer))
        return self.clustering_for(layer).neuron_map()

    def layer_epsilons(self) -> tuple[np.ndarray, ...]:
        """Abstract-indexed epsilon per layer 1..L: per cluster, the max over members.

        Zero at the input and output layers, which are never merged.
        """
        sizes = self.abstract_net.layer_sizes
        out = [np.zeros(sizes[0])]
        out.extend(cl.abstract_epsilons() for cl in self.clusterings)
        out.append(np.zeros(sizes[-1]))
        return tuple(out)

    def original_epsilons(self) -> tuple[np.ndarray, ...]:
        """Per-original-neuron epsilon per layer 1..L (zero off the hidden layers)."""
        sizes = self.original_net.layer_sizes
        out = [np.zeros(sizes[0])]
        out.extend(cl.epsilons for cl in self.clusterings)
        out.append(np.zeros(sizes[-1]))
        return tuple(out)

    def to_json(self) -> str:
        doc = {
            "schema": 1,
            "abstract_network": json.loads(self.abstract_net.to_json()),
            "original_network": json.loads(self.original_net.to_json()),
            "layers": [
                {
                    "layer": cl.layer,
                    "clusters": [list(members) for members in cl.clusters],
                    "representatives": list(cl.representatives),
                    "epsilon": cl.epsilons.tolist(),
                }
                for cl in self.clusterings
            ],
            "provenance": {
                "k_l": {str(k): v for k, v in self.k_l.items()},
                "seed": self.seed,
                "epsilon_norm": self.epsilon_norm,
                "input_fingerprint": self.input_fingerprint,
                "num_inputs": self.num_inputs,
            },
        }
        return json.dumps(doc)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())
            fh.write("\n")

    @classmethod
    def from_json(cls, text: str) -> "AbstractionRecord":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"not valid JSON: {exc}") from exc
        try:
            abstract_net = Network.from_dict(doc["abstract_network"])
            original_net = Network.from_dict(doc["original_network"])
            layers = doc["layers"]
            prov = doc["provenance"]
            clusterings = tuple(
                LayerClustering(
                    layer=int(entry["layer"]),
                    clusters=tuple(tuple(int(i) for i in c) for c in entry["clusters"]),
                    representatives=tuple(int(r) for r in entry["representatives"]),
                    epsilons=np.asarray(entry["epsilon"], dtype=np.float64),
                )
                for entry in layers
            )
            return cls(
                original_net=original_net,
                abstract_net=abstract_net,
                clusterings=clusterings,
                seed=int(prov.get("seed", 0)),
                epsilon_norm=str(prov.get("epsilon_norm", "l2")),
                input_fingerprint=str(prov.get("input_fingerprint", "")),
                num_inputs=int(prov.get("num_inputs", 0)),
            )
        except (KeyError, TypeError) as exc:
            raise FormatError(f"record document missing field: {exc}") from exc

    @classmethod
    def load(cls, path) -> "AbstractionRecord":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(fh.read())


def abstract(
    net: Network,
    X: np.ndarray,
    k_l: dict[int, int] | None = None,
    seed: int = 0,
    epsilon_norm: str = "l2",
) -> AbstractionRecord:
    """Merge each hidden layer down to ``k_l[layer]`` neurons.

    Layers are processed shallow to deep; each layer is clustered on the
    activations of the current partially-merged network over X. Hidden layers
    missing from ``k_l`` keep their width (identity, bit-exact). The per-layer
    k-means seed is derived from ``seed`` and the layer index, so a run with the
    committed k values reproduces any search that used the same seed.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValidationError(f"X must be a non-empty (n, d) array, got shape {X.shape}")
    if X.shape[1] != net.layer_sizes[0]:
        raise ValidationError(
            f"X has {X.shape[1]} features, network expects {net.layer_sizes[0]}"
        )
    k_l = dict(k_l or {})
    for layer in k_l:
        if not 2 <= layer <= net.num_layers - 1:
            raise ValidationError(f"k_l layer {layer} is not hidden (2..{net.num_layers - 1})")
        if not 1 <= k_l[layer] <= net.width(layer):
            raise ValidationError(
                f"k_l[{layer}] must be in [1, {net.width(layer)}], got {k_l[layer]}"
            )
    running = net
    clusterings = []
    for layer in net.hidden_layers:
        width = running.width(layer)
        k = k_l.get(layer, width)
        if k == width:
            clustering = _identity_clustering(layer, width)
        else:
            act = collect_activations(running, X, layer)
            clustering = cluster_layer(act, k, seed=seed + layer, norm=epsilon_norm)
            running = _merge_layer(running, layer, clustering)
        clusterings.append(clustering)
    return AbstractionRecord(
        original_net=net,
        abstract_net=running,
        clusterings=tuple(clusterings),
        seed=seed,
        epsilon_norm=epsilon_norm,
        input_fingerprint=_fingerprint(X),
        num_inputs=X.shape[0],
    )


def reduction_rate(record: AbstractionRecord) -> float:
    """Fraction of hidden neurons removed by the abstraction."""
    orig = record.original_net.layer_sizes[1:-1]
    abst = record.abstract_net.layer_sizes[1:-1]
    total = sum(orig)
    if total == 0:
        return 0.0
    return 1.0 - sum(abst) / total


def identify_clusters(
    net: Network,
    ds: LabeledDataset,
    alpha: float,
    seed: int = 0,
    epsilon_norm: str = "l2",
    val: LabeledDataset | None = None,
    val_fraction: float = 0.2,
    X: np.ndarray | None = None,
) -> dict[int, int]:
    """Find, per hidden layer, the smallest cluster count keeping accuracy >= alpha.

    Works shallow to deep: for each hidden layer a binary search over k commits
    the smallest count whose merged network still reaches ``alpha`` accuracy on
    a held-out validation split, then continues on the committed network. The
    full-width k (identity) is always admissible, so a layer that tolerates no
    merging keeps its width.

    When ``val`` is not given, ``ds`` is split deterministically and the larger
    part doubles as the activation-collection set. Requires ``alpha`` to be at
    most the network's validation accuracy. Returns ``{layer: k}`` ready to be
    passed to :func:`abstract` with the same seed and X.
    """
    if val is None:
        train_part, val = split_dataset(ds, val_fraction, seed)
    else:
        train_part = ds
    if X is None:
        X = train_part.inputs
    base_acc = accuracy(net, val)
    if alpha > base_acc:
        raise ValidationError(
            f"alpha {alpha} exceeds the network's validation accuracy {base_acc}"
        )
    running = net
    k_l: dict[int, int] = {}
    for layer in net.hidden_layers:
        width = running.width(layer)
        if not accuracy(running, val) > alpha:
            k_l[layer] = width
            continue
        act = collect_activations(running, X, layer)

        def merged_at(k: int) -> Network:
            clustering = cluster_layer(act, k, seed=seed + layer, norm=epsilon_norm)
            return _merge_layer(running, layer, clustering)

        lo, hi = 1, width
        while lo < hi:
            mid = (lo + hi) // 2
            if accuracy(merged_at(mid), val) >= alpha:
                hi = mid
            else:
                lo = mid + 1
        k_l[layer] = lo
        if lo < width:
            running = merged_at(lo)
    return k_l
