"""Fully-connected ReLU networks: the value type everything else operates on.

Layers are numbered 1..L with layer 1 the input and layer L the output, so a
network with one hidden layer has L = 3. ``weights[j]`` maps layer j+1 to layer
j+2 and has shape (width of layer j+2, width of layer j+1); row i holds the
incoming weights of neuron i. Hidden layers apply ReLU; the output layer applies
``output_activation`` ("identity" exposes raw logits, the default).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, ValidationError

OUTPUT_ACTIVATIONS = ("identity", "relu")


def _as_matrix(a, name: str) -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValidationError(f"{name} must be a non-empty 2-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


def _as_vector(a, name: str) -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be 1-d, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LayerTrace:
    """Per-layer values of one forward pass.

    ``preactivations[j]`` and ``activations[j]`` correspond to layer j+1; for the
    input layer both equal the input itself. Arrays are (width,) for a single
    input or (n_samples, width) for a batch.
    """

    preactivations: tuple[np.ndarray, ...]
    activations: tuple[np.ndarray, ...]

    @property
    def output(self) -> np.ndarray:
        return self.activations[-1]


@dataclass(frozen=True, eq=False)
class Network:
    """Immutable feedforward ReLU network.

    Weight and bias arrays are copied and marked read-only at construction, so a
    Network can be shared freely across threads.
    """

    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    output_activation: str = "identity"

    def __post_init__(self):
        if len(self.weights) < 1:
            raise ValidationError("a network needs at least one weight matrix (input -> output)")
        if len(self.weights) != len(self.biases):
            raise ValidationError(
                f"{len(self.weights)} weight matrices but {len(self.biases)} bias vectors"
            )
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise ValidationError(
                f"output_activation must be one of {OUTPUT_ACTIVATIONS}, got {self.output_activation!r}"
            )
        ws = tuple(_as_matrix(w, f"weights[{j}]") for j, w in enumerate(self.weights))
        bs = tuple(_as_vector(b, f"biases[{j}]") for j, b in enumerate(self.biases))
        for j, (w, b) in enumerate(zip(ws, bs)):
            if b.shape[0] != w.shape[0]:
                raise ValidationError(
                    f"biases[{j}] has {b.shape[0]} entries but weights[{j}] has {w.shape[0]} rows"
                )
            if j > 0 and w.shape[1] != ws[j - 1].shape[0]:
                raise ValidationError(
                    f"weights[{j}] expects {w.shape[1]} inputs but the previous layer "
                    f"has {ws[j - 1].shape[0]} neurons"
                )
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "biases", bs)

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[1],) + tuple(w.shape[0] for w in self.weights)

    @property
    def num_layers(self) -> int:
        """L, counting input and output."""
        return len(self.weights) + 1

    def width(self, layer: int) -> int:
        """Width of 1-based layer index ``layer``."""
        sizes = self.layer_sizes
        if not 1 <= layer <= len(sizes):
            raise ValidationError(f"layer must be in [1, {len(sizes)}], got {layer}")
        return sizes[layer - 1]

    @property
    def hidden_layers(self) -> range:
        """1-based indices of the hidden layers: 2..L-1."""
        return range(2, self.num_layers)

    def _check_input(self, x) -> np.ndarray:
        arr = np.asarray(x, dtype=np.float64)
        if arr.ndim not in (1, 2) or arr.shape[-1] != self.layer_sizes[0]:
            raise ValidationError(
                f"input must have {self.layer_sizes[0]} features, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValidationError("input contains non-finite entries")
        return arr

    def forward_trace(self, x) -> LayerTrace:
        """Forward pass keeping every layer's pre- and post-activation values.

        Accepts a single input (n_1,) or a batch (n_samples, n_1).
        """
        z = self._check_input(x)
        pres = [z]
        acts = [z]
        last = len(self.weights) - 1
        for j, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = acts[-1] @ w.T + b
            if j < last or self.output_activation == "relu":
                a = np.maximum(h, 0.0)
            else:
                a = h
            pres.append(h)
            acts.append(a)
        return LayerTrace(tuple(pres), tuple(acts))

    def forward(self, x) -> np.ndarray:
        """Network output for a single input or a batch."""
        return self.forward_trace(x).output

    def classify(self, x) -> np.ndarray | np.intp:
        """Argmax label(s); ties resolve to the lowest index."""
        return np.argmax(self.forward(x), axis=-1)

    def to_json(self) -> str:
        doc = {
            "layer_sizes": list(self.layer_sizes),
            "layers": [
                {"weights": w.tolist(), "bias": b.tolist()}
                for w, b in zip(self.weights, self.biases)
            ],
            "output_activation": self.output_activation,
        }
        return json.dumps(doc)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())
            fh.write("\n")

    @classmethod
    def from_dict(cls, doc: dict) -> "Network":
        try:
            sizes = list(doc["layer_sizes"])
            layers = doc["layers"]
            act = doc.get("output_activation", "identity")
            ws = [layer["weights"] for layer in layers]
            bs = [layer["bias"] for layer in layers]
        except (KeyError, TypeError) as exc:
            raise FormatError(f"network document missing field: {exc}") from exc
        net = cls(tuple(np.asarray(w, dtype=np.float64) for w in ws),
                  tuple(np.asarray(b, dtype=np.float64) for b in bs),
                  output_activation=act)
        if list(net.layer_sizes) != sizes:
            raise ValidationError(
                f"declared layer_sizes {sizes} do not match matrices {list(net.layer_sizes)}"
            )
        return net

    @classmethod
    def from_json(cls, text: str) -> "Network":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise FormatError("network JSON must be an object")
        return cls.from_dict(doc)

    @classmethod
    def load(cls, path) -> "Network":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(fh.read())


@dataclass(frozen=True, eq=False)
class RobustnessQuery:
    """An input point with an L-infinity perturbation radius per feature.

    ``delta`` may be a scalar (broadcast over features) or a vector matching x.
    """

    x: np.ndarray
    delta: np.ndarray
    label: int | None = None

    def __post_init__(self):
        x = _as_vector(self.x, "x")
        d = np.asarray(self.delta, dtype=np.float64)
        if d.ndim == 0:
            d = np.full(x.shape, float(d))
        d = _as_vector(d, "delta")
        if d.shape != x.shape:
            raise ValidationError(f"delta shape {d.shape} does not match x shape {x.shape}")
        if np.any(d < 0):
            raise ValidationError("delta must be non-negative")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "delta", d)
