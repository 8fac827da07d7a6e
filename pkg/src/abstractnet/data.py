"""Datasets, file ingestion, accuracy, and activation collection.

Input sets are plain float64 arrays of shape (n_samples, n_features) scaled to
[0, 1] by the loaders. Labels are int64 class indices.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, ValidationError
from .network import Network

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Inputs (n, d) paired with integer labels (n,)."""

    inputs: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.inputs, dtype=np.float64)
        y = np.asarray(self.labels)
        if x.ndim != 2 or x.shape[0] == 0:
            raise ValidationError(f"inputs must be a non-empty (n, d) array, got shape {x.shape}")
        if y.ndim != 1 or y.shape[0] != x.shape[0]:
            raise ValidationError(
                f"labels shape {y.shape} does not match {x.shape[0]} inputs"
            )
        if not np.all(np.isfinite(x)):
            raise ValidationError("inputs contain non-finite entries")
        if not np.issubdtype(y.dtype, np.integer):
            yf = np.asarray(y, dtype=np.float64)
            if np.any(yf != np.round(yf)):
                raise ValidationError("labels must be integers")
            y = yf.astype(np.int64)
        if np.any(y < 0):
            raise ValidationError("labels must be non-negative class indices")
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "labels", y.astype(np.int64))

    def __len__(self) -> int:
        return self.inputs.shape[0]

    @property
    def num_features(self) -> int:
        return self.inputs.shape[1]

    @property
    def num_classes(self) -> int:
        return int(self.labels.max()) + 1

    def take(self, n: int) -> "LabeledDataset":
        """First n samples."""
        return LabeledDataset(self.inputs[:n], self.labels[:n])


@dataclass(frozen=True, eq=False)
class ActivationMatrix:
    """Activations of one layer over an input set: rows = neurons, cols = inputs."""

    layer: int
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValidationError(f"activation matrix must be 2-d, got shape {v.shape}")
        object.__setattr__(self, "values", v)

    @property
    def num_neurons(self) -> int:
        return self.values.shape[0]


def _open_maybe_gzip(path):
    if str(path).endswith(".gz"):
        return gzip.open(path, "rb")
    return open(path, "rb")


def _read_exact(fh, count: int, what: str) -> bytes:
    data = fh.read(count)
    if len(data) != count:
        raise FormatError(f"truncated file while reading {what}: wanted {count} bytes, got {len(data)}")
    return data


def load_idx(images_path, labels_path) -> LabeledDataset:
    """Load an image/label pair in the big-endian IDX format.

    Pixel values are scaled to [0, 1] and images flattened row-major. Files
    ending in .gz are decompressed on the fly.
    """
    with _open_maybe_gzip(images_path) as fh:
        magic, count, rows, cols = struct.unpack(">IIII", _read_exact(fh, 16, "image header"))
        if magic != IDX_IMAGES_MAGIC:
            raise FormatError(f"bad image magic 0x{magic:08x}, expected 0x{IDX_IMAGES_MAGIC:08x}")
        raw = _read_exact(fh, count * rows * cols, "image data")
        images = np.frombuffer(raw, dtype=np.uint8).reshape(count, rows * cols)
    with _open_maybe_gzip(labels_path) as fh:
        magic, lcount = struct.unpack(">II", _read_exact(fh, 8, "label header"))
        if magic != IDX_LABELS_MAGIC:
            raise FormatError(f"bad label magic 0x{magic:08x}, expected 0x{IDX_LABELS_MAGIC:08x}")
        labels = np.frombuffer(_read_exact(fh, lcount, "label data"), dtype=np.uint8)
    if count != lcount:
        raise ValidationError(f"{count} images but {lcount} labels")
    return LabeledDataset(images.astype(np.float64) / 255.0, labels.astype(np.int64))


def load_csv(path, n_inputs: int | None = None) -> LabeledDataset:
    """Load rows of ``label, v1, ..., vn``. A non-numeric first token marks a header."""
    rows: list[list[float]] = []
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "rt", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            tokens = line.split(",")
            if lineno == 1:
                try:
                    float(tokens[0])
                except ValueError:
                    continue  # header row
            try:
                rows.append([float(t) for t in tokens])
            except ValueError as exc:
                raise FormatError(f"line {lineno}: non-numeric value ({exc})") from exc
            if len(rows[-1]) != len(rows[0]):
                raise FormatError(
                    f"line {lineno}: expected {len(rows[0])} fields, got {len(rows[-1])}"
                )
    if not rows:
        raise FormatError("no data rows")
    data = np.asarray(rows, dtype=np.float64)
    if n_inputs is not None and data.shape[1] != n_inputs + 1:
        raise ValidationError(f"expected label + {n_inputs} values per row, got {data.shape[1]}")
    return LabeledDataset(data[:, 1:], data[:, 0])


def split_dataset(ds: LabeledDataset, fraction: float, seed: int = 0):
    """Deterministic seeded split into (1 - fraction, fraction) parts.

    Returns (main, held_out). The same seed always yields the same permutation.
    """
    if not 0.0 < fraction < 1.0:
        raise ValidationError(f"fraction must be in (0, 1), got {fraction}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(ds))
    n_held = max(1, int(round(len(ds) * fraction)))
    if n_held >= len(ds):
        raise ValidationError("split leaves no samples in the main part")
    held = order[:n_held]
    main = order[n_held:]
    return (
        LabeledDataset(ds.inputs[main], ds.labels[main]),
        LabeledDataset(ds.inputs[held], ds.labels[held]),
    )


def accuracy(net: Network, ds: LabeledDataset) -> float:
    """Fraction of samples whose argmax output matches the label."""
    if ds.num_features != net.layer_sizes[0]:
        raise ValidationError(
            f"dataset has {ds.num_features} features, network expects {net.layer_sizes[0]}"
        )
    predicted = net.classify(ds.inputs)
    return float(np.mean(predicted == ds.labels))


def collect_activations(net: Network, X: np.ndarray, layer: int) -> ActivationMatrix:
    """Post-activation values of one hidden layer over the input set X.

    ``layer`` is 1-based; only hidden layers (2..L-1) are accepted. The result
    has one row per neuron and one column per input.
    """
    if not 2 <= layer <= net.num_layers - 1:
        raise ValidationError(
            f"layer must be hidden (2..{net.num_layers - 1}), got {layer}"
        )
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValidationError(f"X must be a non-empty (n, d) array, got shape {X.shape}")
    trace = net.forward_trace(X)
    return ActivationMatrix(layer=layer, values=trace.activations[layer - 1].T.copy())
