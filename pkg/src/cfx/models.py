"""Built-in classifiers: k-NN voting and a small numpy MLP.

The MLP exposes exact input gradients of its logits, which the
gradient-driven generators need. Both models share one versioned binary
parameter format (see :func:`save_model`).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, TimeSeries
from .errors import CapabilityError, ConfigError, FormatError, ShapeError, TrainError
from .distances import DistanceConfig, distance

MAGIC = b"CFXMODEL"
FORMAT_VERSION = 1

ACTIVATIONS = ("relu", "tanh")


class Classifier:
    """Interface shared by every model: probabilities over classes."""

    channels: int
    length: int
    class_names: tuple[str, ...]

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    def predict_proba(self, x: TimeSeries) -> np.ndarray:
        raise NotImplementedError

    def predict(self, x: TimeSeries) -> int:
        return int(np.argmax(self.predict_proba(x)))

    def _check_input(self, x: TimeSeries):
        if x.channels != self.channels or x.length != self.length:
            raise ShapeError(
                f"input shape ({x.channels}, {x.length}), model expects"
                f" ({self.channels}, {self.length})"
            )


class GradientClassifier(Classifier):
    """Classifier that can differentiate its logits w.r.t. the input."""

    def logits(self, x: TimeSeries) -> np.ndarray:
        raise NotImplementedError

    def input_gradient(self, x: TimeSeries, class_index: int) -> np.ndarray:
        """d logit[class_index] / d x, shape (channels, length)."""
        raise NotImplementedError


class CountingClassifier(Classifier):
    """Wrapper that counts forward and gradient evaluations."""

    def __init__(self, model: Classifier):
        self.model = model
        self.channels = model.channels
        self.length = model.length
        self.class_names = model.class_names
        self.calls = 0

    def predict_proba(self, x: TimeSeries) -> np.ndarray:
        self.calls += 1
        return self.model.predict_proba(x)

    def logits(self, x: TimeSeries) -> np.ndarray:
        if not isinstance(self.model, GradientClassifier):
            raise CapabilityError("model does not expose logits")
        self.calls += 1
        return self.model.logits(x)

    def input_gradient(self, x: TimeSeries, class_index: int) -> np.ndarray:
        if not isinstance(self.model, GradientClassifier):
            raise CapabilityError("model does not expose input gradients")
        self.calls += 1
        return self.model.input_gradient(x, class_index)

    @property
    def supports_gradients(self) -> bool:
        return isinstance(self.model, GradientClassifier)


class KNNClassifier(Classifier):
    """k nearest neighbors with vote-fraction probabilities.

    Distance ties are broken by the lower training index (stable sort).
    """

    kind = "knn"

    def __init__(
        self,
        train_values: np.ndarray,
        train_labels: np.ndarray,
        class_names: tuple[str, ...],
        k: int,
        metric: DistanceConfig,
        train_accuracy: float | None = None,
    ):
        self.train_values = np.asarray(train_values, dtype=np.float64)
        self.train_labels = np.asarray(train_labels, dtype=np.int64)
        self.class_names = tuple(class_names)
        self.k = int(k)
        self.metric = metric
        self.channels = self.train_values.shape[1]
        self.length = self.train_values.shape[2]
        self.train_accuracy = train_accuracy

    def _distances(self, x: TimeSeries) -> np.ndarray:
        if self.metric.metric == "l2":
            d = self.train_values - x.values[None]
            return np.sqrt((d * d).sum(axis=(1, 2)))
        if self.metric.metric == "l1":
            return np.abs(self.train_values - x.values[None]).sum(axis=(1, 2))
        return np.array(
            [distance(TimeSeries(v), x, self.metric) for v in self.train_values]
        )

    def predict_proba(self, x: TimeSeries) -> np.ndarray:
        self._check_input(x)
        d = self._distances(x)
        order = np.argsort(d, kind="stable")[: self.k]
        votes = np.bincount(self.train_labels[order], minlength=self.num_classes)
        return votes / self.k


def train_knn(dataset: Dataset, k: int = 1, metric: DistanceConfig | None = None) -> KNNClassifier:
    if k < 1:
        raise ConfigError("k must be >= 1")
    n = len(dataset)
    if k > n:
        raise TrainError(f"k={k} exceeds {n} training instances")
    if len(set(dataset.labels().tolist())) < 2:
        raise TrainError("need at least 2 classes present")
    metric = metric or DistanceConfig()
    model = KNNClassifier(
        dataset.values_array(), dataset.labels(), dataset.class_names, k, metric
    )
    correct = sum(model.predict(inst.series) == inst.label for inst in dataset.instances)
    model.train_accuracy = correct / n
    return model


@dataclass(frozen=True)
class MLPSpec:
    """Architecture and SGD settings for :func:`train_mlp`.

    ``hidden_sizes=[]`` gives a plain linear (logistic) model.
    """

    hidden_sizes: tuple[int, ...] = (64,)
    activation: str = "relu"
    learning_rate: float = 0.01
    epochs: int = 200
    batch_size: int = 32
    momentum: float = 0.9
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        if any(h < 1 for h in self.hidden_sizes):
            raise ConfigError("hidden sizes must be positive")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"activation must be one of {ACTIVATIONS}")
        if self.learning_rate <= 0 or self.batch_size < 1:
            raise ConfigError("learning_rate and batch_size must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError("momentum must be in [0, 1)")


def _glorot(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


def _act(z: np.ndarray, kind: str) -> np.ndarray:
    return np.maximum(z, 0.0) if kind == "relu" else np.tanh(z)


def _act_grad(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return (z > 0.0).astype(np.float64)
    t = np.tanh(z)
    return 1.0 - t * t


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


class MLPClassifier(GradientClassifier):
    """Fully connected softmax classifier on the flattened series."""

    kind = "mlp"

    def __init__(
        self,
        channels: int,
        length: int,
        class_names: tuple[str, ...],
        spec: MLPSpec,
        weights: list[np.ndarray],
        biases: list[np.ndarray],
        train_accuracy: float | None = None,
    ):
        self.channels = channels
        self.length = length
        self.class_names = tuple(class_names)
        self.spec = spec
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]
        self.train_accuracy = train_accuracy

    def _forward(self, flat: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
        """Returns pre-activations per layer and the final logits."""
        pre = []
        h = flat
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w.T + b
            pre.append(z)
            if i < len(self.weights) - 1:
                h = _act(z, self.spec.activation)
        return pre, pre[-1]

    def logits(self, x: TimeSeries) -> np.ndarray:
        self._check_input(x)
        _, z = self._forward(x.flatten())
        return z

    def predict_proba(self, x: TimeSeries) -> np.ndarray:
        return _softmax(self.logits(x))

    def input_gradient(self, x: TimeSeries, class_index: int) -> np.ndarray:
        self._check_input(x)
        if not 0 <= class_index < self.num_classes:
            raise ConfigError(f"class index {class_index} out of range")
        pre, _ = self._forward(x.flatten())
        g = np.zeros(self.num_classes)
        g[class_index] = 1.0
        for i in range(len(self.weights) - 1, 0, -1):
            g = g @ self.weights[i]
            g = g * _act_grad(pre[i - 1], self.spec.activation)
        g = g @ self.weights[0]
        return g.reshape(self.channels, self.length)


def train_mlp(dataset: Dataset, spec: MLPSpec | None = None) -> MLPClassifier:
    """Mini-batch SGD with momentum on softmax cross-entropy.

    Deterministic for a fixed spec seed: Glorot-uniform init and the
    per-epoch shuffle both draw from one seeded generator. Raises
    TrainError if the loss goes non-finite.
    """
    spec = spec or MLPSpec()
    if spec.epochs < 1:
        raise TrainError("zero epochs requested")
    labels = dataset.labels()
    if len(set(labels.tolist())) < 2:
        raise TrainError("need at least 2 classes present")
    n = len(dataset)
    dim = dataset.channels * dataset.length
    sizes = [dim, *spec.hidden_sizes, dataset.num_classes]
    rng = np.random.default_rng(spec.seed)
    weights = [_glorot(rng, sizes[i + 1], sizes[i]) for i in range(len(sizes) - 1)]
    biases = [np.zeros(sizes[i + 1]) for i in range(len(sizes) - 1)]
    vel_w = [np.zeros_like(w) for w in weights]
    vel_b = [np.zeros_like(b) for b in biases]

    X = dataset.values_array().reshape(n, dim)
    onehot = np.zeros((n, dataset.num_classes))
    onehot[np.arange(n), labels] = 1.0
    act = spec.activation

    for epoch in range(spec.epochs):
        order = rng.permutation(n)
        for start in range(0, n, spec.batch_size):
            idx = order[start : start + spec.batch_size]
            xb, yb = X[idx], onehot[idx]
            # forward, caching pre-activations
            pre, h = [], xb
            acts = [xb]
            for li, (w, b) in enumerate(zip(weights, biases)):
                z = h @ w.T + b
                pre.append(z)
                if li < len(weights) - 1:
                    h = _act(z, act)
                    acts.append(h)
            probs = _softmax(pre[-1])
            loss = -np.log(np.clip((probs * yb).sum(axis=1), 1e-300, None)).mean()
            if not np.isfinite(loss):
                raise TrainError(f"loss diverged at epoch {epoch}")
            # backward
            delta = (probs - yb) / len(idx)
            for li in range(len(weights) - 1, -1, -1):
                gw = delta.T @ acts[li]
                gb = delta.sum(axis=0)
                if li > 0:
                    delta = (delta @ weights[li]) * _act_grad(pre[li - 1], act)
                vel_w[li] = spec.momentum * vel_w[li] - spec.learning_rate * gw
                vel_b[li] = spec.momentum * vel_b[li] - spec.learning_rate * gb
                weights[li] = weights[li] + vel_w[li]
                biases[li] = biases[li] + vel_b[li]

    model = MLPClassifier(
        dataset.channels, dataset.length, dataset.class_names, spec, weights, biases
    )
    correct = sum(model.predict(inst.series) == inst.label for inst in dataset.instances)
    model.train_accuracy = correct / n
    return model


# ---------------------------------------------------------------------------
# Persistence: MAGIC, version u32, kind, JSON header, then the raw arrays as
# row-major little-endian float64 in header["arrays"] order. No timestamps,
# so equal models serialize to equal bytes.

_LOADERS: dict = {}


def register_loader(kind: str, fn):
    _LOADERS[kind] = fn


def _persist_knn(model: KNNClassifier):
    header = {
        "k": model.k,
        "metric": {
            "metric": model.metric.metric,
            "band": model.metric.band,
            "tau": model.metric.tau,
            "mode": model.metric.mode,
            "dtw_squared": model.metric.dtw_squared,
        },
        "class_names": list(model.class_names),
        "channels": model.channels,
        "length": model.length,
        "train_accuracy": model.train_accuracy,
        "arrays": [
            {"name": "train_values", "shape": list(model.train_values.shape)},
            {"name": "train_labels", "shape": list(model.train_labels.shape)},
        ],
    }
    return header, [model.train_values, model.train_labels.astype(np.float64)]


def _load_knn(header, arrays):
    metric = DistanceConfig(**header["metric"])
    return KNNClassifier(
        arrays["train_values"],
        arrays["train_labels"].astype(np.int64),
        tuple(header["class_names"]),
        header["k"],
        metric,
        header["train_accuracy"],
    )


def _persist_mlp(model: MLPClassifier):
    arrays, descr = [], []
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        descr.append({"name": f"w{i}", "shape": list(w.shape)})
        descr.append({"name": f"b{i}", "shape": list(b.shape)})
        arrays.extend([w, b])
    header = {
        "spec": {
            "hidden_sizes": list(model.spec.hidden_sizes),
            "activation": model.spec.activation,
            "learning_rate": model.spec.learning_rate,
            "epochs": model.spec.epochs,
            "batch_size": model.spec.batch_size,
            "momentum": model.spec.momentum,
            "seed": model.spec.seed,
        },
        "class_names": list(model.class_names),
        "channels": model.channels,
        "length": model.length,
        "train_accuracy": model.train_accuracy,
        "arrays": descr,
    }
    return header, arrays


def _load_mlp(header, arrays):
    spec = MLPSpec(
        hidden_sizes=tuple(header["spec"]["hidden_sizes"]),
        activation=header["spec"]["activation"],
        learning_rate=header["spec"]["learning_rate"],
        epochs=header["spec"]["epochs"],
        batch_size=header["spec"]["batch_size"],
        momentum=header["spec"]["momentum"],
        seed=header["spec"]["seed"],
    )
    n_layers = len(header["arrays"]) // 2
    weights = [arrays[f"w{i}"] for i in range(n_layers)]
    biases = [arrays[f"b{i}"] for i in range(n_layers)]
    return MLPClassifier(
        header["channels"],
        header["length"],
        tuple(header["class_names"]),
        spec,
        weights,
        biases,
        header["train_accuracy"],
    )


register_loader("knn", _load_knn)
register_loader("mlp", _load_mlp)


def save_model(model, path):
    """Write a model parameter file (versioned, byte-deterministic)."""
    if isinstance(model, KNNClassifier):
        kind, (header, arrays) = "knn", _persist_knn(model)
    elif isinstance(model, MLPClassifier):
        kind, (header, arrays) = "mlp", _persist_mlp(model)
    elif hasattr(model, "_persist_state"):
        kind, header, arrays = model._persist_state()
    else:
        raise FormatError(f"cannot persist {type(model).__name__}")
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    kind_b = kind.encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        fh.write(struct.pack("<I", len(kind_b)))
        fh.write(kind_b)
        fh.write(struct.pack("<Q", len(head)))
        fh.write(head)
        for arr in arrays:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_model(path):
    """Read a parameter file; rejects bad magic or a version mismatch."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(MAGIC)] != MAGIC:
        raise FormatError("not a model parameter file (bad magic)")
    off = len(MAGIC)
    (version,) = struct.unpack_from("<I", blob, off)
    off += 4
    if version != FORMAT_VERSION:
        raise FormatError(
            f"version mismatch: file is v{version}, reader supports v{FORMAT_VERSION}"
        )
    (kind_len,) = struct.unpack_from("<I", blob, off)
    off += 4
    kind = blob[off : off + kind_len].decode()
    off += kind_len
    (head_len,) = struct.unpack_from("<Q", blob, off)
    off += 8
    try:
        header = json.loads(blob[off : off + head_len].decode())
    except ValueError as exc:
        raise FormatError(f"corrupt header: {exc}") from None
    off += head_len
    arrays = {}
    for descr in header["arrays"]:
        count = int(np.prod(descr["shape"])) if descr["shape"] else 1
        end = off + 8 * count
        if end > len(blob):
            raise FormatError("truncated parameter file")
        arrays[descr["name"]] = (
            np.frombuffer(blob[off:end], dtype="<f8").reshape(descr["shape"]).copy()
        )
        off = end
    if off != len(blob):
        raise FormatError("trailing bytes in parameter file")
    if kind not in _LOADERS:
        raise FormatError(f"unknown model kind {kind!r}")
    return _LOADERS[kind](header, arrays)
