"""Time series containers, dataset parsing, serialization, and normalization.

Layout convention everywhere: values[channel][time], float64. Labels are
0-based integers assigned in first-appearance order; the original label
tokens are kept in ``Dataset.class_names``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import FormatError, ParseError, ShapeError

# Channels whose population stddev falls below this are treated as constant.
_CONST_STD = 1e-12

# Label tokens must survive both text formats unchanged.
_TOKEN_RE = re.compile(r"^[^\s:,]+$")


@dataclass(frozen=True)
class TimeSeries:
    """A single multivariate series, shape (channels, length), immutable."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[np.newaxis, :]
        if arr.ndim != 2:
            raise ShapeError(f"expected (channels, length) array, got ndim={arr.ndim}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ShapeError(f"need at least 1 channel and 1 time step, got {arr.shape}")
        if not np.isfinite(arr).all():
            raise ShapeError("series values must be finite")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def length(self) -> int:
        return self.values.shape[1]

    def channel(self, c: int) -> np.ndarray:
        return self.values[c]

    def flatten(self) -> np.ndarray:
        """Row-major (channel-major) 1-D view, length channels * length."""
        return self.values.reshape(-1)

    def with_values(self, values: np.ndarray) -> "TimeSeries":
        return TimeSeries(values)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return self.values.shape == other.values.shape and bool(
            np.array_equal(self.values, other.values)
        )

    def __hash__(self):
        return hash((self.values.shape, self.values.tobytes()))


@dataclass(frozen=True)
class LabeledInstance:
    series: TimeSeries
    label: int


@dataclass(frozen=True)
class NormStats:
    """Per-channel statistics from :func:`znormalize`."""

    mean: np.ndarray
    std: np.ndarray
    constant: np.ndarray  # bool per channel; constant channels pass through


@dataclass(frozen=True)
class Dataset:
    """Equal-length labeled series sharing one (channels, length) shape."""

    instances: tuple[LabeledInstance, ...]
    class_names: tuple[str, ...]
    norm_stats: NormStats | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.instances:
            raise ShapeError("dataset needs at least one instance")
        object.__setattr__(self, "instances", tuple(self.instances))
        object.__setattr__(self, "class_names", tuple(self.class_names))
        if len(set(self.class_names)) != len(self.class_names):
            raise ShapeError("class names must be distinct")
        c, t = self.instances[0].series.channels, self.instances[0].series.length
        for i, inst in enumerate(self.instances):
            if inst.series.channels != c or inst.series.length != t:
                raise ShapeError(
                    f"instance {i} has shape ({inst.series.channels}, {inst.series.length}),"
                    f" expected ({c}, {t})"
                )
            if not 0 <= inst.label < len(self.class_names):
                raise ShapeError(f"instance {i} label {inst.label} out of range")

    @property
    def channels(self) -> int:
        return self.instances[0].series.channels

    @property
    def length(self) -> int:
        return self.instances[0].series.length

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    def __len__(self) -> int:
        return len(self.instances)

    def labels(self) -> np.ndarray:
        return np.array([inst.label for inst in self.instances], dtype=np.int64)

    def values_array(self) -> np.ndarray:
        """Stacked values, shape (n, channels, length)."""
        return np.stack([inst.series.values for inst in self.instances])

    def indices_of_class(self, label: int) -> list[int]:
        return [i for i, inst in enumerate(self.instances) if inst.label == label]

    def with_norm_stats(self, stats: NormStats | None) -> "Dataset":
        return replace(self, norm_stats=stats)


def _label_ids(tokens: list[str]) -> tuple[list[int], tuple[str, ...]]:
    """Map label tokens to 0-based ids in first-appearance order."""
    order: dict[str, int] = {}
    ids = []
    for tok in tokens:
        if tok not in order:
            order[tok] = len(order)
        ids.append(order[tok])
    return ids, tuple(order)


def parse_ucr_tsv(text: str) -> Dataset:
    """Parse UCR-style delimited text: one instance per line, label first.

    Fields may be separated by tabs, commas, or runs of whitespace. All
    lines must carry the same number of fields. Only univariate data can
    be represented in this format.
    """
    rows: list[tuple[int, list[str]]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        rows.append((lineno, re.split(r"[\s,]+", line)))
    if not rows:
        raise ParseError("no data lines found")
    width = len(rows[0][1])
    if width < 2:
        raise ParseError("need a label and at least one value", line=rows[0][0])
    labels: list[str] = []
    series: list[TimeSeries] = []
    for lineno, toks in rows:
        if len(toks) != width:
            raise ParseError(f"expected {width} fields, got {len(toks)}", line=lineno)
        labels.append(toks[0])
        try:
            vals = np.array([float(t) for t in toks[1:]], dtype=np.float64)
        except ValueError as exc:
            raise ParseError(f"bad numeric value ({exc})", line=lineno) from None
        if not np.isfinite(vals).all():
            raise ParseError("non-finite value", line=lineno)
        series.append(TimeSeries(vals[np.newaxis, :]))
    ids, names = _label_ids(labels)
    return Dataset(
        tuple(LabeledInstance(s, i) for s, i in zip(series, ids)), names
    )


def parse_ts(text: str) -> Dataset:
    """Parse a restricted ``.ts`` file.

    Recognized header lines: ``@problemName``, ``@univariate true|false``,
    ``@classLabel true <tokens...>``, and ``@data``. ``#`` comment lines and
    unrecognized ``@`` directives are ignored. Data lines hold ``:``-separated
    channels of comma-separated values, with the class label as the final
    field. All instances must share channel count and length.
    """
    class_labels: tuple[str, ...] | None = None
    univariate: bool | None = None
    in_data = False
    labels: list[str] = []
    series: list[TimeSeries] = []
    n_channels: int | None = None
    length: int | None = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not in_data:
            low = line.lower()
            if low.startswith("@data"):
                if class_labels is None:
                    raise ParseError("@data before @classLabel", line=lineno)
                in_data = True
            elif low.startswith("@classlabel"):
                parts = line.split()
                if len(parts) < 2 or parts[1].lower() not in ("true", "false"):
                    raise ParseError("@classLabel needs true|false", line=lineno)
                if parts[1].lower() == "false":
                    raise ParseError("unlabeled data not supported", line=lineno)
                if len(parts) < 3:
                    raise ParseError("@classLabel true needs label tokens", line=lineno)
                class_labels = tuple(parts[2:])
                if len(set(class_labels)) != len(class_labels):
                    raise ParseError("duplicate class label token", line=lineno)
            elif low.startswith("@univariate"):
                parts = line.split()
                if len(parts) != 2 or parts[1].lower() not in ("true", "false"):
                    raise ParseError("@univariate needs true|false", line=lineno)
                univariate = parts[1].lower() == "true"
            elif line.startswith("@"):
                continue  # unrecognized directive, treated as metadata
            else:
                raise ParseError("data line before @data", line=lineno)
            continue
        # data section
        fields = line.split(":")
        if len(fields) < 2:
            raise ParseError("expected <channels...>:<label>", line=lineno)
        label = fields[-1].strip()
        if label not in class_labels:
            raise ParseError(f"unknown class label {label!r}", line=lineno)
        chans = []
        for fi, f in enumerate(fields[:-1]):
            toks = [t for t in f.split(",") if t.strip() != ""]
            if not toks:
                raise ParseError(f"empty channel {fi}", line=lineno)
            try:
                chans.append([float(t) for t in toks])
            except ValueError as exc:
                raise ParseError(f"bad numeric value ({exc})", line=lineno) from None
        lens = {len(c) for c in chans}
        if len(lens) != 1:
            raise ParseError("channels differ in length within instance", line=lineno)
        if n_channels is None:
            n_channels, length = len(chans), len(chans[0])
        if len(chans) != n_channels:
            raise ParseError(
                f"expected {n_channels} channels, got {len(chans)}", line=lineno
            )
        if len(chans[0]) != length:
            raise ParseError(
                f"expected length {length}, got {len(chans[0])}"
                " (variable-length data not supported)",
                line=lineno,
            )
        arr = np.array(chans, dtype=np.float64)
        if not np.isfinite(arr).all():
            raise ParseError("non-finite value", line=lineno)
        labels.append(label)
        series.append(TimeSeries(arr))

    if not in_data:
        raise ParseError("missing @data section")
    if not series:
        raise ParseError("no data rows after @data")
    if univariate is not None and univariate != (n_channels == 1):
        raise ParseError(
            f"@univariate {str(univariate).lower()} contradicts channel count {n_channels}"
        )
    # keep declared ordering for ids; tokens never seen in data still count
    ids = [class_labels.index(tok) for tok in labels]
    return Dataset(
        tuple(LabeledInstance(s, i) for s, i in zip(series, ids)), class_labels
    )


def _check_token(tok: str, what: str):
    if not _TOKEN_RE.match(tok) or tok[0] in "@#":
        raise FormatError(f"{what} {tok!r} not representable in this format")


def serialize_dataset(dataset: Dataset, format: str) -> str:
    """Serialize to ``ucr_tsv`` or ``ts`` text; parse round-trips exactly."""
    for name in dataset.class_names:
        _check_token(name, "class name")
    if format == "ucr_tsv":
        if dataset.channels != 1:
            raise FormatError(
                f"ucr_tsv is univariate only, dataset has {dataset.channels} channels"
            )
        lines = []
        for inst in dataset.instances:
            vals = "\t".join(repr(float(v)) for v in inst.series.values[0])
            lines.append(f"{dataset.class_names[inst.label]}\t{vals}")
        return "\n".join(lines) + "\n"
    if format == "ts":
        lines = [
            "@problemName series",
            f"@univariate {'true' if dataset.channels == 1 else 'false'}",
            "@classLabel true " + " ".join(dataset.class_names),
            "@data",
        ]
        for inst in dataset.instances:
            chans = ":".join(
                ",".join(repr(float(v)) for v in row) for row in inst.series.values
            )
            lines.append(f"{chans}:{dataset.class_names[inst.label]}")
        return "\n".join(lines) + "\n"
    raise FormatError(f"unknown format {format!r}")


def znormalize(dataset: Dataset) -> Dataset:
    """Z-normalize per channel over all instances and time steps.

    Constant channels (stddev < 1e-12) are flagged in the returned
    dataset's ``norm_stats`` and passed through unchanged.
    """
    stacked = dataset.values_array()  # (n, c, t)
    mean = stacked.mean(axis=(0, 2))
    std = stacked.std(axis=(0, 2))
    constant = std < _CONST_STD
    safe = np.where(constant, 1.0, std)
    out = (stacked - mean[None, :, None]) / safe[None, :, None]
    out[:, constant, :] = stacked[:, constant, :]
    stats = NormStats(mean=mean, std=std, constant=constant)
    insts = tuple(
        LabeledInstance(TimeSeries(out[i]), inst.label)
        for i, inst in enumerate(dataset.instances)
    )
    return Dataset(insts, dataset.class_names, norm_stats=stats)


def planted_bump_dataset(
    n: int = 200,
    length: int = 100,
    channels: int = 1,
    bump_start: int | None = None,
    bump_len: int = 12,
    amplitude: float = 1.5,
    noise: float = 0.25,
    seed: int = 0,
) -> Dataset:
    """Two-class synthetic set: class 1 carries a half-sine bump, class 0 does not.

    The bump sits at a fixed position (centered by default) on channel 0,
    so a classifier can key on a localized region. Used by the demos and
    the benchmark self-tests.
    """
    if bump_start is None:
        bump_start = (length - bump_len) // 2
    if not 0 <= bump_start <= length - bump_len:
        raise ShapeError("bump does not fit in the series")
    rng = np.random.default_rng(seed)
    shape = amplitude * np.sin(np.pi * (np.arange(bump_len) + 1) / (bump_len + 1))
    insts = []
    for i in range(n):
        vals = rng.normal(0.0, noise, size=(channels, length))
        label = i % 2
        if label == 1:
            vals[0, bump_start : bump_start + bump_len] += shape
        insts.append(LabeledInstance(TimeSeries(vals), label))
    return Dataset(tuple(insts), ("0", "1"))
