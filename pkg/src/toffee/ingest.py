"""Temporal edge lists: parsing, node registry, snapshot binning."""

import io
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateTimespan, EmptyInput, ParseError

STRATEGIES = ("auto", "uniform-width", "native-distinct")
WEIGHTINGS = ("binary", "count", "weight-sum")


@dataclass(frozen=True)
class EdgeListFormat:
    """Zero-based column positions and delimiter of an edge-list file.

    ``delimiter=None`` splits on runs of whitespace. ``weight=None`` means
    the file has no weight column and every event weighs 1.
    """

    src: int = 0
    dst: int = 1
    time: int = 2
    weight: int | None = None
    delimiter: str | None = None
    directed: bool = False


@dataclass(frozen=True, eq=False)
class TemporalGraph:
    labels: tuple
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    time: np.ndarray
    directed: bool = False
    index: dict = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "index", {lab: i for i, lab in enumerate(self.labels)})
        for name in ("src", "dst", "weight", "time"):
            getattr(self, name).setflags(write=False)

    @property
    def n_nodes(self):
        return len(self.labels)

    @property
    def n_events(self):
        return len(self.time)

    def __len__(self):
        return self.n_events

    @property
    def events(self):
        return list(
            zip(self.src.tolist(), self.dst.tolist(), self.weight.tolist(), self.time.tolist())
        )

    def take(self, idx):
        """Sub-graph on the events selected by ``idx``; the node registry is kept whole."""
        return TemporalGraph(
            self.labels,
            self.src[idx].copy(),
            self.dst[idx].copy(),
            self.weight[idx].copy(),
            self.time[idx].copy(),
            self.directed,
        )

    def pair_keys(self):
        """Integer key per event, canonicalised to ``min*n + max`` when undirected."""
        s, d = self.src.astype(np.int64), self.dst.astype(np.int64)
        if not self.directed:
            s, d = np.minimum(s, d), np.maximum(s, d)
        return s * self.n_nodes + d


def from_events(events, labels=None, directed=False):
    """Build a graph from ``(src, dst, weight, time)`` tuples of integer node ids."""
    events = list(events)
    if not events:
        raise EmptyInput("no events")
    arr = np.array(events, dtype=np.float64).reshape(-1, 4)
    src = arr[:, 0].astype(np.int64)
    dst = arr[:, 1].astype(np.int64)
    if labels is None:
        labels = tuple(str(i) for i in range(int(max(src.max(), dst.max())) + 1))
    order = np.argsort(arr[:, 3], kind="stable")
    return TemporalGraph(
        tuple(labels), src[order], dst[order], arr[order, 2].copy(), arr[order, 3].copy(), directed
    )


def _lines(source):
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            data = fh.read()
    elif isinstance(source, bytes):
        data = source
    else:
        data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return io.StringIO(data)


def _number(tok, lineno, what):
    try:
        value = float(tok)
    except ValueError:
        raise ParseError(lineno, f"{what} {tok!r} is not a number") from None
    if not math.isfinite(value):
        raise ParseError(lineno, f"{what} is not finite")
    return value


def parse_edge_list(source, fmt=None):
    """Parse a temporal edge list.

    Parameters
    ----------
    source : path, bytes or file-like
        Line-oriented text. Lines starting with ``%`` or ``#`` and blank lines
        are skipped.
    fmt : EdgeListFormat, optional

    Returns
    -------
    TemporalGraph
        Node labels are interned in first-seen order and events are sorted by
        timestamp (ties keep file order).
    """
    fmt = fmt or EdgeListFormat()
    needed = max(c for c in (fmt.src, fmt.dst, fmt.time, fmt.weight) if c is not None) + 1
    index = {}
    labels = []
    rows = []

    def intern(label):
        i = index.get(label)
        if i is None:
            i = index[label] = len(labels)
            labels.append(label)
        return i

    for lineno, line in enumerate(_lines(source), start=1):
        stripped = line.strip()
        if not stripped or stripped[0] in "%#":
            continue
        if fmt.delimiter is None:
            toks = stripped.split()
        else:
            toks = [t.strip() for t in stripped.split(fmt.delimiter)]
        if len(toks) < needed:
            raise ParseError(lineno, f"expected {needed} columns, found {len(toks)}")
        t = _number(toks[fmt.time], lineno, "timestamp")
        w = 1.0
        if fmt.weight is not None:
            w = _number(toks[fmt.weight], lineno, "weight")
            if w < 0:
                raise ParseError(lineno, "negative weight")
        if not toks[fmt.src] or not toks[fmt.dst]:
            raise ParseError(lineno, "empty node label")
        rows.append((intern(toks[fmt.src]), intern(toks[fmt.dst]), w, t))

    if not rows:
        raise EmptyInput("edge list contains no events")
    return from_events(rows, labels=labels, directed=fmt.directed)


def write_edge_list(g, stream):
    """Write ``src dst weight time`` lines that :func:`parse_edge_list` reads back.

    Use ``EdgeListFormat(weight=2, time=3)`` to re-parse.
    """
    for s, d, w, t in g.events:
        stream.write(f"{g.labels[s]} {g.labels[d]} {w!r} {t!r}\n")


@dataclass(frozen=True)
class SnapshotSpec:
    """How events become frontal slices.

    ``strategy="auto"`` uses one slice per distinct timestamp when there are
    at most ``num_bins`` of them, uniform-width bins otherwise.
    """

    num_bins: int = 32
    strategy: str = "auto"
    weighting: str = "binary"
    symmetrize: bool = True

    def __post_init__(self):
        if self.num_bins < 1:
            raise ValueError("num_bins must be >= 1")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.weighting not in WEIGHTINGS:
            raise ValueError(f"unknown weighting {self.weighting!r}")


@dataclass(frozen=True, eq=False)
class AdjacencyTensor:
    tensor: np.ndarray
    spec: SnapshotSpec
    labels: tuple

    @property
    def shape(self):
        return self.tensor.shape

    def __array__(self, dtype=None, copy=None):
        return self.tensor if dtype is None else self.tensor.astype(dtype)


def uniform_bins(time, num_bins):
    """``floor(T (t - t_min) / (t_max - t_min + eps))`` clamped to ``[0, T-1]``."""
    lo, hi = float(time.min()), float(time.max())
    span = hi - lo
    if span == 0.0:
        if num_bins > 1:
            raise DegenerateTimespan("all timestamps are equal; cannot form several bins")
        return np.zeros(len(time), dtype=np.int64)
    # one-ulp nudge keeps t_max inside the last bin
    denom = np.nextafter(span, np.inf)
    b = np.floor(num_bins * (time - lo) / denom).astype(np.int64)
    return np.clip(b, 0, num_bins - 1)


def bin_timestamps(g, spec=None):
    """Aggregate the events of ``g`` into an ``(n, n, T)`` adjacency tensor."""
    spec = spec or SnapshotSpec()
    if g.n_events == 0:
        raise EmptyInput("graph has no events")
    distinct = np.unique(g.time)
    strategy = spec.strategy
    if strategy == "auto":
        strategy = "native-distinct" if len(distinct) <= spec.num_bins else "uniform-width"
    if strategy == "native-distinct":
        bins = np.searchsorted(distinct, g.time)
        n_slices = len(distinct)
    else:
        bins = uniform_bins(g.time, spec.num_bins)
        n_slices = spec.num_bins

    n = g.n_nodes
    x = np.zeros((n, n, n_slices))
    if spec.weighting == "weight-sum":
        np.add.at(x, (g.src, g.dst, bins), g.weight)
    else:
        np.add.at(x, (g.src, g.dst, bins), 1.0)

    if spec.symmetrize:
        xt = np.transpose(x, (1, 0, 2))
        if spec.weighting == "binary":
            x = np.maximum(x, xt)
        else:
            diag = np.einsum("iit->it", x).copy()
            x = x + xt
            idx = np.arange(n)
            x[idx, idx, :] = diag
    if spec.weighting == "binary":
        x = (x > 0).astype(np.float64)
    return AdjacencyTensor(np.ascontiguousarray(x), spec, g.labels)
