"""On-disk formats.

``TTE1`` tensor container::

    b"TTE1" | u64 n1 | u64 n2 | u64 n3 | f64[n1*n2*n3]

all little-endian, entries slice-major: frontal slice ``t`` is outermost and
each slice is stored row by row.

Embedding text export: a header ``n r`` followed by one line per node,
``<label> <v1> ... <vr>`` with 17 significant digits.
"""

import ast
import json
import struct
from pathlib import Path

import numpy as np

from .errors import ContainerError
from .factorize import Factorization

MAGIC = b"TTE1"
_HEADER = struct.Struct("<4sQQQ")


def encode_tensor(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ValueError(f"expected a third-order tensor, got shape {x.shape}")
    body = np.ascontiguousarray(np.transpose(x, (2, 0, 1))).astype("<f8").tobytes()
    return _HEADER.pack(MAGIC, *x.shape) + body


def decode_tensor(data):
    if len(data) < _HEADER.size:
        raise ContainerError("truncated header")
    magic, n1, n2, n3 = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ContainerError(f"bad magic bytes {magic!r}")
    expected = _HEADER.size + 8 * n1 * n2 * n3
    if len(data) != expected:
        raise ContainerError(f"payload is {len(data)} bytes, expected {expected}")
    flat = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    return np.ascontiguousarray(np.transpose(flat.reshape(n3, n1, n2), (1, 2, 0))).astype(
        np.float64
    )


def save_tensor(path, x):
    with open(path, "wb") as fh:
        fh.write(encode_tensor(x))


def load_tensor(path):
    with open(path, "rb") as fh:
        return decode_tensor(fh.read())


def save_embeddings(path, labels, emb):
    emb = np.asarray(emb, dtype=np.float64)
    n, r = emb.shape
    if len(labels) != n:
        raise ValueError("one label per embedding row required")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{n} {r}\n")
        for label, row in zip(labels, emb):
            fh.write(label + " " + " ".join(f"{v:.17g}" for v in row) + "\n")


def load_embeddings(path):
    """Return ``(labels, matrix)`` from an embedding export."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ContainerError("embedding header must be 'n r'")
        n, r = int(header[0]), int(header[1])
        labels = []
        emb = np.empty((n, r))
        for i in range(n):
            toks = fh.readline().split()
            if len(toks) != r + 1:
                raise ContainerError(f"embedding row {i + 1} has {len(toks) - 1} values, expected {r}")
            labels.append(toks[0])
            emb[i] = [float(t) for t in toks[1:]]
    return labels, emb


META_NAME = "factorization.meta"
TRACE_NAME = "trace.txt"


def save_factorization(directory, f, labels):
    """Write factor tensors, a ``key = value`` metadata sidecar and the trace.

    Returns the list of paths written.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name in ("A", "R", "V"):
        x = getattr(f, name)
        if x is not None:
            path = directory / f"{name}.tte"
            save_tensor(path, x)
            written.append(path)
    meta = directory / META_NAME
    with open(meta, "w", encoding="utf-8") as fh:
        fh.write(f"method = {f.method}\n")
        fh.write(f"iterations_run = {f.iterations_run}\n")
        for key in sorted(f.config):
            fh.write(f"config.{key} = {f.config[key]!r}\n")
        fh.write(f"labels = {json.dumps(list(labels))}\n")
    written.append(meta)
    trace = directory / TRACE_NAME
    with open(trace, "w", encoding="utf-8") as fh:
        for i, value in enumerate(f.objective_trace):
            fh.write(f"{i} {value:.17g}\n")
    written.append(trace)
    return written


def load_factorization(directory):
    """Inverse of :func:`save_factorization`; returns ``(Factorization, labels)``."""
    directory = Path(directory)
    meta_path = directory / META_NAME
    if not meta_path.is_file():
        raise FileNotFoundError(f"{meta_path} not found")
    meta = {}
    with open(meta_path, encoding="utf-8") as fh:
        for line in fh:
            if "=" in line:
                key, value = line.split("=", 1)
                meta[key.strip()] = value.strip()
    try:
        method = meta["method"]
        labels = json.loads(meta["labels"])
        config = {
            k[len("config.") :]: ast.literal_eval(v) for k, v in meta.items() if k.startswith("config.")
        }
        iterations = int(meta["iterations_run"])
    except (KeyError, ValueError, SyntaxError) as exc:
        raise ContainerError(f"corrupt metadata in {meta_path}: {exc}") from None
    trace = []
    trace_path = directory / TRACE_NAME
    if trace_path.is_file():
        with open(trace_path, encoding="utf-8") as fh:
            trace = [float(line.split()[1]) for line in fh if line.strip()]
    V = load_tensor(directory / "V.tte") if (directory / "V.tte").is_file() else None
    f = Factorization(
        method,
        load_tensor(directory / "A.tte"),
        load_tensor(directory / "R.tte"),
        tuple(trace),
        iterations,
        config,
        V=V,
    )
    if f.A.shape[0] != len(labels):
        raise ContainerError(f"{len(labels)} labels for {f.A.shape[0]} factor rows")
    return f, labels
