"""Node embeddings from fitted factors, and edge features from node pairs."""

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch
from .tensor import tproduct

OPERATORS = ("average", "hadamard", "weighted-l1", "weighted-l2")


@dataclass(frozen=True, eq=False)
class EmbeddingMatrix:
    vectors: np.ndarray
    method: str
    config_hash: str = ""

    @property
    def n(self):
        return self.vectors.shape[0]

    @property
    def r(self):
        return self.vectors.shape[1]

    def __array__(self, dtype=None, copy=None):
        return self.vectors if dtype is None else self.vectors.astype(dtype)


def config_hash(config):
    text = ";".join(f"{k}={config[k]!r}" for k in sorted(config))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _check_method(f, expected):
    if f.method != expected:
        raise ValueError(f"expected a {expected} factorization, got {f.method}")
    n, r, T = f.A.shape
    if f.R.shape != (r, r, f.R.shape[2]) or (expected != "rescal" and f.R.shape[2] != T):
        raise DimMismatch(f"factor shapes {f.A.shape} and {f.R.shape} are incompatible")


def dc_embeddings(A, R):
    """Sum over time of ``A(i,:,:) * R`` for every node ``i``.

    The temporal sum of a circular convolution is the product of the temporal
    sums, so the result is ``(sum_t A^(t)) @ (sum_t R^(t))``.
    """
    return A.sum(axis=2) @ R.sum(axis=2)


def literal_embeddings(A, R):
    """Per-node t-product, squeezed to ``r x T`` and summed over time."""
    rows = [tproduct(A[i : i + 1], R)[0].sum(axis=1) for i in range(A.shape[0])]
    return np.array(rows).reshape(A.shape[0], R.shape[1])


def toffee_embeddings(f):
    _check_method(f, "toffee")
    return EmbeddingMatrix(dc_embeddings(f.A, f.R), "toffee", config_hash(f.config))


def rescal_embeddings(f):
    """``A @ sum_t R^(t)``: the matrix-product analogue of the Toffee rule."""
    _check_method(f, "rescal")
    return EmbeddingMatrix(f.A[:, :, 0] @ f.R.sum(axis=2), "rescal", config_hash(f.config))


def tsvd_embeddings(f):
    """Toffee rule applied with ``A = U_r`` and ``R = S_r``; ``V`` is not used."""
    _check_method(f, "tsvd")
    return EmbeddingMatrix(dc_embeddings(f.A, f.R), "tsvd", config_hash(f.config))


def embeddings(f):
    dispatch = {
        "toffee": toffee_embeddings,
        "rescal": rescal_embeddings,
        "tsvd": tsvd_embeddings,
    }
    try:
        return dispatch[f.method](f)
    except KeyError:
        raise ValueError(f"unknown method {f.method!r}") from None


def edge_feature(u, v, op):
    """node2vec binary operator on two embeddings (or row-aligned batches of them)."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimMismatch(f"embedding shapes differ: {u.shape} vs {v.shape}")
    if op == "average":
        return (u + v) / 2
    if op == "hadamard":
        return u * v
    if op == "weighted-l1":
        return np.abs(u - v)
    if op == "weighted-l2":
        return (u - v) ** 2
    raise ValueError(f"unknown operator {op!r}; expected one of {OPERATORS}")
