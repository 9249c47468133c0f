import numpy as np
import pytest

from toffee.embed import (
    OPERATORS,
    dc_embeddings,
    edge_feature,
    embeddings,
    literal_embeddings,
    rescal_embeddings,
    toffee_embeddings,
    tsvd_embeddings,
)
from toffee.errors import DimMismatch
from toffee.factorize import Factorization, ToffeeConfig, toffee_fit, tsvd
from toffee.tensor import fft_mode3, identity_tensor, tproduct_direct


def _fact(method, A, R):
    return Factorization(method, A, R, (), 0, {})


def test_single_slice_is_row_of_AR(rng):
    A, R = rng.standard_normal((5, 3, 1)), rng.standard_normal((3, 3, 1))
    emb = toffee_embeddings(_fact("toffee", A, R)).vectors
    np.testing.assert_allclose(emb, A[:, :, 0] @ R[:, :, 0], atol=1e-12)


def test_identity_R_sums_A_over_time(rng):
    A = rng.standard_normal((4, 3, 5))
    emb = toffee_embeddings(_fact("toffee", A, identity_tensor(3, 5))).vectors
    np.testing.assert_allclose(emb, A.sum(axis=2), atol=1e-12)


def test_dc_identity_against_literal_tproduct(rng):
    A, R = rng.standard_normal((6, 3, 5)), rng.standard_normal((3, 3, 5))
    literal = np.array([tproduct_direct(A[i : i + 1], R)[0].sum(axis=1) for i in range(6)])
    closed = dc_embeddings(A, R)
    assert np.abs(literal - closed).max() < 1e-8
    assert np.abs(literal_embeddings(A, R) - closed).max() < 1e-8


def test_rescal_rules(rng):
    A, R = rng.standard_normal((5, 2, 1)), rng.standard_normal((2, 2, 4))
    emb = rescal_embeddings(_fact("rescal", A, R)).vectors
    per_slice = sum(A[:, :, 0] @ R[:, :, t] for t in range(4))
    assert np.abs(emb - per_slice).max() < 1e-10
    eye = np.repeat(np.eye(2)[:, :, None], 3, axis=2)
    np.testing.assert_allclose(rescal_embeddings(_fact("rescal", A, eye)).vectors, 3 * A[:, :, 0])


def test_tsvd_single_slice_is_scaled_spectral_embedding(rng):
    X = rng.random((5, 5, 1))
    f = tsvd(X, 2)
    u, s, _ = np.linalg.svd(X[:, :, 0])
    np.testing.assert_allclose(tsvd_embeddings(f).vectors, u[:, :2] * s[:2], atol=1e-10)


def test_tsvd_rank_one_is_dc_component(rng):
    X = rng.random((6, 6, 4))
    f = tsvd(X, 1)
    emb = tsvd_embeddings(f).vectors
    dc = fft_mode3(f.A)[0] @ fft_mode3(f.R)[0]
    np.testing.assert_allclose(emb, dc.real, atol=1e-10)


def test_tsvd_zero_input():
    emb = tsvd_embeddings(tsvd(np.zeros((4, 4, 3)), 2)).vectors
    assert not np.any(emb)


def test_method_guard_and_dispatch(rng):
    f = toffee_fit(rng.random((5, 5, 3)), ToffeeConfig(rank=2, max_iters=3))
    with pytest.raises(ValueError):
        rescal_embeddings(f)
    emb = embeddings(f)
    assert emb.vectors.shape == (5, 2) and emb.r == 2
    assert emb.method == "toffee" and len(emb.config_hash) == 16


def test_dim_mismatch(rng):
    with pytest.raises(DimMismatch):
        toffee_embeddings(_fact("toffee", rng.random((4, 2, 3)), rng.random((3, 3, 3))))
    with pytest.raises(DimMismatch):
        edge_feature([1.0, 2.0], [1.0], "average")


def test_edge_operator_values():
    u, v = [1.0, 2.0], [3.0, 4.0]
    assert edge_feature(u, v, "average").tolist() == [2, 3]
    assert edge_feature(u, v, "hadamard").tolist() == [3, 8]
    assert edge_feature(u, v, "weighted-l1").tolist() == [2, 2]
    assert edge_feature(u, v, "weighted-l2").tolist() == [4, 4]


@pytest.mark.parametrize("op", OPERATORS)
def test_edge_operators_symmetric(rng, op):
    u, v = rng.standard_normal(7), rng.standard_normal(7)
    np.testing.assert_array_equal(edge_feature(u, v, op), edge_feature(v, u, op))
    assert edge_feature(u, v, op).shape == (7,)
    if op in ("weighted-l1", "weighted-l2"):
        assert not np.any(edge_feature(u, u, op))


def test_unknown_operator():
    with pytest.raises(ValueError):
        edge_feature([1.0], [2.0], "concat")
