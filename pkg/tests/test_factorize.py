import numpy as np
import pytest

from toffee.errors import DimMismatch, SingularSolve
from toffee.factorize import (
    Factorization,
    ToffeeConfig,
    objective,
    reconstruct,
    rescal_fit,
    toffee_fit,
    toffee_objective_fourier,
    tsvd,
    update_A_slice,
    update_R_slice,
)
from toffee.tensor import fft_mode3, ifft_mode3, mirror_spectrum, tproduct_direct, ttranspose

from oracles import kron_ridge_R, slice_objective


def cplx(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def orthonormal(rng, n, r):
    q, _ = np.linalg.qr(cplx(rng, n, r))
    return q


def planted(rng, n=8, r=2, T=4):
    A0 = rng.random((n, r, T))
    R0 = rng.standard_normal((r, r, T))
    return tproduct_direct(tproduct_direct(A0, R0), ttranspose(A0)), A0, R0


# --- A-step ---------------------------------------------------------------


def test_A_update_fixed_point_on_consistent_data(rng):
    A = orthonormal(rng, 6, 2)
    R = cplx(rng, 2, 2)
    X = A @ R @ A.conj().T
    once = update_A_slice(X, A, R, 0.0)
    twice = update_A_slice(X, once, R, 0.0)
    assert np.abs(twice - once).max() < 1e-8
    assert np.abs(once - A).max() < 1e-8


def test_A_update_identity_R_reduces_to_least_squares(rng):
    B = rng.standard_normal((6, 6))
    X = B @ B.T
    A = cplx(rng, 6, 3)
    got = update_A_slice(X, A, np.eye(3), 0.0)
    expected = X @ A @ np.linalg.inv(A.conj().T @ A)
    np.testing.assert_allclose(got, expected, atol=1e-10)


def test_A_update_ridge_dominance(rng):
    got = update_A_slice(cplx(rng, 5, 5), cplx(rng, 5, 2), cplx(rng, 2, 2), 1e12)
    assert np.abs(got).max() < 1e-6


def test_A_update_singular_reports_slice(rng):
    X = np.zeros((3, 4, 4), complex)
    A = cplx(rng, 3, 4, 2)
    R = np.zeros((3, 2, 2), complex)
    with pytest.raises(SingularSolve) as err:
        update_A_slice(X, A, R, 0.0)
    assert err.value.slice_index == 0


def test_A_update_batched_matches_loop(rng):
    X, A, R = cplx(rng, 4, 5, 5), cplx(rng, 4, 5, 2), cplx(rng, 4, 2, 2)
    batched = update_A_slice(X, A, R, 0.1)
    for k in range(4):
        np.testing.assert_allclose(batched[k], update_A_slice(X[k], A[k], R[k], 0.1), atol=1e-12)


# --- R-step ---------------------------------------------------------------


def test_R_update_orthonormal_A(rng):
    A = orthonormal(rng, 6, 3)
    X = cplx(rng, 6, 6)
    np.testing.assert_allclose(update_R_slice(X, A, 0.0), A.conj().T @ X @ A, atol=1e-12)


def test_R_update_matches_kronecker_oracle(rng):
    A = rng.standard_normal((5, 2))
    X = rng.standard_normal((5, 5))
    assert np.abs(update_R_slice(X, A, 0.1) - kron_ridge_R(X, A, 0.1)).max() < 1e-8
    Ac, Xc = cplx(rng, 5, 2), cplx(rng, 5, 5)
    assert np.abs(update_R_slice(Xc, Ac, 0.1) - kron_ridge_R(Xc, Ac, 0.1)).max() < 1e-8


def test_R_update_zero_data(rng):
    assert not np.any(np.abs(update_R_slice(np.zeros((4, 4)), rng.random((4, 2)), 0.5)) > 0)


def test_R_update_is_exact_minimizer(rng):
    A, X, lam = cplx(rng, 7, 3), cplx(rng, 7, 7), 0.3
    R = update_R_slice(X, A, lam)
    base = slice_objective(X, A, R, lam)
    for _ in range(50):
        d = cplx(rng, 3, 3)
        d *= 1e-4 / np.linalg.norm(d)
        assert slice_objective(X, A, R + d, lam) >= base - 1e-12 * base


def test_R_update_singular_without_ridge(rng):
    A = rng.random((5, 1)) @ np.ones((1, 2))  # rank one
    with pytest.raises(SingularSolve):
        update_R_slice(rng.random((5, 5)), A, 0.0)


def test_R_update_dim_mismatch(rng):
    with pytest.raises(DimMismatch):
        update_R_slice(np.zeros((4, 4)), np.zeros((5, 2)), 0.1)


# --- objective ------------------------------------------------------------


def _toffee_factors(A, R, la=0.0, lr=0.0):
    return Factorization("toffee", A, R, (), 0, {"lambda_A": la, "lambda_R": lr})


def test_objective_zero_factors(rng):
    X = rng.random((4, 4, 3))
    f = _toffee_factors(np.zeros((4, 2, 3)), np.zeros((2, 2, 3)), 0.5, 0.5)
    assert objective(X, f) == pytest.approx(0.5 * np.sum(X**2), rel=1e-12)


def test_objective_planted_is_zero(rng):
    X, A0, R0 = planted(rng)
    assert objective(X, _toffee_factors(A0, R0)) < 1e-10


def test_objective_time_and_fourier_paths_agree(rng):
    X = rng.random((6, 6, 5))
    f = _toffee_factors(rng.standard_normal((6, 3, 5)), rng.standard_normal((3, 3, 5)), 0.2, 0.7)
    assert objective(X, f) == pytest.approx(toffee_objective_fourier(X, f), rel=1e-8)


def test_objective_dim_mismatch(rng):
    f = _toffee_factors(np.zeros((3, 2, 2)), np.zeros((2, 2, 2)))
    with pytest.raises(DimMismatch):
        objective(np.zeros((4, 4, 2)), f)


# --- Toffee ----------------------------------------------------------------


def test_single_slice_equals_rescal():
    rng = np.random.default_rng(5)
    X = rng.random((7, 7, 1))
    cfg = ToffeeConfig(rank=3, lambda_A=0.0, lambda_R=0.0, max_iters=30, rel_tol=1e-12, seed=11)
    t, r = toffee_fit(X, cfg), rescal_fit(X, cfg)
    np.testing.assert_allclose(t.A, r.A, atol=1e-8)
    np.testing.assert_allclose(t.R, r.R, atol=1e-8)
    assert t.objective_trace[-1] == pytest.approx(r.objective_trace[-1], rel=1e-10)


def test_planted_recovery(rng):
    X, _, _ = planted(rng)
    cfg = ToffeeConfig(rank=2, lambda_A=1e-6, lambda_R=1e-6, rel_tol=1e-12, seed=1)
    f = toffee_fit(X, cfg)
    assert np.linalg.norm(X - reconstruct(f)) / np.linalg.norm(X) < 1e-3
    assert f.objective_trace[-1] < f.objective_trace[0]


def test_zero_tensor_shrinks_to_zero():
    f = toffee_fit(np.zeros((5, 5, 4)), ToffeeConfig(rank=2, lambda_A=0.1, lambda_R=0.1))
    assert np.abs(reconstruct(f)).max() < 1e-12
    assert f.objective_trace[-1] == pytest.approx(0.0, abs=1e-20)
    assert all(v >= 0 for v in f.objective_trace)


def test_trace_matches_time_domain_objective(rng):
    X = rng.random((6, 6, 5))
    f = toffee_fit(X, ToffeeConfig(rank=2, lambda_A=0.05, lambda_R=0.02, max_iters=7, seed=3))
    assert f.objective_trace[-1] == pytest.approx(objective(X, f), rel=1e-8)


def test_mirror_equals_full_spectrum(rng):
    X = (rng.random((7, 7, 6)) < 0.4).astype(float)
    cfg = ToffeeConfig(rank=3, lambda_A=1e-2, lambda_R=1e-2, max_iters=40, rel_tol=1e-12, seed=2)
    half, full = toffee_fit(X, cfg, half=True), toffee_fit(X, cfg, half=False)
    assert np.abs(half.A - full.A).max() < 1e-8
    assert np.abs(half.R - full.R).max() < 1e-8


def test_recovered_factors_are_real(rng):
    X = rng.random((6, 6, 5))
    f = toffee_fit(X, ToffeeConfig(rank=2, max_iters=20, seed=4))
    for stack in (fft_mode3(f.A), fft_mode3(f.R)):
        z = np.fft.ifft(stack, axis=0)
        assert np.linalg.norm(z.imag) < 1e-8 * np.linalg.norm(z.real)


def test_R_step_never_increases_slice_objective(rng):
    Xf = fft_mode3(rng.random((6, 6, 4)))[:3]
    Af = fft_mode3(rng.random((6, 2, 4)))[:3]
    lam = 0.1
    R = update_R_slice(Xf, Af, lam)
    for _ in range(5):
        A_new = update_A_slice(Xf, Af, R, lam)
        before = [slice_objective(Xf[k], A_new[k], R[k], lam) for k in range(3)]
        R = update_R_slice(Xf, A_new, lam)
        after = [slice_objective(Xf[k], A_new[k], R[k], lam) for k in range(3)]
        assert all(a <= b * (1 + 1e-12) for a, b in zip(after, before))
        Af = A_new


def test_determinism(rng):
    X = rng.random((8, 8, 5))
    cfg = ToffeeConfig(rank=3, max_iters=25, seed=9)
    a, b = toffee_fit(X, cfg), toffee_fit(X, cfg)
    assert a.A.tobytes() == b.A.tobytes()
    assert a.R.tobytes() == b.R.tobytes()
    assert a.objective_trace == b.objective_trace


def test_rank_larger_than_nodes():
    with pytest.raises(ValueError):
        toffee_fit(np.zeros((3, 3, 2)), ToffeeConfig(rank=4))


def test_config_validation():
    for bad in (dict(rank=0), dict(rank=2, lambda_A=-1), dict(rank=2, rel_tol=0)):
        with pytest.raises(ValueError):
            ToffeeConfig(**bad)


def test_singular_solve_carries_iteration():
    X = np.zeros((4, 4, 3))
    with pytest.raises(SingularSolve) as err:
        toffee_fit(X, ToffeeConfig(rank=2, lambda_A=0.0, lambda_R=0.0))
    assert err.value.iteration == 1
    assert err.value.slice_index is not None


# --- RESCAL ----------------------------------------------------------------


def test_rescal_planted_recovery(rng):
    A0 = rng.random((9, 3))
    R0 = rng.standard_normal((4, 3, 3))
    X = np.moveaxis(A0 @ R0 @ A0.T, 0, 2)
    cfg = ToffeeConfig(rank=3, lambda_A=1e-6, lambda_R=1e-6, rel_tol=1e-12, max_iters=2000, seed=0)
    f = rescal_fit(X, cfg)
    assert np.linalg.norm(X - reconstruct(f)) / np.linalg.norm(X) < 1e-3


def test_rescal_full_rank_expressivity(rng):
    B = rng.standard_normal((5, 5, 3))
    X = B + np.transpose(B, (1, 0, 2))
    cfg = ToffeeConfig(rank=5, lambda_A=0.0, lambda_R=0.0, max_iters=50, rel_tol=1e-14, seed=0)
    f = rescal_fit(X, cfg)
    assert np.linalg.norm(X - reconstruct(f)) / np.linalg.norm(X) < 1e-6


def test_rescal_shapes(rng):
    f = rescal_fit(rng.random((6, 6, 4)), ToffeeConfig(rank=2, max_iters=5))
    assert f.A.shape == (6, 2, 1) and f.R.shape == (2, 2, 4)
    assert f.method == "rescal"


# --- t-SVD -----------------------------------------------------------------


def test_tsvd_full_rank_is_exact(rng):
    X = rng.standard_normal((5, 5, 4))
    f = tsvd(X, 5)
    assert np.abs(tproduct_direct(tproduct_direct(f.A, f.R), ttranspose(f.V)) - X).max() < 1e-8


def test_tsvd_rank_one_slices_exact(rng):
    n, T = 6, 5
    half = []
    for k in range(T // 2 + 1):
        u, v = cplx(rng, n, 1), cplx(rng, n, 1)
        if k == 0:
            u, v = u.real, v.real
        half.append(u @ v.conj().T)
    X = ifft_mode3(mirror_spectrum(np.array(half), T))
    f = tsvd(X, 1)
    assert np.abs(reconstruct(f) - X).max() < 1e-8


def test_tsvd_error_is_discarded_energy(rng):
    X = rng.random((6, 6, 5))
    r = 2
    f = tsvd(X, r)
    sig = np.linalg.svd(fft_mode3(X), compute_uv=False)
    expected = np.sum(sig[:, r:] ** 2) / X.shape[2]
    err = np.sum((X - reconstruct(f)) ** 2)
    assert err == pytest.approx(expected, rel=1e-8)
    assert f.objective_trace[0] == pytest.approx(expected / 2, rel=1e-8)


def test_tsvd_factor_structure(rng):
    f = tsvd(rng.random((6, 6, 4)), 3)
    Uf, Vf, Sf = fft_mode3(f.A), fft_mode3(f.V), fft_mode3(f.R)
    eye = np.eye(3)
    for k in range(4):
        assert np.abs(Uf[k].conj().T @ Uf[k] - eye).max() < 1e-8
        assert np.abs(Vf[k].conj().T @ Vf[k] - eye).max() < 1e-8
        d = np.diag(Sf[k])
        assert np.abs(Sf[k] - np.diag(d)).max() < 1e-10
        assert np.abs(d.imag).max() < 1e-10
        assert np.all(d.real >= -1e-12) and np.all(np.diff(d.real) <= 1e-12)
