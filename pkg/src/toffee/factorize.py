"""Factorization engines for the temporal adjacency tensor.

* :func:`toffee_fit` -- ``X ~ A * R * A^T`` under the t-product, solved as
  independent ridge-regularized RESCAL problems on the Fourier slices.
* :func:`rescal_fit` -- classic RESCAL with one node factor shared by all
  time slices.
* :func:`tsvd` -- truncated t-SVD, slice-wise SVD in the Fourier domain.

The slice solvers accept single matrices or stacks with leading batch axes;
a stack of Fourier slices is solved in one batched call.
"""

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DimMismatch, NonFiniteObjective, SingularSolve
from .tensor import (
    as_tensor3,
    fft_mode3,
    half_spectrum,
    ifft_mode3,
    mirror_spectrum,
    self_conjugate,
    tproduct,
    ttranspose,
)

log = logging.getLogger(__name__)

METHODS = ("toffee", "rescal", "tsvd")
_EPS = np.finfo(np.float64).eps


@dataclass(frozen=True)
class ToffeeConfig:
    rank: int
    lambda_A: float = 1e-3
    lambda_R: float = 1e-3
    max_iters: int = 500
    rel_tol: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be positive")
        if self.lambda_A < 0 or self.lambda_R < 0:
            raise ValueError("regularization weights must be nonnegative")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.seed < 0:
            raise ValueError("seed must be unsigned")


@dataclass(frozen=True, eq=False)
class Factorization:
    """A fitted model.

    ``A`` is ``n x r x T`` (``T = 1`` for RESCAL) and ``R`` is ``r x r x T``.
    For t-SVD, ``A`` and ``R`` hold the truncated ``U`` and ``S`` and ``V``
    holds the right factor.
    """

    method: str
    A: np.ndarray
    R: np.ndarray
    objective_trace: tuple
    iterations_run: int
    config: dict = field(default_factory=dict)
    V: np.ndarray | None = None

    @property
    def rank(self):
        return self.A.shape[1]

    @property
    def n_slices(self):
        return self.R.shape[2]


def _h(m):
    return np.conj(np.swapaxes(m, -1, -2))


def _first_bad(flags):
    flags = np.atleast_1d(flags)
    bad = np.flatnonzero(flags.reshape(-1))
    return int(bad[0]) if bad.size else None


def update_A_slice(Xf, Af, Rf, lambda_A):
    """ASALSAN-style left-factor update with the right copy of ``Af`` frozen.

    Returns ``(X A R^H + X^H A R) (R A^H A R^H + R^H A^H A R + lambda_A I)^-1``,
    solved as a linear system.
    """
    Xf, Af, Rf = np.asarray(Xf), np.asarray(Af), np.asarray(Rf)
    n, r = Af.shape[-2:]
    if Xf.shape[-2:] != (n, n) or Rf.shape[-2:] != (r, r):
        raise DimMismatch(f"shapes {Xf.shape}, {Af.shape}, {Rf.shape} are inconsistent")
    gram = _h(Af) @ Af
    rhs = Xf @ Af @ _h(Rf) + _h(Xf) @ Af @ Rf
    system = Rf @ gram @ _h(Rf) + _h(Rf) @ gram @ Rf + lambda_A * np.eye(r)
    if lambda_A == 0:
        cond = np.linalg.cond(system)
        k = _first_bad(~(cond < 1.0 / _EPS))
        if k is not None:
            raise SingularSolve("A-update system is singular", slice_index=k)
    try:
        # A_new S = B  <=>  S^T A_new^T = B^T
        sol = np.linalg.solve(np.swapaxes(system, -1, -2), np.swapaxes(rhs, -1, -2))
    except np.linalg.LinAlgError as exc:
        raise SingularSolve(f"A-update solve failed: {exc}") from None
    return np.swapaxes(sol, -1, -2)


def update_R_slice(Xf, Af, lambda_R):
    """Exact minimizer of ``||X - A R A^H||_F^2 + lambda_R ||R||_F^2`` over ``R``.

    With ``A^H A = Q diag(L) Q^H`` the normal equations decouple:
    ``R = Q N Q^H`` where ``N_ij = (Q^H A^H X A Q)_ij / (L_i L_j + lambda_R)``.
    """
    Xf, Af = np.asarray(Xf), np.asarray(Af)
    n = Af.shape[-2]
    if Xf.shape[-2:] != (n, n):
        raise DimMismatch(f"X slice {Xf.shape[-2:]} does not match A {Af.shape[-2:]}")
    evals, Q = np.linalg.eigh(_h(Af) @ Af)
    evals = np.clip(evals, 0.0, None)
    M = _h(Q) @ (_h(Af) @ Xf @ Af) @ Q
    denom = evals[..., :, None] * evals[..., None, :] + lambda_R
    if lambda_R == 0:
        top = evals.max(axis=-1, initial=0.0)
        tiny = denom.min(axis=(-1, -2)) <= _EPS * top**2
        k = _first_bad(tiny | (top == 0))
        if k is not None:
            raise SingularSolve("A^H A is singular and lambda_R = 0", slice_index=k)
    return Q @ (M / denom) @ _h(Q)


def _slice_objective(Xf, Af, Rf, lambda_A, lambda_R):
    """Per-slice ``||X - A R A^H||^2 + lambda_A ||A||^2 + lambda_R ||R||^2`` (no 1/2T)."""
    resid = Xf - Af @ Rf @ _h(Af)
    return (
        np.sum(np.abs(resid) ** 2, axis=(-1, -2))
        + lambda_A * np.sum(np.abs(Af) ** 2, axis=(-1, -2))
        + lambda_R * np.sum(np.abs(Rf) ** 2, axis=(-1, -2))
    )


def _spectrum_weights(n3, n_solved):
    """Multiplicity of each solved frequency in the full spectrum."""
    if n_solved == n3:
        return np.ones(n3)
    w = np.full(n_solved, 2.0)
    for k in self_conjugate(n3):
        w[k] = 1.0
    return w


def objective_fourier(Xf, Af, Rf, lambda_A, lambda_R):
    """Fitting objective summed over full Fourier stacks, ``sum_k f_k / (2 n3)``."""
    terms = _slice_objective(Xf, Af, Rf, lambda_A, lambda_R)
    return float(np.sum(terms) / (2 * Xf.shape[0]))


def _realify(stack, n3):
    for k in self_conjugate(n3):
        if k < stack.shape[0]:
            stack[k] = stack[k].real
    return stack


def _input_array(x):
    arr = as_tensor3(getattr(x, "tensor", x), "X")
    if arr.shape[0] != arr.shape[1]:
        raise DimMismatch(f"adjacency tensor must be n x n x T, got {arr.shape}")
    return arr


def _check_rank(cfg, n):
    if cfg.rank > n:
        raise ValueError(f"rank {cfg.rank} exceeds node count {n}")


def _converged(prev, cur, tol):
    if prev == 0.0:
        return True
    return abs(prev - cur) / prev < tol


def _check_finite(obj, it):
    if not np.isfinite(obj):
        raise NonFiniteObjective(f"objective became {obj} at iteration {it}")


def initial_A(n, r, T, seed):
    """Temporal-domain uniform [0, 1) draw, so its Fourier image is conjugate symmetric."""
    return np.random.default_rng(seed).random((n, r, T))


def toffee_fit(x, cfg, *, init_A=None, half=True):
    """Fit ``X ~ A * R * A^T`` by alternating slice-wise updates in the Fourier domain.

    Parameters
    ----------
    x : AdjacencyTensor or array of shape (n, n, T)
    cfg : ToffeeConfig
    init_A : array (n, r, T), optional
        Temporal-domain starting point; drawn from ``cfg.seed`` when omitted.
    half : bool
        Solve only frequencies ``0..T//2`` and mirror the rest by conjugation.
        ``False`` solves all ``T`` slices independently.

    Returns
    -------
    Factorization
        ``objective_trace[0]`` is the objective after the initial R-step; one
        entry is appended per outer iteration.
    """
    X = _input_array(x)
    n, _, T = X.shape
    _check_rank(cfg, n)
    A0 = initial_A(n, cfg.rank, T, cfg.seed) if init_A is None else as_tensor3(init_A, "init_A")
    if A0.shape != (n, cfg.rank, T):
        raise DimMismatch(f"init_A has shape {A0.shape}, expected {(n, cfg.rank, T)}")

    ks = half_spectrum(T) if half else T
    Xf = fft_mode3(X)[:ks]
    Af = fft_mode3(A0)[:ks]
    weights = _spectrum_weights(T, ks)

    def total(Af, Rf):
        terms = _slice_objective(Xf, Af, Rf, cfg.lambda_A, cfg.lambda_R)
        return float(np.dot(weights, terms) / (2 * T))

    it = 0
    try:
        Rf = _realify(update_R_slice(Xf, Af, cfg.lambda_R), T)
        obj = total(Af, Rf)
        _check_finite(obj, 0)
        trace = [obj]
        for it in range(1, cfg.max_iters + 1):
            Af = _realify(update_A_slice(Xf, Af, Rf, cfg.lambda_A), T)
            Rf = _realify(update_R_slice(Xf, Af, cfg.lambda_R), T)
            obj = total(Af, Rf)
            _check_finite(obj, it)
            trace.append(obj)
            if _converged(trace[-2], obj, cfg.rel_tol):
                break
    except SingularSolve as exc:
        raise SingularSolve(str(exc).split(" (")[0], exc.slice_index, it) from None

    if half:
        Af, Rf = mirror_spectrum(Af, T), mirror_spectrum(Rf, T)
    log.debug("toffee: %d iterations, objective %.6g", len(trace) - 1, trace[-1])
    return Factorization(
        "toffee",
        ifft_mode3(Af),
        ifft_mode3(Rf),
        tuple(trace),
        len(trace) - 1,
        asdict(cfg),
    )


def _rescal_objective(X, A, R, lambda_A, lambda_R):
    resid = X - A @ R @ A.T
    return 0.5 * (
        float(np.sum(resid * resid))
        + lambda_A * float(np.sum(A * A))
        + lambda_R * float(np.sum(R * R))
    )


def rescal_fit(x, cfg, *, init_A=None):
    """RESCAL by alternating least squares in the time domain.

    One real ``n x r`` factor is shared by all slices; ``R`` keeps one
    ``r x r`` interaction matrix per slice. ``init_A`` may be ``n x r`` or
    ``n x r x 1``; the default draw matches :func:`toffee_fit` with ``T = 1``.
    """
    X = _input_array(x)
    n, _, T = X.shape
    _check_rank(cfg, n)
    if init_A is None:
        A = initial_A(n, cfg.rank, 1, cfg.seed)[:, :, 0]
    else:
        A = np.asarray(init_A, dtype=np.float64).reshape(n, cfg.rank)
    Xs = np.ascontiguousarray(np.moveaxis(X, 2, 0))  # (T, n, n)
    eye = np.eye(cfg.rank)

    it = 0
    try:
        R = update_R_slice(Xs, A, cfg.lambda_R)
        obj = _rescal_objective(Xs, A, R, cfg.lambda_A, cfg.lambda_R)
        _check_finite(obj, 0)
        trace = [obj]
        for it in range(1, cfg.max_iters + 1):
            gram = A.T @ A
            rhs = np.sum(Xs @ A @ np.swapaxes(R, 1, 2) + np.swapaxes(Xs, 1, 2) @ A @ R, axis=0)
            system = np.sum(
                R @ gram @ np.swapaxes(R, 1, 2) + np.swapaxes(R, 1, 2) @ gram @ R, axis=0
            )
            system = system + cfg.lambda_A * eye
            if cfg.lambda_A == 0 and not np.linalg.cond(system) < 1.0 / _EPS:
                raise SingularSolve("A-update system is singular")
            A = np.linalg.solve(system.T, rhs.T).T
            R = update_R_slice(Xs, A, cfg.lambda_R)
            obj = _rescal_objective(Xs, A, R, cfg.lambda_A, cfg.lambda_R)
            _check_finite(obj, it)
            trace.append(obj)
            if _converged(trace[-2], obj, cfg.rel_tol):
                break
    except SingularSolve as exc:
        raise SingularSolve(str(exc).split(" (")[0], exc.slice_index, it) from None
    except np.linalg.LinAlgError as exc:
        raise SingularSolve(f"A-update solve failed: {exc}", iteration=it) from None

    return Factorization(
        "rescal",
        A[:, :, None].copy(),
        np.ascontiguousarray(np.moveaxis(R, 0, 2)),
        tuple(trace),
        len(trace) - 1,
        asdict(cfg),
    )


def tsvd(x, rank):
    """Truncated t-SVD ``X ~ U * S * V^T`` keeping ``rank`` singular tubes.

    Only frequencies ``0..T//2`` are decomposed; the others are conjugates,
    which keeps ``U``, ``S`` and ``V`` real. ``objective_trace`` holds the
    single value ``0.5 ||X - U * S * V^T||_F^2``.
    """
    X = _input_array(x)
    n, _, T = X.shape
    if not 1 <= rank <= n:
        raise ValueError(f"rank must lie in [1, {n}], got {rank}")
    ks = half_spectrum(T)
    Xf = fft_mode3(X)[:ks]
    U = np.empty((ks, n, rank), dtype=np.complex128)
    V = np.empty((ks, n, rank), dtype=np.complex128)
    S = np.zeros((ks, rank, rank), dtype=np.complex128)
    discarded = np.zeros(ks)
    real_slices = set(self_conjugate(T))
    for k in range(ks):
        m = Xf[k].real if k in real_slices else Xf[k]
        u, s, vh = np.linalg.svd(m)
        U[k] = u[:, :rank]
        V[k] = _h(vh)[:, :rank]
        S[k] = np.diag(s[:rank])
        discarded[k] = np.sum(s[rank:] ** 2)
    err = float(np.dot(_spectrum_weights(T, ks), discarded) / (2 * T))
    return Factorization(
        "tsvd",
        ifft_mode3(mirror_spectrum(U, T)),
        ifft_mode3(mirror_spectrum(S, T)),
        (err,),
        0,
        {"rank": rank},
        V=ifft_mode3(mirror_spectrum(V, T)),
    )


def reconstruct(f):
    """Time-domain reconstruction of the fitted adjacency tensor."""
    if f.method == "toffee":
        return tproduct(tproduct(f.A, f.R), ttranspose(f.A))
    if f.method == "rescal":
        A = f.A[:, :, 0]
        return np.moveaxis(A @ np.moveaxis(f.R, 2, 0) @ A.T, 0, 2)
    if f.method == "tsvd":
        return tproduct(tproduct(f.A, f.R), ttranspose(f.V))
    raise ValueError(f"unknown method {f.method!r}")


def objective(x, f):
    """Fitting objective of ``f`` evaluated in the time domain.

    ``0.5 ||X - model||_F^2 + lambda_A/2 ||A||_F^2 + lambda_R/2 ||R||_F^2``;
    t-SVD carries no penalties, so its value is the half squared residual.
    """
    X = _input_array(x)
    A, R = f.A, f.R
    if A.shape[0] != X.shape[0] or R.shape[2] != X.shape[2]:
        raise DimMismatch(f"factors {A.shape}, {R.shape} do not fit X {X.shape}")
    resid = X - reconstruct(f)
    value = 0.5 * float(np.sum(resid * resid))
    if f.method != "tsvd":
        value += 0.5 * f.config.get("lambda_A", 0.0) * float(np.sum(A * A))
        value += 0.5 * f.config.get("lambda_R", 0.0) * float(np.sum(R * R))
    return value


def toffee_objective_fourier(x, f):
    """Parseval evaluation of the Toffee objective from full Fourier stacks."""
    X = _input_array(x)
    if f.A.shape[2] != X.shape[2]:
        raise DimMismatch("factor and data tube lengths differ")
    return objective_fourier(
        fft_mode3(X),
        fft_mode3(f.A),
        fft_mode3(f.R),
        f.config.get("lambda_A", 0.0),
        f.config.get("lambda_R", 0.0),
    )


def fit(x, method, cfg):
    """Dispatch on ``method``; t-SVD uses only ``cfg.rank``."""
    if method == "toffee":
        return toffee_fit(x, cfg)
    if method == "rescal":
        return rescal_fit(x, cfg)
    if method == "tsvd":
        return tsvd(x, cfg.rank)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


__all__ = [
    "Factorization",
    "ToffeeConfig",
    "fit",
    "objective",
    "reconstruct",
    "rescal_fit",
    "toffee_fit",
    "toffee_objective_fourier",
    "tsvd",
    "update_A_slice",
    "update_R_slice",
]
