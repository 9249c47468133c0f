"""Dense third-order tensor algebra under the circular-convolution t-product.

A real tensor is a float64 ``ndarray`` of shape ``(n1, n2, n3)``; the third
axis is time. Its mode-3 Fourier image (a "Fourier stack") is a complex
``ndarray`` of shape ``(n3, n1, n2)`` so that each frequency slice is a
contiguous matrix and slice-wise products are a single batched ``matmul``.

The forward DFT is unnormalized and the inverse carries the ``1/n3`` factor,
so ``||x||_F^2 == sum_k ||F_k||_F^2 / n3``.
"""

import numpy as np

from .errors import DimMismatch, SymmetryViolation

ROUND_TRIP_TOL = 1e-10
SYMMETRY_TRIP = 1e-6


def as_tensor3(x, name="tensor"):
    """Return ``x`` as a float64 array of rank three, validating finiteness."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 3:
        raise DimMismatch(f"{name} must be third-order, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def fft_mode3(x):
    """Unnormalized DFT of every mode-3 fiber; returns an ``(n3, n1, n2)`` stack."""
    x = as_tensor3(x)
    # pocketfft handles any length, prime sizes included
    return np.ascontiguousarray(np.moveaxis(np.fft.fft(x, axis=2), 2, 0))


def symmetry_defect(f):
    """Largest relative gap between slice k and conj(slice n3-k)."""
    f = np.asarray(f)
    n3 = f.shape[0]
    scale = max(np.abs(f).max(initial=0.0), np.finfo(float).tiny)
    mirror = np.conj(f[(-np.arange(n3)) % n3])
    return np.abs(f - mirror).max(initial=0.0) / scale


def ifft_mode3(f):
    """Inverse of :func:`fft_mode3`.

    Raises
    ------
    SymmetryViolation
        If the inverse has an imaginary part larger than ``1e-6`` relative to
        the Frobenius norm of its real part. That only happens when the stack
        was not the image of a real tensor, i.e. an upstream solver broke the
        conjugate symmetry.
    """
    f = np.asarray(f)
    if f.ndim != 3:
        raise DimMismatch(f"Fourier stack must be third-order, got shape {f.shape}")
    z = np.fft.ifft(np.moveaxis(f, 0, 2), axis=2)
    re, im = z.real, z.imag
    im_norm = np.linalg.norm(im)
    if im_norm > 0.0:
        re_norm = np.linalg.norm(re)
        if re_norm == 0.0 or im_norm > SYMMETRY_TRIP * re_norm:
            raise SymmetryViolation(
                f"imaginary residue {im_norm:.3e} against real norm {re_norm:.3e}"
            )
    return np.ascontiguousarray(re)


def half_spectrum(n3):
    """Number of independent frequencies of a real signal of length ``n3``."""
    return n3 // 2 + 1


def mirror_spectrum(half, n3):
    """Rebuild a full conjugate-symmetric stack from its first half.

    ``half`` holds frequencies ``0 .. n3 // 2``; the rest are conjugates.
    """
    half = np.asarray(half)
    full = np.empty((n3,) + half.shape[1:], dtype=np.complex128)
    h = half_spectrum(n3)
    full[:h] = half[:h]
    for k in range(h, n3):
        full[k] = np.conj(half[n3 - k])
    return full


def self_conjugate(n3):
    """Frequencies whose slice is real for a real signal: 0 and, for even n3, n3/2."""
    return (0, n3 // 2) if n3 % 2 == 0 and n3 > 1 else (0,)


def _check_product_dims(a, b):
    if a.shape[1] != b.shape[0] or a.shape[2] != b.shape[2]:
        raise DimMismatch(f"cannot t-multiply {a.shape} by {b.shape}")


def tproduct(a, b):
    """t-product ``a * b`` computed slice-wise in the Fourier domain."""
    a = as_tensor3(a, "a")
    b = as_tensor3(b, "b")
    _check_product_dims(a, b)
    return ifft_mode3(np.matmul(fft_mode3(a), fft_mode3(b)))


def tproduct_direct(a, b):
    """t-product by literal summation of circular convolutions of tubes.

    O(n1 n2 n4 n3^2) Python-level work; meant as a test oracle for small sizes.
    """
    a = as_tensor3(a, "a")
    b = as_tensor3(b, "b")
    _check_product_dims(a, b)
    n1, n2, n3 = a.shape
    n4 = b.shape[1]
    c = np.zeros((n1, n4, n3))
    for i in range(n1):
        for j in range(n4):
            for k in range(n2):
                u = a[i, k]
                v = b[k, j]
                for t in range(n3):
                    acc = 0.0
                    for s in range(n3):
                        acc += u[s] * v[(t - s) % n3]
                    c[i, j, t] += acc
    return c


def ttranspose(a):
    """Transpose every frontal slice and reverse the order of slices 2..n3."""
    a = as_tensor3(a)
    out = np.transpose(a, (1, 0, 2))
    order = (-np.arange(a.shape[2])) % a.shape[2]
    return np.ascontiguousarray(out[:, :, order])


def identity_tensor(n, n3):
    """Identity for the t-product: first frontal slice ``I``, others zero."""
    eye = np.zeros((n, n, n3))
    eye[:, :, 0] = np.eye(n)
    return eye


def frob_norm_sq(a):
    a = as_tensor3(a)
    return float(np.sum(a * a))


def frob_norm_sq_fourier(f):
    """Squared Frobenius norm of the real tensor whose Fourier stack is ``f``."""
    f = np.asarray(f)
    return float(np.sum(np.abs(f) ** 2) / f.shape[0])
