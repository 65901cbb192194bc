"""su(2)/SU(2) matrix helpers, vectorized over leading batch axes.

Conventions: su(2) elements are anti-hermitian traceless 2x2 complex
matrices X = i (v . sigma) with v real; the Frobenius inner product
<X, Y> = Re tr(X Y^dagger) is used everywhere (positive definite,
equal to -Re tr(XY) on anti-hermitian matrices).
"""

from __future__ import annotations

import numpy as np

PAULI = np.array(
    [
        [[0.0, 1.0], [1.0, 0.0]],
        [[0.0, -1.0j], [1.0j, 0.0]],
        [[1.0, 0.0], [0.0, -1.0]],
    ],
    dtype=complex,
)

EYE2 = np.eye(2, dtype=complex)


def from_vector(v):
    """Real vector(s) (..., 3) -> anti-hermitian traceless i(v.sigma)."""
    v = np.asarray(v, dtype=float)
    return 1j * np.einsum("...k,kab->...ab", v, PAULI)


def to_vector(X):
    """Inverse of from_vector; takes the i(v.sigma) part of X."""
    X = np.asarray(X, dtype=complex)
    # tr(X sigma_k) = 2 i v_k for X = i v.sigma
    tr = np.einsum("...ab,kba->...k", X, PAULI)
    return (tr / 2j).real


def frob(X):
    """Frobenius norm over the trailing 2x2 axes."""
    X = np.asarray(X)
    return np.sqrt(np.sum(np.abs(X) ** 2, axis=(-2, -1)))


def inner(X, Y):
    """Re tr(X Y^dagger), batched."""
    return np.einsum("...ab,...ab->...", X, np.conj(Y)).real


def expm_su2(X):
    """exp(X) for anti-hermitian traceless X, closed form, batched.

    X = i t (n.sigma) with |n| = 1 gives exp(X) = cos(t) I + sin(t)/t X.
    """
    v = to_vector(X)
    t = np.linalg.norm(v, axis=-1)
    # sin(t)/t via sinc, stable at t = 0
    s = np.sinc(t / np.pi)
    c = np.cos(t)
    return c[..., None, None] * EYE2 + s[..., None, None] * from_vector(v)


def log_su2(U):
    """Rotation vector v (|v| in [0, pi]) with U = exp(i v.sigma), batched.

    For U = cos(t) I + i sin(t) (n.sigma) returns t*n; at t = pi the axis
    is still recovered from the anti-hermitian part unless it vanishes.
    """
    U = np.asarray(U, dtype=complex)
    c = np.clip(np.trace(U, axis1=-2, axis2=-1).real / 2.0, -1.0, 1.0)
    A = (U - np.conj(np.swapaxes(U, -1, -2))) / 2.0
    sn = to_vector(A)  # sin(t) * n
    s = np.linalg.norm(sn, axis=-1)
    t = np.arctan2(s, c)
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(s > 0.0, t / np.where(s > 0.0, s, 1.0), 1.0)
    return scale[..., None] * sn


def project_su2(M):
    """Nearest SU(2) element (polar projection, det normalized), batched."""
    M = np.asarray(M, dtype=complex)
    u, _, vh = np.linalg.svd(M)
    U = u @ vh
    det = U[..., 0, 0] * U[..., 1, 1] - U[..., 0, 1] * U[..., 1, 0]
    # det has modulus 1; divide by its principal square root
    phase = np.exp(0.5j * np.angle(det))
    return U / phase[..., None, None]


def su2_defect(U):
    """max of unitarity and determinant defects; 0 for exact SU(2)."""
    U = np.asarray(U, dtype=complex)
    uni = frob(U @ np.conj(np.swapaxes(U, -1, -2)) - EYE2)
    det = U[..., 0, 0] * U[..., 1, 1] - U[..., 0, 1] * U[..., 1, 0]
    return np.maximum(uni, np.abs(det - 1.0))


def algebra_defect(X, traceless=True):
    """Deviation of X from anti-hermitian (and traceless), batched."""
    X = np.asarray(X, dtype=complex)
    ah = frob(X + np.conj(np.swapaxes(X, -1, -2)))
    if not traceless:
        return ah
    tr = np.abs(np.trace(X, axis1=-2, axis2=-1))
    return np.maximum(ah, tr)


def random_su2_algebra(rng, shape=(), scale=1.0):
    """Random su(2) element(s) with normal coefficients."""
    v = rng.normal(scale=scale, size=tuple(shape) + (3,))
    return from_vector(v)


def random_su2(rng, shape=()):
    return expm_su2(random_su2_algebra(rng, shape))
