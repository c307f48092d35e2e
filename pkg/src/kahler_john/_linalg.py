"""Hermitian matrix functions and the su(m) coordinate basis."""

import numpy as np

HERMITIAN_TOL = 1e-12


def ctranspose(X):
    """Conjugate transpose over the last two axes."""
    return np.swapaxes(np.conj(X), -2, -1)


def hermitize(X):
    return 0.5 * (X + ctranspose(X))


def _spectral(X, fn):
    X = np.asarray(X, dtype=complex)
    if not np.all(np.isfinite(X)):
        raise ValueError("matrix has non-finite entries")
    w, V = np.linalg.eigh(hermitize(X))
    return (V * fn(w)[..., None, :]) @ ctranspose(V)


def sqrtm_h(X):
    """Square root of a Hermitian positive-definite matrix."""
    return _spectral(X, np.sqrt)


def invsqrtm_h(X):
    return _spectral(X, lambda w: 1.0 / np.sqrt(w))


def logm_h(X):
    """Logarithm of a Hermitian positive-definite matrix."""
    return _spectral(X, np.log)


def expm_h(X):
    """Exponential of a Hermitian matrix."""
    return _spectral(X, np.exp)


def logdet_h(X):
    sign, val = np.linalg.slogdet(np.asarray(X, dtype=complex))
    return float(val)


def su_basis(m):
    """Orthonormal basis of traceless Hermitian m x m matrices.

    Orthonormal for the real pairing ``tr(E_a E_b)``; generalized Gell-Mann
    matrices scaled to unit Frobenius norm.  Length ``m**2 - 1``.
    """
    basis = []
    for j in range(m):
        for k in range(j + 1, m):
            E = np.zeros((m, m), dtype=complex)
            E[j, k] = E[k, j] = 1 / np.sqrt(2)
            basis.append(E)
            E = np.zeros((m, m), dtype=complex)
            E[j, k] = -1j / np.sqrt(2)
            E[k, j] = 1j / np.sqrt(2)
            basis.append(E)
    for l in range(1, m):
        d = np.zeros(m)
        d[:l] = 1.0
        d[l] = -l
        basis.append(np.diag(d / np.linalg.norm(d)).astype(complex))
    return np.array(basis)


def su_coords(P, basis):
    """Real coordinates of traceless Hermitian ``P`` (..., m, m) in ``basis``."""
    return np.einsum("aij,...ji->...a", basis, P).real


def su_matrix(h, basis):
    return np.einsum("a,aij->ij", np.asarray(h, dtype=float), basis)


def hermitian_to_json(A):
    A = np.asarray(A, dtype=complex)
    return {"re": A.real.tolist(), "im": A.imag.tolist()}


def hermitian_from_json(doc):
    return np.asarray(doc["re"], dtype=float) + 1j * np.asarray(doc["im"], dtype=float)
