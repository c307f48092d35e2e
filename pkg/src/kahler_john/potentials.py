"""Admissible potentials ``u_A(x) = log(x^† A x)``, their energy and geodesics.

The group acts on points, so ``g`` in GL(m) yields the potential of
``A = g^† g`` and the Monge-Ampère energy is ``(1/m) log det A``.  The
quadrature route :func:`energy_quadrature` integrates the variation of
energy along the straight path ``t u`` and is independent of that closed
form.
"""

import warnings

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import expm

from ._linalg import (HERMITIAN_TOL, ctranspose, expm_h, hermitian_from_json,
                      hermitian_to_json, hermitize, invsqrtm_h, logm_h, sqrtm_h)
from .moment import check_su, hamiltonian_h
from .projective import (ProjPoint, as_coords, best_chart, fd_hermitian_form,
                         from_chart, fs_metric, integrate)

COND_MAX = 1e12


class GroupElement:
    """Invertible complex matrix acting on homogeneous coordinates."""

    def __init__(self, matrix):
        g = np.array(matrix, dtype=complex)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError("group element must be a square matrix")
        if not np.all(np.isfinite(g)):
            raise ValueError("group element has non-finite entries")
        sv = np.linalg.svd(g, compute_uv=False)
        if sv[-1] == 0 or sv[0] / sv[-1] > COND_MAX:
            raise ValueError("group element is singular (condition number above 1e12)")
        g.setflags(write=False)
        self.matrix = g

    @property
    def m(self):
        return self.matrix.shape[0]

    def gram(self):
        """``A = g^† g`` as a :class:`HermitianPD`."""
        return HermitianPD(ctranspose(self.matrix) @ self.matrix, check=False)

    def act(self, x):
        """Image ``g x`` as unit rows."""
        return as_coords(as_coords(x) @ self.matrix.T)


class HermitianPD:
    """Hermitian positive-definite matrix ``A`` parametrizing ``u_A``."""

    def __init__(self, matrix, check=True):
        A = np.array(matrix, dtype=complex)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("matrix must be square")
        if not np.all(np.isfinite(A)):
            raise ValueError("matrix has non-finite entries")
        if check and np.abs(A - ctranspose(A)).max() > HERMITIAN_TOL * max(1.0, np.abs(A).max()):
            raise ValueError("matrix is not Hermitian")
        A = hermitize(A)
        w = np.linalg.eigvalsh(A)
        if w[0] <= 0:
            raise ValueError("matrix is not positive definite")
        if w[-1] / w[0] > COND_MAX:
            raise ValueError("condition number above 1e12")
        A.setflags(write=False)
        self.matrix = A
        self.eigenvalues = w

    @property
    def m(self):
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    def logdet(self):
        return float(np.sum(np.log(self.eigenvalues)))

    def sqrt(self):
        return sqrtm_h(self.matrix)

    def scaled(self, c):
        """``e^c A``."""
        return HermitianPD(np.exp(c) * self.matrix, check=False)

    def normalized(self):
        """``(A / det(A)^(1/m), log det(A) / m)``: unit determinant part and scalar."""
        s = self.logdet() / self.m
        return HermitianPD(self.matrix * np.exp(-s), check=False), s

    def to_json(self):
        return hermitian_to_json(self.matrix)

    @classmethod
    def from_json(cls, doc):
        return cls(hermitian_from_json(doc))


def as_hpd(A):
    return A if isinstance(A, HermitianPD) else HermitianPD(A)


def log_quadratic(A, X):
    """``log(x^† A x)`` for unit rows ``x`` of ``X``."""
    X = as_coords(X)
    return np.log(np.einsum("ni,ij,nj->n", X.conj(), np.asarray(A), X).real)


class AdmissiblePotential:
    """``u(x) = log(x^† A x) + shift`` evaluated on arrays of points."""

    def __init__(self, A, shift=0.0):
        self.A = as_hpd(A)
        self.shift = float(shift)

    def __call__(self, X):
        vals = log_quadratic(self.A.matrix, X) + self.shift
        return float(vals[0]) if isinstance(X, ProjPoint) else vals

    def with_shift(self, c):
        return AdmissiblePotential(self.A, self.shift + c)

    def as_scaled_matrix(self):
        """Single matrix ``e^shift A`` giving the same function."""
        return self.A.scaled(self.shift)

    def energy(self):
        return energy(self.A) + self.shift

    def kahler_form(self, X, step=1e-3):
        """FD chart matrices of ``omega + i ddbar u`` at unit rows ``X``."""
        return chart_form(self, X, step)


class GridFunction:
    """Values of a function sampled on a quadrature grid."""

    def __init__(self, grid, values):
        v = np.asarray(values, dtype=float).reshape(-1)
        if v.shape[0] != len(grid):
            raise ValueError("values must match the grid length")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function has non-finite values")
        self.grid = grid
        self.values = v

    @classmethod
    def sample(cls, grid, f):
        return cls(grid, f(grid.points))

    def integral(self):
        return float(np.dot(self.grid.weights, self.values))


def potential_of(g):
    """Admissible potential of a group element, ``u = log |g x|^2``."""
    g = g if isinstance(g, GroupElement) else GroupElement(g)
    return AdmissiblePotential(g.gram())


def energy(A):
    """Closed-form Monge-Ampère energy ``(1/m) log det A`` of ``u_A``."""
    A = as_hpd(A)
    return A.logdet() / A.m


def chart_form(u, X, step=1e-3):
    """Chart Hermitian matrices of ``omega + i ddbar u`` at unit rows ``X``.

    Uses the best affine chart at each point; returns ``(G, H)`` with ``G``
    the analytic Fubini-Study part and ``H`` the FD Hessian of ``u``.
    """
    X = as_coords(X)
    j, others, xi = best_chart(X)
    H = fd_hermitian_form(lambda w: u(from_chart(j, others, w)), xi, step)
    return fs_metric(xi), H


def energy_quadrature(u, grid, steps=16, step=1e-4, return_parts=False):
    """Energy of ``u`` by integrating along the path ``t u``, ``0 <= t <= 1``.

    ``E(u) = int_0^1 int u (omega + t i ddbar u)^n dt`` where the volume
    density relative to ``omega^n`` is ``det(I + t G^{-1} H)`` with ``G`` the
    chart Fubini-Study matrix and ``H`` the FD complex Hessian of ``u``.

    Parameters
    ----------
    u : callable
        Potential on ``(N, m)`` arrays of unit rows.
    grid : QuadratureGrid
    steps : int
        Gauss-Legendre nodes in ``t``.
    step : float
        Finite-difference step in chart coordinates.

    Raises
    ------
    ValueError
        "path left ℋ" when ``omega + t i ddbar u`` fails to be positive at
        some node.
    """
    X = grid.points
    G, H = chart_form(u, X, step)
    uv = np.asarray(u(X), dtype=float)
    Ginv = np.linalg.inv(G)
    M = Ginv @ H
    tn, tw = leggauss(steps)
    tn = 0.5 * (tn + 1.0)
    tw = 0.5 * tw
    n = X.shape[1] - 1
    vals = []
    for t in np.concatenate([tn, [1.0]]):
        K = G + t * H
        lam = np.linalg.eigvalsh(hermitize(K))
        if np.any(lam[:, 0] <= 0):
            i = int(np.argmin(lam[:, 0]))
            raise ValueError(f"path left ℋ at t={t:.3f}, point {X[i].tolist()}")
        dens = np.linalg.det(np.eye(n) + t * M).real
        vals.append(integrate(grid, lambda _: uv * dens))
    E = float(np.dot(tw, vals[:-1]))
    if return_parts:
        return E, np.array(vals[:-1]), tn
    return E


# -- geodesics -------------------------------------------------------------

def geodesic_between(A0, A1):
    """Tangent ``H = log(A0^{-1/2} A1 A0^{-1/2})`` of the geodesic from A0 to A1."""
    A0, A1 = np.asarray(as_hpd(A0)), np.asarray(as_hpd(A1))
    R = invsqrtm_h(A0)
    return hermitize(logm_h(R @ A1 @ R))


def geodesic_point(A0, H, t):
    """``A(t) = A0^{1/2} exp(t H) A0^{1/2}``."""
    S = sqrtm_h(np.asarray(as_hpd(A0)))
    return HermitianPD(S @ expm_h(t * np.asarray(H)) @ S, check=False)


# -- Hamiltonian flows -----------------------------------------------------

def hamiltonian_flow_potential(X, t, x, steps=48):
    """``int_0^t h_X(g_tau x) dtau`` with ``g_tau = exp(i tau X)``.

    Gauss-Legendre in ``tau``.  For ``X = iD`` the value equals
    ``log(x^† exp(-2tD) x)``.
    """
    X = check_su(X)
    x = as_coords(x)
    if t == 0:
        return np.zeros(x.shape[0]) if x.shape[0] > 1 else 0.0
    D = hermitize(-1j * X)
    nodes, wts = leggauss(steps)
    taus = 0.5 * t * (nodes + 1.0)
    total = np.zeros(x.shape[0])
    for tau, w in zip(taus, wts):
        y = x @ expm_h(-tau * D).T
        total += 0.5 * t * w * hamiltonian_h(X, y)
    return float(total[0]) if total.size == 1 else total


def hamiltonian_bounds(A, X):
    """Two-sided Hamiltonian bounds for a unit-determinant ``A``.

    With ``D = -(1/2) log A`` and ``Xi = iD`` returns
    ``(h(x), u_A(x), h(exp(i Xi) x))`` at the unit rows ``X``; the first is
    a lower bound and the last an upper bound for ``u_A``.
    """
    A = np.asarray(as_hpd(A))
    if abs(np.log(np.linalg.det(A).real)) > 1e-10:
        raise ValueError("bounds are stated for det A = 1")
    D = -0.5 * logm_h(A)
    Xi = 1j * D
    X = as_coords(X)
    lower = hamiltonian_h(Xi, X)
    upper = hamiltonian_h(Xi, X @ expm_h(-D).T)
    return lower, log_quadratic(A, X), upper


# -- group cocycle ---------------------------------------------------------

def cocycle_defect(g1, g2, X):
    """Pointwise ``u_{g1 g2} (x) - u_{g2}(x) - u_{g1}(g2 x)``; zero identically."""
    g1 = np.asarray(g1, dtype=complex)
    g2 = np.asarray(g2, dtype=complex)
    X = as_coords(X)
    g12 = g1 @ g2
    u12 = log_quadratic(ctranspose(g12) @ g12, X)
    u2 = log_quadratic(ctranspose(g2) @ g2, X)
    u1 = log_quadratic(ctranspose(g1) @ g1, X @ g2.T)
    return u12 - u2 - u1


# -- complex Monge-Ampère on C x Pⁿ ----------------------------------------

def _orbit_potential(g, Zs, s, Y):
    """``log |exp(sum_a s_a Z_a) g y|^2`` for chart vectors ``Y``; batched over ``s``."""
    E = expm(np.einsum("...a,aij->...ij", s, Zs))
    V = np.einsum("...ij,jk,...k->...i", E, g, Y)
    return np.log(np.sum(np.abs(V) ** 2, axis=-1))


def hcma_residual(g, Z, samples, step=1e-3, extra=None, return_all=False):
    """Degeneracy of ``pi^* omega + i ddbar Phi`` with ``Phi(s, x) = u`` of ``exp(sZ) g``.

    For each sample ``(s, x)`` the ``(n+1) x (n+1)`` coefficient matrix in
    the coordinates ``(s, xi)`` (best chart of ``x``) is assembled by finite
    differences and its determinant taken.  ``extra(s, X)`` is an optional
    perturbation added to ``Phi``.  Returns the max absolute determinant.
    """
    g = np.asarray(g.matrix if isinstance(g, GroupElement) else g, dtype=complex)
    Z = np.asarray(Z, dtype=complex)[None]
    dets = []
    skipped = 0
    for s0, x in samples:
        x = as_coords(x)
        j, others, xi = best_chart(x)

        def F(w):
            s = w[..., :1]
            xv = from_chart(j, others, w[..., 1:])
            Y = xv / xv[..., j[0]][..., None]
            val = _orbit_potential(g, Z, s, Y)
            if extra is not None:
                val = val + np.asarray(extra(s[..., 0], xv), dtype=float)
            return val

        w0 = np.concatenate([[complex(s0)], xi[0]])
        try:
            K = fd_hermitian_form(F, w0, step)
        except ValueError:
            skipped += 1
            warnings.warn(f"skipping degenerate sample s={s0}, x={x[0].tolist()}")
            continue
        dets.append(abs(np.linalg.det(K)))
    if not dets:
        raise ValueError("all samples were skipped")
    res = float(max(dets))
    return (res, np.array(dets)) if return_all else res


def orbit_hessian_defect(g, Zs, x, step=1e-3):
    """``i ddbar_s u(exp(s.Z) g)(x)`` minus the pulled-back form on orbit tangents.

    ``Zs`` is a list of complex directions; the result is the Frobenius norm
    of the difference of two ``k x k`` Hermitian matrices, ``k = len(Zs)``.
    """
    g = np.asarray(g.matrix if isinstance(g, GroupElement) else g, dtype=complex)
    Zs = np.asarray(Zs, dtype=complex)
    if Zs.ndim == 2:
        Zs = Zs[None]
    k = Zs.shape[0]
    x = as_coords(x)[0]
    L = fd_hermitian_form(lambda s: _orbit_potential(g, Zs, s, x), np.zeros(k), step)
    y = g @ x
    j, others, xi = best_chart(y[None])
    G = fs_metric(xi)[0]

    def chart_of(s):
        v = expm(np.einsum("a,aij->ij", s, Zs)) @ y
        return v[others[0]] / v[j[0]]

    T = np.empty((k, xi.shape[1]), dtype=complex)
    for a in range(k):
        e = np.zeros(k)
        e[a] = step
        T[a] = (chart_of(e) - chart_of(-e)) / (2 * step)
    pull = np.einsum("aj,jl,bl->ab", T, G, T.conj())
    return float(np.linalg.norm(L - pull))
