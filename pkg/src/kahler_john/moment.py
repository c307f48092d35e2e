"""SU(m) moment map on Pⁿ, contact sets and convex-hull optimality certificates.

The moment map is ``mu(x) = x x^† - I/m`` for a unit representative ``x``,
paired with ``X`` in su(m) through ``<P, X> = -i tr(P X)``.  An extremal
potential is certified by exhibiting probability weights on its contact
points whose weighted moment images average to zero.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

from ._linalg import HERMITIAN_TOL, ctranspose, su_basis, su_coords
from .projective import ProjPoint, as_coords


class MomentMatrix:
    """Traceless Hermitian matrix standing for an element of su(m)*."""

    def __init__(self, P):
        P = np.asarray(P, dtype=complex)
        if np.abs(P - ctranspose(P)).max() > HERMITIAN_TOL:
            raise ValueError("moment matrix must be Hermitian")
        if abs(np.trace(P)) > HERMITIAN_TOL:
            raise ValueError("moment matrix must be traceless")
        self.P = P

    def pair(self, X):
        return pairing(self.P, X)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.P, dtype=dtype)


def moments(X):
    """Vectorized moment map: ``(N, m)`` points to ``(N, m, m)`` matrices."""
    X = as_coords(X)
    m = X.shape[1]
    return np.einsum("ni,nj->nij", X, X.conj()) - np.eye(m) / m


def moment(x):
    """Moment image of a single point."""
    return MomentMatrix(moments(x)[0])


def pairing(P, X):
    """``<P, X> = -i tr(P X)``; real for Hermitian ``P`` and skew-Hermitian ``X``."""
    return (-1j * np.einsum("...ij,ji->...", np.asarray(P), np.asarray(X))).real


def check_su(X, tol=1e-10):
    X = np.asarray(X, dtype=complex)
    if np.abs(X + ctranspose(X)).max() > tol or abs(np.trace(X)) > tol:
        raise ValueError("X must be skew-Hermitian and traceless")
    return X


def hamiltonian_h(X, x):
    """Hamiltonian ``h_X = -2 <mu, X>``; for ``X = iD`` this is ``-2 x^† D x``.

    Returns a float for a single point and an ``(N,)`` array otherwise.
    """
    X = check_su(X)
    Y = as_coords(x)
    val = -2.0 * (-1j * np.einsum("ni,ij,nj->n", Y.conj(), X, Y)).real
    return float(val[0]) if isinstance(x, ProjPoint) else val


def _values(f, X):
    if callable(f):
        return np.asarray(f(X), dtype=float).reshape(-1)
    return np.asarray(f, dtype=float).reshape(-1)


def contact_set(u, v0, grid, problem="min", eps_rel=1e-4):
    """Indices of grid points where ``u`` touches the barrier ``v0``.

    ``u`` and ``v0`` are callbacks on point arrays or precomputed value
    arrays.  For the min problem ``u`` must lie above ``v0`` and the contact
    set is ``{u - v0 <= eps_abs}``; for the max problem the roles flip.
    ``eps_abs = eps_rel * (1 + max|v0|)``.
    """
    X = grid.points if hasattr(grid, "points") else as_coords(grid)
    uu, vv = _values(u, X), _values(v0, X)
    if not (np.all(np.isfinite(uu)) and np.all(np.isfinite(vv))):
        raise ValueError("non-finite potential or barrier value on the grid")
    eps_abs = eps_rel * (1.0 + np.max(np.abs(vv)))
    if problem == "min":
        d = uu - vv
    elif problem == "max":
        d = vv - uu
    else:
        raise ValueError(f"unknown problem {problem!r}")
    if d.min() < -eps_abs:
        raise ValueError(f"potential violates the barrier by {-d.min():.3e} > {eps_abs:.3e}")
    idx = np.flatnonzero(d <= eps_abs)
    if idx.size == 0:
        raise ValueError("no contact within tolerance")
    return idx


@dataclass
class Certificate:
    """Probability weights on contact points whose moment images average to ~0.

    ``points`` are the contact points before the transformation ``gamma``;
    ``weights`` align with ``points``.  ``support`` lists the positions with
    non-negligible weight.
    """

    indices: np.ndarray
    points: np.ndarray
    weights: np.ndarray
    residual: float
    tol: float
    gap: float = 0.0
    iterations: int = 0
    converged: bool = True
    diagnostics: dict = field(default_factory=dict)

    @property
    def verdict(self):
        return "pass" if self.residual <= self.tol else "fail"

    @property
    def passed(self):
        return self.verdict == "pass"

    @property
    def support(self):
        return np.flatnonzero(self.weights > 1e-14)

    def to_json(self):
        s = self.support
        return {
            "verdict": self.verdict,
            "residual": float(self.residual),
            "tolerance": float(self.tol),
            "gap": float(self.gap),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "contact_count": int(len(self.indices)),
            "support": {
                "indices": [int(i) for i in np.asarray(self.indices)[s]],
                "points": [[[z.real, z.imag] for z in p] for p in self.points[s].tolist()],
                "weights": self.weights[s].tolist(),
            },
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_json(cls, doc):
        sup = doc["support"]
        pts = np.asarray(sup["points"], dtype=float)
        pts = pts[..., 0] + 1j * pts[..., 1]
        return cls(np.asarray(sup["indices"], dtype=int), pts,
                   np.asarray(sup["weights"], dtype=float), doc["residual"],
                   doc["tolerance"], doc.get("gap", 0.0), doc.get("iterations", 0),
                   doc.get("converged", True), doc.get("diagnostics", {}))


def _nnls_simplex(B):
    """Simplex-constrained least squares via NNLS with a weighted sum-to-one row."""
    d, N = B.shape
    rho = 1e3 * (1.0 + np.abs(B).max())
    M = np.vstack([B, np.full((1, N), rho)])
    rhs = np.zeros(d + 1)
    rhs[-1] = rho
    try:
        w, _ = nnls(M, rhs, maxiter=50 * (N + d))
    except RuntimeError:
        w = np.zeros(N)
    if w.sum() <= 0:
        w = np.zeros(N)
        w[np.argmin(np.linalg.norm(B, axis=0))] = 1.0
    return w / w.sum()


def _simplex_min_norm(B, max_iter=10_000, gap_tol=1e-10):
    """Minimum-norm point of the convex hull of the columns of ``B``.

    Warm start from NNLS with a heavily weighted sum-to-one row, then
    pairwise Frank-Wolfe with exact line search until the duality gap
    ``<Bw, Bw - b_i>`` drops below ``gap_tol``.
    Returns ``(w, gap, iterations)``.
    """
    d, N = B.shape
    if N > 256:
        cols = np.unique(np.r_[np.argmin(B, axis=1), np.argmax(B, axis=1),
                               np.linspace(0, N - 1, 64).astype(int)])
        for _ in range(64):
            wc = _nnls_simplex(B[:, cols])
            p = B[:, cols] @ wc
            grad = B.T @ p
            if p @ p - grad.min() <= gap_tol:
                break
            new = np.setdiff1d(np.argsort(grad, kind="stable")[:32], cols)
            if new.size == 0:
                break
            cols = np.union1d(cols, new)
        w = np.zeros(N)
        w[cols] = wc
    else:
        w = _nnls_simplex(B)
    p = B @ w
    gap = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        grad = B.T @ p
        s = int(np.argmin(grad))
        active = np.flatnonzero(w > 0)
        a = active[np.argmax(grad[active])]
        gap = float(p @ p - grad[s])
        if gap <= gap_tol:
            break
        dvec = B[:, s] - B[:, a]
        dd = float(dvec @ dvec)
        if dd <= 0:
            break
        step = min(max(-(p @ dvec) / dd, 0.0), w[a])
        if step == 0.0:
            break
        w[s] += step
        w[a] -= step
        if w[a] < 1e-300:
            w[a] = 0.0
        p = B @ w
    return w, gap, it


def certificate(contact, gamma=None, tol=1e-6, indices=None, prior=None,
                max_iter=10_000, gap_tol=1e-10):
    """Weights on ``contact`` minimizing ``|sum_i w_i mu(gamma x_i)|_F``.

    Parameters
    ----------
    contact : array (N, m) or list of ProjPoint
        Contact points.
    gamma : array (m, m), optional
        Group element applied to the points before the moment map.
        For ``u = log(x^† A x)`` use ``gamma = A^{1/2}``.
    tol : float
        Pass threshold on the residual norm.
    indices : array of int, optional
        Grid indices of the contact points, carried into the report.
    prior : array (N,), optional
        Candidate weights (e.g. quadrature weights) tried, together with
        uniform weights, before the sparse minimum-norm solve; the first
        one with residual below ``tol / 2`` is kept.

    Returns
    -------
    Certificate
    """
    X = as_coords(contact)
    N, m = X.shape
    if N == 0:
        raise ValueError("contact set is empty")
    Y = X if gamma is None else as_coords(X @ np.asarray(gamma, dtype=complex).T)
    B = su_coords(moments(Y), su_basis(m)).T
    for cand in ([] if prior is None else [np.asarray(prior, dtype=float)]) + [np.ones(N)]:
        cand = cand / cand.sum()
        residual = float(np.linalg.norm(B @ cand))
        if residual <= 0.5 * tol:
            if indices is None:
                indices = np.arange(N)
            return Certificate(np.asarray(indices), X, cand, residual, float(tol))
    w, gap, it = _simplex_min_norm(B, max_iter=max_iter, gap_tol=gap_tol)
    residual = float(np.linalg.norm(B @ w))
    converged = gap <= gap_tol or residual <= 0.1 * tol
    diag = {} if converged else {"message": f"iteration cap reached, duality gap {gap:.3e}"}
    if indices is None:
        indices = np.arange(N)
    return Certificate(np.asarray(indices), X, w, residual, float(tol), gap, it, converged, diag)


@dataclass
class UniquenessReport:
    """Outcome of the nondegeneracy test for ``X = i diag(a)``."""

    a: np.ndarray
    zero_indices: list
    witness: np.ndarray | None
    min_pairing: float | None
    verdict: str

    @property
    def nx_empty(self):
        return not self.zero_indices

    def to_json(self):
        return {
            "spectrum": self.a.tolist(),
            "N_X": {"empty": self.nx_empty, "span_indices": self.zero_indices},
            "witness": None if self.witness is None else
            {"diag_im": np.diag(self.witness).imag.tolist()},
            "min_pairing": self.min_pairing,
            "verdict": self.verdict,
        }


def uniqueness_check(a, samples=256, seed=0):
    """Nondegeneracy of the moment map on the second-order zero locus of ``X``.

    For ``X = i diag(a)`` the locus is the projectivized span of the
    coordinate vectors ``e_j`` with ``a_j = 0``.  When it is nonempty a
    witness ``Y = i diag(y)`` with ``y_j = -n`` at one index where
    ``a_j != 0`` and ``y_k = 1`` elsewhere pairs positively with every point
    of the locus.
    """
    a = np.asarray(a, dtype=float).reshape(-1)
    m = a.size
    scale = np.max(np.abs(a)) if m else 0.0
    if m < 2 or scale == 0.0:
        raise ValueError("X must be nonzero")
    if abs(a.sum()) > 1e-10 * scale:
        raise ValueError("spectrum must sum to zero")
    zero = np.abs(a) <= 1e-12 * scale
    zidx = [int(j) for j in np.flatnonzero(zero)]
    if not zidx:
        return UniquenessReport(a, [], None, None, "N_X-empty")
    j0 = int(np.flatnonzero(~zero)[0])
    y = np.ones(m)
    y[j0] = -(m - 1)
    Y = 1j * np.diag(y)
    rng = np.random.default_rng(seed)
    Z = np.zeros((samples + len(zidx), m), dtype=complex)
    Z[:samples, zidx] = rng.normal(size=(samples, len(zidx))) + 1j * rng.normal(size=(samples, len(zidx)))
    Z[samples + np.arange(len(zidx)), zidx] = 1.0
    vals = pairing(moments(Z), Y)
    mp = float(vals.min())
    return UniquenessReport(a, zidx, Y, mp, "holds" if mp > 0 else "fails")
