"""Points, quadrature and affine-chart calculus on complex projective space.

Every function that evaluates something on Pⁿ works on *arrays* of unit
homogeneous coordinates of shape ``(N, m)`` with ``m = n + 1``; a single
:class:`ProjPoint` is accepted wherever an array is and is promoted to
``(1, m)``.  Callbacks handed to :func:`integrate` and friends follow the
same convention: ``f(X) -> ndarray of shape (N,)``.

The Fubini-Study form is normalized to total volume 1 and has local
potential ``log(1 + |xi|^2)`` in every affine chart.
"""

import json
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_jacobi, eval_legendre
from scipy.stats import norm, qmc

UNIT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ProjPoint:
    """A point of Pⁿ stored by a unit-norm homogeneous representative."""

    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=complex).reshape(-1)
        if abs(np.linalg.norm(c) - 1.0) > UNIT_TOL:
            raise ValueError("ProjPoint coordinates must have unit norm; use normalize()")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def m(self):
        return self.coords.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)

    def same_point(self, other, tol=1e-10):
        """True when both represent the same line (phase-insensitive)."""
        return abs(abs(np.vdot(self.coords, other.coords)) - 1.0) <= tol


def normalize(v):
    """Return ``v / |v|`` as a :class:`ProjPoint`."""
    v = np.asarray(v, dtype=complex).reshape(-1)
    nrm = np.linalg.norm(v)
    if not np.isfinite(nrm) or nrm == 0.0:
        raise ValueError("not a projective point: zero vector")
    return ProjPoint(v / nrm)


def as_coords(x):
    """Promote a ProjPoint, a list of them, or an array to ``(N, m)`` unit rows."""
    if isinstance(x, ProjPoint):
        return x.coords[None, :]
    if isinstance(x, (list, tuple)) and x and isinstance(x[0], ProjPoint):
        return np.array([p.coords for p in x])
    X = np.atleast_2d(np.asarray(x, dtype=complex))
    nrm = np.linalg.norm(X, axis=-1, keepdims=True)
    if np.any(nrm == 0):
        raise ValueError("not a projective point: zero vector")
    return X / nrm


class QuadratureGrid:
    """Weighted sample of Pⁿ approximating the normalized Fubini-Study measure.

    ``points`` is an ``(N, m)`` array of unit rows and ``weights`` a positive
    ``(N,)`` array summing to one.  Both are read-only after construction.
    """

    def __init__(self, points, weights, kind="custom", meta=None):
        P = np.asarray(points, dtype=complex)
        w = np.asarray(weights, dtype=float)
        if P.ndim != 2 or w.shape != (P.shape[0],):
            raise ValueError("points must be (N, m) and weights (N,)")
        if np.any(w <= 0):
            raise ValueError("quadrature weights must be positive")
        P = P / np.linalg.norm(P, axis=1, keepdims=True)
        w = w / w.sum()
        P.setflags(write=False)
        w.setflags(write=False)
        self.points = P
        self.weights = w
        self.kind = kind
        self.meta = dict(meta or {})

    def __len__(self):
        return self.points.shape[0]

    @property
    def m(self):
        return self.points.shape[1]

    @property
    def n(self):
        return self.m - 1

    def projpoints(self):
        return [ProjPoint(p) for p in self.points]

    def to_json(self):
        return {
            "points": [[[z.real, z.imag] for z in p] for p in self.points.tolist()],
            "weights": self.weights.tolist(),
        }

    @classmethod
    def from_json(cls, doc):
        if isinstance(doc, str):
            doc = json.loads(doc)
        arr = np.asarray(doc["points"], dtype=float)
        return cls(arr[..., 0] + 1j * arr[..., 1], doc["weights"], kind="loaded")


def _gauss_lobatto(n):
    """Gauss-Lobatto nodes and weights on [-1, 1] with ``n`` nodes."""
    inner, _ = roots_jacobi(n - 2, 1.0, 1.0)
    x = np.concatenate([[-1.0], inner, [1.0]])
    w = 2.0 / (n * (n - 1) * eval_legendre(n - 1, x) ** 2)
    return x, w


def grid_p1(resolution=64):
    """Deterministic product grid on P¹.

    Under the normalized Fubini-Study measure ``s = |x0|^2`` is uniform on
    [0, 1] and the relative phase is uniform, so the grid is Gauss-Lobatto
    in ``s`` (``resolution`` nodes, the two end nodes being the poles
    ``(0:1)`` and ``(1:0)``) times ``2 * resolution`` equispaced phases.
    """
    if int(resolution) != resolution or resolution < 8:
        raise ValueError("resolution must be an integer >= 8")
    resolution = int(resolution)
    x, w = _gauss_lobatto(resolution)
    s = 0.5 * (x + 1.0)
    w = 0.5 * w
    nphi = 2 * resolution
    phi = 2 * np.pi * (np.arange(nphi) + 0.5) / nphi
    pts = [np.array([[0.0, 1.0]], dtype=complex)]
    wts = [np.array([w[0]])]
    for sk, wk in zip(s[1:-1], w[1:-1]):
        ring = np.empty((nphi, 2), dtype=complex)
        ring[:, 0] = np.sqrt(sk)
        ring[:, 1] = np.sqrt(1.0 - sk) * np.exp(1j * phi)
        pts.append(ring)
        wts.append(np.full(nphi, wk / nphi))
    pts.append(np.array([[1.0, 0.0]], dtype=complex))
    wts.append(np.array([w[-1]]))
    return QuadratureGrid(np.vstack(pts), np.concatenate(wts), kind="p1",
                          meta={"resolution": resolution})


def grid_pn(n, count=10_000, seed=0):
    """Equal-weight sample of Pⁿ from normalized complex Gaussian vectors.

    The Gaussians are drawn by inverse-CDF from a scrambled Sobol sequence,
    which keeps the sample exactly Fubini-Study distributed in law while
    cutting the integration error well below plain Monte-Carlo.
    """
    if n < 1 or count < 100:
        raise ValueError("need n >= 1 and count >= 100")
    m = n + 1
    sob = qmc.Sobol(2 * m, scramble=True, seed=seed)
    U = sob.random_base2(int(np.ceil(np.log2(count))))[:count]
    Z = norm.ppf(np.clip(U, 1e-300, 1 - 1e-16))
    X = Z[:, :m] + 1j * Z[:, m:]
    return QuadratureGrid(X, np.full(count, 1.0 / count), kind="pn",
                          meta={"n": n, "count": count, "seed": seed})


def integrate(grid, f):
    """``sum_i w_i f(x_i)``; ``f`` is evaluated once on the whole point array."""
    vals = np.asarray(f(grid.points), dtype=float).reshape(-1)
    if vals.shape[0] != len(grid):
        vals = np.broadcast_to(vals, (len(grid),))
    bad = ~np.isfinite(vals)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ValueError(f"non-finite integrand {vals[i]} at point {grid.points[i].tolist()}")
    return float(np.dot(grid.weights, vals))


def fd_hermitian_form(f, center, step=1e-3):
    """Central-difference complex Hessian ``H[j, k] ~ d^2 f / dw_j dw_k-bar``.

    ``f`` maps arrays of shape ``(..., k)`` of complex coordinates to real
    values of shape ``(...)``.  ``center`` is ``(k,)`` or a batch ``(N, k)``;
    the result is ``(k, k)`` or ``(N, k, k)``.  Diagonal entries come from the
    complex-line Laplacian ``L(v) = [f(c±hv) + f(c±ihv) - 4f(c)] / 4h^2`` and
    off-diagonal ones by polarization, 4k^2 stencil points in total.
    """
    c = np.asarray(center, dtype=complex)
    single = c.ndim == 1
    c = np.atleast_2d(c)
    k = c.shape[1]
    h = float(step)

    def ev(Y):
        v = np.asarray(f(Y), dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValueError("stencil evaluation produced non-finite values")
        return v

    f0 = ev(c)

    def lap(v):
        return (ev(c + h * v) + ev(c - h * v) + ev(c + 1j * h * v) + ev(c - 1j * h * v)
                - 4.0 * f0) / (4.0 * h * h)

    E = np.eye(k)
    H = np.zeros((c.shape[0], k, k), dtype=complex)
    for a in range(k):
        H[:, a, a] = lap(E[a])
    for a in range(k):
        for b in range(a + 1, k):
            diag = H[:, a, a].real + H[:, b, b].real
            re = 0.5 * (lap(E[a] + E[b]) - diag)
            im = 0.5 * (lap(E[a] + 1j * E[b]) - diag)
            H[:, a, b] = re + 1j * im
            H[:, b, a] = re - 1j * im
    return H[0] if single else H


# -- affine charts ---------------------------------------------------------

def best_chart(X):
    """Chart index ``j = argmax |x_j|`` per row and the chart coordinates.

    Returns ``(j, others, xi)``: ``others`` is ``(N, n)`` with the remaining
    coordinate indices in increasing order and ``xi = x[others] / x[j]``.
    """
    X = np.atleast_2d(X)
    N, m = X.shape
    j = np.argmax(np.abs(X), axis=1)
    allidx = np.broadcast_to(np.arange(m), (N, m))
    others = allidx[allidx != j[:, None]].reshape(N, m - 1)
    xi = np.take_along_axis(X, others, 1) / X[np.arange(N), j][:, None]
    return j, others, xi


def from_chart(j, others, xi):
    """Inverse of :func:`best_chart`: unit coordinates from chart data.

    ``xi`` may carry extra leading batch axes in front of ``(N, n)``.
    """
    xi = np.asarray(xi, dtype=complex)
    shape = xi.shape[:-1] + (xi.shape[-1] + 1,)
    Y = np.ones(shape, dtype=complex)
    idx = np.broadcast_to(others, xi.shape)
    np.put_along_axis(Y, idx, xi, -1)
    return Y / np.linalg.norm(Y, axis=-1, keepdims=True)


def fs_potential(xi):
    """Local Fubini-Study potential ``log(1 + |xi|^2)``."""
    return np.log1p(np.sum(np.abs(xi) ** 2, axis=-1))


def fs_metric(xi):
    """Analytic ``d dbar log(1 + |xi|^2)`` as ``(..., n, n)`` Hermitian matrices."""
    xi = np.asarray(xi, dtype=complex)
    r = 1.0 + np.sum(np.abs(xi) ** 2, axis=-1)[..., None, None]
    n = xi.shape[-1]
    return np.eye(n) / r - np.einsum("...a,...b->...ab", xi.conj(), xi) / r ** 2


def fubini_study_distance(x, y):
    """Geodesic distance on Pⁿ (diameter pi/2 for the unit-sphere model)."""
    c = np.clip(np.abs(np.sum(np.conj(as_coords(x)) * as_coords(y), axis=-1)), 0.0, 1.0)
    return np.arccos(c)
