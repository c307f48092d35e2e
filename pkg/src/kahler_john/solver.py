"""Extremal admissible potentials above (min problem) or below (max problem) a barrier.

Both problems are posed over unit-determinant ``A`` with the additive
constant solved in closed form:

* min: ``F(A) = (1/m) log det A + max_grid(v0 - u_A)``, shift ``c = max(v0 - u_A)``;
* max: ``G(A) = (1/m) log det A + min_grid(v0 - u_A)``, shift ``c = min(v0 - u_A)``.

The search is a trust-region successive linear programming method in
geodesic normal coordinates ``A(h) = A^{1/2} exp(sum_a h_a E_a) A^{1/2}``
around the current iterate, where ``E_a`` is an orthonormal basis of
traceless Hermitian matrices.  The derivative of ``u_{A(h)}(x)`` in ``h_a``
is the ``E_a`` coordinate of the moment image of ``A^{1/2} x``, so the
linearized objective is a max of affine functions and each step is a small
LP.  Termination is certified independently: weights on the contact set
whose transformed moment images average to zero.
"""

import csv
import io
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import linprog, minimize

from ._linalg import (expm_h, hermitian_to_json, hermitize, sqrtm_h, su_basis,
                      su_coords, su_matrix)
from .barriers import Barrier
from .moment import Certificate, certificate, contact_set, moments
from .potentials import AdmissiblePotential, HermitianPD, as_hpd, log_quadratic
from .projective import QuadratureGrid, as_coords, best_chart, from_chart, grid_p1, grid_pn

PROBLEMS = ("min", "max")


@dataclass
class SolverOptions:
    """Knobs of :func:`solve`.

    ``resolution`` sets the P¹ grid, ``count``/``seed`` the Pⁿ sample for
    ``n >= 2``.  ``trust_radius`` is the initial box half-width of the LP
    steps in geodesic coordinates.
    """

    n: int = 1
    resolution: int = 64
    count: int = 4096
    seed: int = 0
    max_iter: int = 200
    trust_radius: float = 0.5
    max_radius: float = 8.0
    cert_tol: float = 1e-6
    eps_rel: float = 1e-4
    restarts: int = 0
    stall_tol: float = 1e-15

    def __post_init__(self):
        if self.n < 1 or self.max_iter < 1 or self.restarts < 0:
            raise ValueError("need n >= 1, max_iter >= 1, restarts >= 0")
        for name in ("trust_radius", "max_radius", "cert_tol", "eps_rel"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    def grid(self):
        if self.n == 1:
            return _cached_grid("p1", self.resolution, 0, 0)
        return _cached_grid("pn", self.n, self.count, self.seed)


@lru_cache(maxsize=16)
def _cached_grid(kind, a, b, c):
    return grid_p1(a) if kind == "p1" else grid_pn(a, b, c)


@dataclass
class SolveReport:
    """Result of :func:`solve`; ``A`` has unit determinant and ``u = u_A + shift``."""

    problem: str
    A: HermitianPD
    shift: float
    energy: float
    contact: np.ndarray
    certificate: Certificate
    trace: list
    iterations: int
    converged: bool
    wall_time: float = 0.0
    restarts: list = field(default_factory=list)
    barrier: dict = field(default_factory=dict)
    grid_size: int = 0
    points: np.ndarray = None  # working grid points; ``contact`` indexes these

    @property
    def certified(self):
        return self.certificate.passed

    @property
    def matrix(self):
        """``e^shift A``: the single matrix whose potential is the extremal."""
        return self.A.matrix * np.exp(self.shift)

    def potential(self):
        return AdmissiblePotential(self.A, self.shift)

    def to_json(self):
        return {
            "problem": self.problem,
            "matrix": hermitian_to_json(self.A.matrix),
            "shift": float(self.shift),
            "energy": float(self.energy),
            "certificate": self.certificate.to_json(),
            "trace": self.trace,
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "contact_count": int(len(self.contact)),
            "grid_size": int(self.grid_size),
            "barrier": self.barrier,
            "restarts": self.restarts,
        }

    def trace_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "objective", "residual", "radius"])
        for row in self.trace:
            w.writerow([row["iteration"], repr(row["objective"]), repr(row["residual"]),
                        repr(row["radius"])])
        return buf.getvalue()


def _raw_values(v0, grid):
    if callable(v0):
        v = np.asarray(v0(grid.points), dtype=float).reshape(-1)
    else:
        v = np.asarray(v0, dtype=float).reshape(-1)
    if v.shape[0] != len(grid):
        raise ValueError("barrier must give one value per grid point")
    return v


def _working_grid(problem, v0, grid):
    """Grid and barrier values; ``-inf`` barrier points are dropped for the min problem.

    A lower barrier equal to ``-inf`` at a point imposes nothing there.
    """
    v = _raw_values(v0, grid)
    if np.any(np.isnan(v) | (v == np.inf)):
        raise ValueError("barrier has NaN or +inf values on the grid")
    neg = v == -np.inf
    if np.any(neg):
        if problem == "max" or np.all(neg):
            raise ValueError("barrier is -inf on the grid")
        keep = ~neg
        grid = QuadratureGrid(grid.points[keep], grid.weights[keep], kind=grid.kind + "-trimmed")
        v = v[keep]
    return grid, v


def _gap(problem, A, X, v):
    """Per-point ``a_i`` whose max is the normalized objective (sign-flipped for max)."""
    u = log_quadratic(A, X)
    return (v - u) if problem == "min" else (u - v)


def _local_peak(problem, A, v0, x):
    """Local continuous maximum of the gap ``±(v0 - u_A)`` from the point ``x``.

    Returns ``(gap, point)`` with ``point`` a unit row.
    """
    sign = 1.0 if problem == "min" else -1.0
    j, others, xi = best_chart(x[None])
    n = xi.shape[1]

    def pt(r):
        return from_chart(j, others, (r[:n] + 1j * r[n:])[None])

    def f(r):
        Y = pt(r)
        with np.errstate(invalid="ignore", divide="ignore"):
            g = sign * float(v0(Y)[0] - log_quadratic(A, Y)[0])
        return np.inf if np.isnan(g) else -g

    r0 = np.concatenate([xi[0].real, xi[0].imag])
    res = minimize(f, r0, method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
    Y = pt(res.x)
    return -float(res.fun), Y[0] / np.linalg.norm(Y[0])


def _refined_extreme(problem, A, v0, grid, top=6):
    """Continuous polish of ``max(v0 - u_A)`` (min) / ``min(v0 - u_A)`` (max)."""
    X = grid.points
    sign = 1.0 if problem == "min" else -1.0
    with np.errstate(invalid="ignore"):
        d = sign * (v0(X) - log_quadratic(A, X))
    d = np.where(np.isnan(d), -np.inf, d)
    best = float(d.max())
    for i in np.argsort(d)[::-1][:top]:
        best = max(best, _local_peak(problem, A, v0, X[i])[0])
    return sign * best


def objective(problem, A, v0, grid, refine=False):
    """Energy of the best feasible shift of ``u_A`` against the barrier.

    Parameters
    ----------
    problem : {"min", "max"}
    A : array or HermitianPD
    v0 : Barrier, callable or array of grid values
    grid : QuadratureGrid
    refine : bool
        Also polish the grid extremum of ``v0 - u_A`` by a local continuous
        search from the best grid points, approximating the continuum value.
        Needs ``v0`` evaluable off the grid.
    """
    if problem not in PROBLEMS:
        raise ValueError(f"unknown problem {problem!r}")
    A = as_hpd(A)
    base = A.logdet() / A.m
    if refine:
        if not callable(v0):
            raise ValueError("refinement needs a callable barrier")
        return base + _refined_extreme(problem, A.matrix, v0, grid)
    grid, v = _working_grid(problem, v0, grid)
    d = v - log_quadratic(A.matrix, grid.points)
    return base + (d.max() if problem == "min" else d.min())


def subgradient_direction(problem, A, v0, grid, eps_rel=1e-4, tol=1e-6):
    """Descent (min) / ascent (max) direction at ``A`` from the active contact points.

    Let ``p`` be the minimum-norm point of the convex hull of
    ``mu(A^{1/2} x_i)`` over the ``eps``-active points.  Along
    ``A^{1/2} exp(tH) A^{1/2}`` the objective has one-sided derivative at most
    ``-|p|^2`` for ``H = p`` in the min problem, and at least ``|p|^2`` for
    ``H = -p`` in the max problem.  Returns the zero matrix when ``|p| <= tol``.
    """
    A = as_hpd(A)
    grid, v = _working_grid(problem, v0, grid)
    X = grid.points
    u = log_quadratic(A.matrix, X)
    c = (v - u).max() if problem == "min" else (v - u).min()
    idx = contact_set(u + c, v, grid, problem, eps_rel)
    S = sqrtm_h(A.matrix)
    cert = certificate(X[idx], S, tol=tol, indices=idx)
    if cert.passed:
        return np.zeros((A.m, A.m), dtype=complex)
    Y = as_coords(X[idx] @ S.T)
    p = np.einsum("i,ijk->jk", cert.weights, moments(Y))
    return hermitize(p if problem == "min" else -p)


def _normalize_det(A):
    s = np.linalg.slogdet(A)[1] / A.shape[0]
    return hermitize(A * np.exp(-s))


def _model_lp(a, b, phi, radius, batch=256):
    """Minimize ``max_i (a_i + b_i.h)`` over the box ``|h|_inf <= radius``.

    Constraint generation: start from the rows with the largest optimistic
    value ``a_i + radius |b_i|_1`` and add violated rows until none remain.
    Returns the LP result and the row indices it was solved on.
    """
    d = b.shape[1]
    bn = np.abs(b).sum(axis=1)
    upper = a + radius * bn
    cand = np.flatnonzero(a >= phi - radius * (bn + bn.max()) - 1e-12)
    order = cand[np.argsort(-upper[cand], kind="stable")]
    rows = order[:batch]
    c = np.r_[np.zeros(d), 1.0]
    bounds = [(-radius, radius)] * d + [(None, None)]
    while True:
        res = linprog(c, A_ub=np.hstack([b[rows], -np.ones((rows.size, 1))]), b_ub=-a[rows],
                      bounds=bounds, method="highs")
        if res.status != 0:
            return None, rows
        model = a[cand] + b[cand] @ res.x[:d]
        viol = cand[model > res.x[d] + 1e-13 * (1.0 + abs(res.x[d]))]
        viol = np.setdiff1d(viol, rows)
        if viol.size == 0:
            return res, rows
        top = viol[np.argsort(-(a[viol] + b[viol] @ res.x[:d]), kind="stable")][:batch]
        rows = np.union1d(rows, top)


def _degenerate(A, cond_max=1e10):
    if not np.all(np.isfinite(A)):
        return True
    w = np.linalg.eigvalsh(A)
    return w[0] <= 0 or w[-1] / w[0] > cond_max


def _slp(problem, A, X, v, basis, opts):
    """Trust-region successive LP from ``A`` (unit determinant)."""
    d = basis.shape[0]
    radius = opts.trust_radius
    a = _gap(problem, A, X, v)
    phi = a.max()
    trace = []
    converged = False
    it = 0
    for it in range(1, opts.max_iter + 1):
        S = sqrtm_h(A)
        Y = as_coords(X @ S.T)
        C = su_coords(moments(Y), basis)
        b = -C if problem == "min" else C
        res, rows = _model_lp(a, b, phi, radius)
        if res is None:
            radius *= 0.25
            if radius < 1e-14:
                break
            continue
        h = res.x[:d]
        model = res.x[d]
        lam = -np.asarray(res.ineqlin.marginals)
        lp_res = float(np.linalg.norm(lam @ b[rows]))
        pred = phi - model
        trace.append({"iteration": it, "objective": float(phi if problem == "min" else -phi),
                      "residual": lp_res, "radius": float(radius)})
        if pred <= opts.stall_tol * (1.0 + abs(phi)):
            converged = True
            break
        A_new = _normalize_det(S @ expm_h(su_matrix(h, basis)) @ S)
        if _degenerate(A_new):
            # objective still falling while A degenerates: unbounded or ill-posed
            radius = 0.25 * np.abs(h).max()
            if radius < 1e-14:
                break
            continue
        a_new = _gap(problem, A_new, X, v)
        phi_new = a_new.max()
        ratio = (phi - phi_new) / pred
        if ratio > 0.1:
            A, a, phi = A_new, a_new, phi_new
        hn = np.abs(h).max()
        if ratio > 0.75 and hn > 0.99 * radius:
            radius = min(2.0 * radius, opts.max_radius)
        elif ratio < 0.25:
            radius = 0.25 * hn
        if radius < 1e-14:
            converged = True
            break
    return A, phi, trace, it, converged


def _random_start(rng, m, basis):
    R = su_matrix(rng.normal(size=basis.shape[0]), basis)
    R *= 2.0 * rng.uniform() / max(np.abs(np.linalg.eigvalsh(R)).max(), 1e-300)
    return expm_h(R)


def solve(problem, v0, opts=None, grid=None, A0=None):
    """Extremal admissible potential for the barrier ``v0``.

    Parameters
    ----------
    problem : {"min", "max"}
        ``min``: least energy among admissible ``u >= v0``;
        ``max``: largest energy among admissible ``u <= v0``.
    v0 : Barrier or callable
    opts : SolverOptions, optional
    grid : QuadratureGrid, optional
        Overrides the grid from ``opts`` (and the grid carried by sampled
        barriers).
    A0 : array, optional
        Warm start; defaults to the identity.

    Returns
    -------
    SolveReport
        ``certificate.verdict`` is ``"fail"`` when the iteration stopped
        without a passing optimality certificate.
    """
    if problem not in PROBLEMS:
        raise ValueError(f"unknown problem {problem!r}")
    opts = opts or SolverOptions()
    t0 = time.perf_counter()
    if grid is None:
        grid = getattr(v0, "grid", None) or opts.grid()
    grid, v = _working_grid(problem, v0, grid)
    X = grid.points
    m = X.shape[1]
    basis = su_basis(m)
    rng = np.random.default_rng(opts.seed)
    starts = [np.eye(m, dtype=complex) if A0 is None else _normalize_det(np.asarray(A0, dtype=complex))]
    starts += [_random_start(rng, m, basis) for _ in range(opts.restarts)]
    runs = [_slp(problem, _normalize_det(S0), X, v, basis, opts) for S0 in starts]
    best = min(range(len(runs)), key=lambda k: runs[k][1])
    A, phi, trace, iters, converged = runs[best]
    A = _normalize_det(A)
    u = log_quadratic(A, X)
    shift = float((v - u).max() if problem == "min" else (v - u).min())
    Ah = HermitianPD(A, check=False)
    energy = Ah.logdet() / m + shift
    idx = contact_set(u + shift, v, grid, problem, opts.eps_rel)
    cert = certificate(X[idx], sqrtm_h(A), tol=opts.cert_tol, indices=idx,
                       prior=grid.weights[idx])
    restarts = []
    if len(runs) > 1:
        for k, (Ak, phik, _, itk, convk) in enumerate(runs):
            e = phik if problem == "min" else -phik
            restarts.append({"start": k, "energy": float(e), "iterations": int(itk),
                             "converged": bool(convk), "matrix": hermitian_to_json(_normalize_det(Ak))})
    desc = v0.describe() if isinstance(v0, Barrier) else {"kind": "callable"}
    return SolveReport(problem, Ah, shift, energy, idx, cert, trace, iters, converged,
                       time.perf_counter() - t0, restarts, desc, len(grid), X)


def aligned_relative_error(A, B):
    """Relative Frobenius error between ``A`` and ``B`` after optimal positive scaling."""
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    s = np.real(np.vdot(A, B)) / np.real(np.vdot(A, A))
    return float(np.linalg.norm(s * A - B) / np.linalg.norm(B))
