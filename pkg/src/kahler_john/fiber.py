"""Families of barriers over a disc, fiberwise minimizers and positivity checks.

For a barrier family ``v(z, x)`` the fiberwise least-energy admissible
potential ``u(z, .)`` and its energy ``chi(z)`` are computed on a square
lattice in the disc.  Two positivity notions are then probed numerically:
subharmonicity of ``chi`` (5-point Laplacian) and positivity of
``pi^* omega + i ddbar u`` on the product, via finite-difference Levi forms.

The module also carries the explicit glued barrier on the unit disc times
P¹ whose fiberwise minimizer is ``log(e^{2|z|^2}|x0|^2 + e^{-|z|^2}|x1|^2)``:
``chi(z) = |z|^2/2`` is subharmonic, yet the minimizer restricted to
``x = (0:1)`` equals ``-|z|^2``.
"""

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigvals
from scipy.optimize import minimize_scalar

from ._linalg import sqrtm_h
from .barriers import Barrier
from .moment import moments
from .potentials import log_quadratic
from .projective import ProjPoint, as_coords, best_chart, fd_hermitian_form, from_chart
from .solver import SolverOptions, solve

E3 = np.exp(3.0)
KINDS = ("u0", "u1", "u2", "u12", "v0")


def section10_eval(kind, z, x):
    """Closed-form pieces of the glued counterexample barrier on P¹.

    Parameters
    ----------
    kind : {"u0", "u1", "u2", "u12", "v0"}
        ``u0(z, x) = log(e^{2|z|^2}|x0|^2 + e^{-|z|^2}|x1|^2)``;
        ``u1(x) = (1/3) log(2|x0|^2) + (2/3) log|x1|^2 + log(3/2)``
        (``-inf`` at both poles);
        ``u2(x) = -1 + log(e^3|x0|^2 + |x1|^2)``;
        ``u12`` is ``u1`` where ``|x1|^2 <= 2 e^3 |x0|^2`` and ``u2`` beyond,
        so that ``u12 <= u0(z, .)`` for every ``|z| <= 1``;
        ``v0`` is ``u0`` on the cap ``|x1|^2 <= 2 e^{3|z|^2} |x0|^2`` and
        ``u12`` outside it.  All for unit representatives.
    z : complex or array broadcasting against the points
    x : ProjPoint or ``(N, 2)`` array
    """
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}; expected one of {KINDS}")
    X = as_coords(x)
    if X.shape[1] != 2:
        raise ValueError("the glued barrier lives on P¹")
    p0 = np.abs(X[:, 0]) ** 2
    p1 = np.abs(X[:, 1]) ** 2
    r2 = np.abs(np.asarray(z)) ** 2
    with np.errstate(divide="ignore"):
        u0 = np.log(np.exp(2 * r2) * p0 + np.exp(-r2) * p1)
        u1 = np.log(2 * p0) / 3 + 2 * np.log(p1) / 3 + np.log(1.5)
    u2 = -1.0 + np.log(E3 * p0 + p1)
    u12 = np.where(p1 <= 2 * E3 * p0, u1, u2)
    out = {"u0": u0, "u1": u1, "u2": u2, "u12": u12}
    if kind == "v0":
        val = np.where(p1 <= 2 * np.exp(3 * r2) * p0, u0, u12)
    else:
        val = np.broadcast_to(out[kind], np.broadcast(p0, r2).shape)
    return float(val[0]) if isinstance(x, ProjPoint) else np.asarray(val, dtype=float)


def _point_at_ratio(t, phase=0.0):
    """Unit point ``(1 : sqrt(t) e^{i phase})``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    X = np.stack([np.ones_like(t), np.sqrt(t) * np.exp(1j * phase)], axis=1).astype(complex)
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def gluing_check(samples=10, seed=0, dt=1e-2):
    """Residuals of the two gluing interfaces of the counterexample barrier.

    Returns a dict with the value and ``t``-derivative of ``u2 - u1`` at
    ``t = |x1/x0|^2 = 2e^3`` and the largest jump of ``v0`` across the
    fiberwise interface ``t = 2 e^{3|z|^2}`` at random ``(z, angle)``.
    """
    t0 = 2 * E3

    def diff(t):
        X = _point_at_ratio(t)
        return section10_eval("u2", 0, X) - section10_eval("u1", 0, X)

    value = float(diff(t0)[0])
    deriv = float((diff(t0 + dt)[0] - diff(t0 - dt)[0]) / (2 * dt))
    rng = np.random.default_rng(seed)
    jumps = []
    for _ in range(samples):
        z = 0.99 * np.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
        X = _point_at_ratio(2 * np.exp(3 * abs(z) ** 2), 2 * np.pi * rng.uniform())
        jumps.append(abs(section10_eval("u0", z, X)[0] - section10_eval("u12", z, X)[0]))
    return {"u2_minus_u1": value, "d_dt_u2_minus_u1": deriv, "v0_jump": float(max(jumps)),
            "max_residual": float(max(abs(value), abs(deriv), max(jumps)))}


# -- disc lattices ---------------------------------------------------------

class DiscGrid:
    """Square lattice ``delta * (i + 1j*j)`` intersected with ``|z| <= radius``."""

    def __init__(self, radius=0.9, step=0.05):
        if not step > 0 or not radius >= 0:
            raise ValueError("need step > 0 and radius >= 0")
        self.radius = float(radius)
        self.step = float(step)
        k = int(np.floor(radius / step + 1e-9))
        ii, jj = np.meshgrid(np.arange(-k, k + 1), np.arange(-k, k + 1), indexing="xy")
        ii, jj = ii.ravel(), jj.ravel()
        keep = np.hypot(ii, jj) * step <= radius + 1e-12
        self.i = ii[keep]
        self.j = jj[keep]
        self.z = step * (self.i + 1j * self.j)
        self._index = {(a, b): n for n, (a, b) in enumerate(zip(self.i, self.j))}

    def __len__(self):
        return self.z.size

    def index(self, i, j):
        return self._index.get((int(i), int(j)))

    def rows(self):
        """Lattice indices grouped by imaginary part, each row ordered by real part."""
        out = {}
        for n, j in enumerate(self.j):
            out.setdefault(int(j), []).append(n)
        return [sorted(r, key=lambda n: self.i[n]) for _, r in sorted(out.items())]

    def interior(self):
        """Indices whose four lattice neighbours are all in the grid."""
        return [n for n in range(len(self))
                if all(self.index(self.i[n] + a, self.j[n] + b) is not None
                       for a, b in ((1, 0), (-1, 0), (0, 1), (0, -1)))]


def discrete_laplacian(disc, values):
    """5-point Laplacian ``(sum of neighbours - 4 f) / delta^2`` on interior points.

    Returns ``(lap, indices, (min_value, z_at_min))`` with ``lap`` aligned to
    ``indices``.
    """
    f = np.asarray(values, dtype=float)
    if f.shape != (len(disc),):
        raise ValueError("one value per lattice point is required")
    idx = disc.interior()
    if not idx:
        raise ValueError("disc grid too small for a 5-point stencil")
    lap = np.empty(len(idx))
    for k, n in enumerate(idx):
        i, j = disc.i[n], disc.j[n]
        nb = sum(f[disc.index(i + a, j + b)] for a, b in ((1, 0), (-1, 0), (0, 1), (0, -1)))
        lap[k] = (nb - 4 * f[n]) / disc.step ** 2
    k = int(np.argmin(lap))
    return lap, np.array(idx), (float(lap[k]), complex(disc.z[idx[k]]))


def det_bridge(chi, m):
    """Log-determinant curve of the induced bundle metric from fiber energies.

    In the point-action convention used throughout it is ``m * chi``; the
    hyperplane-bundle convention gives ``-m * chi``.  Both are returned.
    """
    chi = np.asarray(chi, dtype=float)
    return {"point_convention": m * chi, "hyperplane_convention": -m * chi}


# -- barrier families ------------------------------------------------------

class FamilyBarrier:
    """Barrier family ``v(z, x)``; ``fn(z, X)`` accepts a scalar ``z`` and point rows."""

    def __init__(self, kind, fn, m, params=None, claimed_psh=True):
        self.kind = kind
        self.fn = fn
        self.m = int(m)
        self.params = dict(params or {})
        self.claimed_psh = claimed_psh

    def __call__(self, z, X):
        return np.asarray(self.fn(z, as_coords(X)), dtype=float)

    def at(self, z):
        return Barrier(lambda X: self.fn(z, X), self.m, f"{self.kind}@z",
                       dict(self.params, z=[complex(z).real, complex(z).imag]), True)

    def describe(self):
        return {"kind": self.kind, **self.params}


def section10_family():
    return FamilyBarrier("section10", lambda z, X: section10_eval("v0", z, X), 2)


def constant_family(c, m=2):
    return FamilyBarrier("constant", lambda z, X: np.full(X.shape[0], float(c)), m, {"c": c})


def _cjson(M):
    M = np.asarray(M, dtype=complex)
    return {"re": M.real.tolist(), "im": M.imag.tolist()}


def holomorphic_family(T0, T1, radius=1.0):
    """``log |(T0 + z T1) x|^2``: admissible on every fiber, p*omega-psh on the product.

    Raises if ``det(T0 + z T1)`` vanishes for some ``|z| <= radius``; the
    zeros are the generalized eigenvalues of the pencil ``(T0, -T1)``.
    """
    T0 = np.asarray(T0, dtype=complex)
    T1 = np.asarray(T1, dtype=complex)
    roots = family_roots(T0, T1)
    if roots.size and np.abs(roots).min() <= radius:
        raise ValueError(f"T0 + z T1 is singular on the disc (z = {roots[np.argmin(np.abs(roots))]:.4g})")

    def fn(z, X):
        V = X @ (T0 + z * T1).T
        return np.log(np.sum(np.abs(V) ** 2, axis=1))

    return FamilyBarrier("holomorphic_family", fn, T0.shape[0], {"T0": _cjson(T0), "T1": _cjson(T1)})


def family_roots(T0, T1):
    """Finite zeros of ``z -> det(T0 + z T1)``."""
    w = eigvals(np.asarray(T0, dtype=complex), -np.asarray(T1, dtype=complex))
    return w[np.isfinite(w)]


def max_holomorphic_family(pairs):
    """Pointwise max of several holomorphic families; p*omega-psh, not fiberwise admissible."""
    fams = [holomorphic_family(T0, T1) for T0, T1 in pairs]
    return FamilyBarrier("max_holomorphic_family",
                         lambda z, X: np.max([f.fn(z, X) for f in fams], axis=0), fams[0].m,
                         {"pairs": [f.params for f in fams]})


# -- sweeps ----------------------------------------------------------------

def contact_radius(report, grid=None):
    """Balanced contact circle and cap edge of a P¹ solve.

    Among circles ``|x1/x0| = r`` spanned by the contact set, the balanced
    one minimizes the norm of the rotation-averaged moment image under
    ``gamma = A^{1/2}``.  Returns ``(r_balanced, r_edge)`` where ``r_edge`` is
    the largest contact ``|x1/x0|``.  The contact indices refer to the
    report's working points; ``grid`` is only used for reports without them.
    """
    X = (grid.points if report.points is None else report.points)[report.contact]
    X = X[np.abs(X[:, 0]) > 1e-12]
    if X.shape[0] == 0:
        return float("nan"), float("nan")
    rho = np.abs(X[:, 1] / X[:, 0])
    lo, hi = max(rho.min(), 1e-8), rho.max()
    S = sqrtm_h(report.A.matrix)
    phases = np.exp(2j * np.pi * np.arange(128) / 128)

    def imbalance(logr):
        Y = as_coords(np.stack([np.ones(128), np.exp(logr) * phases], axis=1) @ S.T)
        return float(np.linalg.norm(moments(Y).mean(axis=0)))

    if hi - lo < 1e-12:
        return float(hi), float(hi)
    res = minimize_scalar(imbalance, bounds=(np.log(lo), np.log(hi)), method="bounded",
                          options={"xatol": 1e-10})
    return float(np.exp(res.x)), float(hi)


MARKED = np.array([[1.0, 0.0], [0.0, 1.0]], dtype=complex)


@dataclass
class SweepReport:
    """Fiberwise solves over a disc lattice and the derived maps."""

    disc: DiscGrid
    family: dict
    reports: list
    chi: np.ndarray
    contact_radius: np.ndarray
    cap_edge: np.ndarray
    marked: np.ndarray
    uncertified: list = field(default_factory=list)

    @property
    def m(self):
        return self.reports[0].A.m

    def laplacian(self):
        return discrete_laplacian(self.disc, self.chi)

    def bridge(self):
        return det_bridge(self.chi, self.m)

    def to_json(self):
        lap, idx, (lmin, zmin) = self.laplacian()
        rows = []
        for n, rep in enumerate(self.reports):
            rows.append({
                "z": [float(self.disc.z[n].real), float(self.disc.z[n].imag)],
                "chi": float(self.chi[n]),
                "matrix": rep.to_json()["matrix"],
                "shift": float(rep.shift),
                "certificate": {"verdict": rep.certificate.verdict,
                                "residual": float(rep.certificate.residual)},
                "contact_radius": None if np.isnan(self.contact_radius[n]) else float(self.contact_radius[n]),
                "cap_edge": None if np.isnan(self.cap_edge[n]) else float(self.cap_edge[n]),
                "marked_values": [float(v) for v in self.marked[n]],
            })
        return {
            "family": self.family,
            "disc": {"radius": self.disc.radius, "step": self.disc.step, "count": len(self.disc)},
            "points": rows,
            "laplacian_min": {"value": lmin, "z": [zmin.real, zmin.imag]},
            "uncertified": [[float(self.disc.z[n].real), float(self.disc.z[n].imag)]
                            for n in self.uncertified],
        }

    def csv_map(self, values, indices=None):
        """CSV text with columns ``re_z, im_z, value``."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["re_z", "im_z", "value"])
        idx = range(len(self.disc)) if indices is None else indices
        for k, n in enumerate(idx):
            v = values[n] if indices is None else values[k]
            w.writerow([repr(float(self.disc.z[n].real)), repr(float(self.disc.z[n].imag)),
                        repr(float(v))])
        return buf.getvalue()


def _solve_row(family, disc, row, opts, grid, warm):
    out = []
    A_prev = None
    for n in row:
        rep = solve("min", family.at(complex(disc.z[n])), opts, grid=grid,
                    A0=A_prev if warm else None)
        out.append((n, rep))
        A_prev = rep.A.matrix
    return out


def sweep(family, disc=None, opts=None, threads=1, warm=True):
    """Fiberwise least-energy solves of ``family`` over ``disc``.

    Each lattice row is solved left to right, warm-starting from the
    previous point of the same row; rows are independent and may run in
    parallel without changing the result.
    """
    disc = disc or DiscGrid()
    opts = opts or SolverOptions(n=family.m - 1)
    grid = opts.grid()
    rows = disc.rows()
    results = {}
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            for part in ex.map(lambda r: _solve_row(family, disc, r, opts, grid, warm), rows):
                results.update(part)
    else:
        for r in rows:
            results.update(_solve_row(family, disc, r, opts, grid, warm))
    reports = [results[n] for n in range(len(disc))]
    chi = np.array([r.energy for r in reports])
    rad = np.full(len(disc), np.nan)
    edge = np.full(len(disc), np.nan)
    if family.m == 2:
        for n, rep in enumerate(reports):
            rad[n], edge[n] = contact_radius(rep, grid)
    marked = np.array([[log_quadratic(r.A.matrix, e[None])[0] + r.shift
                        for e in np.eye(family.m, dtype=complex)] for r in reports])
    unc = [n for n, r in enumerate(reports) if not r.certified]
    return SweepReport(disc, family.describe(), reports, chi, rad, edge, marked, unc)


class MinimizerFamily:
    """Fiberwise minimizer ``u(z, x)`` solved on demand and cached per ``z``.

    Used as the ``u_family`` of :func:`psh_check_product`, whose stencils
    need the minimizer at slightly displaced ``z``.
    """

    def __init__(self, family, opts=None):
        self.family = family
        self.opts = opts or SolverOptions(n=family.m - 1)
        self.grid = self.opts.grid()
        self._cache = {}

    def report(self, z):
        key = complex(z)
        if key not in self._cache:
            near = min(self._cache, key=lambda w: abs(w - key), default=None)
            A0 = None if near is None else self._cache[near].A.matrix
            self._cache[key] = solve("min", self.family.at(key), self.opts, grid=self.grid, A0=A0)
        return self._cache[key]

    def __call__(self, z, X):
        X = as_coords(X)
        zz = np.broadcast_to(np.asarray(z, dtype=complex), (X.shape[0],))
        out = np.empty(X.shape[0])
        for k in range(X.shape[0]):
            rep = self.report(zz[k])
            out[k] = log_quadratic(rep.A.matrix, X[k:k + 1])[0] + rep.shift
        return out


def psh_check_product(u_family, samples, step=1e-3):
    """Smallest eigenvalue of ``pi^* omega + i ddbar u`` over product samples.

    Parameters
    ----------
    u_family : callable
        ``u_family(z, X)`` with ``z`` of shape ``(N,)`` and ``X`` of shape
        ``(N, m)``.
    samples : iterable of (z, x)
        Base point ``z`` and a point of Pⁿ; the form is taken in the best
        affine chart ``xi`` of ``x`` with coordinates ``(z, xi)``.
    step : float
        Finite-difference step.

    Returns
    -------
    dict
        ``min_eig``, its location ``(z, x)``, the eigenvector and all
        per-sample minimal eigenvalues.
    """
    eigs, vecs, locs = [], [], []
    for z0, x in samples:
        X = as_coords(x)
        j, others, xi = best_chart(X)

        def F(w):
            Y = from_chart(j, others, w[:, 1:])
            return np.log1p(np.sum(np.abs(w[:, 1:]) ** 2, axis=1)) + u_family(w[:, 0], Y)

        K = fd_hermitian_form(F, np.concatenate([[complex(z0)], xi[0]]), step)
        lam, V = np.linalg.eigh(K)
        eigs.append(float(lam[0]))
        vecs.append(V[:, 0])
        locs.append((complex(z0), X[0]))
    eigs = np.array(eigs)
    k = int(np.argmin(eigs))
    return {"min_eig": float(eigs[k]), "z": locs[k][0], "x": locs[k][1],
            "direction": vecs[k], "eigs": eigs}


def write_sweep_outputs(report, outdir):
    """χ / Laplacian / bridge CSVs and the sweep JSON into ``outdir``."""
    from pathlib import Path

    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.json").write_text(json.dumps(report.to_json(), indent=2, sort_keys=True))
    (out / "chi.csv").write_text(report.csv_map(report.chi))
    lap, idx, _ = report.laplacian()
    (out / "laplacian.csv").write_text(report.csv_map(lap, idx))
    (out / "bridge.csv").write_text(report.csv_map(report.bridge()["point_convention"]))
    return out
