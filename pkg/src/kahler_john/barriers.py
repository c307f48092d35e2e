"""Barrier functions ``v0`` on Pⁿ and a small catalog built from JSON specs."""

import json

import numpy as np
from itertools import combinations_with_replacement

from ._linalg import hermitian_from_json
from .potentials import log_quadratic
from .projective import ProjPoint, QuadratureGrid, as_coords


class Barrier:
    """Continuous function on Pⁿ evaluated on ``(N, m)`` arrays of unit rows.

    Parameters
    ----------
    fn : callable
        ``fn(X) -> (N,)`` real values.
    m : int
        Number of homogeneous coordinates.
    name : str
        Catalog tag, recorded in reports.
    params : dict
        JSON-serializable parameters, recorded in reports.
    claimed_omega_psh : bool
        Whether ``omega + i ddbar v0 >= 0`` is known to hold.
    grid : QuadratureGrid, optional
        For barriers known only by samples: the grid they live on.
    """

    is_continuous = True

    def __init__(self, fn, m, name="custom", params=None, claimed_omega_psh=False, grid=None):
        self.fn = fn
        self.m = int(m)
        self.name = name
        self.params = dict(params or {})
        self.claimed_omega_psh = bool(claimed_omega_psh)
        self.grid = grid

    def __call__(self, X):
        vals = np.asarray(self.fn(as_coords(X)), dtype=float).reshape(-1)
        return float(vals[0]) if isinstance(X, ProjPoint) else vals

    def values(self, grid):
        v = np.asarray(self.fn(grid.points), dtype=float).reshape(-1)
        bad = ~np.isfinite(v)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise ValueError(f"barrier is not finite at {grid.points[i].tolist()}")
        return v

    def shifted(self, c, eta=None):
        """``v0 + c`` or, with a callable ``eta``, ``v0 + c * eta``."""
        if eta is None:
            fn = lambda X: self.fn(X) + c
        else:
            fn = lambda X: self.fn(X) + c * np.asarray(eta(X))
        return Barrier(fn, self.m, self.name + "+shift",
                       dict(self.params, shift=c), self.claimed_omega_psh and eta is None, self.grid)

    def describe(self):
        return {"kind": self.name, **self.params}


def constant(c, m=2):
    return Barrier(lambda X: np.full(X.shape[0], float(c)), m, "constant", {"c": c}, True)


def admissible(B, c=0.0):
    """``log(x^† B x) + c``."""
    B = np.asarray(B, dtype=complex)
    return Barrier(lambda X: log_quadratic(B, X) + c, B.shape[0], "admissible",
                   {"B": {"re": B.real.tolist(), "im": B.imag.tolist()}, "c": c}, True)


def max_admissible(Bs):
    """Pointwise max of several admissible potentials; omega-psh, not admissible."""
    Bs = [np.asarray(B, dtype=complex) for B in Bs]
    return Barrier(lambda X: np.max([log_quadratic(B, X) for B in Bs], axis=0), Bs[0].shape[0],
                   "max_admissible",
                   {"Bs": [{"re": B.real.tolist(), "im": B.imag.tolist()} for B in Bs]}, True)


def veronese(m, degree=2, coeffs=None):
    """``(1/d) log sum_a c_a |x^a|^2`` over all monomials of degree ``d``.

    The Kähler form of this potential is ``1/d`` times the pull-back of the
    Fubini-Study form by a weighted Veronese embedding, so it is strictly
    omega-psh; for ``d >= 2`` it is not admissible in general.
    """
    monos = list(combinations_with_replacement(range(m), degree))
    E = np.zeros((len(monos), m), dtype=int)
    for r, mono in enumerate(monos):
        for j in mono:
            E[r, j] += 1
    c = np.ones(len(monos)) if coeffs is None else np.asarray(coeffs, dtype=float)
    if c.shape != (len(monos),) or np.any(c <= 0):
        raise ValueError(f"need {len(monos)} positive coefficients")

    def fn(X):
        A2 = np.abs(X) ** 2
        return np.log(np.prod(A2[:, None, :] ** E[None], axis=-1) @ c) / degree

    return Barrier(fn, m, "veronese", {"m": m, "degree": degree, "coeffs": c.tolist()}, True)


def twisted_veronese(m, degree=2, seed=0, weight=0.3, terms=3):
    """Veronese barrier with ``weight * sum_k |l_k1(x) ... l_kd(x)|^2`` added inside the log.

    The linear forms ``l_kj`` are complex Gaussian, drawn from ``seed``.  The
    result is still ``(1/d) log`` of a sum of squared moduli of degree-``d``
    polynomials, hence strictly omega-psh, but has no torus symmetry, so its
    extremals generically touch it at isolated points.
    """
    if weight < 0:
        raise ValueError("weight must be nonnegative")
    ver = veronese(m, degree)
    rng = np.random.default_rng(seed)
    L = rng.normal(size=(terms, m, degree)) + 1j * rng.normal(size=(terms, m, degree))

    def fn(X):
        s = np.exp(degree * ver.fn(X))
        for Lk in L:
            s = s + weight * np.abs(np.prod(X @ Lk, axis=1)) ** 2
        return np.log(s) / degree

    return Barrier(fn, m, "twisted_veronese",
                   {"m": m, "degree": degree, "seed": seed, "weight": weight, "terms": terms}, True)


def section10(z):
    """Fiber ``v0(z, .)`` of the glued counterexample barrier on P¹."""
    from .fiber import section10_eval

    return Barrier(lambda X: section10_eval("v0", z, X), 2, "section10",
                   {"z": [complex(z).real, complex(z).imag]}, True)


def from_samples(points, values):
    """Barrier known only at the given points; solves must use its grid."""
    P = as_coords(np.asarray(points, dtype=complex))
    v = np.asarray(values, dtype=float)
    if v.shape != (P.shape[0],):
        raise ValueError("one value per sample point is required")
    grid = QuadratureGrid(P, np.full(P.shape[0], 1.0 / P.shape[0]), kind="samples")

    def fn(X):
        if X.shape == grid.points.shape and np.allclose(X, grid.points, atol=1e-12):
            return v
        raise ValueError("sampled barrier can only be evaluated on its own points")

    return Barrier(fn, P.shape[1], "samples", {"count": int(P.shape[0])}, False, grid)


def _matrix(doc):
    if isinstance(doc, dict):
        return hermitian_from_json(doc)
    return np.asarray(doc, dtype=complex)


def from_spec(spec, m=2, base_dir=None):
    """Build a barrier from a catalog entry ``{"kind": ..., ...}``."""
    kind = spec.get("kind")
    if kind == "constant":
        return constant(spec.get("c", 0.0), m)
    if kind == "admissible":
        return admissible(_matrix(spec["B"]), spec.get("c", 0.0))
    if kind == "max_admissible":
        return max_admissible([_matrix(B) for B in spec["Bs"]])
    if kind == "veronese":
        return veronese(m, spec.get("degree", 2), spec.get("coeffs"))
    if kind == "twisted_veronese":
        return twisted_veronese(m, spec.get("degree", 2), spec.get("seed", 0), spec.get("weight", 0.3))
    if kind == "section10":
        z = spec.get("z", 0.0)
        if isinstance(z, (list, tuple)):
            z = complex(z[0], z[1])
        return section10(z)
    if kind == "samples":
        from pathlib import Path

        path = Path(spec["file"])
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        doc = json.loads(path.read_text())
        pts = np.asarray(doc["points"], dtype=float)
        return from_samples(pts[..., 0] + 1j * pts[..., 1], doc["values"])
    raise ValueError(f"unknown barrier kind {kind!r}")
