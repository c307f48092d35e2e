import json

import numpy as np
import pytest

from kahler_john import barriers
from kahler_john.potentials import log_quadratic
from kahler_john.projective import fd_hermitian_form, grid_p1, normalize

from conftest import random_hpd, random_points


def test_constant_and_shift(rng):
    X = random_points(rng, 5, 3)
    b = barriers.constant(0.7, 3)
    assert np.allclose(b(X), 0.7)
    assert np.allclose(b.shifted(0.1)(X), 0.8)
    eta = lambda X: np.abs(X[:, 0]) ** 2
    assert np.allclose(b.shifted(0.5, eta)(X), 0.7 + 0.5 * eta(X))
    assert isinstance(b(normalize([1, 0, 0])), float)


def test_admissible_matches_log_quadratic(rng):
    B = random_hpd(rng, 2, 5.0)
    X = random_points(rng, 5, 2)
    assert np.allclose(barriers.admissible(B, 0.2)(X), log_quadratic(B, X) + 0.2)


def test_max_admissible(rng):
    Bs = [random_hpd(rng, 2, 5.0) for _ in range(3)]
    X = random_points(rng, 5, 2)
    ref = np.max([log_quadratic(B, X) for B in Bs], axis=0)
    assert np.allclose(barriers.max_admissible(Bs)(X), ref)


def test_veronese_degree_one_is_fubini_study_constant():
    # sum_j |x_j|^2 = 1 for unit rows, so degree 1 with unit weights is 0
    X = random_points(np.random.default_rng(0), 5, 3)
    assert np.allclose(barriers.veronese(3, 1)(X), 0.0)


def test_veronese_validation():
    with pytest.raises(ValueError, match="positive"):
        barriers.veronese(2, 2, [1.0, -1.0, 1.0])
    with pytest.raises(ValueError):
        barriers.veronese(2, 2, [1.0, 1.0])


@pytest.mark.parametrize("m, degree", [(2, 2), (2, 3), (3, 2)])
def test_twisted_veronese_strictly_psh_and_not_torus_invariant(rng, m, degree):
    b = barriers.twisted_veronese(m, degree, seed=4)
    # in the chart x = (1, w) the curvature form of b is dd^c of b(1, w) + log(1 + |w|^2)
    f = lambda W: b(np.concatenate([np.ones(W.shape[:-1] + (1,)), W], axis=-1)) \
        + np.log1p(np.sum(np.abs(W) ** 2, axis=-1))
    W = 0.7 * (rng.normal(size=(20, m - 1)) + 1j * rng.normal(size=(20, m - 1)))
    H = fd_hermitian_form(f, W, step=1e-4)
    assert np.linalg.eigvalsh(H).min() > 1e-2
    X = random_points(rng, 5, m)
    T = np.exp(1j * rng.uniform(0, 2 * np.pi, m))
    assert np.abs(b(X * T) - b(X)).max() > 1e-3
    assert np.allclose(barriers.twisted_veronese(m, degree, weight=0.0)(X), barriers.veronese(m, degree)(X))
    with pytest.raises(ValueError, match="weight"):
        barriers.twisted_veronese(m, degree, weight=-1.0)


def test_values_reject_non_finite():
    g = grid_p1(8)
    b = barriers.section10(0.3)
    with np.errstate(divide="ignore"):
        vals = b.fn(g.points)
    assert np.all(np.isfinite(vals))
    bad = barriers.Barrier(lambda X: np.log(np.abs(X[:, 0])), 2)
    with np.errstate(divide="ignore"), pytest.raises(ValueError, match="not finite"):
        bad.values(g)


def test_from_samples_only_on_own_points(rng):
    X = random_points(rng, 120, 2)
    b = barriers.from_samples(X, np.zeros(120))
    assert len(b.grid) == 120
    assert np.allclose(b(b.grid.points), 0)
    with pytest.raises(ValueError, match="own points"):
        b(X[:3])
    with pytest.raises(ValueError):
        barriers.from_samples(X, np.zeros(3))


def test_from_spec_all_kinds(tmp_path):
    B = {"re": [[2.0, 0.0], [0.0, 1.0]], "im": [[0.0, 0.0], [0.0, 0.0]]}
    specs = [
        {"kind": "constant", "c": 0.5},
        {"kind": "admissible", "B": B, "c": 0.1},
        {"kind": "max_admissible", "Bs": [B, B]},
        {"kind": "veronese", "degree": 2},
        {"kind": "twisted_veronese", "degree": 3, "seed": 2, "weight": 0.5},
        {"kind": "section10", "z": [0.3, 0.1]},
    ]
    X = random_points(np.random.default_rng(1), 4, 2)
    for spec in specs:
        b = barriers.from_spec(spec, 2)
        assert b.describe()["kind"] == spec["kind"]
        assert np.all(np.isfinite(b(X)))
    pts = X[:, :, None].view(float).reshape(4, 2, 2)
    (tmp_path / "s.json").write_text(json.dumps({"points": pts.tolist(), "values": [0, 1, 2, 3]}))
    b = barriers.from_spec({"kind": "samples", "file": "s.json"}, 2, base_dir=tmp_path)
    assert np.allclose(b(b.grid.points), [0, 1, 2, 3])
    with pytest.raises(ValueError, match="unknown"):
        barriers.from_spec({"kind": "nope"})
