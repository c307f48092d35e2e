import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from kahler_john.projective import (ProjPoint, QuadratureGrid, as_coords, best_chart,
                                    fd_hermitian_form, from_chart, fs_metric, fs_potential,
                                    fubini_study_distance, grid_p1, grid_pn, integrate,
                                    normalize)

from conftest import random_points, random_unitary

complex_st = st.complex_numbers(max_magnitude=3.0, allow_nan=False, allow_infinity=False)


def test_normalize_rejects_zero():
    with pytest.raises(ValueError, match="zero vector"):
        normalize([0, 0])


def test_projpoint_requires_unit_norm():
    with pytest.raises(ValueError):
        ProjPoint(np.array([1.0, 1.0]))
    p = normalize([3, 4j])
    assert p.same_point(normalize([3j, -4]))


def test_grid_p1_structure():
    g = grid_p1(16)
    assert len(g) == 2 + 14 * 32
    assert abs(g.weights.sum() - 1) < 1e-15
    assert np.allclose(np.linalg.norm(g.points, axis=1), 1)
    # both poles are nodes
    assert np.any(np.all(np.isclose(np.abs(g.points), [1, 0]), axis=1))
    assert np.any(np.all(np.isclose(np.abs(g.points), [0, 1]), axis=1))
    with pytest.raises(ValueError):
        grid_p1(4)


@pytest.mark.parametrize("k", range(0, 12))
def test_grid_p1_exact_on_moments(k):
    # |x0|^2 is uniform on [0, 1] under the normalized measure
    g = grid_p1(8)
    val = integrate(g, lambda X: np.abs(X[:, 0]) ** (2 * k))
    assert abs(val - 1 / (k + 1)) < 1e-13


def test_grid_p1_phase_dependent_integrand():
    g = grid_p1(16)
    val = integrate(g, lambda X: (X[:, 0] * X[:, 1].conj()).real ** 2)
    assert abs(val - 1 / 12) < 1e-14


def test_grid_p1_against_scipy_quad():
    f = lambda s: np.log(1 + 3 * s) * np.exp(-s)
    ref, _ = quad(f, 0, 1, epsabs=1e-14)
    val = integrate(grid_p1(32), lambda X: f(np.abs(X[:, 0]) ** 2))
    assert abs(val - ref) < 1e-12


def test_grid_pn_moments_p2():
    g = grid_pn(2, 4096, seed=1)
    s = np.abs(g.points[:, 0]) ** 2
    assert abs(s.mean() - 1 / 3) < 2e-3
    assert abs((s ** 2).mean() - 1 / 6) < 2e-3


def test_grid_pn_deterministic_and_seeded():
    a, b, c = grid_pn(2, 512, 3), grid_pn(2, 512, 3), grid_pn(2, 512, 4)
    assert np.array_equal(a.points, b.points)
    assert not np.array_equal(a.points, c.points)


def test_grid_json_round_trip():
    g = grid_p1(8)
    h = QuadratureGrid.from_json(json.dumps(g.to_json()))
    assert np.allclose(h.points, g.points, atol=1e-15)
    assert np.allclose(h.weights, g.weights, atol=1e-16)


def test_grid_is_read_only():
    g = grid_p1(8)
    with pytest.raises(ValueError):
        g.weights[0] = 1.0


def test_integrate_names_bad_point():
    g = grid_p1(8)
    with np.errstate(divide="ignore"), pytest.raises(ValueError, match="non-finite integrand"):
        integrate(g, lambda X: np.log(np.abs(X[:, 0]) ** 2))


def test_fd_form_exact_on_quadratics(rng):
    k = 3
    M = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
    Q = M @ M.conj().T
    f = lambda W: np.einsum("...i,ij,...j->...", W.conj(), Q, W).real
    H = fd_hermitian_form(f, rng.normal(size=k) + 1j * rng.normal(size=k), 1e-2)
    # H[j, k] approximates d^2 f / dw_j dwbar_k
    assert np.allclose(H, Q.T, atol=1e-9)


@given(st.lists(complex_st, min_size=2, max_size=2))
def test_fd_form_matches_fs_metric(xi):
    xi = np.array(xi)
    H = fd_hermitian_form(lambda W: fs_potential(W), xi, 1e-3)
    assert np.allclose(H, fs_metric(xi), atol=1e-6)


def test_fd_form_is_second_order(rng):
    xi = np.array([0.4 + 0.3j, -0.7j])
    f = lambda W: fs_potential(W) ** 2
    ref = fd_hermitian_form(f, xi, 1e-5)
    e1 = np.abs(fd_hermitian_form(f, xi, 2e-2) - ref).max()
    e2 = np.abs(fd_hermitian_form(f, xi, 1e-2) - ref).max()
    assert 3.5 < e1 / e2 < 4.5


def test_fd_form_batched(rng):
    C = rng.normal(size=(5, 2)) + 1j * rng.normal(size=(5, 2))
    H = fd_hermitian_form(fs_potential, C, 1e-3)
    assert H.shape == (5, 2, 2)
    assert np.allclose(H, fs_metric(C), atol=1e-6)


def test_chart_round_trip(rng):
    X = random_points(rng, 50, 4)
    j, others, xi = best_chart(X)
    assert np.all(np.abs(xi) <= 1 + 1e-12)
    Y = from_chart(j, others, xi)
    assert np.allclose(np.abs(np.sum(Y.conj() * X, axis=1)), 1)


@given(st.integers(0, 2 ** 31))
def test_fs_distance_unitary_invariant(seed):
    rng = np.random.default_rng(seed)
    X, Y = random_points(rng, 2, 3)
    U = random_unitary(rng, 3)
    d = fubini_study_distance(X, Y)
    assert np.allclose(d, fubini_study_distance(X @ U.T, Y @ U.T), atol=1e-12)
    assert 0 <= d[0] <= np.pi / 2 + 1e-12


def test_fs_distance_poles():
    assert np.isclose(fubini_study_distance(normalize([1, 0]), normalize([0, 1]))[0], np.pi / 2)


def test_as_coords_accepts_points():
    p = normalize([1, 1j])
    assert as_coords(p).shape == (1, 2)
    assert as_coords([p, p]).shape == (2, 2)
    with pytest.raises(ValueError):
        as_coords(np.zeros((1, 2)))
