import numpy as np
import pytest
from hypothesis import given, strategies as st

from kahler_john._linalg import su_basis, su_matrix
from kahler_john.potentials import (AdmissiblePotential, GridFunction, GroupElement,
                                    HermitianPD, chart_form, cocycle_defect, energy,
                                    energy_quadrature, geodesic_between, geodesic_point,
                                    hamiltonian_bounds, hcma_residual, log_quadratic,
                                    orbit_hessian_defect, potential_of)
from kahler_john.projective import grid_p1, grid_pn, normalize

from conftest import random_hpd, random_points, random_unitary

seeds = st.integers(0, 2 ** 31)


def test_hpd_validation():
    with pytest.raises(ValueError, match="Hermitian"):
        HermitianPD([[1, 1], [0, 1]])
    with pytest.raises(ValueError, match="positive definite"):
        HermitianPD(np.diag([1.0, -1.0]))
    with pytest.raises(ValueError, match="condition"):
        HermitianPD(np.diag([1.0, 1e-13]))


def test_hpd_json_round_trip(rng):
    A = HermitianPD(random_hpd(rng, 3))
    B = HermitianPD.from_json(A.to_json())
    assert np.array_equal(A.matrix, B.matrix)


def test_group_element_singular():
    with pytest.raises(ValueError, match="singular"):
        GroupElement([[1, 2], [2, 4]])


def test_potential_of_group_element(rng):
    g = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    X = random_points(rng, 20, 3)
    ref = np.log(np.sum(np.abs(X @ g.T) ** 2, axis=1))
    assert np.allclose(potential_of(g)(X), ref, atol=1e-12)


def test_energy_closed_form_values():
    assert energy(np.eye(3)) == 0.0
    assert np.isclose(energy(np.diag([np.e ** 2, 1.0])), 1.0)


@given(seeds, st.floats(-3, 3))
def test_energy_scale_covariance(seed, c):
    rng = np.random.default_rng(seed)
    A = HermitianPD(random_hpd(rng, 3, 50.0))
    assert np.isclose(energy(A.scaled(c)), energy(A) + c, atol=1e-12)
    assert np.isclose(AdmissiblePotential(A, c).energy(), energy(A) + c, atol=1e-12)


@given(seeds)
def test_energy_unitary_invariance(seed):
    rng = np.random.default_rng(seed)
    A = random_hpd(rng, 3, 50.0)
    U = random_unitary(rng, 3)
    assert np.isclose(energy(U @ A @ U.conj().T), energy(A), atol=1e-12)


@given(seeds)
def test_energy_homomorphism_closed_form(seed):
    rng = np.random.default_rng(seed)
    g1, g2 = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(2))
    e = lambda g: energy(g.conj().T @ g)
    assert abs(e(g1 @ g2) - e(g1) - e(g2)) < 1e-10


@pytest.mark.parametrize("cond", [1.0, 10.0, 100.0, 300.0])
def test_energy_quadrature_p1(rng, cond):
    A = random_hpd(rng, 2, cond)
    u = AdmissiblePotential(A)
    assert abs(energy_quadrature(u, grid_p1(64)) - energy(A)) < 1e-4


def test_energy_quadrature_resolves_sharp_density_on_finer_grid(rng):
    # at cond 1e3 the density of omega_u is narrower than the 64-node spacing
    A = random_hpd(rng, 2, 1e3)
    u = AdmissiblePotential(A)
    coarse = abs(energy_quadrature(u, grid_p1(64)) - energy(A))
    fine = abs(energy_quadrature(u, grid_p1(128)) - energy(A))
    assert fine < 1e-4 and fine < coarse


def test_energy_quadrature_sign_convention():
    # u = log(e^{2a}|x0|^2 + |x1|^2) has energy a; a sign slip would give -a
    a = 0.4
    u = AdmissiblePotential(np.diag([np.exp(2 * a), 1.0]))
    assert abs(energy_quadrature(u, grid_p1(32)) - a) < 1e-6


def test_energy_quadrature_p2(rng):
    A = random_hpd(rng, 3, 4.0)
    val = energy_quadrature(AdmissiblePotential(A), grid_pn(2, 10_000, 0))
    assert abs(val - energy(A)) < 5e-3


def test_energy_quadrature_leaves_space():
    u = lambda X: -3.0 * np.abs(X[:, 0] * X[:, 1]) ** 2
    with pytest.raises(ValueError, match="path left"):
        energy_quadrature(u, grid_p1(16))


def test_energy_quadrature_non_admissible_constant_shift():
    # a constant c has energy c whatever the route
    assert abs(energy_quadrature(lambda X: np.full(X.shape[0], 0.7), grid_p1(16)) - 0.7) < 1e-12


@given(seeds)
def test_kahler_form_of_admissible_is_positive(seed):
    rng = np.random.default_rng(seed)
    A = random_hpd(rng, 3, 100.0)
    G, H = chart_form(AdmissiblePotential(A), random_points(rng, 5, 3))
    assert np.all(np.linalg.eigvalsh(G + H)[:, 0] > 0)


def test_geodesic_endpoints_and_energy_linearity(rng):
    A0, A1 = random_hpd(rng, 3, 20.0), random_hpd(rng, 3, 20.0)
    H = geodesic_between(A0, A1)
    assert np.allclose(geodesic_point(A0, H, 1.0).matrix, A1, atol=1e-10)
    for t in np.linspace(0, 1, 7):
        e = energy(geodesic_point(A0, H, t))
        assert abs(e - ((1 - t) * energy(A0) + t * energy(A1))) < 1e-10


def test_hamiltonian_bounds_hold(rng):
    for _ in range(10):
        A = random_hpd(rng, 3, 30.0)
        A /= np.linalg.det(A).real ** (1 / 3)
        lo, u, hi = hamiltonian_bounds(A, random_points(rng, 200, 3))
        assert np.all(u - lo >= -1e-8) and np.all(hi - u >= -1e-8)


def test_hamiltonian_bounds_need_unit_det():
    with pytest.raises(ValueError, match="det"):
        hamiltonian_bounds(2 * np.eye(2), np.array([[1.0, 0]]))


@given(seeds)
def test_cocycle_identity(seed):
    rng = np.random.default_rng(seed)
    g1, g2 = (rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)) for _ in range(2))
    assert np.abs(cocycle_defect(g1, g2, random_points(rng, 50, 3))).max() < 1e-10


def test_hcma_residual_on_orbits_and_non_solution(rng):
    basis = su_basis(2)
    g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    Z = su_matrix(rng.normal(size=3), basis)
    pts = [(0.1 + 0.2j, normalize(rng.normal(size=2) + 1j * rng.normal(size=2))) for _ in range(3)]
    assert hcma_residual(g, Z, pts, step=2e-4) < 1e-4
    x = normalize([1, 1])
    pert = hcma_residual(np.eye(2), np.zeros((2, 2)), [(0.0, x)], step=2e-4,
                         extra=lambda s, X: np.abs(s) ** 2 * np.abs(X[..., 1]) ** 2)
    assert pert > 1e-2


def test_orbit_hessian_matches_pullback(rng):
    g = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    Zs = [su_matrix(rng.normal(size=8), su_basis(3)) for _ in range(2)]
    x = normalize(rng.normal(size=3) + 1j * rng.normal(size=3))
    assert orbit_hessian_defect(g, Zs, x) < 1e-4


def test_grid_function(rng):
    g = grid_p1(8)
    f = GridFunction.sample(g, lambda X: np.abs(X[:, 0]) ** 2)
    assert abs(f.integral() - 0.5) < 1e-14
    with pytest.raises(ValueError):
        GridFunction(g, np.zeros(3))


def test_log_quadratic_and_shift(rng):
    A = random_hpd(rng, 2)
    u = AdmissiblePotential(A, 0.3)
    X = random_points(rng, 4, 2)
    assert np.allclose(u(X), log_quadratic(A, X) + 0.3)
    assert np.allclose(AdmissiblePotential(u.as_scaled_matrix())(X), u(X))
    assert isinstance(u(normalize([1, 0])), float)
