"""Hopping matrices, moments, and the commutator norm bound."""

import numpy as np
import pytest

from bhcone.hopping import (
    HoppingMatrix,
    choose_epsilon,
    hopping_moment,
    iterated_commutator_matrix,
    lightcone_params,
    max_speed,
    nearest_neighbor,
    one_particle_norm,
    power_law,
    schur_bound,
)
from bhcone.lattice import chain


def test_nearest_neighbor_structure_and_moments():
    lat = chain(6)
    J = nearest_neighbor(lat, amplitude=1.0)
    expected = np.diag(np.ones(5), 1) + np.diag(np.ones(5), -1)
    assert np.array_equal(J.matrix, expected)
    # interior sites have two neighbors at distance one
    assert hopping_moment(J, 0) == 2.0
    assert hopping_moment(J, 1) == 2.0
    assert hopping_moment(J, 3) == 2.0
    assert max_speed(J) == 2.0
    assert max_speed(nearest_neighbor(lat, amplitude=0.7)) == pytest.approx(1.4)


def test_power_law_entries():
    lat = chain(5)
    J = power_law(lat, alpha=2.0, amplitude=3.0)
    assert J.matrix[0, 1] == pytest.approx(3.0)
    assert J.matrix[0, 2] == pytest.approx(3.0 / 4.0)
    assert J.matrix[1, 4] == pytest.approx(3.0 / 9.0)
    assert np.all(np.diag(J.matrix) == 0.0)
    with pytest.raises(ValueError):
        power_law(lat, alpha=0.0)


def test_hopping_matrix_validation():
    lat = chain(3)
    with pytest.raises(ValueError):
        HoppingMatrix(lat, np.zeros((2, 2)))
    with pytest.raises(ValueError):
        HoppingMatrix(lat, [[0, 1, 0], [0, 0, 1], [0, 1, 0]])  # not symmetric


def test_iterated_commutator_entries():
    lat = chain(4)
    J = nearest_neighbor(lat)
    F = lambda x: float(x) ** 2
    C2 = iterated_commutator_matrix(J, F, 2)
    # entries J_xy (F(x) - F(y))^2; neighbors (x, x+1) give (2x+1)^2
    assert C2[0, 1] == 1.0 and C2[1, 2] == 9.0 and C2[2, 3] == 25.0
    assert np.array_equal(C2, C2.T)
    C1 = iterated_commutator_matrix(J, F, 1)
    assert np.array_equal(C1, -C1.T)
    assert np.array_equal(iterated_commutator_matrix(J, F, 0), J.matrix)


def test_one_particle_norm_matches_dense_eigensolve():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n = rng.integers(2, 12)
        A = rng.normal(size=(n, n))
        H = A + A.T
        assert one_particle_norm(H) == pytest.approx(
            np.abs(np.linalg.eigvalsh(H)).max(), rel=1e-12
        )
        K = A - A.T
        assert one_particle_norm(K) == pytest.approx(
            np.abs(np.linalg.eigvals(K)).max(), rel=1e-9, abs=1e-12
        )
    with pytest.raises(ValueError):
        one_particle_norm(np.array([[0.0, 1.0], [2.0, 0.0]]))


def test_schur_bound_dominates_spectral_norm():
    rng = np.random.default_rng(17)
    for _ in range(30):
        n = rng.integers(2, 15)
        A = rng.normal(size=(n, n))
        H = A + A.T
        assert schur_bound(H) >= one_particle_norm(H) - 1e-12


def test_commutator_norm_bounded_by_first_moment():
    # ||[J, F]|| <= kappa^(1) for every 1-Lipschitz function of position
    rng = np.random.default_rng(41)
    for trial in range(25):
        n = int(rng.integers(4, 20))
        lat = chain(n)
        if trial % 2:
            J = nearest_neighbor(lat, amplitude=float(rng.uniform(0.2, 2.0)))
        else:
            J = power_law(lat, alpha=float(rng.uniform(2.0, 4.0)))
        # random 1-Lipschitz profile: increments bounded by the spacing
        incr = rng.uniform(-1.0, 1.0, size=n - 1)
        prof = np.concatenate([[0.0], np.cumsum(incr)])
        comm = iterated_commutator_matrix(J, lambda x: prof[x], 1)
        kappa1 = hopping_moment(J, 1)
        assert one_particle_norm(comm) <= kappa1 + 1e-10


def test_higher_commutators_bounded_by_matching_moment():
    # the Schur row-sum bound gives ||ad^k|| <= (sup slope)^k kappa^(k)
    # exactly when the profile is linear; check the chain of inequalities
    lat = chain(12)
    J = power_law(lat, alpha=3.0)
    slope = 0.35
    for k in (1, 2, 3):
        comm = iterated_commutator_matrix(J, lambda x: slope * x, k)
        bound = slope**k * hopping_moment(J, k)
        assert one_particle_norm(comm) <= bound + 1e-12
        assert schur_bound(comm) == pytest.approx(bound, rel=1e-12)


def test_zero_hopping_gives_zero_commutators():
    lat = chain(5)
    J = HoppingMatrix(lat, np.zeros((5, 5)))
    assert max_speed(J) == 0.0
    assert one_particle_norm(iterated_commutator_matrix(J, float, 1)) == 0.0


def test_epsilon_choice_and_front_speed():
    eps = choose_epsilon(v=2.2, v_max=2.0)
    assert eps == pytest.approx(0.2 / 4.4)
    assert choose_epsilon(v=100.0, v_max=1.0) == 0.25
    p = lightcone_params(v=2.2, v_max=2.0, s=8.0, r_min_x=2.0)
    assert p.v_prime == pytest.approx((1 - eps) * 2.2)
    assert p.v_max < p.v_prime < p.v
    with pytest.raises(ValueError):
        choose_epsilon(v=1.0, v_max=2.0)
    with pytest.raises(ValueError):
        choose_epsilon(v=2.0, v_max=2.0)
