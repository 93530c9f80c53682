"""Fixed-number sector: basis, diagonal observables, second quantization."""

import math
from fractions import Fraction

import numpy as np
import pytest

from bhcone.fock import (
    SparseHermitian,
    StateVector,
    apply_function,
    enumerate_sector,
    local_number,
    mott_state,
    second_quantize,
    second_quantize_diagonal,
    spectral_projector,
    transfer_operator,
)

SQRT2 = math.sqrt(2.0)


def test_sector_dimensions_are_binomial():
    # dim = C(N + M - 1, N)
    assert enumerate_sector(10, 5).dim == 2002
    assert enumerate_sector(6, 3).dim == 56
    assert enumerate_sector(4, 0).dim == 1
    assert enumerate_sector(1, 7).dim == 1
    with pytest.raises(ValueError):
        enumerate_sector(30, 30, dimension_cap=10_000)


def test_occupations_and_index_roundtrip():
    sec = enumerate_sector(5, 3)
    occ = sec.occupations
    assert occ.shape == (sec.dim, 5)
    assert np.all(occ.sum(axis=1) == 3)
    assert len({tuple(row) for row in occ}) == sec.dim
    for i in range(sec.dim):
        assert sec.index_of(occ[i]) == i
    with pytest.raises(ValueError):
        sec.index_of((3, 0, 0, 0, 1))


def test_mott_state_is_a_basis_vector():
    sec = enumerate_sector(4, 4)
    psi = mott_state(sec, (1, 1, 1, 1))
    assert psi.norm() == 1.0
    idx = sec.index_of((1, 1, 1, 1))
    assert psi.amplitudes[idx] == 1.0
    assert np.count_nonzero(psi.amplitudes) == 1


def test_local_number_counts_and_normalization():
    sec = enumerate_sector(4, 3)
    n01 = local_number(sec, [0, 1])
    assert np.array_equal(n01.counts, sec.occupations[:, :2].sum(axis=1))
    assert n01.expectation(mott_state(sec, (2, 0, 1, 0)).amplitudes) == 2.0
    frac = local_number(sec, [0, 1], normalized=True)
    assert frac.denominator == 3
    assert frac.max() == 1.0 and frac.min() == 0.0


def test_projector_threshold_is_exact_on_boundary_states():
    sec = enumerate_sector(3, 5)
    n0 = local_number(sec, [0], normalized=True)
    # counts/5 >= 0.4 must include count 2 exactly, exclude count 1
    proj = spectral_projector(n0, ">=", 0.4)
    for i, occ in enumerate(sec.occupations):
        assert proj.values[i] == (1.0 if occ[0] >= 2 else 0.0)
    # same threshold as an explicit fraction
    proj2 = spectral_projector(n0, ">=", Fraction(2, 5))
    assert np.array_equal(proj.values, proj2.values)
    # strict comparison flips only the boundary states
    strict = spectral_projector(n0, ">", 0.4)
    flipped = np.flatnonzero(proj.values != strict.values)
    assert all(sec.occupations[i, 0] == 2 for i in flipped)
    with pytest.raises(ValueError):
        spectral_projector(n0 * 1.0, ">=", 0.4)  # scaling drops exact counts


def test_second_quantize_two_site_hand_oracle():
    # basis order (2,0), (1,1), (0,2); hop 0<->1 couples neighbors by sqrt(2)
    sec = enumerate_sector(2, 2)
    H = second_quantize(sec, np.array([[0.0, 1.0], [1.0, 0.0]]))
    expected = np.array(
        [
            [0.0, SQRT2, 0.0],
            [SQRT2, 0.0, SQRT2],
            [0.0, SQRT2, 0.0],
        ],
        dtype=complex,
    )
    assert np.allclose(H.to_dense(), expected, atol=1e-15)


def test_second_quantize_diagonal_matches_occupation_sum():
    sec = enumerate_sector(4, 3)
    fvals = np.array([0.0, 1.5, -2.0, 0.25])
    obs = second_quantize_diagonal(sec, fvals)
    assert np.allclose(obs.values, sec.occupations @ fvals)
    obs2 = second_quantize_diagonal(sec, lambda x: fvals[x])
    assert np.array_equal(obs.values, obs2.values)


def test_transfer_operator_matrix_elements_and_adjoint():
    sec = enumerate_sector(2, 2)
    T = transfer_operator(sec, source=1, target=0).toarray()
    i20 = sec.index_of((2, 0))
    i11 = sec.index_of((1, 1))
    i02 = sec.index_of((0, 2))
    assert T[i20, i11] == pytest.approx(SQRT2)
    assert T[i11, i02] == pytest.approx(SQRT2)
    assert np.count_nonzero(T) == 2
    back = transfer_operator(sec, source=0, target=1).toarray()
    assert np.allclose(back, T.conj().T)
    with pytest.raises(ValueError):
        transfer_operator(sec, 0, 5)


def test_second_quantize_preserves_particle_number_structure():
    rng = np.random.default_rng(9)
    sec = enumerate_sector(4, 2)
    A = rng.normal(size=(4, 4))
    A = A + A.T
    H = second_quantize(sec, A).to_dense()
    assert np.allclose(H, H.conj().T)
    # diagonal part equals the second-quantized diagonal of A
    diag = second_quantize_diagonal(sec, np.diag(A))
    assert np.allclose(np.diag(H).real, diag.values)


def test_sparse_hermitian_rejects_non_hermitian_input():
    sec = enumerate_sector(2, 1)
    with pytest.raises(ValueError):
        SparseHermitian(sec, np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_apply_function_maps_values():
    sec = enumerate_sector(3, 2)
    obs = local_number(sec, [0], normalized=True)
    sq = apply_function(obs, lambda v: v**2)
    assert np.allclose(sq.values, obs.values**2)


def test_observable_algebra_and_state_normalization():
    sec = enumerate_sector(3, 2)
    a = local_number(sec, [0])
    b = local_number(sec, [1, 2])
    total = a + b
    assert np.all(total.values == 2.0)
    amp = np.zeros(sec.dim, dtype=complex)
    amp[0] = 3.0
    psi = StateVector(sec, amp)
    assert psi.norm() == 3.0
    assert psi.normalized().norm() == pytest.approx(1.0)
