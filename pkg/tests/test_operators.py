"""Hamiltonian and observable assembly: exact structure and small oracles."""

import math

import numpy as np
import pytest

from polarisim.basis import BasisState, MoleculeLevel, enumerate_basis
from polarisim.operators import (
    ModelParameters,
    build_annihilation,
    build_observables,
    build_tc_hamiltonian,
    build_three_level_hamiltonian,
    expectation,
    tc_s2_commutator_is_exactly_zero,
)
from polarisim.sparse import SparseOperator

G, E, T = MoleculeLevel.G, MoleculeLevel.E, MoleculeLevel.T


@pytest.fixture(scope="module")
def n8_setup():
    basis = enumerate_basis(8, 2, 3)
    params = ModelParameters.with_collective_coupling(8, 4.3, 4.3, 0.5)
    return basis, params, build_tc_hamiltonian(params, basis), build_observables(basis)


def test_single_molecule_jaynes_cummings_doublet():
    basis = enumerate_basis(1, 2, 1)
    params = ModelParameters(1, omega_eg=4.3, omega_c=4.3, g_c=0.2)
    h = build_tc_hamiltonian(params, basis)
    eigs = np.linalg.eigvalsh(h.dense())
    assert eigs == pytest.approx([0.0, 4.1, 4.5], abs=1e-12)


def test_collective_rabi_gap_n8(n8_setup):
    basis, params, h, _ = n8_setup
    sl = basis.manifold_slice(1)
    eigs = np.linalg.eigvalsh(h.dense()[sl, sl])
    assert eigs[-1] - eigs[0] == pytest.approx(1.0, abs=1e-9)  # 2 g_c √N


def test_uncoupled_limit_is_diagonal_bookkeeping():
    basis = enumerate_basis(4, 2, 2)
    params = ModelParameters(4, omega_eg=4.0, omega_c=3.5, g_c=0.0)
    h = build_tc_hamiltonian(params, basis).dense()
    assert np.count_nonzero(h - np.diag(np.diag(h))) == 0
    for i, state in enumerate(basis):
        assert h[i, i] == state.count(E) * 4.0 + state.photons * 3.5


def test_hermiticity_is_exact(n8_setup):
    _, _, h, _ = n8_setup
    assert h.is_hermitian()
    assert (h - h.dagger()).max_abs() == 0.0


def test_commutes_with_excitation_number_exactly(n8_setup):
    basis, _, h, obs = n8_setup
    assert h.commutator(obs.n_exc).max_abs() == 0.0


def test_tc_s2_commutator_exact(n8_setup):
    basis, _, h, obs = n8_setup
    assert tc_s2_commutator_is_exactly_zero(basis)
    # and the float residual is at rounding level
    assert h.commutator(obs.s_squared).max_abs() < 1e-12


def test_block_structure_under_canonical_ordering(n8_setup):
    basis, _, h, _ = n8_setup
    rows, cols, _ = h.entries()
    manifold = np.array([s.excitation for s in basis])
    assert np.all(manifold[rows] == manifold[cols])


def test_three_level_hand_assembled_block():
    basis = enumerate_basis(1, 3, 1)
    params = ModelParameters(1, omega_eg=4.3, omega_c=4.3, g_c=0.01,
                             omega_tg=3.9, c_et=0.05)
    h = build_three_level_hamiltonian(params, basis).dense().real
    # canonical order: |g,0>, |g,1>, |e,0>, |t,0>
    e0 = basis.index_of(BasisState((E,), 0))
    g1 = basis.index_of(BasisState((G,), 1))
    t0 = basis.index_of(BasisState((T,), 0))
    expected = np.zeros((4, 4))
    expected[e0, e0] = 4.3
    expected[g1, g1] = 4.3
    expected[t0, t0] = 3.9
    expected[e0, g1] = expected[g1, e0] = 0.01
    expected[e0, t0] = expected[t0, e0] = 0.05
    assert np.array_equal(h, expected)


def test_three_level_decoupled_t_sectors():
    # c_et = 0: spectrum is the union of TC spectra shifted by k·omega_tg.
    n, cutoff = 3, 2
    basis3 = enumerate_basis(n, 3, cutoff)
    params3 = ModelParameters(n, 4.3, 4.3, 0.1, omega_tg=3.9, c_et=0.0)
    eigs3 = np.sort(np.linalg.eigvalsh(build_three_level_hamiltonian(params3, basis3).dense()))

    params2 = ModelParameters(n, 4.3, 4.3, 0.1)
    expected = []
    import itertools
    for t_pattern in itertools.product((False, True), repeat=n):
        k = sum(t_pattern)
        if k > cutoff:
            continue
        # remaining molecules form a TC system with reduced cutoff
        rest = n - k
        if rest == 0:
            expected.append(k * 3.9)
            continue
        sub_basis = enumerate_basis(rest, 2, cutoff - k)
        sub_params = ModelParameters(rest, 4.3, 4.3, 0.1)
        sub_h = build_tc_hamiltonian(sub_params, sub_basis).dense()
        expected.extend(np.linalg.eigvalsh(sub_h) + k * 3.9)
    assert eigs3 == pytest.approx(np.sort(expected), abs=1e-10)


def test_three_level_commutes_with_n_exc():
    basis = enumerate_basis(8, 3, 3)
    params = ModelParameters.with_collective_coupling(
        8, 4.3, 4.3, 0.5, omega_tg=3.9, c_et=0.05
    )
    h = build_three_level_hamiltonian(params, basis)
    obs = build_observables(basis)
    assert h.commutator(obs.n_exc).max_abs() == 0.0
    assert h.is_hermitian()


def test_three_level_requires_three_level_basis():
    basis2 = enumerate_basis(2, 2, 1)
    params = ModelParameters(2, 4.3, 4.3, 0.1, omega_tg=3.9, c_et=0.05)
    with pytest.raises(ValueError):
        build_three_level_hamiltonian(params, basis2)
    with pytest.raises(ValueError):
        build_tc_hamiltonian(params, enumerate_basis(3, 2, 1))  # N mismatch


def test_n_exc_identity(n8_setup):
    _, _, _, obs = n8_setup
    total = obs.n_e + obs.n_t + obs.n_phot
    assert (total - obs.n_exc).max_abs() == 0.0


def test_s_squared_on_symmetric_and_antisymmetric_states():
    basis = enumerate_basis(2, 2, 1)
    obs = build_observables(basis)
    up_one = basis.index_of(BasisState((E, G), 0))
    up_two = basis.index_of(BasisState((G, E), 0))
    sym = np.zeros(len(basis), dtype=complex)
    sym[[up_one, up_two]] = 1 / math.sqrt(2)
    anti = np.zeros(len(basis), dtype=complex)
    anti[up_one], anti[up_two] = 1 / math.sqrt(2), -1 / math.sqrt(2)
    assert obs.s_squared.expectation_value(sym).real == pytest.approx(2.0)  # S=1
    assert obs.s_squared.expectation_value(anti).real == pytest.approx(0.0)  # singlet


def test_s_squared_symmetric_one_excitation_any_n():
    for n in (2, 4, 8):
        basis = enumerate_basis(n, 2, 1)
        obs = build_observables(basis)
        vec = np.zeros(len(basis), dtype=complex)
        for i, state in enumerate(basis):
            if state.count(E) == 1 and state.photons == 0:
                vec[i] = 1 / math.sqrt(n)
        s = n / 2
        assert obs.s_squared.expectation_value(vec).real == pytest.approx(s * (s + 1))


def test_expectation_values():
    basis = enumerate_basis(2, 2, 2)
    obs = build_observables(basis)
    dim = len(basis)
    rho = np.zeros((dim, dim), dtype=complex)
    one_photon = basis.index_of(BasisState((G, G), 1))
    rho[one_photon, one_photon] = 1.0
    assert expectation(SparseOperator.identity(dim), rho) == pytest.approx(1.0)
    assert expectation(obs.n_phot, rho) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        expectation(obs.n_phot, np.eye(3))


def test_annihilation_matrix_elements():
    basis = enumerate_basis(1, 2, 1)
    a = build_annihilation(basis).dense()
    g0 = basis.index_of(BasisState((G,), 0))
    g1 = basis.index_of(BasisState((G,), 1))
    assert a[g0, g1] == 1.0
    assert np.count_nonzero(a) == 1


def test_matrix_market_round_trip(tmp_path, n8_setup):
    import scipy.io

    _, _, h, _ = n8_setup
    path = tmp_path / "h.mtx"
    h.to_matrix_market(path)
    back = scipy.io.mmread(path)
    assert np.allclose(back.toarray(), h.dense())
