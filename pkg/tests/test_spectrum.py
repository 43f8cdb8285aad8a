"""Spectrum classification against analytic ladder structure for N = 8."""

import math
from collections import Counter

import numpy as np
import pytest

from polarisim.basis import enumerate_basis
from polarisim.combinatorics import dark_state_count, rabi_splitting
from polarisim.operators import (
    ModelParameters,
    build_observables,
    build_tc_hamiltonian,
    build_three_level_hamiltonian,
)
from polarisim.sparse import SparseOperator
from polarisim.spectrum import (
    NonHermitianError,
    StateGroup,
    classify_eigenstates,
    diagonalize_hermitian,
    ladder_export,
)

OMEGA = 4.3
G_C = 0.5 / math.sqrt(8)


@pytest.fixture(scope="module")
def classified_n8():
    basis = enumerate_basis(8, 2, 3)
    params = ModelParameters.with_collective_coupling(8, OMEGA, OMEGA, 0.5)
    h = build_tc_hamiltonian(params, basis)
    obs = build_observables(basis)
    w, v = diagonalize_hermitian(h)
    return h, obs, classify_eigenstates(w, v, obs, omega_ref=OMEGA)


def ladder_count_oracle(n, n_exc, s2):
    """Dark states with cooperation number S split into one sublevel per extra
    excitation: count = N_DS(N, N/2 − S) × (N_exc − (N/2 − S) + 1)."""
    progenitor = (n - s2) // 2
    return dark_state_count(n, progenitor) * (n_exc - progenitor + 1)


def test_diagonal_matrix_returns_sorted_diagonal():
    diag = [3.0, -1.0, 2.0, 0.0]
    w, v = diagonalize_hermitian(SparseOperator.from_diagonal(diag))
    assert w == pytest.approx(sorted(diag))
    assert np.abs(np.abs(v).sum(axis=0) - 1).max() < 1e-14


def test_jaynes_cummings_block():
    basis = enumerate_basis(1, 2, 1)
    params = ModelParameters(1, OMEGA, OMEGA, 0.3)
    w, _ = diagonalize_hermitian(build_tc_hamiltonian(params, basis))
    assert w == pytest.approx([0.0, OMEGA - 0.3, OMEGA + 0.3], abs=1e-12)


def test_rejects_non_hermitian():
    bad = SparseOperator.from_entries(2, [0], [1], [1.0])
    with pytest.raises(NonHermitianError):
        diagonalize_hermitian(bad)


def test_eigen_residuals_and_orthonormality(classified_n8):
    h, _, _ = classified_n8
    w, v = diagonalize_hermitian(h)
    scale = np.abs(w).max()
    residual = np.linalg.norm(h.dense() @ v - v * w, axis=0).max()
    assert residual <= 1e-10 * scale
    assert np.abs(v.conj().T @ v - np.eye(h.dim)).max() <= 1e-10


def test_manifold_one_structure(classified_n8):
    _, _, cl = classified_n8
    recs = [r for r in cl.records if r.n_exc == 1]
    assert len(recs) == 9
    shifts = sorted(round(r.relative_shift, 9) for r in recs)
    assert shifts == [-0.5] + [0.0] * 7 + [0.5]
    counter = Counter(r.group for r in recs)
    assert counter[StateGroup.MULTI_POLARITON] == 2
    assert counter[StateGroup.DARK] == 7
    assert all(r.s == 4.0 for r in recs if r.group is StateGroup.MULTI_POLARITON)
    assert all(r.s == 3.0 for r in recs if r.group is StateGroup.DARK)


def test_group_census_matches_paper_and_oracle(classified_n8):
    _, _, cl = classified_n8
    counter = Counter((r.n_exc, r.group, r.s) for r in cl.records)
    assert counter[(0, StateGroup.GROUND, 4.0)] == 1
    assert counter[(2, StateGroup.MULTI_POLARITON, 4.0)] == 3
    assert counter[(2, StateGroup.DARK_POLARITON, 3.0)] == 14  # 2(N-1)
    assert counter[(2, StateGroup.DARK, 2.0)] == 20            # N(N-3)/2
    assert counter[(3, StateGroup.MULTI_POLARITON, 4.0)] == 4
    assert counter[(3, StateGroup.DARK_POLARITON, 3.0)] == 21
    assert counter[(3, StateGroup.DARK_POLARITON, 2.0)] == 40
    assert counter[(3, StateGroup.DARK, 1.0)] == 28
    # ladder-counting oracle over every dark-polariton sector
    for n_exc in (2, 3):
        for s2 in range(2, 8, 2):
            s = s2 / 2.0
            expected = ladder_count_oracle(8, n_exc, s2)
            got = counter.get((n_exc, StateGroup.DARK_POLARITON, s), 0)
            got += counter.get((n_exc, StateGroup.DARK, s), 0)
            if s2 // 2 == 4 - n_exc:  # the manifold's own dark states
                assert counter[(n_exc, StateGroup.DARK, s)] == dark_state_count(8, n_exc)
            if 4 - n_exc < s < 4:
                assert got == expected


def test_multi_polariton_count_scales_with_n_exc(classified_n8):
    _, _, cl = classified_n8
    counter = Counter((r.n_exc, r.group) for r in cl.records)
    for n_exc in (1, 2, 3):
        assert counter[(n_exc, StateGroup.MULTI_POLARITON)] == n_exc + 1


def test_dark_states_have_no_photon_character(classified_n8):
    _, _, cl = classified_n8
    for rec in cl.records:
        if rec.group in (StateGroup.DARK, StateGroup.GROUND):
            assert rec.photon_frac <= 1e-8
        else:
            assert rec.photon_frac > 1e-8
        assert 0.0 <= rec.photon_frac <= 1.0


def test_rabi_gaps_match_formula(classified_n8):
    _, _, cl = classified_n8
    # UP - LP at N_exc = 1 equals the S = 4 splitting formula
    polaritons = sorted(
        r.eigenvalue for r in cl.records
        if r.n_exc == 1 and r.group is StateGroup.MULTI_POLARITON
    )
    assert polaritons[-1] - polaritons[0] == pytest.approx(
        rabi_splitting(G_C, 4, 0.0), abs=1e-9
    )
    # S = 3 dark-polariton branch gap at N_exc = 2
    branch = sorted(
        r.eigenvalue for r in cl.records
        if r.n_exc == 2 and r.group is StateGroup.DARK_POLARITON
    )
    assert branch[-1] - branch[0] == pytest.approx(
        rabi_splitting(G_C, 3, 0.0), abs=1e-9
    )
    assert branch[-1] - branch[0] == pytest.approx(math.sqrt(0.75), abs=1e-9)


def test_ladder_export_structure(classified_n8):
    _, _, cl = classified_n8
    ladder = ladder_export(cl.records)
    totals = {}
    for row in ladder.rows:
        totals[row["n_exc"]] = totals.get(row["n_exc"], 0) + row["multiplicity"]
    assert totals == {0: 1, 1: 9, 2: 37, 3: 93}
    assert ladder.degeneracy_counts[(0, 0.0)] == 1
    assert ladder.degeneracy_counts[(1, 0.0)] == 7
    assert ladder.degeneracy_counts[(1, -0.5)] == 1
    assert ladder.degeneracy_counts[(1, 0.5)] == 1
    # shift-zero cluster of manifold 2 contains 20 dark + 1 multi polariton
    assert ladder.degeneracy_counts[(2, 0.0)] == 21
    rows2 = [r for r in ladder.rows if r["n_exc"] == 2 and abs(r["shift_eV"]) < 1e-9]
    assert sorted((r["group"].value, r["multiplicity"]) for r in rows2) == [
        ("dark", 20),
        ("multi_polariton", 1),
    ]


def test_ladder_csv_round_trip(classified_n8, tmp_path):
    _, _, cl = classified_n8
    ladder = ladder_export(cl.records)
    path = tmp_path / "ladder.csv"
    ladder.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "n_exc,shift_eV,multiplicity,group,S,photon_frac,t_frac"
    assert len(lines) == len(ladder.rows) + 1
    assert ladder.to_json()  # serializes without error


def test_classification_invariant_under_molecule_relabeling():
    # Relabeling molecules permutes basis states; every collective operator
    # must map onto itself exactly under that permutation, which makes the
    # classification manifestly label-independent.
    from polarisim.basis import BasisState

    basis = enumerate_basis(4, 2, 2)
    obs = build_observables(basis)
    h = build_tc_hamiltonian(ModelParameters(4, OMEGA, OMEGA, 0.2), basis)
    relabel = (2, 0, 3, 1)
    perm = np.array(
        [
            basis.index_of(
                BasisState(tuple(s.occupations[relabel[m]] for m in range(4)), s.photons)
            )
            for s in basis.states
        ]
    )
    for op in (h, obs.s_squared, obs.n_exc, obs.n_phot):
        dense = op.dense()
        assert np.array_equal(dense[np.ix_(perm, perm)], dense)


def test_three_level_manifold_census():
    basis = enumerate_basis(8, 3, 3)
    params = ModelParameters.with_collective_coupling(
        8, OMEGA, OMEGA, 0.5, omega_tg=3.9, c_et=0.05
    )
    h = build_three_level_hamiltonian(params, basis)
    obs = build_observables(basis)
    w, v = diagonalize_hermitian(h)
    cl = classify_eigenstates(w, v, obs, omega_ref=OMEGA)
    counter = Counter((r.n_exc, r.group) for r in cl.records)
    # totals per manifold match the basis dimensions
    totals = Counter()
    for rec in cl.records:
        totals[rec.n_exc] += 1
    assert totals == Counter({0: 1, 1: 17, 2: 129, 3: 577})
    # the asymmetric E and T combinations stay photonless: 2(N-1) of them
    assert counter[(1, StateGroup.DARK)] == 14
    assert counter[(1, StateGroup.UNCLASSIFIED)] == 3
    for rec in cl.records:
        assert rec.s is None or rec.n_exc == 0
        if rec.n_exc:
            assert rec.t_frac is not None and 0.0 <= rec.t_frac <= 1.0
