"""Basis enumeration against a brute-force oracle."""

import itertools

import pytest

from polarisim.basis import BasisSet, BasisState, MoleculeLevel, enumerate_basis, excitation

G, E, T = MoleculeLevel.G, MoleculeLevel.E, MoleculeLevel.T


def brute_force_states(n, levels, n_max):
    """Independent enumeration: product over levels and photon numbers."""
    alphabet = (G, E) if levels == 2 else (G, E, T)
    found = set()
    for occ in itertools.product(alphabet, repeat=n):
        mol_exc = sum(1 for lv in occ if lv != G)
        for photons in range(n_max + 1):
            if mol_exc + photons <= n_max:
                found.add((occ, photons))
    return found


def test_single_excitation_count():
    basis = enumerate_basis(8, 2, 1)
    assert len(basis) == 10  # 1 ground + 8 single-molecule + 1 single-photon


@pytest.mark.parametrize(
    "n,levels,n_max,expected",
    [(8, 2, 3, 140), (8, 3, 3, 724)],
)
def test_frozen_sizes(n, levels, n_max, expected):
    basis = enumerate_basis(n, levels, n_max)
    assert len(basis) == expected
    assert len(brute_force_states(n, levels, n_max)) == expected


def test_manifold_dimensions_n8():
    assert enumerate_basis(8, 2, 3).manifold_dimensions() == (1, 9, 37, 93)
    assert enumerate_basis(8, 3, 3).manifold_dimensions() == (1, 17, 129, 577)


@pytest.mark.parametrize("levels", [2, 3])
def test_exhaustive_against_oracle(levels):
    for n in range(1, 8):
        for n_max in range(0, n + 1):
            basis = enumerate_basis(n, levels, n_max)
            oracle = brute_force_states(n, levels, n_max)
            assert len(basis) == len(oracle)
            assert {(s.occupations, s.photons) for s in basis} == oracle


def test_excitation_counting():
    assert excitation(BasisState((G,) * 4, 0)) == 0
    assert excitation(BasisState((E, G, G, G), 2)) == 3
    assert excitation(BasisState((T, T, E, G), 0)) == 3


def test_ordering_excitation_major_then_lexicographic():
    basis = enumerate_basis(3, 3, 2)
    keys = [(s.excitation, s.occupations, s.photons) for s in basis]
    assert keys == sorted(keys)


def test_index_round_trip():
    basis = enumerate_basis(8, 2, 3)
    assert basis.index_of(basis.states[0]) == 0
    assert basis.index_of(basis.states[-1]) == len(basis) - 1
    for i, state in enumerate(basis):
        assert basis.index_of(state) == i


def test_reenumeration_is_bit_identical():
    a = enumerate_basis(6, 3, 3)
    b = enumerate_basis(6, 3, 3)
    assert a.states == b.states


def test_lookup_errors():
    basis = enumerate_basis(4, 2, 2)
    with pytest.raises(KeyError):
        basis.index_of(BasisState((E, E, E, G), 0))  # beyond cutoff
    with pytest.raises(KeyError):
        basis.index_of(BasisState((T, G, G, G), 0))  # T in two-level mode


def test_enumerate_rejects_bad_arguments():
    with pytest.raises(ValueError):
        enumerate_basis(4, 4, 1)
    with pytest.raises(ValueError):
        enumerate_basis(4, 2, 5)  # cutoff above N
    with pytest.raises(ValueError):
        enumerate_basis(0, 2, 0)
    with pytest.raises(ValueError):
        enumerate_basis(4, 2, -1)


def test_json_round_trip():
    basis = enumerate_basis(4, 3, 2)
    clone = BasisSet.from_json(basis.to_json())
    assert clone.states == basis.states
    assert (clone.n_molecules, clone.levels, clone.n_max) == (4, 3, 2)


def test_manifold_slices_cover_basis():
    basis = enumerate_basis(6, 3, 3)
    covered = []
    for m in range(4):
        sl = basis.manifold_slice(m)
        covered.extend(range(sl.start, sl.stop))
        assert all(basis.states[i].excitation == m for i in range(sl.start, sl.stop))
    assert covered == list(range(len(basis)))
