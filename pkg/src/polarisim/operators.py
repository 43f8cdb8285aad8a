"""Hamiltonians and observables as sparse operators on a truncated basis.

Energies are in eV throughout and times in fs; propagators divide by
``HBAR_EV_FS``. All builders produce exactly Hermitian matrices: symmetric
entry pairs are written from the same float, and photon ladder factors follow
the standard bosonic convention √(n+1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import BasisSet, MoleculeLevel
from .sparse import SparseOperator

#: Reduced Planck constant in eV·fs.
HBAR_EV_FS = 0.6582119569

_G = MoleculeLevel.G
_E = MoleculeLevel.E
_T = MoleculeLevel.T


@dataclass(frozen=True)
class ModelParameters:
    """Energies (eV) of the ensemble-cavity model.

    `g_c` is the single-molecule cavity coupling; for a collective coupling
    fixed at g√N use :meth:`with_collective_coupling`. `omega_tg` and `c_et`
    are required only for the three-level model.
    """

    n_molecules: int
    omega_eg: float
    omega_c: float
    g_c: float
    omega_tg: float | None = None
    c_et: float | None = None

    def __post_init__(self):
        if self.n_molecules < 1:
            raise ValueError(f"need at least one molecule, got {self.n_molecules}")
        numeric = [self.omega_eg, self.omega_c, self.g_c]
        numeric += [x for x in (self.omega_tg, self.c_et) if x is not None]
        if not all(math.isfinite(x) for x in numeric):
            raise ValueError("all energies must be finite")
        if self.g_c < 0:
            raise ValueError(f"coupling strength must be non-negative, got {self.g_c}")
        if (self.omega_tg is None) != (self.c_et is None):
            raise ValueError("omega_tg and c_et must be given together")

    @property
    def is_three_level(self) -> bool:
        return self.omega_tg is not None

    @classmethod
    def with_collective_coupling(
        cls,
        n_molecules: int,
        omega_eg: float,
        omega_c: float,
        collective_coupling: float,
        omega_tg: float | None = None,
        c_et: float | None = None,
    ) -> "ModelParameters":
        """Fix g_c√N = collective_coupling, scaling g_c with the ensemble size."""
        return cls(
            n_molecules=n_molecules,
            omega_eg=omega_eg,
            omega_c=omega_c,
            g_c=collective_coupling / math.sqrt(n_molecules),
            omega_tg=omega_tg,
            c_et=c_et,
        )


@dataclass(frozen=True)
class ObservableSet:
    """Standard observables on a basis.

    `s_plus`/`s_minus` are the collective raising/lowering operators projected
    onto the truncated space (raising out of the top manifold is dropped);
    `s_squared` is assembled directly within each manifold and is exact under
    truncation. For three-level bases the collective spin algebra acts on the
    g/e subspace only; molecules parked in T are spectators.
    """

    basis: BasisSet
    n_phot: SparseOperator
    n_e: SparseOperator
    n_t: SparseOperator
    n_exc: SparseOperator
    s_plus: SparseOperator
    s_minus: SparseOperator
    s_squared: SparseOperator
    sigma_minus: tuple[SparseOperator, ...]


def _check_basis(params: ModelParameters, basis: BasisSet, levels: int) -> None:
    if basis.n_molecules != params.n_molecules:
        raise ValueError(
            f"molecule count mismatch: parameters have N={params.n_molecules}, "
            f"basis has N={basis.n_molecules}"
        )
    if basis.levels != levels:
        raise ValueError(f"expected a {levels}-level basis, got {basis.levels}-level")


def _cavity_coupling_entries(basis: BasisSet, g_c: float, rows, cols, vals) -> None:
    # g_c (a† S⁻ + a S⁺): from each E-occupation connect to the state with
    # that molecule de-excited and one extra photon. Both triangle entries are
    # written from the same float, so Hermiticity is exact.
    for i, state in enumerate(basis.states):
        v = g_c * math.sqrt(state.photons + 1)
        raised = state.photons + 1
        for mol, lv in enumerate(state.occupations):
            if lv is not _E:
                continue
            occ = list(state.occupations)
            occ[mol] = _G
            j = basis.index[(tuple(occ), raised)]
            rows += (i, j)
            cols += (j, i)
            vals += (v, v)


def build_tc_hamiltonian(params: ModelParameters, basis: BasisSet) -> SparseOperator:
    """Ensemble Hamiltonian for two-level molecules in the rotating-wave form.

    Diagonal: (#E)·ω_eg + n·ω_c. Off-diagonal: g_c√(n+1) between each pair of
    states related by one molecular de-excitation and one extra photon. The
    result commutes with the total excitation number exactly.
    """
    _check_basis(params, basis, levels=2)
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for i, state in enumerate(basis.states):
        diag = state.count(_E) * params.omega_eg + state.photons * params.omega_c
        if diag != 0.0:
            rows.append(i)
            cols.append(i)
            vals.append(diag)
    _cavity_coupling_entries(basis, params.g_c, rows, cols, vals)
    return SparseOperator.from_entries(len(basis), rows, cols, vals)


def build_three_level_hamiltonian(
    params: ModelParameters, basis: BasisSet
) -> SparseOperator:
    """Three-level extension: adds ω_tg per T occupation and c_et E↔T flips.

    The T level is optically dark (no cavity coupling); only the constant
    coupling c_et connects it to E within each molecule.
    """
    if not params.is_three_level:
        raise ValueError("parameters carry no three-level fields (omega_tg, c_et)")
    _check_basis(params, basis, levels=3)
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for i, state in enumerate(basis.states):
        diag = (
            state.count(_E) * params.omega_eg
            + state.count(_T) * params.omega_tg
            + state.photons * params.omega_c
        )
        if diag != 0.0:
            rows.append(i)
            cols.append(i)
            vals.append(diag)
        # c_et (S_t⁺ + S_t⁻): flip each E to T at fixed photon number.
        for mol, lv in enumerate(state.occupations):
            if lv is not _E:
                continue
            occ = list(state.occupations)
            occ[mol] = _T
            j = basis.index[(tuple(occ), state.photons)]
            rows += (i, j)
            cols += (j, i)
            vals += (params.c_et, params.c_et)
    _cavity_coupling_entries(basis, params.g_c, rows, cols, vals)
    return SparseOperator.from_entries(len(basis), rows, cols, vals)


def build_annihilation(basis: BasisSet) -> SparseOperator:
    """Photon annihilation operator a (exact under excitation truncation)."""
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for i, state in enumerate(basis.states):
        if state.photons == 0:
            continue
        j = basis.index[(state.occupations, state.photons - 1)]
        rows.append(j)
        cols.append(i)
        vals.append(math.sqrt(state.photons))
    return SparseOperator.from_entries(len(basis), rows, cols, vals)


def build_observables(basis: BasisSet) -> ObservableSet:
    """Assemble photon/excitation counters, collective spin operators and the
    per-molecule lowering operators on `basis`."""
    dim = len(basis)
    n_mol = basis.n_molecules

    n_phot = SparseOperator.from_diagonal([s.photons for s in basis.states])
    n_e = SparseOperator.from_diagonal([s.count(_E) for s in basis.states])
    n_t = SparseOperator.from_diagonal([s.count(_T) for s in basis.states])
    n_exc = SparseOperator.from_diagonal([s.excitation for s in basis.states])

    sp_rows: list[int] = []
    sp_cols: list[int] = []
    sp_vals: list[float] = []
    sq_rows: list[int] = []
    sq_cols: list[int] = []
    sq_vals: list[float] = []
    sm_entries: list[tuple[list[int], list[int], list[float]]] = [
        ([], [], []) for _ in range(n_mol)
    ]

    for i, state in enumerate(basis.states):
        occ = state.occupations
        e_idx = [m for m, lv in enumerate(occ) if lv is _E]
        g_idx = [m for m, lv in enumerate(occ) if lv is _G]

        # Collective raising S⁺ = Σ|e⟩⟨g| (dropped when it leaves the cutoff).
        if state.excitation < basis.n_max:
            for mol in g_idx:
                raised = list(occ)
                raised[mol] = _E
                j = basis.index[(tuple(raised), state.photons)]
                sp_rows.append(j)
                sp_cols.append(i)
                sp_vals.append(1.0)

        # Per-molecule lowering σ⁻ = |g⟩⟨e|.
        for mol in e_idx:
            lowered = list(occ)
            lowered[mol] = _G
            j = basis.index[(tuple(lowered), state.photons)]
            rr, cc, vv = sm_entries[mol]
            rr.append(j)
            cc.append(i)
            vv.append(1.0)

        # S² = S⁻S⁺ + S_z(S_z + 1) on the g/e subspace, manifold-exact:
        # S⁻S⁺ contributes #G on the diagonal plus one unit per (E→G, G→E)
        # exchange pair; S_z = (#E − #G)/2 with T molecules as spectators.
        sz = 0.5 * (len(e_idx) - len(g_idx))
        sq_rows.append(i)
        sq_cols.append(i)
        sq_vals.append(len(g_idx) + sz * (sz + 1.0))
        for mol_e in e_idx:
            for mol_g in g_idx:
                swapped = list(occ)
                swapped[mol_e] = _G
                swapped[mol_g] = _E
                j = basis.index[(tuple(swapped), state.photons)]
                sq_rows.append(j)
                sq_cols.append(i)
                sq_vals.append(1.0)

    s_plus = SparseOperator.from_entries(dim, sp_rows, sp_cols, sp_vals)
    return ObservableSet(
        basis=basis,
        n_phot=n_phot,
        n_e=n_e,
        n_t=n_t,
        n_exc=n_exc,
        s_plus=s_plus,
        s_minus=s_plus.dagger(),
        s_squared=SparseOperator.from_entries(dim, sq_rows, sq_cols, sq_vals),
        sigma_minus=tuple(
            SparseOperator.from_entries(dim, rr, cc, vv) for rr, cc, vv in sm_entries
        ),
    )


def tc_s2_commutator_is_exactly_zero(basis: BasisSet) -> bool:
    """Exact-arithmetic proof that the two-level Hamiltonian commutes with S².

    The float commutator of the assembled matrices only vanishes to rounding.
    Here the Hamiltonian is split into pieces with a common irrational factor:
    the diagonal part trivially commutes (S² preserves #E and the photon
    number), and the coupling g_c·√(n+1)·B_n per photon transition n→n+1
    commutes iff the integer matrix B_n commutes with 4S² over the integers.
    """
    import scipy.sparse as _sp

    if basis.levels != 2:
        raise ValueError("exact S² commutation only holds for two-level bases")
    dim = len(basis)
    obs = build_observables(basis)
    rows, cols, vals = obs.s_squared.entries()
    s2_scaled = _sp.csr_array(
        (np.round(vals.real * 4).astype(np.int64), (rows, cols)), shape=(dim, dim)
    )
    if np.abs(vals.real * 4 - np.round(vals.real * 4)).max() > 0:
        return False
    # Structural check that S² stays within (#E, n) sectors, which makes the
    # diagonal part of the Hamiltonian commute term by term.
    counts_e = np.array([s.count(_E) for s in basis.states])
    photons = np.array([s.photons for s in basis.states])
    if np.any(counts_e[rows] != counts_e[cols]) or np.any(photons[rows] != photons[cols]):
        return False
    for n in range(basis.n_max):
        b_rows: list[int] = []
        b_cols: list[int] = []
        for i, state in enumerate(basis.states):
            if state.photons != n:
                continue
            for mol, lv in enumerate(state.occupations):
                if lv is not _E:
                    continue
                occ = list(state.occupations)
                occ[mol] = _G
                b_rows.append(basis.index[(tuple(occ), n + 1)])
                b_cols.append(i)
        b_n = _sp.csr_array(
            (np.ones(len(b_rows), dtype=np.int64), (b_rows, b_cols)), shape=(dim, dim)
        )
        if (b_n @ s2_scaled - s2_scaled @ b_n).count_nonzero() != 0:
            return False
    return True


def expectation(op: SparseOperator, rho: np.ndarray, hermitian: bool = True) -> float:
    """Tr(op·ρ) for a density matrix given as a dense array.

    For Hermitian operators the imaginary part must fall below 1e-10; it is
    checked and discarded. Pass hermitian=False to get the complex trace.
    """
    rho = np.asarray(rho)
    if rho.shape != (op.dim, op.dim):
        raise ValueError(f"dimension mismatch: operator {op.dim}, rho {rho.shape}")
    rows, cols, vals = op.entries()
    value = complex(np.dot(vals, rho[cols, rows]))
    if not hermitian:
        return value
    if abs(value.imag) > 1e-10:
        raise ValueError(
            f"expectation of supposedly Hermitian operator has imaginary part "
            f"{value.imag:.3e}"
        )
    return value.real
