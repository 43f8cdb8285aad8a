"""Block diagonalization and classification of ensemble-cavity eigenstates.

Eigenstates are grouped into ground state, dark states (no photonic
character), multi polaritons (maximal cooperation number S = N/2) and dark
polaritons (S < N/2 with photonic character). Degenerate eigenvalue clusters
are resolved by rotating the eigenvectors to simultaneously diagonalize S²
(two-level) or the photon number (three-level), which is exact because these
observables commute with the Hamiltonian inside each cluster.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse.csgraph

from .basis import BasisSet
from .operators import ObservableSet
from .sparse import SparseOperator


class NonHermitianError(ValueError):
    """Raised when a routine requiring a Hermitian operator receives one that
    fails the exact symmetry scan."""


class StateGroup(Enum):
    GROUND = "ground"
    DARK = "dark"
    MULTI_POLARITON = "multi_polariton"
    DARK_POLARITON = "dark_polariton"
    UNCLASSIFIED = "unclassified"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Tolerances:
    """Classification tolerances (absolute)."""

    degeneracy: float = 1e-9  # eV gap below which eigenvalues form one cluster
    dark: float = 1e-8        # photon_frac at or below which a state is dark
    s_number: float = 1e-6    # allowed distance of S(S+1) from the snapped value


@dataclass
class EigenstateRecord:
    """One eigenstate with its classification metadata."""

    eigenvalue: float
    relative_shift: float
    n_exc: int
    photon_frac: float
    t_frac: float | None
    s: float | None
    group: StateGroup
    degeneracy_block: int


@dataclass
class ClassifiedSpectrum:
    """Classified eigensystem; column k of `eigenvectors` matches records[k]."""

    records: list[EigenstateRecord]
    eigenvectors: np.ndarray
    basis: BasisSet

    def counts(self) -> dict[tuple[int, StateGroup], int]:
        out: dict[tuple[int, StateGroup], int] = {}
        for rec in self.records:
            key = (rec.n_exc, rec.group)
            out[key] = out.get(key, 0) + 1
        return out


def diagonalize_hermitian(op: SparseOperator) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian sparse operator, block by block.

    The sparsity graph is split into connected components (excitation
    manifolds and, where couplings vanish, finer sectors); each dense block is
    diagonalized independently and the results are merged into globally
    ascending eigenvalues with orthonormal eigenvector columns.
    """
    if not op.is_hermitian():
        raise NonHermitianError(
            "operator fails the exact Hermiticity scan; refusing to diagonalize"
        )
    dim = op.dim
    pattern = scipy.sparse.csr_array(
        (np.abs(op.mat.data), op.mat.indices, op.mat.indptr), shape=op.mat.shape
    )
    n_comp, labels = scipy.sparse.csgraph.connected_components(
        pattern, directed=False, return_labels=True
    )
    eigenvalues = np.empty(dim)
    eigenvectors = np.zeros((dim, dim), dtype=np.complex128)
    col = 0
    for comp in range(n_comp):
        idx = np.flatnonzero(labels == comp)
        block = op.mat[np.ix_(idx, idx)].toarray()
        w, v = np.linalg.eigh(block)
        eigenvalues[col:col + len(idx)] = w
        eigenvectors[np.ix_(idx, range(col, col + len(idx)))] = v
        col += len(idx)
    order = np.argsort(eigenvalues, kind="stable")
    return eigenvalues[order], eigenvectors[:, order]


def _diagonal_expectations(op: SparseOperator, vectors: np.ndarray) -> np.ndarray:
    return np.einsum("ij,ij->j", vectors.conj(), op.mat @ vectors).real


def _cluster_ranges(values: np.ndarray, gap: float) -> list[tuple[int, int]]:
    """Split the sorted `values` into maximal runs with consecutive gaps ≤ gap."""
    ranges = []
    start = 0
    for k in range(1, len(values) + 1):
        if k == len(values) or values[k] - values[k - 1] > gap:
            ranges.append((start, k))
            start = k
    return ranges


def _rotate_to_diagonalize(
    vectors: np.ndarray, cols: np.ndarray, op: SparseOperator
) -> np.ndarray:
    """Rotate the (degenerate) columns `cols` to diagonalize `op` in their span.

    Returns the op-eigenvalues, ascending, matching the rotated columns.
    """
    sub = vectors[:, cols]
    w_mat = sub.conj().T @ (op.mat @ sub)
    w_mat = 0.5 * (w_mat + w_mat.conj().T)
    w, u = np.linalg.eigh(w_mat)
    vectors[:, cols] = sub @ u
    return w


def _snap_half_integer_s(s_squared_value: float, tol: float) -> float | None:
    """Cooperation number from an S(S+1) eigenvalue, or None if off-lattice."""
    s_raw = 0.5 * (math.sqrt(max(1.0 + 4.0 * s_squared_value, 0.0)) - 1.0)
    s = round(2.0 * s_raw) / 2.0
    if abs(s * (s + 1.0) - s_squared_value) > tol:
        return None
    return s


def classify_eigenstates(
    eigenvalues: np.ndarray,
    eigenvectors: np.ndarray,
    observables: ObservableSet,
    omega_ref: float,
    tol: Tolerances = Tolerances(),
) -> ClassifiedSpectrum:
    """Classify eigenstates into the ground/dark/polariton groups.

    `omega_ref` is the bare molecular frequency used for the uncoupled
    reference energy N_exc·ω; relative shifts are reported against it. For
    two-level bases degenerate clusters are rotated to diagonalize S² and then
    the photon number; S is read off the S(S+1) eigenvalue and snapped to the
    half-integer lattice (failures are flagged UNCLASSIFIED, never silently
    relabeled). Three-level states carry no S; clusters are rotated to
    diagonalize the photon number and then the T occupation, and bright states
    stay UNCLASSIFIED.
    """
    basis = observables.basis
    dim = len(basis)
    if eigenvectors.shape != (dim, dim) or len(eigenvalues) != dim:
        raise ValueError("eigensystem shape does not match the observable basis")
    two_level = basis.levels == 2
    n_half = basis.n_molecules / 2.0

    vectors = np.array(eigenvectors, dtype=np.complex128, copy=True)
    order = np.argsort(eigenvalues, kind="stable")
    eigenvalues = np.asarray(eigenvalues)[order]
    vectors = vectors[:, order]

    manifold_of = _diagonal_expectations(observables.n_exc, vectors)
    manifolds = np.rint(manifold_of).astype(int)
    if np.abs(manifold_of - manifolds).max() > 1e-6:
        raise ValueError("eigenvector with non-integer excitation number")

    s_values: list[float | None] = [None] * dim
    block_ids = np.empty(dim, dtype=int)
    block_id = 0
    for m in sorted(set(manifolds.tolist())):
        idx = np.flatnonzero(manifolds == m)
        for lo, hi in _cluster_ranges(eigenvalues[idx], tol.degeneracy):
            cols = idx[lo:hi]
            block_ids[cols] = block_id
            block_id += 1
            if two_level:
                if len(cols) > 1:
                    w = _rotate_to_diagonalize(vectors, cols, observables.s_squared)
                else:
                    w = _diagonal_expectations(observables.s_squared, vectors[:, cols])
                for sub_lo, sub_hi in _cluster_ranges(w, tol.degeneracy):
                    if sub_hi - sub_lo > 1:
                        _rotate_to_diagonalize(
                            vectors, cols[sub_lo:sub_hi], observables.n_phot
                        )
                for k, col in enumerate(cols):
                    s_values[col] = _snap_half_integer_s(w[k], tol.s_number)
            else:
                if len(cols) > 1:
                    w = _rotate_to_diagonalize(vectors, cols, observables.n_phot)
                    for sub_lo, sub_hi in _cluster_ranges(w, tol.degeneracy):
                        if sub_hi - sub_lo > 1:
                            _rotate_to_diagonalize(
                                vectors, cols[sub_lo:sub_hi], observables.n_t
                            )

    photon = _diagonal_expectations(observables.n_phot, vectors)
    t_occ = _diagonal_expectations(observables.n_t, vectors)

    records = []
    for k in range(dim):
        m = int(manifolds[k])
        pf = float(photon[k]) / m if m > 0 else 0.0
        tf = (float(t_occ[k]) / m if m > 0 else 0.0) if not two_level else None
        s = s_values[k]
        if m == 0:
            group = StateGroup.GROUND
        elif two_level:
            if s is None:
                group = StateGroup.UNCLASSIFIED
            elif s == n_half:
                group = StateGroup.MULTI_POLARITON
            elif pf <= tol.dark:
                group = StateGroup.DARK
            else:
                group = StateGroup.DARK_POLARITON
        else:
            group = StateGroup.DARK if pf <= tol.dark else StateGroup.UNCLASSIFIED
        records.append(
            EigenstateRecord(
                eigenvalue=float(eigenvalues[k]),
                relative_shift=float(eigenvalues[k]) - m * omega_ref,
                n_exc=m,
                photon_frac=pf,
                t_frac=tf,
                s=s,
                group=group,
                degeneracy_block=int(block_ids[k]),
            )
        )
    return ClassifiedSpectrum(records=records, eigenvectors=vectors, basis=basis)


@dataclass
class LadderDiagram:
    """Aggregated eigenvalue-ladder data behind the energy-diagram figures."""

    rows: list[dict] = field(default_factory=list)
    degeneracy_counts: dict[tuple[int, float], int] = field(default_factory=dict)

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            ["n_exc", "shift_eV", "multiplicity", "group", "S", "photon_frac", "t_frac"]
        )
        for row in self.rows:
            writer.writerow(
                [
                    row["n_exc"],
                    repr(row["shift_eV"]),
                    row["multiplicity"],
                    row["group"].value,
                    "" if row["s"] is None else repr(row["s"]),
                    repr(row["photon_frac"]),
                    "" if row["t_frac"] is None else repr(row["t_frac"]),
                ]
            )
        return buf.getvalue()

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as handle:
            handle.write(self.to_csv_string())

    def to_json(self) -> str:
        return json.dumps(
            {
                "rows": [
                    {**row, "group": row["group"].value} for row in self.rows
                ],
                "degeneracy_counts": [
                    {"n_exc": k[0], "shift_eV": k[1], "multiplicity": v}
                    for k, v in sorted(self.degeneracy_counts.items())
                ],
            }
        )


def ladder_export(records: list[EigenstateRecord]) -> LadderDiagram:
    """Merge classified records into degenerate-ladder rows with multiplicities.

    Rows are keyed by (degeneracy cluster, group, S): members of one cluster
    that classification separates (for instance dark states and a zero-shift
    multi polariton) are reported as distinct rows at the same shift.
    """
    merged: dict[tuple, dict] = {}
    for rec in records:
        key = (rec.degeneracy_block, rec.group, rec.s)
        if key not in merged:
            merged[key] = {
                "n_exc": rec.n_exc,
                "shift_eV": rec.relative_shift,
                "multiplicity": 0,
                "group": rec.group,
                "s": rec.s,
                "photon_frac": rec.photon_frac,
                "t_frac": rec.t_frac,
                "_shift_sum": 0.0,
                "_pf_sum": 0.0,
                "_tf_sum": 0.0,
            }
        slot = merged[key]
        slot["multiplicity"] += 1
        slot["_shift_sum"] += rec.relative_shift
        slot["_pf_sum"] += rec.photon_frac
        slot["_tf_sum"] += rec.t_frac if rec.t_frac is not None else 0.0

    rows = []
    counts: dict[tuple[int, float], int] = {}
    for slot in merged.values():
        mult = slot["multiplicity"]
        shift = slot.pop("_shift_sum") / mult
        pf = slot.pop("_pf_sum") / mult
        tf_sum = slot.pop("_tf_sum")
        slot["shift_eV"] = shift
        slot["photon_frac"] = pf
        slot["t_frac"] = None if slot["t_frac"] is None else tf_sum / mult
        rows.append(slot)
        count_key = (slot["n_exc"], round(shift, 6))
        counts[count_key] = counts.get(count_key, 0) + mult
    rows.sort(key=lambda r: (r["n_exc"], r["shift_eV"], r["group"].value))
    return LadderDiagram(rows=rows, degeneracy_counts=counts)
