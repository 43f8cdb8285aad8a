"""Sparse operators in canonical coordinate form.

Operators are stored as CSR matrices in canonical form (row-major sorted
indices, duplicates summed, explicit zeros removed), so that repeated assembly
is bit-reproducible and structural identities such as Hermiticity or
commutators with integer-valued operators can be tested exactly.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np
import scipy.io
import scipy.sparse as sp


class SparseOperator:
    """Immutable complex operator on a finite-dimensional Hilbert space."""

    __slots__ = ("mat",)

    def __init__(self, mat):
        csr = sp.csr_array(mat, dtype=np.complex128)
        if csr.shape[0] != csr.shape[1]:
            raise ValueError(f"operator must be square, got shape {csr.shape}")
        csr.sum_duplicates()
        csr.eliminate_zeros()
        csr.sort_indices()
        self.mat = csr

    @classmethod
    def from_entries(
        cls,
        dim: int,
        rows: Sequence[int],
        cols: Sequence[int],
        values: Iterable[complex],
    ) -> "SparseOperator":
        """Build from coordinate triples; duplicate coordinates are summed."""
        coo = sp.coo_array(
            (np.asarray(list(values), dtype=np.complex128), (rows, cols)),
            shape=(dim, dim),
        )
        return cls(coo)

    @classmethod
    def from_diagonal(cls, diag: Sequence[float]) -> "SparseOperator":
        values = np.asarray(diag, dtype=np.complex128)
        return cls(sp.dia_array((values[None, :], [0]), shape=(len(values),) * 2))

    @classmethod
    def identity(cls, dim: int) -> "SparseOperator":
        return cls(sp.eye_array(dim, dtype=np.complex128))

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def nnz(self) -> int:
        return self.mat.nnz

    def entries(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Canonically ordered (rows, cols, values) coordinate arrays."""
        coo = self.mat.tocoo()
        return coo.row.copy(), coo.col.copy(), coo.data.copy()

    def dense(self) -> np.ndarray:
        return self.mat.toarray()

    def diagonal(self) -> np.ndarray:
        return self.mat.diagonal()

    def dagger(self) -> "SparseOperator":
        return SparseOperator(self.mat.conj().T)

    def is_hermitian(self) -> bool:
        """Exact Hermiticity: every stored entry equals its mirrored conjugate."""
        return (self.mat - self.mat.conj().T).count_nonzero() == 0

    def max_abs(self) -> float:
        if self.mat.nnz == 0:
            return 0.0
        return float(np.abs(self.mat.data).max())

    def commutator(self, other: "SparseOperator") -> "SparseOperator":
        self._check_dim(other)
        return SparseOperator(self.mat @ other.mat - other.mat @ self.mat)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.mat @ vec

    def expectation_value(self, vec: np.ndarray) -> complex:
        """⟨v|A|v⟩ for a state vector v."""
        return complex(np.vdot(vec, self.mat @ vec))

    def to_matrix_market(self, path) -> None:
        """Write in MatrixMarket coordinate format for external cross-checks."""
        scipy.io.mmwrite(path, sp.coo_matrix(self.mat))

    def _check_dim(self, other: "SparseOperator") -> None:
        if self.dim != other.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def __matmul__(self, other):
        if isinstance(other, SparseOperator):
            self._check_dim(other)
            return SparseOperator(self.mat @ other.mat)
        return self.mat @ other

    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        self._check_dim(other)
        return SparseOperator(self.mat + other.mat)

    def __sub__(self, other: "SparseOperator") -> "SparseOperator":
        self._check_dim(other)
        return SparseOperator(self.mat - other.mat)

    def __mul__(self, scalar: complex) -> "SparseOperator":
        return SparseOperator(self.mat * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "SparseOperator":
        return SparseOperator(-self.mat)

    def __repr__(self) -> str:
        return f"SparseOperator(dim={self.dim}, nnz={self.nnz})"
