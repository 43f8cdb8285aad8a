"""Lindblad dynamics: initial states, the master-equation RHS and propagation.

The master equation evolves a dense density matrix under the ensemble
Hamiltonian with two phenomenological decay channels: cavity photon loss at
rate κ (jump operator a) and per-molecule spontaneous emission at rate Γ
(jump operators σ⁻_i). The commutator is scaled by 1/ħ in eV·fs units; the
rates enter in fs⁻¹ as written.

The propagation working set is a single dense d×d matrix; the RHS costs
O(d²·nnz(H)) via sparse-dense products, which keeps the three-level
N = 8 system (d = 724) comfortably on a desktop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .basis import BasisSet, MoleculeLevel
from .integrators import INTEGRATORS, IntegrationError
from .operators import HBAR_EV_FS, ObservableSet
from .sparse import SparseOperator
from .spectrum import ClassifiedSpectrum, StateGroup

__all__ = [
    "DensityMatrix",
    "LindbladModel",
    "GroupKey",
    "PopulationTrajectory",
    "pure_initial_state",
    "mixed_initial_state",
    "lindblad_rhs",
    "population_groups",
    "build_group_projectors",
    "propagate",
    "IntegrationError",
]


@dataclass
class DensityMatrix:
    """Dense complex density matrix with validation helpers."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.array(self.values, dtype=np.complex128, copy=True, order="C")
        if self.values.ndim != 2 or self.values.shape[0] != self.values.shape[1]:
            raise ValueError(f"density matrix must be square, got {self.values.shape}")

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def trace(self) -> complex:
        return complex(np.trace(self.values))

    def purity(self) -> float:
        # Tr ρ² = ‖ρ‖_F² for Hermitian ρ
        return float(np.sum(np.abs(self.values) ** 2))

    def hermiticity_error(self) -> float:
        return float(np.abs(self.values - self.values.conj().T).max())

    def min_eigenvalue(self) -> float:
        sym = 0.5 * (self.values + self.values.conj().T)
        return float(np.linalg.eigvalsh(sym)[0])

    def validate(self, trace_tol: float = 1e-10, herm_tol: float = 1e-10) -> None:
        if abs(self.trace() - 1.0) > trace_tol:
            raise ValueError(f"trace {self.trace():.12g} deviates from 1")
        if self.hermiticity_error() > herm_tol:
            raise ValueError(
                f"Hermiticity violation {self.hermiticity_error():.3e} exceeds {herm_tol}"
            )

    @classmethod
    def from_pure(cls, vector: np.ndarray) -> "DensityMatrix":
        vec = np.asarray(vector, dtype=np.complex128)
        return cls(np.outer(vec, vec.conj()))


@dataclass(frozen=True)
class LindbladModel:
    """Hamiltonian plus decay channels of the master equation."""

    hamiltonian: SparseOperator
    kappa: float
    gamma: float
    annihilation: SparseOperator
    sigma_minus: tuple[SparseOperator, ...]

    def __post_init__(self):
        if self.kappa < 0 or self.gamma < 0:
            raise ValueError("decay rates must be non-negative")
        dim = self.hamiltonian.dim
        ops = [self.annihilation, *self.sigma_minus]
        if any(op.dim != dim for op in ops):
            raise ValueError("operator dimensions do not match the Hamiltonian")

    @property
    def dim(self) -> int:
        return self.hamiltonian.dim


def pure_initial_state(basis: BasisSet, target: MoleculeLevel, k: int) -> DensityMatrix:
    """Equal-amplitude superposition of all bare states with k molecules in
    `target` and no photons: |Φ⟩ = M^{-1/2} Σ|φ_i⟩, ρ = |Φ⟩⟨Φ| (purity 1)."""
    idx = _bare_state_indices(basis, target, k)
    vec = np.zeros(len(basis), dtype=np.complex128)
    vec[idx] = 1.0 / math.sqrt(len(idx))
    return DensityMatrix.from_pure(vec)


def mixed_initial_state(basis: BasisSet, target: MoleculeLevel, k: int) -> DensityMatrix:
    """Equal-weight classical mixture over the same bare states as the pure
    preparation: ρ = M^{-1} Σ|φ_i⟩⟨φ_i| (purity 1/M)."""
    idx = _bare_state_indices(basis, target, k)
    diag = np.zeros(len(basis))
    diag[idx] = 1.0 / len(idx)
    return DensityMatrix(np.diag(diag).astype(np.complex128))


def _bare_state_indices(basis: BasisSet, target: MoleculeLevel, k: int) -> np.ndarray:
    if target not in (MoleculeLevel.E, MoleculeLevel.T):
        raise ValueError(f"initial excitations must sit in E or T, got {target}")
    if target is MoleculeLevel.T and basis.levels != 3:
        raise ValueError("T excitations require a three-level basis")
    if not 0 <= k <= basis.n_molecules:
        raise ValueError(f"cannot excite {k} of {basis.n_molecules} molecules")
    if k > basis.n_max:
        raise ValueError(f"initial excitation {k} exceeds the basis cutoff {basis.n_max}")
    idx = [
        i
        for i, state in enumerate(basis.states)
        if state.photons == 0
        and state.count(target) == k
        and state.excitation == k
    ]
    expected = math.comb(basis.n_molecules, k)
    assert len(idx) == expected, "bare-state enumeration out of sync with basis"
    return np.asarray(idx, dtype=np.intp)


class _GatherJump:
    """Jump contribution L ρ L† for an operator that is a weighted partial
    injection (single entry per row and column), applied as an indexed block
    add. Covers the photon and per-molecule lowering operators exactly."""

    __slots__ = ("dst", "src", "weight")

    def __init__(self, rate: float, op: SparseOperator):
        rows, cols, vals = op.entries()
        self.dst = rows
        self.src = cols
        self.weight = rate * np.outer(vals, vals.conj())

    def add_to(self, out: np.ndarray, rho: np.ndarray) -> None:
        out[np.ix_(self.dst, self.dst)] += self.weight * rho[np.ix_(self.src, self.src)]


def _is_partial_injection(op: SparseOperator) -> bool:
    rows, cols, _ = op.entries()
    return len(set(rows)) == len(rows) and len(set(cols)) == len(cols)


class _MatmulJump:
    """General fallback: L ρ L† via two sparse-dense products."""

    __slots__ = ("rate", "left", "right")

    def __init__(self, rate: float, op: SparseOperator):
        self.rate = rate
        self.left = op.mat
        self.right = op.mat.conj().T.tocsc()

    def add_to(self, out: np.ndarray, rho: np.ndarray) -> None:
        out += self.rate * ((self.left @ rho) @ self.right)


class LindbladRHS:
    """Precomputed right-hand side of the master equation.

    The drift is folded into one sparse generator G = −(i/ħ)H − ½diag(q) with
    q = κ·n + Γ·N_e (both jump normal products are diagonal), so the full RHS
    is Gρ + ρG† plus the jump feeds. ``hermitian_fast=True`` evaluates ρG† as
    (Gρ)†, which agrees exactly on Hermitian ρ (the only states reached from a
    Hermitian initial condition) and guarantees an exactly
    Hermiticity-preserving flow at half the sparse-product cost.
    """

    def __init__(self, model: LindbladModel, hermitian_fast: bool = False):
        normal = model.kappa * (
            model.annihilation.dagger().mat @ model.annihilation.mat
        )
        for sm in model.sigma_minus:
            normal = normal + model.gamma * (sm.dagger().mat @ sm.mat)
        gen = (-1j / HBAR_EV_FS) * model.hamiltonian.mat - 0.5 * normal
        self.generator = SparseOperator(gen).mat
        self.hermitian_fast = hermitian_fast
        self.jumps = []
        for rate, op in [(model.kappa, model.annihilation)] + [
            (model.gamma, sm) for sm in model.sigma_minus
        ]:
            if rate == 0.0 or op.nnz == 0:
                continue
            if _is_partial_injection(op):
                self.jumps.append(_GatherJump(rate, op))
            else:
                self.jumps.append(_MatmulJump(rate, op))

    def __call__(self, t: float, rho: np.ndarray) -> np.ndarray:
        left = self.generator @ rho
        if self.hermitian_fast:
            out = left + left.conj().T
        else:
            out = left + (self.generator @ rho.conj().T).conj().T
        for jump in self.jumps:
            jump.add_to(out, rho)
        return out


def lindblad_rhs(rho, model: LindbladModel) -> np.ndarray:
    """Evaluate the master-equation right-hand side once.

    Accepts a DensityMatrix or a dense array; returns the derivative as a
    dense array. The output has zero trace and is Hermitian whenever the
    input is.
    """
    values = rho.values if isinstance(rho, DensityMatrix) else np.asarray(rho)
    if values.shape != (model.dim, model.dim):
        raise ValueError(f"dimension mismatch: model {model.dim}, rho {values.shape}")
    return LindbladRHS(model, hermitian_fast=False)(0.0, values.astype(np.complex128))


class GroupKey(NamedTuple):
    """Population group label: excitation manifold, photonic character and,
    optionally, the cooperation number."""

    n_exc: int
    bright: bool
    s: float | None = None

    def label(self) -> str:
        tag = "bright" if self.bright else "dark"
        if self.s is None:
            return f"nexc{self.n_exc}_{tag}"
        return f"nexc{self.n_exc}_S{self.s:g}_{tag}"

    def sort_key(self):
        return (self.n_exc, -1.0 if self.s is None else self.s, self.bright)


def build_group_projectors(
    classified: ClassifiedSpectrum,
    by_s: bool = False,
    tol_dark: float = 1e-8,
) -> dict[GroupKey, np.ndarray]:
    """Projectors onto the (N_exc, bright|dark[, S]) eigenspace groups.

    The groups partition the full space; a completeness defect beyond 1e-10
    raises, since population bookkeeping would silently leak otherwise.
    """
    dim = len(classified.basis)
    members: dict[GroupKey, list[int]] = {}
    for col, rec in enumerate(classified.records):
        bright = rec.n_exc > 0 and rec.photon_frac > tol_dark
        key = GroupKey(rec.n_exc, bright, rec.s if by_s else None)
        members.setdefault(key, []).append(col)
    projectors: dict[GroupKey, np.ndarray] = {}
    total = np.zeros((dim, dim), dtype=np.complex128)
    for key, cols in members.items():
        vecs = classified.eigenvectors[:, cols]
        proj = vecs @ vecs.conj().T
        projectors[key] = proj
        total += proj
    defect = np.abs(total - np.eye(dim)).max()
    if defect > 1e-10:
        raise RuntimeError(
            f"group projectors fail to resolve the identity (defect {defect:.3e})"
        )
    return dict(sorted(projectors.items(), key=lambda kv: kv[0].sort_key()))


def population_groups(
    rho,
    classified: ClassifiedSpectrum,
    tol_dark: float = 1e-8,
    by_s: bool = False,
) -> dict[GroupKey, float]:
    """Populations Tr(P ρ) of each eigenspace group."""
    values = rho.values if isinstance(rho, DensityMatrix) else np.asarray(rho)
    projectors = build_group_projectors(classified, by_s=by_s, tol_dark=tol_dark)
    return {key: float(np.vdot(proj, values).real) for key, proj in projectors.items()}


@dataclass
class PopulationTrajectory:
    """Time-sampled grouped populations with purity and excitation monitors."""

    times: np.ndarray
    groups: dict[GroupKey, np.ndarray]
    purity: np.ndarray
    n_phot: np.ndarray
    n_e: np.ndarray
    n_t: np.ndarray
    trace_error: np.ndarray
    herm_error: np.ndarray
    min_eigenvalue: np.ndarray = field(default_factory=lambda: np.empty(0))

    def group(self, n_exc: int, bright: bool, s: float | None = None) -> np.ndarray:
        return self.groups[GroupKey(n_exc, bright, s)]

    def at(self, t: float) -> int:
        idx = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[idx] - t) > 1e-9:
            raise ValueError(f"no sample at t={t}")
        return idx

    def n_exc_expectation(self) -> np.ndarray:
        return self.n_phot + self.n_e + self.n_t

    def to_csv_string(self) -> str:
        keys = sorted(self.groups, key=lambda k: k.sort_key())
        header = ["time_fs"] + [k.label() for k in keys]
        header += ["purity", "n_phot", "n_e", "n_t"]
        lines = [",".join(header)]
        for i, t in enumerate(self.times):
            row = [repr(float(t))]
            row += [repr(float(self.groups[k][i])) for k in keys]
            row += [
                repr(float(self.purity[i])),
                repr(float(self.n_phot[i])),
                repr(float(self.n_e[i])),
                repr(float(self.n_t[i])),
            ]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as handle:
            handle.write(self.to_csv_string())


def propagate(
    rho0: DensityMatrix,
    model: LindbladModel,
    t_end: float,
    sample_dt: float,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    method: str = "rk45",
    projectors: dict[GroupKey, np.ndarray] | None = None,
    observables: ObservableSet | None = None,
    min_eig_stride: int = 1,
) -> PopulationTrajectory:
    """Propagate ρ and record grouped populations every `sample_dt` fs.

    Local error is controlled per component at atol + rtol·|ρ_ij|. `method`
    selects the integrator: "rk45" (embedded Dormand–Prince with PI control,
    the default) or "adams" (variable-order Adams, much faster for the larger
    three-level systems; this is the integrator family behind the reference
    dynamics). Sampled states are symmetrized ρ ← (ρ+ρ†)/2; for rk45 the
    symmetrized state feeds back into the integration, for adams it affects
    the recorded values only (restarting a multistep history at every sample
    would defeat the method).

    Raises IntegrationError on step-size underflow or if the sampled trace
    drifts from unity by more than 1e-6.
    """
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    if sample_dt <= 0 or sample_dt > t_end:
        raise ValueError("sample_dt must lie in (0, t_end]")
    if method not in INTEGRATORS:
        raise ValueError(f"unknown integrator {method!r}; pick from {sorted(INTEGRATORS)}")
    rho0.validate(trace_tol=1e-8, herm_tol=1e-9)

    n_samples = int(math.floor(t_end / sample_dt + 1e-9)) + 1
    times = np.arange(n_samples) * sample_dt
    projectors = projectors or {}
    keys = sorted(projectors, key=lambda k: k.sort_key())

    diag_n = observables.n_phot.diagonal().real if observables else None
    diag_e = observables.n_e.diagonal().real if observables else None
    diag_t = observables.n_t.diagonal().real if observables else None

    out = {
        "groups": {k: np.empty(n_samples) for k in keys},
        "purity": np.empty(n_samples),
        "n_phot": np.zeros(n_samples),
        "n_e": np.zeros(n_samples),
        "n_t": np.zeros(n_samples),
        "trace_error": np.empty(n_samples),
        "herm_error": np.empty(n_samples),
        "min_eig": np.full(n_samples, np.nan),
    }
    counter = {"i": 0}

    def on_sample(t: float, rho: np.ndarray):
        i = counter["i"]
        counter["i"] += 1
        herm = float(np.abs(rho - rho.conj().T).max())
        sym = 0.5 * (rho + rho.conj().T)
        trace = float(np.trace(sym).real)
        if abs(trace - 1.0) > 1e-6:
            raise IntegrationError(
                f"trace drifted to {trace:.9f} at t={t:.6g} fs; aborting"
            )
        out["herm_error"][i] = herm
        out["trace_error"][i] = abs(trace - 1.0)
        out["purity"][i] = float(np.sum(np.abs(sym) ** 2))
        for key in keys:
            out["groups"][key][i] = float(np.vdot(projectors[key], sym).real)
        if diag_n is not None:
            diag_rho = np.diagonal(sym).real
            out["n_phot"][i] = float(diag_n @ diag_rho)
            out["n_e"][i] = float(diag_e @ diag_rho)
            out["n_t"][i] = float(diag_t @ diag_rho)
        if min_eig_stride and (i % min_eig_stride == 0 or i == n_samples - 1):
            out["min_eig"][i] = float(np.linalg.eigvalsh(sym)[0])
        return sym  # fed back by rk45; ignored by adams

    rhs = LindbladRHS(model, hermitian_fast=True)
    INTEGRATORS[method](rhs, rho0.values, 0.0, times, rtol, atol, on_sample)

    return PopulationTrajectory(
        times=times,
        groups=out["groups"],
        purity=out["purity"],
        n_phot=out["n_phot"],
        n_e=out["n_e"],
        n_t=out["n_t"],
        trace_error=out["trace_error"],
        herm_error=out["herm_error"],
        min_eigenvalue=out["min_eig"],
    )
