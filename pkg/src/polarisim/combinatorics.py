"""Closed-form state counting and splitting formulas for coupled ensembles.

All counting is done with exact integer arithmetic (Python ints via
``math.comb``), so the results remain correct for ensembles of thousands of
molecules; only the explicit large-N approximations use floating point.
"""

from __future__ import annotations

import math
from fractions import Fraction


def dark_state_count(n_molecules: int, n_x: int) -> int:
    """Number of dark states in the manifold with n_x molecular excitations.

    Dark states are photon-free eigenstates decoupled from the cavity mode;
    their count is C(N, n_x) − C(N, n_x − 1), clamped at zero in the region
    where the difference turns non-positive (no dark states exist once more
    than roughly half the ensemble is excited).
    """
    if n_molecules < 1:
        raise ValueError(f"need at least one molecule, got {n_molecules}")
    if not 0 <= n_x <= n_molecules:
        raise ValueError(f"excitation count must be in [0, N], got {n_x}")
    lower = math.comb(n_molecules, n_x - 1) if n_x >= 1 else 0
    return max(math.comb(n_molecules, n_x) - lower, 0)


def dark_polariton_ratio_exact(n_molecules: int, n_x: int, s) -> Fraction:
    """Exact ratio of S-sector dark polaritons to dark states in manifold n_x.

    Dark polaritons with cooperation number S descend from the dark states of
    the manifold with N/2 − S excitations, so the ratio is the quotient of the
    two dark-state counts, returned as an exact rational.

    `s` must label a populated dark-polariton sector:
    N/2 − n_x < S < N/2, with 2S integral and N − 2S even.
    """
    two_s = _validated_two_s(s)
    if (n_molecules - two_s) % 2 != 0:
        raise ValueError(f"S={s} is not a valid cooperation number for N={n_molecules}")
    progenitor_nx = (n_molecules - two_s) // 2
    if not 0 < progenitor_nx < n_x:
        raise ValueError(
            f"S={s} does not label a dark-polariton sector of the "
            f"(N={n_molecules}, N_x={n_x}) manifold"
        )
    denominator = dark_state_count(n_molecules, n_x)
    if denominator == 0:
        raise ValueError(f"manifold N_x={n_x} of N={n_molecules} has no dark states")
    return Fraction(dark_state_count(n_molecules, progenitor_nx), denominator)


def dark_polariton_ratio_approx(c: float, i: int = 1) -> float:
    """Large-N dark-polariton/dark-state ratio (c / (1 − c))^i.

    `c` is the relative excitation number N_x/N and `i` ≥ 1 indexes the
    dark-polariton sector counted from the lowest cooperation number
    S_i = N/2 − N_x + i.
    """
    if not 0 <= c < 1:
        raise ValueError(f"relative excitation must be in [0, 1), got {c}")
    if i < 1:
        raise ValueError(f"sector index must be >= 1, got {i}")
    return (c / (1.0 - c)) ** i


def rabi_splitting(g_c: float, s, detuning: float = 0.0) -> float:
    """Effective Rabi splitting √(8 g_c² S + detuning²) for cooperation number S."""
    if g_c < 0:
        raise ValueError(f"coupling strength must be non-negative, got {g_c}")
    two_s = _validated_two_s(s)
    return math.sqrt(4.0 * g_c * g_c * two_s + detuning * detuning)


def relative_rabi(c: float) -> float:
    """Rabi splitting relative to its maximum, √(1 − 2c), for 0 ≤ c ≤ 0.5."""
    if not 0 <= c <= 0.5:
        raise ValueError(f"relative excitation must be in [0, 0.5], got {c}")
    return math.sqrt(1.0 - 2.0 * c)


def excitation_manifold_size(n_molecules: int, n_exc: int, levels: int) -> int:
    """Dimension of the single manifold with exactly n_exc excitations.

    Two-level: Σ_{j=0}^{n_exc} C(N, j) (j molecular excitations, the rest
    photons). Three-level: Σ_{k=0}^{n_exc} 2^k C(N, k), the factor 2^k
    counting E/T assignments of the k excited molecules.
    """
    _check_counting_args(n_molecules, n_exc, levels)
    top = min(n_exc, n_molecules)
    if levels == 2:
        return sum(math.comb(n_molecules, j) for j in range(top + 1))
    return sum((1 << k) * math.comb(n_molecules, k) for k in range(top + 1))


def manifold_dimension(n_molecules: int, n_exc: int, levels: int) -> int:
    """Cumulative state count of all manifolds through n_exc (basis size)."""
    _check_counting_args(n_molecules, n_exc, levels)
    return sum(
        excitation_manifold_size(n_molecules, m, levels) for m in range(n_exc + 1)
    )


def _check_counting_args(n_molecules: int, n_exc: int, levels: int) -> None:
    if levels not in (2, 3):
        raise ValueError(f"levels must be 2 or 3, got {levels}")
    if n_molecules < 1:
        raise ValueError(f"need at least one molecule, got {n_molecules}")
    if not 0 <= n_exc <= n_molecules:
        raise ValueError(f"excitation number must be in [0, N], got {n_exc}")


def _validated_two_s(s) -> int:
    """Validate a half-integer cooperation number and return 2S as an int."""
    two_s = 2 * Fraction(s)
    if two_s.denominator != 1 or two_s < 0:
        raise ValueError(f"cooperation number must be a non-negative half-integer, got {s}")
    return int(two_s)
