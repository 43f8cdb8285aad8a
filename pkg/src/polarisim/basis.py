"""Excitation-truncated product basis for N molecules coupled to one cavity mode.

Each basis state is a product of per-molecule electronic levels (two-level
G/E or three-level G/E/T) with a photon Fock number, kept only if its total
excitation count (#E + #T + photons) does not exceed the cutoff. The cutoff
equals the initial excitation number of a scenario; since the rotating-wave
Hamiltonian conserves the excitation number and both decay channels only
lower it, the truncation is exact for the dynamics.

States are ordered canonically: total excitation ascending, then
lexicographically by (occupations, photons) with G < E < T. Excitation
manifolds are therefore contiguous index ranges, which the spectrum module
exploits for block diagonalization.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterator


class MoleculeLevel(IntEnum):
    """Electronic level of a single molecule; T exists only in three-level mode."""

    G = 0
    E = 1
    T = 2

    @property
    def char(self) -> str:
        return self.name


_CHAR_TO_LEVEL = {lv.name: lv for lv in MoleculeLevel}


@dataclass(frozen=True)
class BasisState:
    """One product configuration: per-molecule levels plus a photon number."""

    occupations: tuple[MoleculeLevel, ...]
    photons: int

    def __post_init__(self):
        if self.photons < 0:
            raise ValueError("photon number must be non-negative")

    @property
    def excitation(self) -> int:
        """Total excitation count: #E + #T + photons."""
        return sum(1 for lv in self.occupations if lv != MoleculeLevel.G) + self.photons

    def count(self, level: MoleculeLevel) -> int:
        return sum(1 for lv in self.occupations if lv == level)

    def occ_string(self) -> str:
        return "".join(lv.char for lv in self.occupations)

    @classmethod
    def from_occ_string(cls, occ: str, photons: int) -> "BasisState":
        try:
            levels = tuple(_CHAR_TO_LEVEL[c] for c in occ)
        except KeyError as exc:
            raise ValueError(f"invalid occupation character {exc.args[0]!r}") from exc
        return cls(levels, photons)

    def __repr__(self) -> str:
        return f"|{self.occ_string()},{self.photons}⟩"


def excitation(state: BasisState) -> int:
    """Total excitation number of a product state (#E + #T + photons)."""
    return state.excitation


class BasisSet:
    """Ordered, indexed collection of all product states within the cutoff.

    Construct via :func:`enumerate_basis`. Immutable after construction and
    safe to share across threads.
    """

    def __init__(self, n_molecules: int, levels: int, n_max: int,
                 states: list[BasisState]):
        self.n_molecules = n_molecules
        self.levels = levels
        self.n_max = n_max
        self.states = tuple(states)
        self.index = {(s.occupations, s.photons): i for i, s in enumerate(states)}
        bounds = [0] * (n_max + 2)
        for s in states:
            bounds[s.excitation + 1] += 1
        for m in range(1, n_max + 2):
            bounds[m] += bounds[m - 1]
        self._manifold_bounds = tuple(bounds)

    def __len__(self) -> int:
        return len(self.states)

    def __iter__(self) -> Iterator[BasisState]:
        return iter(self.states)

    def __getitem__(self, i: int) -> BasisState:
        return self.states[i]

    def index_of(self, state: BasisState) -> int:
        """Position of `state` in the canonical ordering.

        Raises KeyError for states outside the cutoff or containing T in
        two-level mode.
        """
        try:
            return self.index[(state.occupations, state.photons)]
        except KeyError:
            raise KeyError(
                f"state {state!r} is not in the basis "
                f"(N={self.n_molecules}, levels={self.levels}, n_max={self.n_max})"
            ) from None

    def manifold_slice(self, n_exc: int) -> slice:
        """Contiguous index range of the excitation manifold `n_exc`."""
        if not 0 <= n_exc <= self.n_max:
            raise ValueError(f"manifold {n_exc} outside cutoff {self.n_max}")
        return slice(self._manifold_bounds[n_exc], self._manifold_bounds[n_exc + 1])

    def manifold_dimensions(self) -> tuple[int, ...]:
        b = self._manifold_bounds
        return tuple(b[m + 1] - b[m] for m in range(self.n_max + 1))

    def to_json(self) -> str:
        return json.dumps(
            {
                "N": self.n_molecules,
                "levels": self.levels,
                "n_max": self.n_max,
                "states": [{"occ": s.occ_string(), "n": s.photons} for s in self.states],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "BasisSet":
        data = json.loads(text)
        states = [BasisState.from_occ_string(d["occ"], d["n"]) for d in data["states"]]
        return cls(data["N"], data["levels"], data["n_max"], states)

    def __repr__(self) -> str:
        return (
            f"BasisSet(N={self.n_molecules}, levels={self.levels}, "
            f"n_max={self.n_max}, size={len(self)})"
        )


def enumerate_basis(n_molecules: int, levels: int, n_max: int) -> BasisSet:
    """Enumerate every product state with total excitation ≤ n_max.

    Parameters
    ----------
    n_molecules :
        Number of molecules N (≥ 1).
    levels :
        2 for G/E molecules, 3 for G/E/T.
    n_max :
        Excitation cutoff; must satisfy 0 ≤ n_max ≤ N (only molecular
        excitation numbers up to N are meaningful).
    """
    if levels not in (2, 3):
        raise ValueError(f"levels must be 2 or 3, got {levels}")
    if n_molecules < 1:
        raise ValueError(f"need at least one molecule, got {n_molecules}")
    if not 0 <= n_max <= n_molecules:
        raise ValueError(
            f"cutoff must satisfy 0 <= n_max <= N, got n_max={n_max}, N={n_molecules}"
        )

    alphabet = [MoleculeLevel.G, MoleculeLevel.E]
    if levels == 3:
        alphabet.append(MoleculeLevel.T)

    # One lexicographic pass over occupation patterns; each pattern with j
    # molecular excitations contributes one state per manifold m = j..n_max
    # (photons make up the difference).
    per_manifold: list[list[BasisState]] = [[] for _ in range(n_max + 1)]
    for occ in itertools.product(alphabet, repeat=n_molecules):
        j = sum(1 for lv in occ if lv != MoleculeLevel.G)
        if j > n_max:
            continue
        for m in range(j, n_max + 1):
            per_manifold[m].append(BasisState(occ, m - j))

    states: list[BasisState] = []
    for manifold in per_manifold:
        manifold.sort(key=lambda s: (s.occupations, s.photons))
        states.extend(manifold)
    return BasisSet(n_molecules, levels, n_max, states)
