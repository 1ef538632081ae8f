"""Weighted QUBO graphs in Ising form and their diagonal Hamiltonians.

A graph carries node weights ``h_k`` and edge weights ``w_ij``; its cost
Hamiltonian is ``sum w_ij Z_i Z_j + sum h_k Z_k``. Basis index ``z`` uses
qubit 0 as the most significant bit, so the bitstring ``"1010101"`` has
qubit 0 in state 1. Bit 0 maps to spin +1 and bit 1 to spin -1.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from functools import lru_cache
from os import PathLike
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "InvalidGraphError",
    "QuboGraph",
    "EnergyTable",
    "GroundInfo",
    "FAMILIES",
    "density",
    "spin_table",
    "build_energy_table",
    "ground_info",
    "build_family",
    "load_graph",
]

# Energies closer than this to the minimum count as ground states.
GROUND_TOL = 1e-9

FAMILIES = (
    "linear_z_minus_zz",
    "complete_z_minus_zz",
    "linear_z_plus_zz",
    "H1",
    "H2",
    "H3",
    "H4",
    "H5",
)

_WEIGHT_RANGES = {
    "linear_z_minus_zz": (0.5, 1.5),
    "complete_z_minus_zz": (0.5, 1.5),
    "linear_z_plus_zz": (2.0, 3.0),
}

# Chain distances coupled by H1..H4; H5 couples every pair.
_EDGE_DISTANCES = {"H1": (1,), "H2": (1, 2), "H3": (1, 2, 3), "H4": (1, 2, 3, 4)}


class InvalidGraphError(ValueError):
    pass


@dataclass(frozen=True)
class QuboGraph:
    n_qubits: int
    node_weights: tuple[float, ...]
    edges: tuple[tuple[int, int, float], ...]

    def __init__(
        self,
        n_qubits: int,
        node_weights: Iterable[float],
        edges: Iterable[Sequence[float]] = (),
    ):
        n = int(n_qubits)
        if n < 1:
            raise InvalidGraphError(f"n_qubits must be positive, got {n_qubits}")
        h = tuple(float(x) for x in node_weights)
        if len(h) != n:
            raise InvalidGraphError(f"expected {n} node weights, got {len(h)}")
        seen = set()
        norm = []
        for edge in edges:
            if len(edge) != 3:
                raise InvalidGraphError(f"edge must be (i, j, w), got {edge!r}")
            i, j, w = int(edge[0]), int(edge[1]), float(edge[2])
            if i == j:
                raise InvalidGraphError(f"self-loop on node {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise InvalidGraphError(f"edge ({i}, {j}) out of range for N={n}")
            i, j = min(i, j), max(i, j)
            if (i, j) in seen:
                raise InvalidGraphError(f"duplicate edge ({i}, {j})")
            seen.add((i, j))
            norm.append((i, j, w))
        object.__setattr__(self, "n_qubits", n)
        object.__setattr__(self, "node_weights", h)
        object.__setattr__(self, "edges", tuple(norm))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def to_dict(self) -> dict:
        return {
            "n": self.n_qubits,
            "h": list(self.node_weights),
            "edges": [[i, j, w] for i, j, w in self.edges],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "QuboGraph":
        try:
            return cls(data["n"], data["h"], data.get("edges", []))
        except (KeyError, TypeError) as exc:
            raise InvalidGraphError(f"malformed graph object: {exc}") from exc


@dataclass(frozen=True)
class EnergyTable:
    """Diagonal of the cost Hamiltonian, one entry per basis index."""

    n_qubits: int
    energies: np.ndarray

    def __post_init__(self):
        if self.energies.shape != (2**self.n_qubits,):
            raise ValueError(
                f"energy table for N={self.n_qubits} needs {2**self.n_qubits} "
                f"entries, got shape {self.energies.shape}"
            )
        self.energies.setflags(write=False)

    def __len__(self) -> int:
        return len(self.energies)


@dataclass(frozen=True)
class GroundInfo:
    energy: float
    states: tuple[str, ...]

    @property
    def degeneracy(self) -> int:
        return len(self.states)


def density(graph: QuboGraph) -> float:
    """Fraction of the N(N-1)/2 possible edges that are present."""
    n = graph.n_qubits
    if n < 2:
        raise InvalidGraphError("density needs at least two nodes")
    return 2.0 * graph.n_edges / (n * (n - 1))


@lru_cache(maxsize=None)
def spin_table(n_qubits: int) -> np.ndarray:
    """Z eigenvalues, shape (N, 2**N): row k holds s_k(z) for every index z."""
    z = np.arange(2**n_qubits)
    shifts = n_qubits - 1 - np.arange(n_qubits)
    bits = (z[None, :] >> shifts[:, None]) & 1
    spins = (1 - 2 * bits).astype(np.float64)
    spins.setflags(write=False)
    return spins


def build_energy_table(graph: QuboGraph) -> EnergyTable:
    s = spin_table(graph.n_qubits)
    energies = np.asarray(graph.node_weights) @ s
    for i, j, w in graph.edges:
        energies = energies + w * s[i] * s[j]
    return EnergyTable(graph.n_qubits, np.asarray(energies, dtype=np.float64))


def index_to_bitstring(index: int, n_qubits: int) -> str:
    return format(index, f"0{n_qubits}b")


def ground_info(table: EnergyTable) -> GroundInfo:
    e = table.energies
    e_min = float(e.min())
    idx = np.flatnonzero(e <= e_min + GROUND_TOL)
    states = tuple(index_to_bitstring(int(z), table.n_qubits) for z in idx)
    return GroundInfo(e_min, states)


def _chain_edges(n: int, distances: Iterable[int], weight: float):
    return [(i, i + d, weight) for d in distances for i in range(n - d)]


def _complete_edges(n: int, weight: float):
    return [(i, j, weight) for i in range(n) for j in range(i + 1, n)]


def build_family(kind: str, weight: float | None = None, n_qubits: int = 7) -> QuboGraph:
    """Build one of the preset Hamiltonian families.

    ``linear_z_minus_zz`` and ``complete_z_minus_zz`` put ``weight`` on every
    node and -1 on every edge; ``linear_z_plus_zz`` puts +1 on every node and
    ``weight`` on every chain edge. ``H1``..``H5`` ignore ``weight``: nodes +1,
    edges -1, coupling chain distances up to 1..4 (H1..H4) or all pairs (H5).
    Weights outside the studied ranges only emit a warning.
    """
    n = n_qubits
    if kind in _WEIGHT_RANGES:
        if weight is None:
            raise ValueError(f"family {kind!r} requires a weight")
        lo, hi = _WEIGHT_RANGES[kind]
        if not lo <= weight <= hi:
            warnings.warn(
                f"weight {weight} outside the studied range [{lo}, {hi}] for {kind}",
                stacklevel=2,
            )
    if kind == "linear_z_minus_zz":
        return QuboGraph(n, [weight] * n, _chain_edges(n, (1,), -1.0))
    if kind == "complete_z_minus_zz":
        return QuboGraph(n, [weight] * n, _complete_edges(n, -1.0))
    if kind == "linear_z_plus_zz":
        return QuboGraph(n, [1.0] * n, _chain_edges(n, (1,), weight))
    if kind in _EDGE_DISTANCES:
        return QuboGraph(n, [1.0] * n, _chain_edges(n, _EDGE_DISTANCES[kind], -1.0))
    if kind == "H5":
        return QuboGraph(n, [1.0] * n, _complete_edges(n, -1.0))
    raise ValueError(f"unknown family {kind!r}; expected one of {', '.join(FAMILIES)}")


def weight_range(kind: str) -> tuple[float, float] | None:
    return _WEIGHT_RANGES.get(kind)


def load_graph(path: str | PathLike) -> QuboGraph:
    with open(Path(path)) as fh:
        data = json.load(fh)
    return QuboGraph.from_dict(data)


def save_graph(graph: QuboGraph, path: str | PathLike) -> None:
    with open(Path(path), "w") as fh:
        json.dump(graph.to_dict(), fh)
