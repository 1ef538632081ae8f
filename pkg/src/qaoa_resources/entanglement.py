"""One-qubit entanglement diagnostics along a QAOA circuit."""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from os import PathLike

import numpy as np

from .qubo import EnergyTable, QuboGraph
from .simulator import (
    QaoaParams,
    apply_gate,
    apply_mixer_layer,
    cost_gate_sequence,
    init_plus_state,
    iter_layers,
)

__all__ = [
    "EntropyTrace",
    "one_qubit_entropies",
    "avg_one_qubit_entropy",
    "layer_profile",
    "max_entropy",
    "gate_trace",
    "accumulation_area",
]

_CUTOFF = 1e-12


def one_qubit_entropies(state: np.ndarray) -> np.ndarray:
    """Entropy (bits) of each single-qubit reduced state of a pure state."""
    n = int(state.size).bit_length() - 1
    out = np.empty(n)
    for q in range(n):
        v = state.reshape((2**q, 2, -1))
        p0 = np.vdot(v[:, 0], v[:, 0]).real
        p1 = np.vdot(v[:, 1], v[:, 1]).real
        off = np.vdot(v[:, 1], v[:, 0])  # <0|rho|1>
        # Eigenvalues of [[p0, off], [off*, p1]].
        tr = p0 + p1
        disc = np.sqrt(max((p0 - p1) ** 2 + 4 * abs(off) ** 2, 0.0))
        lam = np.clip(np.array([(tr + disc) / 2, (tr - disc) / 2]) / tr, 0.0, 1.0)
        lam = lam[lam > _CUTOFF]
        out[q] = -np.sum(lam * np.log2(lam))
    return out


def avg_one_qubit_entropy(state: np.ndarray) -> float:
    return float(np.mean(one_qubit_entropies(state)))


def layer_profile(table: EnergyTable, params: QaoaParams) -> list[float]:
    """Average one-qubit entropy at the end of each layer l = 1..p."""
    return [avg_one_qubit_entropy(s) for s in iter_layers(table, params)]


def max_entropy(table: EnergyTable, params: QaoaParams) -> float:
    return max(layer_profile(table, params))


@dataclass(frozen=True)
class EntropyTrace:
    """Average one-qubit entropy sampled at fractional circuit depth."""

    depths: np.ndarray
    s_bar: np.ndarray

    def __len__(self) -> int:
        return len(self.depths)

    def to_csv(self, path: str | PathLike) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["depth", "s_bar"])
            for d, s in zip(self.depths, self.s_bar):
                w.writerow([repr(float(d)), repr(float(s))])

    @classmethod
    def from_csv(cls, path: str | PathLike) -> "EntropyTrace":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls(
            np.array([float(r["depth"]) for r in rows]),
            np.array([float(r["s_bar"]) for r in rows]),
        )


def gate_trace(graph: QuboGraph, table: EnergyTable, params: QaoaParams) -> EntropyTrace:
    """Sample the average one-qubit entropy after every two-qubit gate.

    The k-th ZZ gate of layer l sits at depth (l - 1) + k / E, so each layer
    spans one unit of depth regardless of the edge count. A depth-0 point for
    the initial product state is always included.
    """
    if table.n_qubits != graph.n_qubits:
        raise ValueError("graph and energy table disagree on N")
    n_edges = graph.n_edges
    state = init_plus_state(graph.n_qubits)
    depths, values = [0.0], [avg_one_qubit_entropy(state)]
    for layer, (beta, gamma) in enumerate(zip(params.betas, params.gammas)):
        k = 0
        for gate in cost_gate_sequence(graph, gamma):
            state = apply_gate(state, gate)
            if gate.is_two_qubit:
                k += 1
                depths.append(layer + k / n_edges)
                values.append(avg_one_qubit_entropy(state))
        state = apply_mixer_layer(state, beta)
    return EntropyTrace(np.array(depths), np.array(values))


def accumulation_area(trace: EntropyTrace) -> float:
    """Trapezoidal area under the entropy-vs-depth curve (bit * layers)."""
    if len(trace) < 2:
        warnings.warn("entropy trace has fewer than two points; area set to 0", stacklevel=2)
        return 0.0
    d, s = trace.depths, trace.s_bar
    return float(np.sum(np.diff(d) * (s[1:] + s[:-1]) / 2.0))
