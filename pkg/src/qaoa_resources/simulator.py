"""Dense state-vector simulation of the p-layer QAOA circuit.

States are plain complex ``ndarray`` objects of length ``2**N`` (qubit 0 is
the most significant bit of the index). Every layer function also accepts a
2-D array of shape ``(2**N, m)`` and acts on each column, which is how the
full circuit unitary is built in one pass.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .qubo import EnergyTable, QuboGraph, spin_table

__all__ = [
    "QaoaParams",
    "Gate",
    "UnitaryCapError",
    "init_plus_state",
    "apply_cost_layer",
    "apply_mixer_layer",
    "apply_gate",
    "run_circuit",
    "iter_layers",
    "expectation",
    "cost_gate_sequence",
    "hadamard_transform",
    "build_unitary",
]

DEFAULT_UNITARY_CAP = 10

# Above this size the mixer is applied qubit by qubit instead of through a
# cached Walsh-Hadamard matrix.
_DENSE_MIXER_MAX_QUBITS = 10


class UnitaryCapError(ValueError):
    pass


@dataclass(frozen=True)
class QaoaParams:
    betas: tuple[float, ...]
    gammas: tuple[float, ...]

    def __init__(self, betas: Iterable[float], gammas: Iterable[float]):
        b = tuple(float(x) for x in betas)
        g = tuple(float(x) for x in gammas)
        if len(b) != len(g):
            raise ValueError(f"got {len(b)} betas but {len(g)} gammas")
        if not b:
            raise ValueError("QAOA needs at least one layer")
        object.__setattr__(self, "betas", b)
        object.__setattr__(self, "gammas", g)

    @property
    def p(self) -> int:
        return len(self.betas)

    def to_vector(self) -> np.ndarray:
        """Flat ``[betas..., gammas...]`` vector used by the optimizer."""
        return np.array(self.betas + self.gammas)

    @classmethod
    def from_vector(cls, x: Sequence[float]) -> "QaoaParams":
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or len(x) % 2:
            raise ValueError("parameter vector must have even length 2p")
        p = len(x) // 2
        return cls(x[:p], x[p:])

    @classmethod
    def zeros(cls, p: int) -> "QaoaParams":
        return cls([0.0] * p, [0.0] * p)


@dataclass(frozen=True)
class Gate:
    """Diagonal phase gate ``exp(-i * angle * Z...Z)`` on one or two qubits."""

    qubits: tuple[int, ...]
    angle: float

    @property
    def is_two_qubit(self) -> bool:
        return len(self.qubits) == 2

    def phases(self, n_qubits: int) -> np.ndarray:
        s = spin_table(n_qubits)
        zz = np.prod(s[list(self.qubits)], axis=0)
        return np.exp(-1j * self.angle * zz)

    def matrix(self) -> np.ndarray:
        """Local 2x2 or 4x4 matrix on ``qubits`` in the listed order."""
        local = Gate(tuple(range(len(self.qubits))), self.angle)
        return np.diag(local.phases(len(self.qubits)))


def _n_qubits(state: np.ndarray) -> int:
    n = int(state.shape[0]).bit_length() - 1
    if 2**n != state.shape[0]:
        raise ValueError(f"state length {state.shape[0]} is not a power of two")
    return n


def _energies(table: EnergyTable | np.ndarray) -> np.ndarray:
    return table.energies if isinstance(table, EnergyTable) else np.asarray(table)


def init_plus_state(n_qubits: int) -> np.ndarray:
    if n_qubits < 1:
        raise ValueError("need at least one qubit")
    dim = 2**n_qubits
    return np.full(dim, dim**-0.5, dtype=np.complex128)


def _check_dim(state: np.ndarray, energies: np.ndarray) -> None:
    if state.shape[0] != energies.shape[0]:
        raise ValueError(
            f"dimension mismatch: state has {state.shape[0]} amplitudes, "
            f"energy table has {energies.shape[0]}"
        )


def apply_cost_layer(state: np.ndarray, table: EnergyTable | np.ndarray, gamma: float) -> np.ndarray:
    e = _energies(table)
    _check_dim(state, e)
    phase = np.exp(-1j * gamma * e)
    if state.ndim == 2:
        phase = phase[:, None]
    return state * phase


@lru_cache(maxsize=None)
def _hadamard_matrix(n_qubits: int) -> np.ndarray:
    h = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
    out = np.ones((1, 1))
    for _ in range(n_qubits):
        out = np.kron(out, h)
    # Complex dtype avoids a real->complex upcast on every matmul.
    out = out.astype(np.complex128)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def _x_eigenvalue_sums(n_qubits: int) -> np.ndarray:
    # sum_k s_k(z); in the Hadamard-rotated frame sum_k X_k is this diagonal.
    return spin_table(n_qubits).sum(axis=0)


def hadamard_transform(state: np.ndarray) -> np.ndarray:
    """Apply ``H`` to every qubit."""
    n = _n_qubits(state)
    if n <= _DENSE_MIXER_MAX_QUBITS:
        return _hadamard_matrix(n) @ state
    out = state
    inv = 1.0 / np.sqrt(2.0)
    for q in range(n):
        v = out.reshape((2**q, 2, -1))
        a0, a1 = v[:, 0], v[:, 1]
        out = np.stack(((a0 + a1) * inv, (a0 - a1) * inv), axis=1).reshape(state.shape)
    return out


def apply_mixer_layer(state: np.ndarray, beta: float) -> np.ndarray:
    """Apply ``exp(-i beta sum_k X_k)``.

    Each qubit maps ``(a0, a1)`` to ``(cos b a0 - i sin b a1, -i sin b a0 + cos b a1)``.
    """
    n = _n_qubits(state)
    if n <= _DENSE_MIXER_MAX_QUBITS:
        h = _hadamard_matrix(n)
        phase = np.exp(-1j * beta * _x_eigenvalue_sums(n))
        if state.ndim == 2:
            phase = phase[:, None]
        return h @ (phase * (h @ state))
    c, s = np.cos(beta), -1j * np.sin(beta)
    out = state
    for q in range(n):
        v = out.reshape((2**q, 2, -1))
        a0, a1 = v[:, 0], v[:, 1]
        out = np.stack((c * a0 + s * a1, s * a0 + c * a1), axis=1).reshape(state.shape)
    return out


def apply_gate(state: np.ndarray, gate: Gate) -> np.ndarray:
    phase = gate.phases(_n_qubits(state))
    if state.ndim == 2:
        phase = phase[:, None]
    return state * phase


def iter_layers(table: EnergyTable | np.ndarray, params: QaoaParams, state: np.ndarray | None = None):
    """Yield the state after each full layer ``U_B(beta_l) U_C(gamma_l)``, l = 1..p."""
    e = _energies(table)
    if state is None:
        state = init_plus_state(_n_qubits(e))
    for beta, gamma in zip(params.betas, params.gammas):
        state = apply_mixer_layer(apply_cost_layer(state, e, gamma), beta)
        yield state


def run_circuit(
    table: EnergyTable | np.ndarray,
    params: QaoaParams,
    state: np.ndarray | None = None,
) -> np.ndarray:
    """Evolve ``state`` (default ``|+>^N``) through all p layers, gamma_1 first."""
    e = _energies(table)
    if state is None:
        state = init_plus_state(_n_qubits(e))
    else:
        _check_dim(state, e)
    for state in iter_layers(e, params, state):
        pass
    return state


def expectation(state: np.ndarray, table: EnergyTable | np.ndarray) -> float:
    e = _energies(table)
    _check_dim(state, e)
    return float(np.dot(np.abs(state) ** 2, e))


def cost_gate_sequence(graph: QuboGraph, gamma: float) -> list[Gate]:
    """Gate-level cost layer: node Z phases in node order, then ZZ phases in (i, j) order."""
    gates = [Gate((k,), gamma * h) for k, h in enumerate(graph.node_weights)]
    gates += [Gate((i, j), gamma * w) for i, j, w in sorted(graph.edges)]
    return gates


def build_unitary(
    table: EnergyTable | np.ndarray,
    params: QaoaParams,
    include_initial_hadamards: bool = True,
    max_qubits: int = DEFAULT_UNITARY_CAP,
) -> np.ndarray:
    """Full circuit matrix; column j is the circuit applied to basis state j."""
    e = _energies(table)
    n = _n_qubits(e)
    if n > max_qubits:
        raise UnitaryCapError(f"N={n} exceeds the unitary construction cap of {max_qubits}")
    u = np.eye(2**n, dtype=np.complex128)
    if include_initial_hadamards:
        u = hadamard_transform(u)
    return run_circuit(e, params, u)
