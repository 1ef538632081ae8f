"""Channel-state duality and tripartite information of circuit unitaries.

The Choi state of an N-qubit unitary ``U`` lives on 2N legs: legs ``0..N-1``
are the input copy and legs ``N..2N-1`` the output copy,

    |U> = (I (x) U) sum_k |k>|k> / 2**(N/2),

so the amplitude at (input i, output j) is ``U[j, i] / 2**(N/2)``. All
entropies are in bits.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "NonUnitaryError",
    "Partition",
    "ScramblingResult",
    "choi_state",
    "schmidt_spectrum",
    "subsystem_entropy",
    "mutual_information",
    "tripartite_information",
    "default_partition",
    "parse_partition",
]

UNITARITY_TOL = 1e-8
EIG_CUTOFF = 1e-12
TRACE_TOL = 1e-9
MI_CLAMP = 1e-9


class NonUnitaryError(ValueError):
    pass


def _n_legs(state: np.ndarray) -> int:
    n = int(state.size).bit_length() - 1
    if 2**n != state.size:
        raise ValueError(f"state size {state.size} is not a power of two")
    return n


def choi_state(u: np.ndarray, tol: float = UNITARITY_TOL) -> np.ndarray:
    u = np.asarray(u, dtype=np.complex128)
    dim = u.shape[0]
    if u.shape != (dim, dim) or dim & (dim - 1):
        raise ValueError(f"expected a square 2**N matrix, got shape {u.shape}")
    err = np.max(np.abs(u.conj().T @ u - np.eye(dim)))
    if err > tol:
        raise NonUnitaryError(f"matrix is not unitary (max |U^dag U - I| = {err:.3g})")
    return u.T.reshape(-1) / np.sqrt(dim)


def _check_subsystem(subsystem: Iterable[int], n: int) -> list[int]:
    sub = sorted(set(int(q) for q in subsystem))
    if not sub:
        raise ValueError("subsystem must not be empty")
    if len(sub) == n:
        raise ValueError("subsystem must be a strict subset of the legs")
    if sub[0] < 0 or sub[-1] >= n:
        raise ValueError(f"subsystem {sub} out of range for {n} legs")
    return sub


def schmidt_spectrum(state: np.ndarray, subsystem: Iterable[int]) -> np.ndarray:
    """Eigenvalues of the reduced density matrix of ``subsystem``.

    Computed from the Gram matrix of the (subsystem x complement) amplitude
    matrix on whichever side is smaller. Values are clamped to [0, 1] and
    renormalized; a trace off by more than ``TRACE_TOL`` is an error.
    """
    n = _n_legs(state)
    sub = _check_subsystem(subsystem, n)
    rest = [q for q in range(n) if q not in sub]
    m = np.transpose(state.reshape((2,) * n), sub + rest).reshape(2 ** len(sub), -1)
    gram = m @ m.conj().T if m.shape[0] <= m.shape[1] else m.conj().T @ m
    vals = np.clip(np.linalg.eigvalsh(gram), 0.0, 1.0)
    total = vals.sum()
    if abs(total - 1.0) > TRACE_TOL:
        raise ValueError(f"reduced state has trace {total!r}; input is not normalized")
    return vals / total


def _entropy_bits(vals: np.ndarray) -> float:
    vals = vals[vals > EIG_CUTOFF]
    return float(-np.sum(vals * np.log2(vals)))


def subsystem_entropy(state: np.ndarray, subsystem: Iterable[int]) -> float:
    """Von Neumann entropy (bits) of the reduced state on ``subsystem``."""
    return _entropy_bits(schmidt_spectrum(state, subsystem))


def mutual_information(state: np.ndarray, x: Iterable[int], y: Iterable[int]) -> float:
    x, y = set(x), set(y)
    if x & y:
        raise ValueError(f"subsystems overlap on legs {sorted(x & y)}")
    n = _n_legs(state)
    s_x = subsystem_entropy(state, x)
    s_y = subsystem_entropy(state, y)
    # For a pure state the full system has zero entropy.
    s_xy = 0.0 if len(x | y) == n else subsystem_entropy(state, x | y)
    mi = s_x + s_y - s_xy
    if mi < -MI_CLAMP:
        raise ArithmeticError(f"negative mutual information {mi!r}")
    return max(mi, 0.0)


@dataclass(frozen=True)
class Partition:
    """Input legs split into A/B, output legs into C/D (all as leg indices)."""

    a: tuple[int, ...]
    b: tuple[int, ...]
    c: tuple[int, ...]
    d: tuple[int, ...]

    def validate(self, n_qubits: int) -> "Partition":
        parts = {"A": self.a, "B": self.b, "C": self.c, "D": self.d}
        for name, legs in parts.items():
            if not legs:
                raise ValueError(f"subsystem {name} is empty")
            if len(set(legs)) != len(legs):
                raise ValueError(f"subsystem {name} repeats a leg")
        inputs, outputs = set(range(n_qubits)), set(range(n_qubits, 2 * n_qubits))
        if set(self.a) & set(self.b) or set(self.c) & set(self.d):
            raise ValueError("partition subsystems overlap")
        if set(self.a) | set(self.b) != inputs:
            raise ValueError(f"A and B must cover input legs 0..{n_qubits - 1} exactly")
        if set(self.c) | set(self.d) != outputs:
            raise ValueError(f"C and D must cover output legs {n_qubits}..{2 * n_qubits - 1} exactly")
        return self

    @property
    def sizes(self) -> tuple[int, int, int, int]:
        return len(self.a), len(self.b), len(self.c), len(self.d)


def default_partition(n_qubits: int = 7) -> Partition:
    """|A| = 1 (input qubit 0), C = the first N//2 output qubits, D the rest.

    At N = 7 the sizes are 1, 6, 3, 4.
    """
    if n_qubits < 2:
        raise ValueError("a four-way partition needs N >= 2")
    n = n_qubits
    half = n // 2
    return Partition(
        a=(0,),
        b=tuple(range(1, n)),
        c=tuple(range(n, n + half)),
        d=tuple(range(n + half, 2 * n)),
    )


def parse_partition(lists_text: Sequence[str], n_qubits: int) -> Partition:
    """Build a partition from four comma-separated index lists.

    Output-side lists may use either absolute leg numbers (N..2N-1) or qubit
    numbers (0..N-1); the latter are shifted by N.
    """
    if len(lists_text) != 4:
        raise ValueError("partition needs four index lists: A B C D")
    lists = []
    for text in lists_text:
        try:
            lists.append(tuple(int(t) for t in text.split(",") if t.strip()))
        except ValueError as exc:
            raise ValueError(f"bad index list {text!r}") from exc
    a, b, c, d = lists
    if c and d and max(c + d) < n_qubits:
        c = tuple(q + n_qubits for q in c)
        d = tuple(q + n_qubits for q in d)
    return Partition(a, b, c, d).validate(n_qubits)


@dataclass(frozen=True)
class ScramblingResult:
    i_ac: float
    i_ad: float
    i_acd: float

    @property
    def i3(self) -> float:
        return self.i_ac + self.i_ad - self.i_acd


def tripartite_information(state: np.ndarray, part: Partition) -> ScramblingResult:
    """I(A:C) + I(A:D) - I(A:CD) on a Choi state."""
    n = _n_legs(state) // 2
    part.validate(n)
    return ScramblingResult(
        i_ac=mutual_information(state, part.a, part.c),
        i_ad=mutual_information(state, part.a, part.d),
        i_acd=mutual_information(state, part.a, part.c + part.d),
    )
