"""CHP stabilizer/destabilizer tableau."""

from __future__ import annotations

import numpy as np

from . import _kernels as K
from .rng import ShotRng

GATES_1Q = {"H", "S", "X", "Y", "Z"}
GATES_2Q = {"CNOT", "CX", "CZ"}


class StabilizerTableau:
    """Tableau of an ``n``-qubit stabilizer state, initialized to ``|0...0>``.

    Rows ``0..n-1`` are destabilizers, ``n..2n-1`` stabilizers.  Bits are packed
    into ``uint64`` words, 64 qubits per word.
    """

    def __init__(self, n: int) -> None:
        if n < 1:
            raise ValueError("a tableau needs at least one qubit")
        self.n = n
        self.x, self.z, self.r = K.new_tableau(n)

    def copy(self) -> "StabilizerTableau":
        t = StabilizerTableau.__new__(StabilizerTableau)
        t.n = self.n
        t.x, t.z, t.r = self.x.copy(), self.z.copy(), self.r.copy()
        return t

    def _check(self, q: int) -> None:
        if not 0 <= q < self.n:
            raise IndexError(f"qubit {q} out of range for {self.n} qubits")

    def bits(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Unpacked ``(x, z, r)`` over the 2n non-scratch rows."""
        rows = 2 * self.n
        x = np.unpackbits(self.x[:rows].view(np.uint8), axis=1, bitorder="little")[:, : self.n]
        z = np.unpackbits(self.z[:rows].view(np.uint8), axis=1, bitorder="little")[:, : self.n]
        return x.astype(bool), z.astype(bool), self.r[:rows].astype(bool)

    def row_string(self, i: int) -> str:
        x, z, r = self.bits()
        chars = "".join("IXZY"[int(a) + 2 * int(b)] for a, b in zip(x[i], z[i]))
        return ("-" if r[i] else "+") + chars

    def stabilizers(self) -> list[str]:
        return [self.row_string(self.n + i) for i in range(self.n)]

    def check_invariants(self) -> None:
        """Brute-force symplectic checks; raises ``AssertionError`` on violation."""
        x, z, _ = self.bits()
        xi, zi = x.astype(np.uint8), z.astype(np.uint8)
        # symplectic form: rows i, j anticommute iff x_i.z_j + z_i.x_j is odd
        form = (xi @ zi.T + zi @ xi.T) % 2
        n = self.n
        expected = np.zeros((2 * n, 2 * n), dtype=np.int64)
        expected[:n, n:] = np.eye(n, dtype=np.int64)
        expected[n:, :n] = np.eye(n, dtype=np.int64)
        # destabilizers need not commute among themselves in CHP
        mask = np.ones_like(expected, dtype=bool)
        mask[:n, :n] = False
        if not np.array_equal(form[mask], expected[mask]):
            raise AssertionError("tableau lost its symplectic pairing")
        stab = np.concatenate([xi[n:], zi[n:]], axis=1)
        if gf2_rank(stab) != n:
            raise AssertionError("stabilizer rows are not independent")


def gf2_rank(m: np.ndarray) -> int:
    m = (np.asarray(m) % 2).astype(np.uint8)
    rank = 0
    rows, cols = m.shape
    for c in range(cols):
        pivot = next((i for i in range(rank, rows) if m[i, c]), None)
        if pivot is None:
            continue
        m[[rank, pivot]] = m[[pivot, rank]]
        below = np.nonzero(m[:, c])[0]
        below = below[below != rank]
        m[below] ^= m[rank]
        rank += 1
        if rank == rows:
            break
    return rank


def new_tableau(n: int) -> StabilizerTableau:
    return StabilizerTableau(n)


def apply_gate(t: StabilizerTableau, gate: str, qubits) -> None:
    gate = gate.upper()
    qubits = (qubits,) if isinstance(qubits, (int, np.integer)) else tuple(qubits)
    for q in qubits:
        t._check(q)
    if gate in GATES_1Q:
        if len(qubits) != 1:
            raise ValueError(f"{gate} acts on one qubit")
        (q,) = qubits
        if gate == "H":
            K.gate_h(t.x, t.z, t.r, q)
        elif gate == "S":
            K.gate_s(t.x, t.z, t.r, q)
        else:
            K.gate_pauli(t.x, t.z, t.r, q, int(gate in "XY"), int(gate in "ZY"))
    elif gate in GATES_2Q:
        if len(qubits) != 2 or qubits[0] == qubits[1]:
            raise ValueError(f"{gate} needs two distinct qubits")
        if gate == "CZ":
            K.gate_cz(t.x, t.z, t.r, *qubits)
        else:
            K.gate_cnot(t.x, t.z, t.r, *qubits)
    else:
        raise ValueError(f"unknown gate {gate!r}")


def measure_z(t: StabilizerTableau, qubit: int, rng: ShotRng) -> tuple[int, bool]:
    t._check(qubit)
    outcome, deterministic = K.measure(t.x, t.z, t.r, qubit, rng.state)
    return int(outcome), bool(deterministic)


def reset(t: StabilizerTableau, qubit: int, target: int, rng: ShotRng) -> None:
    """Reset to ``|target>`` by measuring and conditionally flipping."""
    t._check(qubit)
    if target not in (0, 1):
        raise ValueError("reset target must be 0 or 1")
    K.reset(t.x, t.z, t.r, qubit, target, rng.state)
