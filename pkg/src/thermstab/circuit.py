"""Timed instruction lists with detector and observable annotations."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from . import _kernels as K
from .channels import ChannelDecomposition, negativity

_CODES = {
    "H": K.OP_H,
    "S": K.OP_S,
    "X": K.OP_X,
    "Y": K.OP_Y,
    "Z": K.OP_Z,
    "CNOT": K.OP_CNOT,
    "CZ": K.OP_CZ,
    "M": K.OP_M,
    "R": K.OP_R,
    "NOISE": K.OP_NOISE,
}
TWO_QUBIT = {"CNOT", "CZ"}


@dataclass(frozen=True)
class Instruction:
    """One circuit operation.

    ``arg`` is the record index for ``M``, the target state for ``R`` and the
    site id for ``NOISE``.
    """

    name: str
    qubits: tuple[int, ...]
    arg: int = 0
    decomposition: Optional[ChannelDecomposition] = None


@dataclass
class Circuit:
    n_qubits: int
    instructions: list[Instruction] = field(default_factory=list)
    detectors: list[tuple[int, ...]] = field(default_factory=list)
    observables: list[tuple[int, ...]] = field(default_factory=list)
    # noiseless value of each observable parity (1 for a prepared |1>_L)
    observable_offsets: list[int] = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    num_measurements: int = 0

    def tick(self) -> None:
        """Layer boundary; consecutive measure/reset runs are split here."""
        self.instructions.append(Instruction("TICK", ()))

    def append(self, name: str, qubits: Iterable[int] | int, arg: int = 0) -> None:
        if isinstance(qubits, (int, np.integer)):
            qubits = (int(qubits),)
        qubits = tuple(int(q) for q in qubits)
        if name not in _CODES or name == "NOISE":
            raise ValueError(f"unknown instruction {name!r}")
        for q in qubits:
            if not 0 <= q < self.n_qubits:
                raise IndexError(f"qubit {q} out of range")
        if name in TWO_QUBIT:
            if len(qubits) != 2 or qubits[0] == qubits[1]:
                raise ValueError(f"{name} needs two distinct qubits")
        elif len(qubits) != 1:
            raise ValueError(f"{name} acts on one qubit")
        self.instructions.append(Instruction(name, qubits, arg))

    def measure(self, qubit: int) -> int:
        """Append a Z measurement and return its record index."""
        idx = self.num_measurements
        self.append("M", qubit, idx)
        self.num_measurements += 1
        return idx

    def reset(self, qubit: int, target: int = 0) -> None:
        self.append("R", qubit, target)

    def add_noise(self, qubit: int, decomposition: ChannelDecomposition) -> int:
        """Append a noise site; returns its site id."""
        if not 0 <= qubit < self.n_qubits:
            raise IndexError(f"qubit {qubit} out of range")
        site = max((ins.arg for ins in self.noise_sites()), default=-1) + 1
        self.instructions.append(Instruction("NOISE", (int(qubit),), site, decomposition))
        return site

    def add_detector(self, records: Sequence[int]) -> None:
        self.detectors.append(tuple(sorted(records)))

    def add_observable(self, records: Sequence[int], offset: int = 0) -> None:
        self.observables.append(tuple(sorted(records)))
        self.observable_offsets.append(offset)

    def noise_sites(self) -> list[Instruction]:
        return [ins for ins in self.instructions if ins.name == "NOISE"]

    def copy(self) -> "Circuit":
        return Circuit(
            self.n_qubits,
            list(self.instructions),
            list(self.detectors),
            list(self.observables),
            list(self.observable_offsets),
            dict(self.meta),
            self.num_measurements,
        )

    def validate(self) -> None:
        seen = -1
        site = -1
        for ins in self.instructions:
            if ins.name == "M":
                if ins.arg <= seen:
                    raise ValueError("measurement record indices must strictly increase")
                seen = ins.arg
            if ins.name == "NOISE":
                if ins.arg <= site:
                    raise ValueError("noise site ids must strictly increase")
                site = ins.arg
        for group in self.detectors + self.observables:
            if any(not 0 <= i < self.num_measurements for i in group):
                raise ValueError("annotation references a missing measurement record")

    @property
    def gamma_total(self) -> float:
        return float(np.prod([negativity(s.decomposition) for s in self.noise_sites()]))

    def compile(self) -> "CompiledCircuit":
        return CompiledCircuit.from_circuit(self)


def parity_matrix(groups: Sequence[Sequence[int]], width: int) -> np.ndarray:
    m = np.zeros((len(groups), width), dtype=np.uint8)
    for i, g in enumerate(groups):
        for j in g:
            m[i, j] ^= 1
    return m


@dataclass
class CompiledCircuit:
    """Flat arrays consumed by the shot kernel."""

    n_qubits: int
    n_meas: int
    ops: np.ndarray
    site_qubits: np.ndarray
    site_cum: np.ndarray
    site_sign: np.ndarray
    site_coeffs: np.ndarray
    detector_matrix: np.ndarray
    observable_matrix: np.ndarray
    observable_offsets: np.ndarray
    gamma_total: float

    @classmethod
    def from_circuit(cls, c: Circuit) -> "CompiledCircuit":
        c.validate()
        body = [ins for ins in c.instructions if ins.name != "TICK"]
        ops = np.zeros((len(body), 3), dtype=np.int64)
        coeffs = []
        qubits = []
        for k, ins in enumerate(body):
            ops[k, 0] = _CODES[ins.name]
            ops[k, 1] = ins.qubits[0]
            if ins.name in TWO_QUBIT:
                ops[k, 2] = ins.qubits[1]
            elif ins.name == "NOISE":
                # kernel addresses sites by their position in the site table
                ops[k, 2] = len(coeffs)
                coeffs.append(ins.decomposition.as_array())
                qubits.append(ins.qubits[0])
            else:
                ops[k, 2] = ins.arg
        coeffs = np.array(coeffs, dtype=np.float64).reshape(-1, 6)
        mags = np.abs(coeffs)
        gammas = mags.sum(axis=1)
        cum = np.cumsum(mags / gammas[:, None], axis=1) if len(coeffs) else mags
        if len(coeffs):
            cum[:, -1] = 1.0
        sign = np.where(coeffs < 0, -1, 1).astype(np.int8)
        positive = (coeffs >= 0).all(axis=1)
        gammas = np.where(positive, 1.0, gammas)
        return cls(
            n_qubits=c.n_qubits,
            n_meas=c.num_measurements,
            ops=ops,
            site_qubits=np.array(qubits, dtype=np.int64),
            site_cum=np.ascontiguousarray(cum),
            site_sign=sign,
            site_coeffs=coeffs,
            detector_matrix=parity_matrix(c.detectors, c.num_measurements),
            observable_matrix=parity_matrix(c.observables, c.num_measurements),
            observable_offsets=np.array(c.observable_offsets, dtype=np.uint8),
            gamma_total=float(np.prod(gammas)),
        )

    @property
    def n_sites(self) -> int:
        return self.site_cum.shape[0]

    @property
    def n_detectors(self) -> int:
        return self.detector_matrix.shape[0]

    @property
    def n_observables(self) -> int:
        return self.observable_matrix.shape[0]

    def detection_events(self, meas: np.ndarray) -> np.ndarray:
        return _parities(meas, self.detector_matrix)

    def observable_flips(self, meas: np.ndarray) -> np.ndarray:
        return _parities(meas, self.observable_matrix) ^ self.observable_offsets


def _parities(meas: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    if matrix.shape[0] == 0:
        return np.zeros((meas.shape[0], 0), dtype=np.uint8)
    # counts fit easily in int32 for any realistic annotation size
    return ((meas.astype(np.int32) @ matrix.T.astype(np.int32)) & 1).astype(np.uint8)
