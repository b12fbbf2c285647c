"""Single-qubit sampling circuits shared by the sampler and acceptance tests."""

from __future__ import annotations

import numpy as np

from thermstab.channels import ChannelDecomposition
from thermstab.circuit import Circuit
from thermstab.oracle import CARDINAL_STATES, PAULIS
from thermstab.sampler import sample_circuit, weighted_mean

PREP = {"0": (), "1": ("X",), "+": ("H",), "-": ("X", "H"), "+i": ("H", "S"), "-i": ("H", "S", "S", "S")}
# rotate the eigenbasis of each Pauli onto Z
ROTATE = {"X": ("H",), "Y": ("S", "S", "S", "H"), "Z": ()}
PAULI_INDEX = {"X": 1, "Y": 2, "Z": 3}

# filled by the acceptance tests, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def report(number: int, name: str, passed: bool, detail: str) -> None:
    line = f"{'PASS' if passed else 'FAIL'} #{number} {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, line


def single_qubit_circuit(state: str, basis: str, sites: list[ChannelDecomposition]) -> Circuit:
    c = Circuit(1)
    for g in PREP[state]:
        c.append(g, 0)
    for d in sites:
        c.add_noise(0, d)
    for g in ROTATE[basis]:
        c.append(g, 0)
    c.measure(0)
    return c


def sampled_expectation(
    state: str, basis: str, sites: list[ChannelDecomposition], shots: int, seed: int
) -> tuple[float, float, np.ndarray]:
    """Sign-weighted ``<P>`` estimate, its standard error, and the per-shot signed values."""
    compiled = single_qubit_circuit(state, basis, sites).compile()
    meas, signs = sample_circuit(compiled, shots, seed)
    values = 1.0 - 2.0 * meas[:, 0]
    est, err = weighted_mean(values, signs, compiled.gamma_total)
    return est, err, compiled.gamma_total * signs * values


def exact_expectation(state: str, basis: str, channel) -> float:
    rho = channel(CARDINAL_STATES[state])
    return float(np.trace(PAULIS[PAULI_INDEX[basis]] @ rho).real)
