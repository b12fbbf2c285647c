"""Dense 1-2 qubit density-matrix ground truth.

Channels are accepted as Kraus sets, branch decompositions, Pauli channels or
plain callables and reduced to a 4x4 superoperator acting on row-major
vectorized 2x2 matrices.  All comparisons (PTM, fidelity, twirl) go through
that single representation.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from .channels import (
    ChannelDecomposition,
    PauliChannelProbs,
    ThermalParams,
    relaxation_probs,
    reset_approximation,
)

I2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, PAULI_X, PAULI_Y, PAULI_Z)

KET0 = np.array([[1, 0], [0, 0]], dtype=complex)
KET1 = np.array([[0, 0], [0, 1]], dtype=complex)

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = -1e-10
CPTP_TOL = 1e-10


@dataclass(frozen=True)
class KrausChannel:
    operators: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        ops = tuple(np.asarray(k, dtype=complex) for k in self.operators)
        if not ops:
            raise ValueError("Kraus channel needs at least one operator")
        completeness = sum(k.conj().T @ k for k in ops)
        if np.max(np.abs(completeness - I2)) > CPTP_TOL:
            raise ValueError("Kraus operators are not trace preserving")
        object.__setattr__(self, "operators", ops)

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return sum(k @ rho @ k.conj().T for k in self.operators)


Channel = Union[KrausChannel, ChannelDecomposition, PauliChannelProbs, Callable[[np.ndarray], np.ndarray]]


def density_matrix(rho: np.ndarray) -> np.ndarray:
    """Validate and return ``rho`` as a complex density matrix of dimension 2 or 4."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape not in ((2, 2), (4, 4)):
        raise ValueError(f"density matrix must be 2x2 or 4x4, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > TRACE_TOL:
        raise ValueError(f"density matrix trace is {np.trace(rho).real}")
    if np.linalg.eigvalsh(rho).min() < PSD_TOL:
        raise ValueError("density matrix has a negative eigenvalue")
    return rho


def pure_state(psi: Sequence[complex]) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def bloch_state(theta: float, phi: float = 0.0) -> np.ndarray:
    return pure_state([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])


# Cardinal states in the order +Z, -Z, +X, -X, +Y, -Y.
CARDINAL_STATES = {
    "0": pure_state([1, 0]),
    "1": pure_state([0, 1]),
    "+": pure_state([1, 1]),
    "-": pure_state([1, -1]),
    "+i": pure_state([1, 1j]),
    "-i": pure_state([1, -1j]),
}


def _decomposition_map(decomp: ChannelDecomposition) -> Callable[[np.ndarray], np.ndarray]:
    q = decomp.coefficients

    def apply(rho: np.ndarray) -> np.ndarray:
        tr = np.trace(rho)
        return (
            q[0] * rho
            + q[1] * PAULI_Z @ rho @ PAULI_Z
            + (q[2] * KET0 + q[3] * KET1) * tr
            + q[4] * PAULI_X @ rho @ PAULI_X
            + q[5] * PAULI_Y @ rho @ PAULI_Y
        )

    return apply


def _as_map(channel: Channel) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(channel, PauliChannelProbs):
        channel = channel.to_decomposition()
    if isinstance(channel, ChannelDecomposition):
        return _decomposition_map(channel)
    if callable(channel):
        return channel
    raise TypeError(f"not a channel: {type(channel).__name__}")


def superoperator(channel: Channel) -> np.ndarray:
    """4x4 matrix ``S`` with ``vec(E(rho)) = S @ vec(rho)`` (row-major vec)."""
    if isinstance(channel, np.ndarray):
        if channel.shape != (4, 4):
            raise ValueError("superoperator must be 4x4")
        return channel.astype(complex)
    apply = _as_map(channel)
    cols = []
    for k in range(4):
        basis = np.zeros(4, dtype=complex)
        basis[k] = 1
        cols.append(np.asarray(apply(basis.reshape(2, 2)), dtype=complex).reshape(4))
    return np.stack(cols, axis=1)


def apply_channel(channel: Channel, rho: np.ndarray) -> np.ndarray:
    """Apply a single-qubit channel; on 4x4 inputs it acts on the first qubit."""
    s = superoperator(channel).reshape(2, 2, 2, 2)
    rho = np.asarray(rho, dtype=complex)
    if rho.shape == (2, 2):
        return np.einsum("ikac,ac->ik", s, rho)
    if rho.shape == (4, 4):
        out = np.einsum("ikac,abcd->ibkd", s, rho.reshape(2, 2, 2, 2))
        return out.reshape(4, 4)
    raise ValueError(f"unsupported state shape {rho.shape}")


def apply_decomposition(rho: np.ndarray, decomp: ChannelDecomposition) -> np.ndarray:
    return apply_channel(decomp, rho)


def kraus_amplitude_damping(p_gamma: float) -> KrausChannel:
    return KrausChannel(
        (
            np.array([[1, 0], [0, np.sqrt(1 - p_gamma)]]),
            np.array([[0, np.sqrt(p_gamma)], [0, 0]]),
        )
    )


def kraus_thermal(params: ThermalParams) -> KrausChannel:
    """Dephasing composed after generalized amplitude damping, as Kraus operators."""
    if not isinstance(params, ThermalParams):
        raise TypeError("params must be ThermalParams")
    p_gamma, p_phi = relaxation_probs(params)
    p1 = params.p1
    s = np.sqrt(p_gamma)
    c = np.sqrt(1 - p_gamma)
    damping = [
        np.sqrt(1 - p1) * np.array([[1, 0], [0, c]]),
        np.sqrt(1 - p1) * np.array([[0, s], [0, 0]]),
        np.sqrt(p1) * np.array([[c, 0], [0, 1]]),
        np.sqrt(p1) * np.array([[0, 0], [s, 0]]),
    ]
    ops = [np.sqrt(1 - p_phi) * k for k in damping] + [np.sqrt(p_phi) * PAULI_Z @ k for k in damping]
    ops = [k for k in ops if np.any(np.abs(k) > 0)]
    return KrausChannel(tuple(ops))


def lindbladian(params: ThermalParams) -> np.ndarray:
    """Superoperator generator of the single-qubit thermal master equation."""
    down = (1 - params.p1) / params.t1
    up = params.p1 / params.t1
    jumps = [
        (down, np.array([[0, 1], [0, 0]], dtype=complex)),
        (up, np.array([[0, 0], [1, 0]], dtype=complex)),
        (params.gamma_phi / 2, PAULI_Z),
    ]
    gen = np.zeros((4, 4), dtype=complex)
    for rate, a in jumps:
        ada = a.conj().T @ a
        # row-major vec: vec(A X B) = (A kron B^T) vec(X)
        gen += rate * (np.kron(a, a.conj()) - 0.5 * np.kron(ada, I2) - 0.5 * np.kron(I2, ada.T))
    return gen


def integrate_master_equation(
    rho: np.ndarray, params: ThermalParams, steps: int = 10_000
) -> np.ndarray:
    """Fixed-step RK4 integration of the master equation over ``params.tau``."""
    rho = density_matrix(rho)
    if rho.shape != (2, 2):
        raise ValueError("master-equation integration is single-qubit only")
    if steps < 100:
        raise ValueError("steps must be >= 100")
    if params.tau == 0:
        return rho.copy()
    h = params.tau / steps
    gen = lindbladian(params)
    # the four RK4 stages of a linear ODE, applied to every basis vector at once
    k1 = gen
    k2 = gen @ (np.eye(4) + h / 2 * k1)
    k3 = gen @ (np.eye(4) + h / 2 * k2)
    k4 = gen @ (np.eye(4) + h * k3)
    step = np.eye(4) + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    v = rho.reshape(4)
    for i in range(steps):
        v = step @ v
        drift = abs(v[0] + v[3] - 1)
        if drift > 1e-8:
            raise RuntimeError(f"trace drifted by {drift:.3g} at step {i}")
    return v.reshape(2, 2)


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    diff = np.asarray(rho) - np.asarray(sigma)
    diff = (diff + diff.conj().T) / 2
    return float(0.5 * np.abs(np.linalg.eigvalsh(diff)).sum())


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    m = (m + m.conj().T) / 2
    w, v = np.linalg.eigh(m)
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T


def state_fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2``."""
    s = _psd_sqrt(rho)
    inner = s @ sigma @ s
    inner = (inner + inner.conj().T) / 2
    w = np.clip(np.linalg.eigvalsh(inner), 0, None)
    return float(min(np.sqrt(w).sum() ** 2, 1.0))


BELL_STATE = pure_state([1, 0, 0, 1])


def choi_state(channel: Channel) -> np.ndarray:
    return apply_channel(channel, BELL_STATE)


def channel_fidelity(a: Channel, b: Channel) -> float:
    return state_fidelity(choi_state(a), choi_state(b))


def pauli_transfer_matrix(channel: Channel) -> np.ndarray:
    """Real 4x4 matrix ``R[i, j] = Tr[P_i E(P_j)] / 2`` in the I, X, Y, Z basis."""
    s = superoperator(channel)
    out = np.empty((4, 4))
    for j, pj in enumerate(PAULIS):
        image = (s @ pj.reshape(4)).reshape(2, 2)
        for i, pi in enumerate(PAULIS):
            out[i, j] = 0.5 * np.trace(pi @ image).real
    return out


def chi_matrix(channel: Channel) -> np.ndarray:
    """Process matrix with ``E(rho) = sum chi[i, j] P_i rho P_j``."""
    s = superoperator(channel)
    chi = np.empty((4, 4), dtype=complex)
    for i, pi in enumerate(PAULIS):
        for j, pj in enumerate(PAULIS):
            basis = np.kron(pi, pj.T)
            chi[i, j] = np.trace(basis.conj().T @ s) / 4
    return chi


def pauli_twirl(channel: Channel) -> PauliChannelProbs:
    """Twirl over the single-qubit Paulis; only the diagonal of chi survives."""
    diag = np.real(np.diag(chi_matrix(channel)))
    diag = np.clip(diag, 0.0, 1.0)
    return PauliChannelProbs(float(diag[1]), float(diag[2]), float(diag[3]))


def delta_d(theta: float, params: ThermalParams) -> float:
    """PTA trace-distance error minus the exact one, for a y=0 great-circle state."""
    exact = kraus_thermal(params)
    twirled = pauli_twirl(exact)
    rho = bloch_state(theta)
    return trace_distance(rho, apply_channel(twirled, rho)) - trace_distance(
        rho, apply_channel(exact, rho)
    )


def delta_d_sweep(theta_grid: Iterable[float], params: ThermalParams) -> list[tuple[float, float]]:
    exact = kraus_thermal(params)
    twirled = pauli_twirl(exact)
    rows = []
    for theta in theta_grid:
        if not 0 <= theta <= np.pi:
            raise ValueError(f"theta={theta} outside [0, pi]")
        rho = bloch_state(theta)
        dd = trace_distance(rho, apply_channel(twirled, rho)) - trace_distance(
            rho, apply_channel(exact, rho)
        )
        rows.append((float(theta), dd))
    return rows


def delta_f(params: ThermalParams) -> float:
    """Choi fidelity of the reset approximation minus that of the twirled channel."""
    exact = kraus_thermal(params)
    target = choi_state(exact)
    f_reset = state_fidelity(target, choi_state(reset_approximation(params)))
    f_pta = state_fidelity(target, choi_state(pauli_twirl(exact)))
    return f_reset - f_pta


def delta_f_grid(
    t2_ratios: Iterable[float], tau_ratios: Iterable[float], p1: float = 0.0, t1: float = 1.0
) -> list[tuple[float, float, float]]:
    tau_ratios = list(tau_ratios)
    return [
        (float(r2), float(rt), delta_f(ThermalParams(t1, r2 * t1, rt * t1, p1)))
        for r2 in t2_ratios
        for rt in tau_ratios
    ]


def format_float(x: float | int) -> str:
    """Shortest decimal that round-trips to the same double."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[float]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_float(v) for v in row])
