"""Closed-form thermal relaxation channels and their stabilizer decompositions.

Every single-qubit channel handled by the simulator is written as an affine
combination of six stabilizer branches (identity, Pauli Z, reset to |0>,
reset to |1>, Pauli X, Pauli Y).  The thermal relaxation decomposition only
ever uses the first four; the twirled Pauli channel uses the Paulis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Sequence

import numpy as np
from scipy import constants
from scipy.special import expit

NORMALIZATION_TOL = 1e-12


class Branch(IntEnum):
    """Stabilizer branch channels, in canonical sampling order."""

    I = 0
    Z = 1
    R0 = 2
    R1 = 3
    X = 4
    Y = 5


@dataclass(frozen=True)
class ThermalParams:
    """Physical parameters of one thermal relaxation window.

    Times share whatever unit the caller picks.  ``p1`` is the equilibrium
    excited-state population (0 at zero temperature, 1/2 at infinite).
    """

    t1: float
    t2: float
    tau: float
    p1: float = 0.0

    def __post_init__(self) -> None:
        if not self.t1 > 0:
            raise ValueError(f"t1 must be > 0, got {self.t1}")
        if not self.t2 > 0:
            raise ValueError(f"t2 must be > 0, got {self.t2}")
        if not self.tau >= 0:
            raise ValueError(f"tau must be >= 0, got {self.tau}")
        if self.t2 > 2 * self.t1:
            raise ValueError(
                f"t2 must satisfy t2 <= 2*t1 (got t2={self.t2}, 2*t1={2 * self.t1})"
            )
        if not 0.0 <= self.p1 <= 0.5:
            raise ValueError(f"p1 must lie in [0, 1/2], got {self.p1}")

    @property
    def gamma(self) -> float:
        """Total relaxation rate 1/T1."""
        return 1.0 / self.t1

    @property
    def gamma_phi(self) -> float:
        """Pure dephasing rate 1/T2 - 1/(2 T1)."""
        return 1.0 / self.t2 - 0.5 / self.t1

    @property
    def t_phi(self) -> float:
        rate = self.gamma_phi
        return math.inf if rate <= 0 else 1.0 / rate


@dataclass(frozen=True)
class BathSpec:
    """Qubit frequency (Hz) and bath temperature (K)."""

    qubit_frequency: float
    bath_temperature: float

    def __post_init__(self) -> None:
        if not self.qubit_frequency > 0:
            raise ValueError("qubit_frequency must be > 0")
        if not self.bath_temperature > 0:
            raise ValueError("bath_temperature must be > 0")


@dataclass(frozen=True)
class PauliChannelProbs:
    p_x: float
    p_y: float
    p_z: float

    def __post_init__(self) -> None:
        for name in ("p_x", "p_y", "p_z"):
            v = getattr(self, name)
            if not -NORMALIZATION_TOL <= v <= 1 + NORMALIZATION_TOL:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.p_x + self.p_y + self.p_z > 1 + NORMALIZATION_TOL:
            raise ValueError("Pauli probabilities sum above 1")

    @property
    def p_identity(self) -> float:
        return 1.0 - self.p_x - self.p_y - self.p_z

    def to_decomposition(self) -> "ChannelDecomposition":
        return ChannelDecomposition(
            q_identity=self.p_identity,
            q_pauli_z=self.p_z,
            q_reset0=0.0,
            q_reset1=0.0,
            q_pauli_x=self.p_x,
            q_pauli_y=self.p_y,
        )


@dataclass(frozen=True)
class ChannelDecomposition:
    """Affine combination of stabilizer branch channels.

    Only ``q_pauli_z`` may be negative; it carries the whole sign problem of
    the thermal channel.  The X and Y weights are zero except for twirled
    channels.
    """

    q_identity: float
    q_pauli_z: float
    q_reset0: float
    q_reset1: float
    q_pauli_x: float = 0.0
    q_pauli_y: float = 0.0

    def __post_init__(self) -> None:
        total = sum(self.coefficients)
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"coefficients sum to {total!r}, expected 1")
        for name in ("q_identity", "q_reset0", "q_reset1", "q_pauli_x", "q_pauli_y"):
            if getattr(self, name) < -NORMALIZATION_TOL:
                raise ValueError(f"{name} must be nonnegative, got {getattr(self, name)}")

    @property
    def coefficients(self) -> tuple[float, ...]:
        """Coefficients in :class:`Branch` order."""
        return (
            self.q_identity,
            self.q_pauli_z,
            self.q_reset0,
            self.q_reset1,
            self.q_pauli_x,
            self.q_pauli_y,
        )

    def as_array(self) -> np.ndarray:
        return np.array(self.coefficients, dtype=np.float64)

    @property
    def is_positive(self) -> bool:
        return all(c >= 0 for c in self.coefficients)

    @property
    def is_identity(self) -> bool:
        return self.q_identity == 1.0 and all(c == 0 for c in self.coefficients[1:])

    @classmethod
    def identity(cls) -> "ChannelDecomposition":
        return cls(1.0, 0.0, 0.0, 0.0)


def relaxation_probs(params: ThermalParams) -> tuple[float, float]:
    """Return ``(p_gamma, p_phi)``: relaxation and extra phase-flip probabilities."""
    p_gamma = -math.expm1(-params.tau / params.t1)
    p_phi = -0.5 * math.expm1(-params.tau * params.gamma_phi)
    return p_gamma, p_phi


def pta_channel(p_gamma: float, p_phi: float) -> PauliChannelProbs:
    """Pauli-twirled thermal channel.

    The twirl is temperature independent, so the same probabilities apply
    for any equilibrium population.
    """
    p_xy = p_gamma / 4
    p_z = 0.5 - p_gamma / 4 - (1 - 2 * p_phi) * math.sqrt(1 - p_gamma) / 2
    # the closed form cancels to zero at the noiseless point; keep it a probability
    p_z = max(p_z, 0.0)
    return PauliChannelProbs(p_xy, p_xy, p_z)


def pta_thermal(params: ThermalParams) -> PauliChannelProbs:
    return pta_channel(*relaxation_probs(params))


def _q_pm(params: ThermalParams) -> tuple[float, float]:
    e1 = math.exp(-params.tau / params.t1)
    e2 = math.exp(-params.tau / params.t2)
    return (e1 + e2) / 2, (e1 - e2) / 2


def qpd_thermal(params: ThermalParams) -> ChannelDecomposition:
    """Exact decomposition of dephasing composed with (generalized) amplitude damping."""
    q_plus, q_minus = _q_pm(params)
    p_gamma, _ = relaxation_probs(params)
    return ChannelDecomposition(
        q_identity=q_plus,
        q_pauli_z=q_minus,
        q_reset0=(1 - params.p1) * p_gamma,
        q_reset1=params.p1 * p_gamma,
    )


def qpd_amplitude_damping(p_gamma: float) -> ChannelDecomposition:
    if not 0.0 <= p_gamma <= 1.0:
        raise ValueError(f"p_gamma must lie in [0, 1], got {p_gamma}")
    root = math.sqrt(1 - p_gamma)
    return ChannelDecomposition(
        q_identity=(1 - p_gamma + root) / 2,
        q_pauli_z=(1 - p_gamma - root) / 2,
        q_reset0=p_gamma,
        q_reset1=0.0,
    )


def reset_approximation(params: ThermalParams) -> ChannelDecomposition:
    """Positive approximation: keep the identity weight, send the rest to reset."""
    q_plus, _ = _q_pm(params)
    rest = 1 - q_plus
    return ChannelDecomposition(
        q_identity=q_plus,
        q_pauli_z=0.0,
        q_reset0=rest * (1 - params.p1),
        q_reset1=rest * params.p1,
    )


def negativity(decomp: ChannelDecomposition) -> float:
    """Sum of absolute coefficients; 1 exactly when the decomposition is a distribution."""
    if decomp.is_positive:
        return 1.0
    return float(sum(abs(c) for c in decomp.coefficients))


def total_overhead(gammas: Iterable[float], n_c: int | None = None) -> tuple[float, float]:
    """Product of per-site negativities and the matching variance blow-up.

    ``n_c`` is only a consistency check on the number of sites.
    """
    gammas = list(gammas)
    if n_c is not None and n_c != len(gammas):
        raise ValueError(f"n_c={n_c} but {len(gammas)} negativities given")
    if any(g < 1 - NORMALIZATION_TOL for g in gammas):
        raise ValueError("every negativity must be >= 1")
    gamma_total = math.prod(gammas)
    return gamma_total, gamma_total**2


def equilibrium_excitation(bath: BathSpec) -> float:
    """Equilibrium excited population ``1 / (1 + exp(h f / k T))``."""
    x = constants.h * bath.qubit_frequency / (constants.k * bath.bath_temperature)
    return float(expit(-x))


def decomposition_for_model(params: ThermalParams, model: str) -> ChannelDecomposition:
    """Resolve a channel model name to the decomposition sampled at each site."""
    if model == "exact_qpd":
        return qpd_thermal(params)
    if model == "pta":
        return pta_thermal(params).to_decomposition()
    if model == "reset_approx":
        return reset_approximation(params)
    raise ValueError(f"unknown channel model {model!r}")


CHANNEL_MODELS: Sequence[str] = ("exact_qpd", "pta", "reset_approx")
