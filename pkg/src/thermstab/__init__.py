"""Thermal-relaxation channel analysis and stabilizer memory simulation."""

__version__ = "0.1.0"

from .channels import (
    Branch,
    ChannelDecomposition,
    PauliChannelProbs,
    ThermalParams,
    negativity,
    pta_channel,
    qpd_thermal,
    relaxation_probs,
    reset_approximation,
)
from .circuit import Circuit, CompiledCircuit
from .tableau import StabilizerTableau

__all__ = [
    "Branch",
    "ChannelDecomposition",
    "PauliChannelProbs",
    "ThermalParams",
    "negativity",
    "pta_channel",
    "qpd_thermal",
    "relaxation_probs",
    "reset_approximation",
    "Circuit",
    "CompiledCircuit",
    "StabilizerTableau",
]
