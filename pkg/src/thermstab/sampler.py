"""Monte-Carlo sampling of branch decompositions with sign-weighted estimation."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numba
import numpy as np

from . import _kernels as K
from .channels import Branch, ChannelDecomposition, negativity
from .circuit import CompiledCircuit
from .rng import ShotRng, shot_rng
from .tableau import StabilizerTableau

__all__ = [
    "ShotWeight",
    "Accumulator",
    "sample_branch",
    "apply_branch",
    "weighted_estimate",
    "weighted_mean",
    "shot_rng",
    "sample_circuit",
    "configure_threads",
]


@dataclass(frozen=True)
class ShotWeight:
    sign: int
    gamma_product: float

    def __post_init__(self) -> None:
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if self.gamma_product < 1 - 1e-12:
            raise ValueError("gamma_product must be >= 1")


def sample_branch(decomp: ChannelDecomposition, rng: ShotRng) -> tuple[Branch, int]:
    """Draw a branch with probability ``|q|/Gamma`` using one uniform."""
    mags = np.abs(decomp.as_array())
    cum = np.cumsum(mags / mags.sum())
    cum[-1] = 1.0
    k = K.pick_branch(cum, rng.random())
    sign = -1 if decomp.coefficients[k] < 0 else 1
    return Branch(k), sign


def apply_branch(t: StabilizerTableau, qubit: int, branch: Branch, rng: ShotRng) -> None:
    t._check(qubit)
    K.apply_branch(t.x, t.z, t.r, qubit, int(branch), rng.state)


@dataclass
class Accumulator:
    """Mergeable running sums of sign-weighted values."""

    total: float = 0.0
    total_sq: float = 0.0
    count: int = 0

    def add(self, signed_values: np.ndarray) -> None:
        v = np.asarray(signed_values, dtype=np.float64)
        self.total += float(v.sum())
        self.total_sq += float((v * v).sum())
        self.count += v.size

    def merge(self, other: "Accumulator") -> "Accumulator":
        return Accumulator(self.total + other.total, self.total_sq + other.total_sq, self.count + other.count)

    def estimate(self, gamma_total: float = 1.0) -> tuple[float, float]:
        if self.count == 0:
            raise ValueError("no samples")
        mean = self.total / self.count
        if self.count > 1:
            var = max(self.total_sq - self.count * mean * mean, 0.0) / (self.count - 1)
        else:
            var = 0.0
        return gamma_total * mean, gamma_total * math.sqrt(var / self.count)


def weighted_mean(values: np.ndarray, signs: np.ndarray, gamma_total: float) -> tuple[float, float]:
    """``Gamma * mean(sign * value)`` and its standard error."""
    acc = Accumulator()
    acc.add(np.asarray(signs, dtype=np.float64) * np.asarray(values, dtype=np.float64))
    return acc.estimate(gamma_total)


def weighted_estimate(records: Sequence[tuple[float, ShotWeight]]) -> tuple[float, float]:
    if not records:
        raise ValueError("weighted_estimate needs at least one record")
    gammas = {w.gamma_product for _, w in records}
    if len(gammas) != 1:
        raise ValueError("all records must come from the same circuit")
    values = np.array([v for v, _ in records], dtype=np.float64)
    signs = np.array([w.sign for _, w in records], dtype=np.float64)
    return weighted_mean(values, signs, gammas.pop())


def configure_threads(threads: Optional[int] = None) -> int:
    """Cap kernel worker threads (argument, else ``THERMSTAB_THREADS``)."""
    if threads is None:
        env = os.environ.get("THERMSTAB_THREADS")
        threads = int(env) if env else numba.config.NUMBA_NUM_THREADS
    threads = max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(threads)
    return threads


def sample_circuit(
    compiled: CompiledCircuit,
    shots: int,
    master_seed: int,
    first_shot: int = 0,
    forced: Optional[np.ndarray] = None,
    threads: Optional[int] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Run shots ``first_shot .. first_shot + shots - 1``.

    Returns the measurement records ``(shots, n_meas)`` and the per-shot signs.
    ``forced`` pins the branch of chosen sites (``-1`` leaves a site sampled).
    """
    if shots <= 0:
        raise ValueError("shots must be positive")
    configure_threads(threads)
    if forced is None:
        forced = np.full(compiled.n_sites, -1, dtype=np.int64)
    return K.run_shots(
        compiled.ops,
        compiled.n_qubits,
        compiled.n_meas,
        compiled.site_cum,
        compiled.site_sign,
        np.asarray(forced, dtype=np.int64),
        np.uint64(int(master_seed) & ((1 << 64) - 1)),
        first_shot,
        shots,
    )


def site_negativities(decomps: Iterable[ChannelDecomposition]) -> list[float]:
    return [negativity(d) for d in decomps]
