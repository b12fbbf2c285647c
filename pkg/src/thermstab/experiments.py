"""Memory-experiment circuits, noise instrumentation and shot runners."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Protocol, Sequence

import numpy as np
from scipy.stats import binomtest

from .channels import ChannelDecomposition, ThermalParams, decomposition_for_model
from .circuit import Circuit, CompiledCircuit, Instruction
from .codes import BBCode, BBSpec, SurfaceLayout, SurfaceSpec
from .sampler import Accumulator, ShotWeight, sample_circuit

NOISE_POLICIES = ("before_measure", "around_measure_reset")


# ---------------------------------------------------------------- builders


def _syndrome_round(
    c: Circuit,
    checks: Sequence[tuple[str, int]],
    prev: dict,
    first: bool,
    basis: str,
    reset: bool = True,
) -> dict:
    """Measure (and reset) every ancilla, adding round detectors.

    ``checks`` lists ``(kind, ancilla)`` pairs; ``prev`` maps ancillas to their
    record from the previous round.
    """
    c.tick()
    now = {anc: c.measure(anc) for _, anc in checks}
    if reset:
        for _, anc in checks:
            c.reset(anc)
    c.tick()
    for kind, anc in checks:
        if first:
            if kind == basis:
                c.add_detector([now[anc]])
        else:
            c.add_detector([now[anc], prev[anc]])
    return now


def _surface_cnots(c: Circuit, layout: SurfaceLayout, x_anc: Sequence[int], z_anc: Sequence[int]) -> None:
    for a in x_anc:
        c.append("H", a)
    for step in range(4):
        for a, order in zip(x_anc, layout.x_schedule):
            if order[step] is not None:
                c.append("CNOT", (a, order[step]))
        for a, order in zip(z_anc, layout.z_schedule):
            if order[step] is not None:
                c.append("CNOT", (order[step], a))
    for a in x_anc:
        c.append("H", a)


def _surface_prep(spec: SurfaceSpec) -> tuple[Circuit, SurfaceLayout, list[int], list[int]]:
    d = spec.distance
    layout = SurfaceLayout.build(d)
    n_data = layout.n_data
    x_anc = list(range(n_data, n_data + len(layout.x_checks)))
    z_anc = list(range(x_anc[-1] + 1, x_anc[-1] + 1 + len(layout.z_checks)))
    c = Circuit(n_data + len(x_anc) + len(z_anc))
    if spec.initial_state == "+":
        for q in range(n_data):
            c.append("H", q)
    elif spec.initial_state == "1":
        # minimum-weight logical X string on the |0>_L preparation
        for q in layout.logical_x:
            c.append("X", q)
    c.meta.update(
        code="surface",
        distance=d,
        basis=spec.basis,
        initial_state=spec.initial_state,
        data_qubits=list(range(n_data)),
        x_ancillas=x_anc,
        z_ancillas=z_anc,
    )
    return c, layout, x_anc, z_anc


def build_surface_memory(spec: SurfaceSpec, rounds: int) -> Circuit:
    """Rotated surface-code memory with ``rounds`` syndrome rounds."""
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    c, layout, x_anc, z_anc = _surface_prep(spec)
    checks = [("X", a) for a in x_anc] + [("Z", a) for a in z_anc]
    supports = dict(zip(x_anc, layout.x_checks)) | dict(zip(z_anc, layout.z_checks))
    prev: dict = {}
    round_ends = []
    for rnd in range(rounds):
        _surface_cnots(c, layout, x_anc, z_anc)
        prev = _syndrome_round(c, checks, prev, rnd == 0, spec.basis)
        round_ends.append(len(c.instructions))
    data = c.meta["data_qubits"]
    if spec.basis == "X":
        for q in data:
            c.append("H", q)
    c.tick()
    final = {q: c.measure(q) for q in data}
    for kind, anc in checks:
        if kind == spec.basis:
            c.add_detector([final[q] for q in supports[anc]] + [prev[anc]])
    logical = layout.logical_z if spec.basis == "Z" else layout.logical_x
    c.add_observable([final[q] for q in logical], offset=int(spec.initial_state == "1"))
    c.meta.update(rounds=rounds, round_ends=round_ends, checks=checks, supports=supports)
    return c


def build_bb_memory(spec: BBSpec, rounds: int) -> Circuit:
    """Z-basis memory of a bivariate bicycle code (all logicals in |0>)."""
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    code = BBCode(spec)
    n = code.n
    x_anc = list(range(n, n + code.hx.shape[0]))
    z_anc = list(range(n + code.hx.shape[0], n + code.hx.shape[0] + code.hz.shape[0]))
    c = Circuit(n + len(x_anc) + len(z_anc))
    x_sup = {a: tuple(np.nonzero(row)[0]) for a, row in zip(x_anc, code.hx)}
    z_sup = {a: tuple(np.nonzero(row)[0]) for a, row in zip(z_anc, code.hz)}
    checks = [("X", a) for a in x_anc] + [("Z", a) for a in z_anc]
    prev: dict = {}
    round_ends = []
    for rnd in range(rounds):
        for a in x_anc:
            c.append("H", a)
            for q in x_sup[a]:
                c.append("CNOT", (a, int(q)))
            c.append("H", a)
        for a in z_anc:
            for q in z_sup[a]:
                c.append("CNOT", (int(q), a))
        prev = _syndrome_round(c, checks, prev, rnd == 0, "Z")
        round_ends.append(len(c.instructions))
    c.tick()
    final = {q: c.measure(q) for q in range(n)}
    for a in z_anc:
        c.add_detector([final[int(q)] for q in z_sup[a]] + [prev[a]])
    for logical in code.logical_z():
        c.add_observable([final[int(q)] for q in np.nonzero(logical)[0]])
    c.meta.update(
        code="bb",
        spec=spec,
        rounds=rounds,
        round_ends=round_ends,
        data_qubits=list(range(n)),
        x_ancillas=x_anc,
        z_ancillas=z_anc,
        checks=checks,
        supports=x_sup | z_sup,
        k=code.k,
    )
    return c


def build_population_circuit(state: str, distance: int) -> Circuit:
    """State preparation plus one syndrome round, then Z on every qubit.

    Ancillas are not reset after the syndrome measurement, so the closing
    measurement sees their post-measurement state.
    """
    spec = SurfaceSpec.for_state(distance, state)
    c, layout, x_anc, z_anc = _surface_prep(spec)
    _surface_cnots(c, layout, x_anc, z_anc)
    checks = [("X", a) for a in x_anc] + [("Z", a) for a in z_anc]
    _syndrome_round(c, checks, {}, True, spec.basis, reset=False)
    c.detectors.clear()
    first = c.num_measurements
    for q in range(c.n_qubits):
        c.measure(q)
    c.meta.update(population_records=list(range(first, c.num_measurements)))
    return c


# ---------------------------------------------------------------- noise


def measurement_layers(c: Circuit) -> list[tuple[int, int]]:
    """``(start, stop)`` instruction spans of maximal measure/reset runs."""
    spans = []
    start = None
    for k, ins in enumerate(c.instructions):
        if ins.name in ("M", "R"):
            if start is None:
                start = k
        elif start is not None:
            spans.append((start, k))
            start = None
    if start is not None:
        spans.append((start, len(c.instructions)))
    return spans


def instrument_noise(
    c: Circuit,
    params: ThermalParams,
    model: str = "exact_qpd",
    policy: str = "before_measure",
    final_layer_noise: bool = True,
    gate_params: Optional[ThermalParams] = None,
) -> Circuit:
    """Insert a thermal noise site on every qubit at each measurement window.

    ``before_measure`` adds one layer ahead of each measurement layer;
    ``around_measure_reset`` also adds one after layers that reset.  The
    closing data measurement gets its leading layer only when
    ``final_layer_noise`` is set.  ``gate_params``, when given, additionally
    attaches a site to both qubits after every two-qubit gate.
    """
    if policy not in NOISE_POLICIES:
        raise ValueError(f"unknown noise policy {policy!r}")
    if c.noise_sites():
        raise ValueError("circuit is already instrumented")
    decomp = decomposition_for_model(params, model)
    gate_decomp = decomposition_for_model(gate_params, model) if gate_params else None
    spans = measurement_layers(c)
    before = {}
    after = {}
    for i, (start, stop) in enumerate(spans):
        last = i == len(spans) - 1
        if not last or final_layer_noise:
            before[start] = True
        has_reset = any(ins.name == "R" for ins in c.instructions[start:stop])
        if policy == "around_measure_reset" and has_reset:
            after[stop] = True

    out = c.copy()
    out.instructions = []
    site = 0

    def layer(decomposition: ChannelDecomposition, qubits) -> None:
        nonlocal site
        for q in qubits:
            out.instructions.append(Instruction("NOISE", (q,), site, decomposition))
            site += 1

    everyone = range(c.n_qubits)
    for k, ins in enumerate(c.instructions):
        if k in after:
            layer(decomp, everyone)
        if k in before:
            layer(decomp, everyone)
        out.instructions.append(ins)
        if gate_decomp is not None and ins.name in ("CNOT", "CZ"):
            layer(gate_decomp, ins.qubits)
    if len(c.instructions) in after:
        layer(decomp, everyone)
    out.meta.update(model=model, policy=policy, params=params, final_layer_noise=final_layer_noise)
    return out


# ---------------------------------------------------------------- running


@dataclass(frozen=True)
class ShotRecord:
    detection_events: np.ndarray
    logical_flips: np.ndarray
    weight: ShotWeight


@dataclass
class ShotRecords:
    """Column-stored shot results; indexing yields :class:`ShotRecord`."""

    detection_events: np.ndarray
    logical_flips: np.ndarray
    signs: np.ndarray
    gamma_total: float
    corrections: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return self.signs.shape[0]

    def __getitem__(self, i: int) -> ShotRecord:
        return ShotRecord(
            self.detection_events[i], self.logical_flips[i], ShotWeight(int(self.signs[i]), self.gamma_total)
        )

    def __iter__(self) -> Iterator[ShotRecord]:
        return (self[i] for i in range(len(self)))

    def failures(self) -> np.ndarray:
        residual = self.logical_flips
        if self.corrections is not None:
            residual = residual ^ self.corrections
        return residual.any(axis=1) if residual.shape[1] else np.zeros(len(self), dtype=bool)


class Decoder(Protocol):
    fallback_count: int

    def decode_batch(self, events: np.ndarray) -> np.ndarray: ...


@dataclass
class MemoryResult:
    records: ShotRecords
    summary: dict = field(default_factory=dict)


def _interval(successes: np.ndarray, signs: np.ndarray, gamma_total: float) -> tuple[float, float, float, tuple[float, float]]:
    acc = Accumulator()
    acc.add(signs.astype(np.float64) * successes.astype(np.float64))
    est, err = acc.estimate(gamma_total)
    n = successes.shape[0]
    if gamma_total == 1.0 and (signs > 0).all():
        ci = binomtest(int(successes.sum()), n).proportion_ci(0.95, method="wilson")
        return est, err, n, (float(ci.low), float(ci.high))
    return est, err, n, (est - 1.959963984540054 * err, est + 1.959963984540054 * err)


def run_memory(
    c: Circuit | CompiledCircuit,
    shots: int,
    master_seed: int,
    decoder: Optional[Decoder] = None,
    batch_size: int = 100_000,
    threads: Optional[int] = None,
) -> MemoryResult:
    """Sample ``shots`` shots, decode, and report the sign-weighted LER.

    Shot ``i`` always uses stream ``(master_seed, i)``, so batching and thread
    count never change the records.
    """
    if shots <= 0:
        raise ValueError("shots must be positive")
    compiled = c if isinstance(c, CompiledCircuit) else c.compile()
    events, flips, signs = [], [], []
    for start in range(0, shots, batch_size):
        count = min(batch_size, shots - start)
        meas, sgn = sample_circuit(compiled, count, master_seed, first_shot=start, threads=threads)
        events.append(compiled.detection_events(meas))
        flips.append(compiled.observable_flips(meas))
        signs.append(sgn)
    records = ShotRecords(
        np.concatenate(events), np.concatenate(flips), np.concatenate(signs), compiled.gamma_total
    )
    fallback = 0
    if decoder is not None:
        before = decoder.fallback_count
        records.corrections = decoder.decode_batch(records.detection_events)
        fallback = decoder.fallback_count - before
    ler, err, n, ci = _interval(records.failures(), records.signs, compiled.gamma_total)
    summary = {
        "ler": ler,
        "ler_ci95": [ci[0], ci[1]],
        "std_error": err,
        "shots": n,
        "gamma_total": compiled.gamma_total,
        "fallback_count": fallback,
        "n_detectors": compiled.n_detectors,
        "n_observables": compiled.n_observables,
        "n_noise_sites": compiled.n_sites,
    }
    return MemoryResult(records, summary)


def excited_population(
    state: str,
    d: int,
    params: ThermalParams,
    shots: int,
    master_seed: int,
    model: str = "exact_qpd",
    policy: str = "before_measure",
    threads: Optional[int] = None,
) -> dict:
    """Mean fraction of 1 outcomes over all qubits after state preparation."""
    c = instrument_noise(build_population_circuit(state, d), params, model, policy)
    compiled = c.compile()
    records = c.meta["population_records"]
    acc = Accumulator()
    for start in range(0, shots, 100_000):
        count = min(100_000, shots - start)
        meas, sgn = sample_circuit(compiled, count, master_seed, first_shot=start, threads=threads)
        acc.add(sgn.astype(np.float64) * meas[:, records].mean(axis=1))
    est, err = acc.estimate(compiled.gamma_total)
    return {
        "population": est,
        "std_error": err,
        "ci95": [est - 1.959963984540054 * err, est + 1.959963984540054 * err],
        "shots": shots,
        "gamma_total": compiled.gamma_total,
    }


# ---------------------------------------------------------------- fault analysis


@dataclass(frozen=True)
class Fault:
    site: int
    pauli: str
    probability: float
    detectors: tuple[int, ...]
    observables: tuple[int, ...]


_PAULI_BRANCH = {"Z": 1, "X": 4, "Y": 5}


def _fault_probabilities(coeffs: np.ndarray) -> dict[str, float]:
    """Pauli content of one site; a reset acts as I, X, Y or Z with weight 1/4 each."""
    reset = abs(coeffs[2]) + abs(coeffs[3])
    probs = {
        "X": abs(coeffs[4]) + reset / 4,
        "Y": abs(coeffs[5]) + reset / 4,
        "Z": abs(coeffs[1]) + reset / 4,
    }
    return {k: float(v) for k, v in probs.items() if v > 0}


def enumerate_faults(c: Circuit | CompiledCircuit) -> list[Fault]:
    """Single Pauli faults at every noise site with their deterministic signatures.

    Each signature comes from one forced shot; stabilizer detectors are
    deterministic, so one shot per fault suffices.
    """
    compiled = c if isinstance(c, CompiledCircuit) else c.compile()
    idle = np.zeros(compiled.n_sites, dtype=np.int64)
    ref_meas, _ = sample_circuit(compiled, 1, 0, forced=idle)
    ref_det = compiled.detection_events(ref_meas)[0]
    ref_obs = compiled.observable_flips(ref_meas)[0]
    faults = []
    for s in range(compiled.n_sites):
        for pauli, p in _fault_probabilities(compiled.site_coeffs[s]).items():
            forced = idle.copy()
            forced[s] = _PAULI_BRANCH[pauli]
            meas, _ = sample_circuit(compiled, 1, 0, forced=forced)
            det = compiled.detection_events(meas)[0] ^ ref_det
            obs = compiled.observable_flips(meas)[0] ^ ref_obs
            faults.append(
                Fault(s, pauli, p, tuple(np.nonzero(det)[0].tolist()), tuple(np.nonzero(obs)[0].tolist()))
            )
    return faults


def merge_faults(faults: Sequence[Fault]) -> list[tuple[float, tuple[int, ...], tuple[int, ...]]]:
    """Merge faults with identical symptoms; independent flips combine by XOR."""
    classes: dict[tuple, float] = {}
    for f in faults:
        if not f.detectors and not f.observables:
            continue
        key = (f.detectors, f.observables)
        p = classes.get(key, 0.0)
        classes[key] = float(p * (1 - f.probability) + f.probability * (1 - p))
    return [(p, det, obs) for (det, obs), p in sorted(classes.items())]


def detector_error_model(c: Circuit | CompiledCircuit) -> list[tuple[float, tuple[int, ...], tuple[int, ...]]]:
    return merge_faults(enumerate_faults(c))


def format_detector_model(model) -> str:
    lines = []
    for p, det, obs in model:
        parts = [f"fault {float(p)!r}"] + [f"D{i}" for i in det] + [f"L{k}" for k in obs]
        lines.append(" ".join(parts))
    return "\n".join(lines) + ("\n" if lines else "")


def write_detector_model(path: str | Path, c: Circuit | CompiledCircuit) -> None:
    Path(path).write_text(format_detector_model(detector_error_model(c)))


# ---------------------------------------------------------------- event files


def format_detection_events(records: ShotRecords) -> str:
    det = records.detection_events.astype(np.uint8) + ord("0")
    obs = records.logical_flips.astype(np.uint8) + ord("0")
    lines = []
    for i in range(len(records)):
        sign = "+" if records.signs[i] > 0 else "-"
        lines.append(f"{det[i].tobytes().decode()} {obs[i].tobytes().decode()} {sign}")
    return "\n".join(lines) + ("\n" if lines else "")


def write_detection_events(path: str | Path, records: ShotRecords) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(format_detection_events(records))


def read_detection_events(path: str | Path, gamma_total: float = 1.0) -> ShotRecords:
    det, obs, signs = [], [], []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        # an empty detector or observable field leaves a double space
        d, o, s = line.split(" ")
        det.append([int(ch) for ch in d])
        obs.append([int(ch) for ch in o])
        signs.append(1 if s == "+" else -1)
    n_det = len(det[0]) if det else 0
    n_obs = len(obs[0]) if obs else 0
    return ShotRecords(
        np.array(det, dtype=np.uint8).reshape(-1, n_det),
        np.array(obs, dtype=np.uint8).reshape(-1, n_obs),
        np.array(signs, dtype=np.int8),
        gamma_total,
    )


def log_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])


__all__ = [
    "NOISE_POLICIES",
    "build_surface_memory",
    "build_bb_memory",
    "build_population_circuit",
    "instrument_noise",
    "run_memory",
    "excited_population",
    "enumerate_faults",
    "detector_error_model",
    "merge_faults",
    "log_slope",
    "write_detector_model",
    "ShotRecord",
    "ShotRecords",
    "MemoryResult",
]
