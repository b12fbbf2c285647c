"""Small-instance decoders: single/double-fault lookup and greedy matching."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .circuit import Circuit, CompiledCircuit
from .experiments import enumerate_faults, merge_faults

MAX_DICTIONARY_DETECTORS = 40


def _pack(bits: np.ndarray) -> np.ndarray:
    """Rows of bits -> uint64 keys (bit ``i`` of the key is column ``i``)."""
    bits = np.atleast_2d(np.asarray(bits, dtype=np.uint64))
    if bits.shape[1] > 64:
        raise ValueError("signatures wider than 64 bits cannot be packed")
    weights = np.left_shift(np.uint64(1), np.arange(bits.shape[1], dtype=np.uint64))
    return (bits * weights).sum(axis=1, dtype=np.uint64)


def _unpack(keys: np.ndarray, width: int) -> np.ndarray:
    keys = np.asarray(keys, dtype=np.uint64)[:, None]
    shifts = np.arange(width, dtype=np.uint64)[None, :]
    return ((keys >> shifts) & np.uint64(1)).astype(np.uint8)


@dataclass
class FaultDictionary:
    """Detection signature -> (observable correction, fault count)."""

    n_detectors: int
    n_observables: int
    keys: np.ndarray
    corrections: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return self.keys.shape[0]

    def lookup(self, events: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(corrections, found)`` for a batch of event rows."""
        keys = _pack(events)
        pos = np.searchsorted(self.keys, keys)
        pos = np.minimum(pos, len(self.keys) - 1)
        found = self.keys[pos] == keys
        corr = np.where(found, self.corrections[pos], np.uint64(0))
        return _unpack(corr, self.n_observables), found

    def as_dict(self) -> dict[tuple[int, ...], tuple[tuple[int, ...], int]]:
        det = _unpack(self.keys, self.n_detectors)
        obs = _unpack(self.corrections, self.n_observables)
        return {
            tuple(d.tolist()): (tuple(o.tolist()), int(w)) for d, o, w in zip(det, obs, self.weights)
        }


def build_fault_dictionary(
    c: Circuit | CompiledCircuit, max_faults: int = 2, max_detectors: int = MAX_DICTIONARY_DETECTORS
) -> FaultDictionary:
    """Enumerate all sets of at most ``max_faults`` elementary faults.

    Each signature keeps the lightest fault set, ties going to the
    lexicographically smallest set of fault indices.
    """
    if max_faults not in (1, 2):
        raise ValueError("max_faults must be 1 or 2")
    compiled = c if isinstance(c, CompiledCircuit) else c.compile()
    if compiled.n_detectors > max_detectors:
        raise ValueError(
            f"circuit has {compiled.n_detectors} detectors; dictionary guard is {max_detectors}"
        )
    faults = enumerate_faults(compiled)
    n_det, n_obs = compiled.n_detectors, compiled.n_observables
    det = np.zeros((len(faults), n_det), dtype=np.uint8)
    obs = np.zeros((len(faults), n_obs), dtype=np.uint8)
    for i, f in enumerate(faults):
        det[i, list(f.detectors)] = 1
        obs[i, list(f.observables)] = 1
    sig = _pack(det) if faults else np.zeros(0, dtype=np.uint64)
    cor = _pack(obs) if faults else np.zeros(0, dtype=np.uint64)
    keys = [np.zeros(1, dtype=np.uint64), sig]
    corrs = [np.zeros(1, dtype=np.uint64), cor]
    weights = [np.zeros(1, dtype=np.int64), np.ones(len(sig), dtype=np.int64)]
    if max_faults == 2 and len(sig) > 1:
        i, j = np.triu_indices(len(sig), k=1)
        keys.append(sig[i] ^ sig[j])
        corrs.append(cor[i] ^ cor[j])
        weights.append(np.full(len(i), 2, dtype=np.int64))
    keys = np.concatenate(keys)
    corrs = np.concatenate(corrs)
    weights = np.concatenate(weights)
    # np.unique keeps the first occurrence: lowest weight, then lexicographic
    uniq, first = np.unique(keys, return_index=True)
    return FaultDictionary(n_det, n_obs, uniq, corrs[first], weights[first])


# ---------------------------------------------------------------- detector model I/O

_FAULT_LINE = re.compile(r"^fault\s+(\S+)((?:\s+[DL]\d+)*)\s*$")


def parse_detector_model(text: str) -> list[tuple[float, tuple[int, ...], tuple[int, ...]]]:
    model = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        m = _FAULT_LINE.match(line)
        if not m:
            raise ValueError(f"line {lineno}: cannot parse {line!r}")
        targets = m.group(2).split()
        det = tuple(int(t[1:]) for t in targets if t[0] == "D")
        obs = tuple(int(t[1:]) for t in targets if t[0] == "L")
        model.append((float(m.group(1)), det, obs))
    return model


def read_detector_model(path: str | Path):
    return parse_detector_model(Path(path).read_text())


# ---------------------------------------------------------------- matching


@dataclass
class DetectorGraph:
    """Detectors ``0..n-1`` plus boundary node ``n``; edges weighted ``-log p``."""

    n_detectors: int
    n_observables: int
    matrix: csr_matrix
    edge_obs: dict[tuple[int, int], int] = field(default_factory=dict)

    @property
    def boundary(self) -> int:
        return self.n_detectors

    @classmethod
    def from_model(cls, model, n_detectors: int, n_observables: int) -> "DetectorGraph":
        best: dict[tuple[int, int], tuple[float, int]] = {}
        for p, det, obs in model:
            if len(det) == 0 or len(det) > 2 or p <= 0:
                continue
            a, b = (det[0], n_detectors) if len(det) == 1 else det
            key = (min(a, b), max(a, b))
            w = -math.log(min(p, 1 - 1e-12))
            mask = sum(1 << k for k in obs)
            if key not in best or w < best[key][0]:
                best[key] = (w, mask)
        n = n_detectors + 1
        rows, cols, vals = [], [], []
        for (a, b), (w, _) in best.items():
            # csgraph drops explicit zero weights; keep edges strictly positive
            w = max(w, 1e-12)
            rows += [a, b]
            cols += [b, a]
            vals += [w, w]
        matrix = csr_matrix((vals, (rows, cols)), shape=(n, n))
        return cls(n_detectors, n_observables, matrix, {k: v[1] for k, v in best.items()})

    @classmethod
    def from_circuit(cls, c: Circuit | CompiledCircuit) -> "DetectorGraph":
        """Graph from X and Z faults only; a Y is the product of the two and
        would otherwise bridge the X-check and Z-check subgraphs."""
        compiled = c if isinstance(c, CompiledCircuit) else c.compile()
        faults = [f for f in enumerate_faults(compiled) if f.pauli != "Y"]
        return cls.from_model(merge_faults(faults), compiled.n_detectors, compiled.n_observables)

    def _path_mask(self, pred: np.ndarray, src: int, dst: int) -> int:
        mask = 0
        node = dst
        while node != src:
            prev = pred[node]
            if prev < 0:
                raise ValueError(f"no path between {src} and {dst}")
            mask ^= self.edge_obs[(min(prev, node), max(prev, node))]
            node = prev
        return mask


def greedy_match(events: np.ndarray, graph: DetectorGraph) -> np.ndarray:
    """Pair fired detectors closest-first along shortest paths.

    A pair is only taken when it is cheaper than sending both ends to the
    boundary; whatever is left unpaired is matched to the boundary.
    """
    fired = np.nonzero(np.asarray(events))[0]
    out = np.zeros(graph.n_observables, dtype=np.uint8)
    if fired.size == 0:
        return out
    dist, pred = dijkstra(graph.matrix, directed=False, indices=fired, return_predecessors=True)
    to_boundary = dist[:, graph.boundary]
    pairs = []
    for a in range(fired.size):
        for b in range(a + 1, fired.size):
            d = dist[a, fired[b]]
            if d <= to_boundary[a] + to_boundary[b]:
                pairs.append((round(d, 9), a, b))
    pairs.sort()
    matched = np.zeros(fired.size, dtype=bool)
    mask = 0
    for _, a, b in pairs:
        if matched[a] or matched[b]:
            continue
        mask ^= graph._path_mask(pred[a], fired[a], fired[b])
        matched[a] = matched[b] = True
    for a in np.nonzero(~matched)[0]:
        if not np.isfinite(to_boundary[a]):
            raise ValueError(f"detector {fired[a]} cannot reach a partner or the boundary")
        mask ^= graph._path_mask(pred[a], fired[a], graph.boundary)
    for k in range(graph.n_observables):
        out[k] = (mask >> k) & 1
    return out


# ---------------------------------------------------------------- decoders


def _decode_unique(events: np.ndarray, decode_rows, n_observables: int) -> np.ndarray:
    events = np.asarray(events, dtype=np.uint8)
    if events.shape[0] == 0:
        return np.zeros((0, n_observables), dtype=np.uint8)
    uniq, inverse = np.unique(events, axis=0, return_inverse=True)
    return decode_rows(uniq)[inverse.reshape(-1)]


class ZeroDecoder:
    """Never corrects; the baseline every real decoder must beat."""

    def __init__(self, n_observables: int) -> None:
        self.n_observables = n_observables
        self.fallback_count = 0

    def decode_batch(self, events: np.ndarray) -> np.ndarray:
        return np.zeros((np.asarray(events).shape[0], self.n_observables), dtype=np.uint8)


class GreedyDecoder:
    def __init__(self, graph: DetectorGraph) -> None:
        self.graph = graph
        self.fallback_count = 0

    @classmethod
    def from_circuit(cls, c: Circuit | CompiledCircuit) -> "GreedyDecoder":
        return cls(DetectorGraph.from_circuit(c))

    def decode_batch(self, events: np.ndarray) -> np.ndarray:
        def rows(uniq):
            return np.array([greedy_match(e, self.graph) for e in uniq], dtype=np.uint8).reshape(
                len(uniq), self.graph.n_observables
            )

        return _decode_unique(events, rows, self.graph.n_observables)


class LookupDecoder:
    """Fault-dictionary lookup with greedy matching (or zero correction) on misses."""

    def __init__(self, dictionary: FaultDictionary, graph: Optional[DetectorGraph] = None) -> None:
        self.dictionary = dictionary
        self.graph = graph
        self.fallback_count = 0

    @classmethod
    def from_circuit(cls, c: Circuit | CompiledCircuit, max_faults: int = 2, matching: bool = True) -> "LookupDecoder":
        compiled = c if isinstance(c, CompiledCircuit) else c.compile()
        graph = DetectorGraph.from_circuit(compiled) if matching else None
        return cls(build_fault_dictionary(compiled, max_faults), graph)

    def decode_batch(self, events: np.ndarray) -> np.ndarray:
        events = np.asarray(events, dtype=np.uint8)
        if events.shape[0] == 0:
            return np.zeros((0, self.dictionary.n_observables), dtype=np.uint8)
        uniq, inverse, counts = np.unique(events, axis=0, return_inverse=True, return_counts=True)
        corr, found = self.dictionary.lookup(uniq)
        missing = np.nonzero(~found)[0]
        if self.graph is not None:
            for i in missing:
                corr[i] = greedy_match(uniq[i], self.graph)
        self.fallback_count += int(counts[missing].sum())
        return corr[inverse.reshape(-1)]


def decode(dictionary: FaultDictionary, events: Sequence[int], graph: Optional[DetectorGraph] = None) -> np.ndarray:
    """Decode one shot; misses go to greedy matching when a graph is given."""
    events = np.asarray(events, dtype=np.uint8).reshape(1, -1)
    if events.shape[1] != dictionary.n_detectors:
        raise ValueError("event length does not match the dictionary")
    corr, found = dictionary.lookup(events)
    if not found[0] and graph is not None:
        return greedy_match(events[0], graph)
    return corr[0]


def make_decoder(name: str, c: Circuit | CompiledCircuit):
    """``lookup`` | ``greedy`` | ``none``; surface codes fall back to matching."""
    compiled = c if isinstance(c, CompiledCircuit) else c.compile()
    code = c.meta.get("code") if isinstance(c, Circuit) else None
    if name == "none":
        return ZeroDecoder(compiled.n_observables)
    if name == "greedy":
        return GreedyDecoder.from_circuit(compiled)
    if name == "lookup":
        return LookupDecoder.from_circuit(compiled, matching=code != "bb")
    raise ValueError(f"unknown decoder {name!r}")
