"""Code definitions: rotated surface code layout and bivariate bicycle codes."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .tableau import gf2_rank


# ---------------------------------------------------------------- GF(2) algebra


def gf2_nullspace(m: np.ndarray) -> np.ndarray:
    """Rows spanning ``{v : m v = 0}`` over GF(2)."""
    m = (np.asarray(m) % 2).astype(np.uint8)
    rows, cols = m.shape
    m = m.copy()
    pivots = []
    r = 0
    for c in range(cols):
        hit = next((i for i in range(r, rows) if m[i, c]), None)
        if hit is None:
            continue
        m[[r, hit]] = m[[hit, r]]
        others = np.nonzero(m[:, c])[0]
        others = others[others != r]
        m[others] ^= m[r]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    free = [c for c in range(cols) if c not in pivots]
    basis = np.zeros((len(free), cols), dtype=np.uint8)
    for k, f in enumerate(free):
        basis[k, f] = 1
        for row, p in enumerate(pivots):
            basis[k, p] = m[row, f]
    return basis


def logical_operators(h_commute: np.ndarray, h_stab: np.ndarray) -> np.ndarray:
    """Independent vectors of ``ker(h_commute)`` outside ``rowspace(h_stab)``.

    For Z logicals pass ``(H_X, H_Z)``; for X logicals ``(H_Z, H_X)``.
    """
    kernel = gf2_nullspace(h_commute)
    span = np.array(h_stab, dtype=np.uint8) % 2
    rank = gf2_rank(span)
    chosen = []
    for v in kernel:
        trial = np.vstack([span, v])
        new_rank = gf2_rank(trial)
        if new_rank > rank:
            span, rank = trial, new_rank
            chosen.append(v)
    return np.array(chosen, dtype=np.uint8).reshape(-1, h_commute.shape[1])


def min_logical_weight(h_commute: np.ndarray, h_stab: np.ndarray, max_weight: int = 6) -> int | None:
    """Exhaustive search for the lightest logical; ``None`` beyond ``max_weight``."""
    n = h_commute.shape[1]
    base_rank = gf2_rank(h_stab)
    hc = np.asarray(h_commute, dtype=np.int64)
    for w in range(1, max_weight + 1):
        for support in itertools.combinations(range(n), w):
            if (hc[:, support].sum(axis=1) % 2).any():
                continue
            v = np.zeros(n, dtype=np.uint8)
            v[list(support)] = 1
            if gf2_rank(np.vstack([h_stab, v])) > base_rank:
                return w
    return None


# ---------------------------------------------------------------- code specs


@dataclass(frozen=True)
class SurfaceSpec:
    distance: int
    basis: Literal["Z", "X"] = "Z"
    initial_state: Literal["0", "1", "+"] = "0"

    def __post_init__(self) -> None:
        if self.distance < 3 or self.distance % 2 == 0:
            raise ValueError(f"surface distance must be odd and >= 3, got {self.distance}")
        if self.initial_state not in ("0", "1", "+"):
            raise ValueError(f"unknown initial state {self.initial_state!r}")
        expected = "X" if self.initial_state == "+" else "Z"
        if self.basis != expected:
            raise ValueError(f"initial state |{self.initial_state}> needs a {expected}-basis memory")

    @classmethod
    def for_state(cls, distance: int, state: str) -> "SurfaceSpec":
        return cls(distance, "X" if state == "+" else "Z", state)


Monomial = tuple[int, int]


@dataclass(frozen=True)
class BBSpec:
    """Bivariate bicycle code from ``A = sum x^i y^j`` and ``B`` likewise."""

    l: int
    m: int
    poly_a: tuple[Monomial, ...]
    poly_b: tuple[Monomial, ...]

    def __post_init__(self) -> None:
        if self.l < 1 or self.m < 1:
            raise ValueError("cyclic orders must be positive")
        object.__setattr__(self, "poly_a", tuple(tuple(int(v) for v in t) for t in self.poly_a))
        object.__setattr__(self, "poly_b", tuple(tuple(int(v) for v in t) for t in self.poly_b))
        if not self.poly_a or not self.poly_b:
            raise ValueError("polynomials need at least one monomial")
        code = BBCode(self)
        product = (code.hx.astype(np.int64) @ code.hz.T.astype(np.int64)) % 2
        if product.any():
            bad = np.argwhere(product)[0]
            raise ValueError(
                f"checks do not commute: H_X row {bad[0]} and H_Z row {bad[1]} overlap oddly"
            )


def _shift(k: int, power: int) -> np.ndarray:
    return np.roll(np.eye(k, dtype=np.uint8), power % k, axis=1)


def bb_polynomial_matrix(l: int, m: int, poly: Sequence[Monomial]) -> np.ndarray:
    total = np.zeros((l * m, l * m), dtype=np.uint8)
    for i, j in poly:
        total ^= np.kron(_shift(l, i), _shift(m, j))
    return total


class BBCode:
    def __init__(self, spec: BBSpec) -> None:
        self.spec = spec
        a = bb_polynomial_matrix(spec.l, spec.m, spec.poly_a)
        b = bb_polynomial_matrix(spec.l, spec.m, spec.poly_b)
        self.hx = np.hstack([a, b])
        self.hz = np.hstack([b.T, a.T])
        self.n = 2 * spec.l * spec.m

    @property
    def k(self) -> int:
        return self.n - gf2_rank(self.hx) - gf2_rank(self.hz)

    def logical_z(self) -> np.ndarray:
        return logical_operators(self.hx, self.hz)

    def logical_x(self) -> np.ndarray:
        return logical_operators(self.hz, self.hx)

    def distance(self, max_weight: int = 6) -> int | None:
        dz = min_logical_weight(self.hx, self.hz, max_weight)
        dx = min_logical_weight(self.hz, self.hx, max_weight)
        found = [d for d in (dz, dx) if d is not None]
        return min(found) if found else None


# A = 1 + x + y, B = 1 + x^2 + y^2 on Z_3 x Z_3: [[18, 4, 4]] by exhaustive search
BB18_PRESET = BBSpec(3, 3, ((0, 0), (1, 0), (0, 1)), ((0, 0), (2, 0), (0, 2)))


# ---------------------------------------------------------------- surface layout


@dataclass
class SurfaceLayout:
    """Rotated surface code: data qubit ``(r, c)`` is index ``r*d + c``.

    Plaquette ``(i, j)`` sits at the corner shared by data rows ``i-1, i`` and
    columns ``j-1, j``; X-type when ``i + j`` is even.
    """

    distance: int
    x_checks: list[tuple[int, ...]] = field(default_factory=list)
    z_checks: list[tuple[int, ...]] = field(default_factory=list)
    x_schedule: list[tuple[int | None, ...]] = field(default_factory=list)
    z_schedule: list[tuple[int | None, ...]] = field(default_factory=list)

    @classmethod
    def build(cls, d: int) -> "SurfaceLayout":
        layout = cls(d)

        def q(r: int, c: int) -> int | None:
            return r * d + c if 0 <= r < d and 0 <= c < d else None

        for i in range(d + 1):
            for j in range(d + 1):
                is_x = (i + j) % 2 == 0
                on_row_edge = i in (0, d)
                on_col_edge = j in (0, d)
                if on_row_edge and on_col_edge:
                    continue
                if on_row_edge and not is_x:
                    continue
                if on_col_edge and is_x:
                    continue
                nw, ne, sw, se = q(i - 1, j - 1), q(i - 1, j), q(i, j - 1), q(i, j)
                if is_x:
                    order = (nw, ne, sw, se)
                    layout.x_schedule.append(order)
                    layout.x_checks.append(tuple(v for v in order if v is not None))
                else:
                    order = (nw, sw, ne, se)
                    layout.z_schedule.append(order)
                    layout.z_checks.append(tuple(v for v in order if v is not None))
        return layout

    @property
    def n_data(self) -> int:
        return self.distance**2

    @property
    def logical_z(self) -> tuple[int, ...]:
        return tuple(range(self.distance))

    @property
    def logical_x(self) -> tuple[int, ...]:
        return tuple(r * self.distance for r in range(self.distance))

    def check_matrix(self, kind: str) -> np.ndarray:
        checks = self.x_checks if kind == "X" else self.z_checks
        h = np.zeros((len(checks), self.n_data), dtype=np.uint8)
        for i, support in enumerate(checks):
            h[i, list(support)] = 1
        return h
