"""Numba kernels: bit-packed CHP tableau, counter-based RNG, shot loop.

Tableau rows are destabilizers ``0..n-1``, stabilizers ``n..2n-1`` and one
scratch row ``2n``.  Each row stores its X and Z bits packed 64 qubits per
``uint64`` word.
"""

from __future__ import annotations

import os

import numpy as np
from numba import config, njit, prange

if "NUMBA_THREADING_LAYER" not in os.environ:
    # skip probing TBB, whose version check warns on many installs
    config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

_U = np.uint64
GOLDEN = _U(0x9E3779B97F4A7C15)
_M1 = _U(0xBF58476D1CE4E5B9)
_M2 = _U(0x94D049BB133111EB)
_ONE = _U(1)
_ZERO = _U(0)
_INV53 = 1.0 / 9007199254740992.0

# op codes for compiled circuits
OP_H, OP_S, OP_X, OP_Y, OP_Z, OP_CNOT, OP_CZ, OP_M, OP_R, OP_NOISE = range(10)

# branch codes, same order as channels.Branch
BR_I, BR_Z, BR_R0, BR_R1, BR_X, BR_Y = range(6)


@njit(cache=True, inline="always")
def mix64(z):
    z = (z ^ (z >> _U(30))) * _M1
    z = (z ^ (z >> _U(27))) * _M2
    return z ^ (z >> _U(31))


@njit(cache=True)
def stream_key(seed, shot):
    """Key of the per-shot stream; a bijection in ``shot`` for fixed ``seed``."""
    return mix64(_U(seed) ^ mix64((_U(shot) + _ONE) * GOLDEN))


@njit(cache=True, inline="always")
def next_raw(state):
    # state = [key, counter]
    state[1] += _ONE
    return mix64(state[0] + state[1] * GOLDEN)


@njit(cache=True, inline="always")
def next_uniform(state):
    return float(next_raw(state) >> _U(11)) * _INV53


@njit(cache=True)
def fill_uniform(state, out):
    for i in range(out.shape[0]):
        out[i] = next_uniform(state)


@njit(cache=True, inline="always")
def popcount(v):
    v = v - ((v >> _U(1)) & _U(0x5555555555555555))
    v = (v & _U(0x3333333333333333)) + ((v >> _U(2)) & _U(0x3333333333333333))
    v = (v + (v >> _U(4))) & _U(0x0F0F0F0F0F0F0F0F)
    return int((v * _U(0x0101010101010101)) >> _U(56))


@njit(cache=True)
def new_tableau(n):
    words = (n + 63) // 64
    x = np.zeros((2 * n + 1, words), dtype=np.uint64)
    z = np.zeros((2 * n + 1, words), dtype=np.uint64)
    r = np.zeros(2 * n + 1, dtype=np.uint8)
    for q in range(n):
        w = q >> 6
        bit = _ONE << _U(q & 63)
        x[q, w] = bit
        z[n + q, w] = bit
    return x, z, r


@njit(cache=True)
def rowsum(x, z, r, h, i):
    """Row ``h`` <- row ``i`` * row ``h`` with the CHP phase rule."""
    plus = 0
    minus = 0
    for w in range(x.shape[1]):
        x1 = x[i, w]
        z1 = z[i, w]
        x2 = x[h, w]
        z2 = z[h, w]
        plus += popcount((x1 & z1 & z2 & ~x2) | (x1 & ~z1 & x2 & z2) | (~x1 & z1 & x2 & ~z2))
        minus += popcount((x1 & z1 & x2 & ~z2) | (x1 & ~z1 & ~x2 & z2) | (~x1 & z1 & x2 & z2))
        x[h, w] = x2 ^ x1
        z[h, w] = z2 ^ z1
    total = (2 * int(r[h]) + 2 * int(r[i]) + plus - minus) % 4
    r[h] = 1 if total == 2 else 0


@njit(cache=True)
def gate_h(x, z, r, q):
    w = q >> 6
    bit = _ONE << _U(q & 63)
    for i in range(x.shape[0] - 1):
        xi = x[i, w] & bit
        zi = z[i, w] & bit
        if xi and zi:
            r[i] ^= 1
        if (xi != 0) != (zi != 0):
            x[i, w] ^= bit
            z[i, w] ^= bit


@njit(cache=True)
def gate_s(x, z, r, q):
    w = q >> 6
    bit = _ONE << _U(q & 63)
    for i in range(x.shape[0] - 1):
        if x[i, w] & bit:
            if z[i, w] & bit:
                r[i] ^= 1
            z[i, w] ^= bit


@njit(cache=True)
def gate_pauli(x, z, r, q, px, pz):
    """Conjugate by X^px Z^pz; flips rows anticommuting with it."""
    w = q >> 6
    bit = _ONE << _U(q & 63)
    for i in range(x.shape[0] - 1):
        flip = 0
        if px and (z[i, w] & bit):
            flip ^= 1
        if pz and (x[i, w] & bit):
            flip ^= 1
        r[i] ^= flip


@njit(cache=True)
def gate_cnot(x, z, r, a, b):
    wa = a >> 6
    ba = _ONE << _U(a & 63)
    wb = b >> 6
    bb = _ONE << _U(b & 63)
    for i in range(x.shape[0] - 1):
        xa = (x[i, wa] & ba) != 0
        za = (z[i, wa] & ba) != 0
        xb = (x[i, wb] & bb) != 0
        zb = (z[i, wb] & bb) != 0
        if xa and zb and (xb == za):
            r[i] ^= 1
        if xa:
            x[i, wb] ^= bb
        if zb:
            z[i, wa] ^= ba


@njit(cache=True)
def gate_cz(x, z, r, a, b):
    wa = a >> 6
    ba = _ONE << _U(a & 63)
    wb = b >> 6
    bb = _ONE << _U(b & 63)
    for i in range(x.shape[0] - 1):
        xa = (x[i, wa] & ba) != 0
        za = (z[i, wa] & ba) != 0
        xb = (x[i, wb] & bb) != 0
        zb = (z[i, wb] & bb) != 0
        if xa and xb and (za != zb):
            r[i] ^= 1
        if xb:
            z[i, wa] ^= ba
        if xa:
            z[i, wb] ^= bb


@njit(cache=True)
def measure(x, z, r, q, state):
    """Z measurement; returns ``(outcome, deterministic)``.

    The random branch consumes exactly one draw from ``state``.
    """
    n = (x.shape[0] - 1) // 2
    w = q >> 6
    bit = _ONE << _U(q & 63)
    p = -1
    for i in range(n, 2 * n):
        if x[i, w] & bit:
            p = i
            break
    if p >= 0:
        for i in range(2 * n):
            if i != p and (x[i, w] & bit):
                rowsum(x, z, r, i, p)
        d = p - n
        for k in range(x.shape[1]):
            x[d, k] = x[p, k]
            z[d, k] = z[p, k]
            x[p, k] = _ZERO
            z[p, k] = _ZERO
        r[d] = r[p]
        z[p, w] = bit
        outcome = 1 if next_uniform(state) >= 0.5 else 0
        r[p] = outcome
        return outcome, False
    s = 2 * n
    for k in range(x.shape[1]):
        x[s, k] = _ZERO
        z[s, k] = _ZERO
    r[s] = 0
    for i in range(n):
        if x[i, w] & bit:
            rowsum(x, z, r, s, i + n)
    return int(r[s]), True


@njit(cache=True)
def reset(x, z, r, q, target, state):
    outcome, _ = measure(x, z, r, q, state)
    if outcome != target:
        gate_pauli(x, z, r, q, 1, 0)


@njit(cache=True)
def apply_branch(x, z, r, q, branch, state):
    if branch == BR_Z:
        gate_pauli(x, z, r, q, 0, 1)
    elif branch == BR_R0:
        reset(x, z, r, q, 0, state)
    elif branch == BR_R1:
        reset(x, z, r, q, 1, state)
    elif branch == BR_X:
        gate_pauli(x, z, r, q, 1, 0)
    elif branch == BR_Y:
        gate_pauli(x, z, r, q, 1, 1)


@njit(cache=True, inline="always")
def pick_branch(cum, u):
    for k in range(cum.shape[0] - 1):
        if u < cum[k]:
            return k
    return cum.shape[0] - 1


@njit(cache=True)
def run_one(ops, n_qubits, site_cum, site_sign, forced, state, meas):
    """Run one shot; writes outcomes into ``meas`` and returns the shot sign."""
    x, z, r = new_tableau(n_qubits)
    sign = 1
    for k in range(ops.shape[0]):
        code = ops[k, 0]
        a = ops[k, 1]
        b = ops[k, 2]
        if code == OP_H:
            gate_h(x, z, r, a)
        elif code == OP_S:
            gate_s(x, z, r, a)
        elif code == OP_X:
            gate_pauli(x, z, r, a, 1, 0)
        elif code == OP_Y:
            gate_pauli(x, z, r, a, 1, 1)
        elif code == OP_Z:
            gate_pauli(x, z, r, a, 0, 1)
        elif code == OP_CNOT:
            gate_cnot(x, z, r, a, b)
        elif code == OP_CZ:
            gate_cz(x, z, r, a, b)
        elif code == OP_M:
            outcome, _ = measure(x, z, r, a, state)
            meas[b] = outcome
        elif code == OP_R:
            reset(x, z, r, a, b, state)
        elif code == OP_NOISE:
            branch = forced[b]
            if branch < 0:
                branch = pick_branch(site_cum[b], next_uniform(state))
                sign *= site_sign[b, branch]
            apply_branch(x, z, r, a, branch, state)
    return sign


@njit(cache=True, parallel=True)
def run_shots(ops, n_qubits, n_meas, site_cum, site_sign, forced, seed, first_shot, n_shots):
    meas = np.zeros((n_shots, n_meas), dtype=np.uint8)
    signs = np.ones(n_shots, dtype=np.int8)
    for s in prange(n_shots):
        state = np.empty(2, dtype=np.uint64)
        state[0] = stream_key(seed, first_shot + s)
        state[1] = _ZERO
        signs[s] = run_one(ops, n_qubits, site_cum, site_sign, forced, state, meas[s])
    return meas, signs
