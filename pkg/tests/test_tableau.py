import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from brute_force import StateVector, check_against_statevector, random_circuit
from thermstab.rng import ShotRng, shot_rng
from thermstab.tableau import StabilizerTableau, apply_gate, gf2_rank, measure_z, new_tableau, reset


def test_new_tableau_rejects_zero_qubits():
    with pytest.raises(ValueError):
        new_tableau(0)


def test_fresh_tableau_is_all_zero():
    t = new_tableau(3)
    rng = ShotRng(1)
    assert [measure_z(t, q, rng) for q in range(3)] == [(0, True)] * 3
    assert t.stabilizers() == ["+ZII", "+IZI", "+IIZ"]
    assert rng.draws == 0


def test_hssh_acts_as_x():
    t = new_tableau(1)
    for g in ("H", "S", "S", "H"):
        apply_gate(t, g, 0)
    assert measure_z(t, 0, ShotRng(0)) == (1, True)


def test_x_then_measure():
    t = new_tableau(2)
    apply_gate(t, "X", 1)
    rng = ShotRng(0)
    assert measure_z(t, 0, rng) == (0, True)
    assert measure_z(t, 1, rng) == (1, True)


def test_hadamard_outcomes_are_fair():
    ones = 0
    shots = 100_000
    for s in range(shots):
        t = new_tableau(1)
        apply_gate(t, "H", 0)
        ones += measure_z(t, 0, shot_rng(11, s))[0]
    sigma = np.sqrt(shots * 0.25)
    assert abs(ones - shots / 2) < 3 * sigma


def test_random_measurement_repeats_and_uses_one_draw():
    t = new_tableau(1)
    apply_gate(t, "H", 0)
    rng = ShotRng(3, 4)
    first, det = measure_z(t, 0, rng)
    assert not det and rng.draws == 1
    assert measure_z(t, 0, rng) == (first, True)
    assert rng.draws == 1


def test_bell_pair_correlated():
    for s in range(200):
        t = new_tableau(2)
        apply_gate(t, "H", 0)
        apply_gate(t, "CNOT", (0, 1))
        rng = shot_rng(5, s)
        a, _ = measure_z(t, 0, rng)
        b, det = measure_z(t, 1, rng)
        assert a == b and det


def test_ghz_outcomes():
    seen = set()
    for s in range(200):
        t = new_tableau(3)
        apply_gate(t, "H", 0)
        apply_gate(t, "CNOT", (0, 1))
        apply_gate(t, "CNOT", (1, 2))
        rng = shot_rng(9, s)
        seen.add(tuple(measure_z(t, q, rng)[0] for q in range(3)))
    assert seen == {(0, 0, 0), (1, 1, 1)}


@pytest.mark.parametrize("target", [0, 1])
def test_reset_targets(target):
    for s in range(20):
        t = new_tableau(2)
        apply_gate(t, "H", 0)
        apply_gate(t, "CNOT", (0, 1))
        rng = shot_rng(2, s)
        reset(t, 0, target, rng)
        assert measure_z(t, 0, rng) == (target, True)
        t.check_invariants()


def test_reset_of_bell_half_leaves_partner_uniform():
    ones = 0
    shots = 4000
    for s in range(shots):
        t = new_tableau(2)
        apply_gate(t, "H", 0)
        apply_gate(t, "CNOT", (0, 1))
        rng = shot_rng(8, s)
        reset(t, 0, 0, rng)
        ones += measure_z(t, 1, rng)[0]
    assert abs(ones - shots / 2) < 4 * np.sqrt(shots / 4)


@pytest.mark.parametrize(
    "gate, qubits",
    [("H", 3), ("CNOT", (0, 0)), ("CZ", (0, 5)), ("T", 0), ("H", (0, 1))],
)
def test_apply_gate_rejects_bad_input(gate, qubits):
    t = new_tableau(2)
    with pytest.raises((ValueError, IndexError)):
        apply_gate(t, gate, qubits)


def test_reset_rejects_bad_target():
    with pytest.raises(ValueError):
        reset(new_tableau(1), 0, 2, ShotRng(0))


def test_large_register_crosses_word_boundary():
    n = 130
    t = new_tableau(n)
    apply_gate(t, "H", 0)
    for q in range(n - 1):
        apply_gate(t, "CNOT", (q, q + 1))
    rng = ShotRng(4)
    first = measure_z(t, 0, rng)[0]
    assert all(measure_z(t, q, rng) == (first, True) for q in range(1, n))


def test_gf2_rank():
    assert gf2_rank(np.eye(4, dtype=np.uint8)) == 4
    assert gf2_rank(np.array([[1, 1, 0], [0, 1, 1], [1, 0, 1]])) == 2


@pytest.mark.parametrize("seed", range(40))
def test_random_circuits_match_statevector(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    check_against_statevector(random_circuit(rng, n, 50), n, seed)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 6), st.integers(1, 60))
def test_tableau_invariants_hold(seed, n, length):
    rng = np.random.default_rng(seed)
    t = StabilizerTableau(n)
    shot = ShotRng(seed)
    for op in random_circuit(rng, n, length):
        if op[0] == "M":
            measure_z(t, op[1][0], shot)
        elif op[0] == "R":
            reset(t, op[1][0], op[2], shot)
        else:
            apply_gate(t, op[0], op[1])
    t.check_invariants()


# ---------------------------------------------------------------- random streams


def test_shot_rng_reproducible():
    a = shot_rng(123, 7).random(1000)
    b = shot_rng(123, 7).random(1000)
    assert np.array_equal(a, b)


def test_shot_streams_distinct():
    a = shot_rng(123, 0).random(10_000)
    b = shot_rng(123, 1).random(10_000)
    assert not np.any(a == b)


def test_shot_rng_uniformity():
    pooled = np.concatenate([shot_rng(2024, s).random(1000) for s in range(1000)])
    assert stats.kstest(pooled, "uniform").pvalue > 0.001


def test_shot_rng_copy_is_independent():
    rng = shot_rng(1, 1)
    rng.random(3)
    twin = rng.copy()
    assert twin.random() == rng.random()
    assert twin.draws == rng.draws == 4


def test_statevector_helper_self_check():
    sv = StateVector(2)
    sv.gate("H", (0,))
    sv.gate("CNOT", (0, 1))
    assert sv.pauli_expectation("+XX") == pytest.approx(1.0)
    assert sv.pauli_expectation("+ZZ") == pytest.approx(1.0)
    assert sv.pauli_expectation("+YY") == pytest.approx(-1.0)
