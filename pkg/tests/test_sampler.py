import math
import time

import numpy as np
import pytest

from helpers import exact_expectation, sampled_expectation, single_qubit_circuit
from thermstab.channels import Branch, ChannelDecomposition, ThermalParams, qpd_amplitude_damping, qpd_thermal
from thermstab.oracle import kraus_amplitude_damping, kraus_thermal
from thermstab.rng import ShotRng
from thermstab.sampler import (
    Accumulator,
    ShotWeight,
    apply_branch,
    sample_branch,
    sample_circuit,
    weighted_estimate,
)
from thermstab.tableau import apply_gate, measure_z, new_tableau


def test_identity_decomposition_always_identity():
    rng = ShotRng(0)
    for _ in range(100):
        assert sample_branch(ChannelDecomposition.identity(), rng) == (Branch.I, 1)


def test_branch_frequencies_follow_magnitudes():
    d = qpd_thermal(ThermalParams(1, 1, 0.5))
    rng = ShotRng(42)
    n = 1_000_000
    counts = np.zeros(6)
    u = rng.random(n)
    # one uniform per draw, same cumulative table as sample_branch
    cum = np.cumsum(np.abs(d.as_array()) / np.abs(d.as_array()).sum())
    idx = np.searchsorted(cum, u, side="right")
    np.add.at(counts, idx, 1)
    expected = np.abs(d.as_array()) * n
    for k in range(6):
        sigma = math.sqrt(max(expected[k] * (1 - expected[k] / n), 1e-12))
        assert abs(counts[k] - expected[k]) <= 4 * sigma
    # the scalar path draws the same branches
    rng_a = ShotRng(42)
    assert [int(sample_branch(d, rng_a)[0]) for _ in range(1000)] == list(idx[:1000])


def test_negative_branch_reports_negative_sign():
    d = qpd_thermal(ThermalParams(1, 2, 1))
    rng = ShotRng(5)
    seen_z = False
    for _ in range(2000):
        branch, sign = sample_branch(d, rng)
        assert sign == (-1 if branch == Branch.Z else 1)
        seen_z |= branch == Branch.Z
    assert seen_z


def test_apply_branch_examples():
    t = new_tableau(1)
    apply_gate(t, "H", 0)
    before = t.copy()
    apply_branch(t, 0, Branch.I, ShotRng(0))
    assert all(np.array_equal(a, b) for a, b in zip((t.x, t.z, t.r), (before.x, before.z, before.r)))

    apply_branch(t, 0, Branch.Z, ShotRng(0))
    apply_gate(t, "H", 0)
    assert measure_z(t, 0, ShotRng(0)) == (1, True)

    t = new_tableau(1)
    apply_gate(t, "X", 0)
    apply_branch(t, 0, Branch.R0, ShotRng(0))
    assert measure_z(t, 0, ShotRng(0)) == (0, True)


def test_shot_weight_validation():
    with pytest.raises(ValueError):
        ShotWeight(0, 1.0)
    with pytest.raises(ValueError):
        ShotWeight(1, 0.5)


def test_weighted_estimate_positive_reduces_to_frequency():
    values = [1, 0, 1, 1, 0, 0, 0, 1]
    est, err = weighted_estimate([(v, ShotWeight(1, 1.0)) for v in values])
    assert est == pytest.approx(0.5)
    assert err == pytest.approx(np.std(values, ddof=1) / math.sqrt(len(values)))


def test_weighted_estimate_rejects_bad_input():
    with pytest.raises(ValueError):
        weighted_estimate([])
    with pytest.raises(ValueError):
        weighted_estimate([(1.0, ShotWeight(1, 1.0)), (1.0, ShotWeight(1, 2.0))])


def test_accumulator_merge_is_associative():
    rng = np.random.default_rng(0)
    parts = [rng.normal(size=n) for n in (10, 25, 7)]
    whole = Accumulator()
    whole.add(np.concatenate(parts))
    merged = Accumulator()
    for p in parts:
        a = Accumulator()
        a.add(p)
        merged = merged.merge(a)
    assert merged.count == whole.count
    assert merged.estimate(1.3) == pytest.approx(whole.estimate(1.3))


def test_amplitude_damping_population():
    d = qpd_amplitude_damping(0.4)
    est, err, _ = sampled_expectation("1", "Z", [d], 1_000_000, 17)
    p_one = (1 - est) / 2
    assert abs(p_one - 0.6) <= 4 * err / 2


def test_amplitude_damping_coherence_uses_negative_branch():
    d = qpd_amplitude_damping(0.4)
    assert d.q_pauli_z < 0
    est, err, _ = sampled_expectation("+", "X", [d], 1_000_000, 18)
    assert abs(est - math.sqrt(0.6)) <= 4 * err
    assert est == pytest.approx(exact_expectation("+", "X", kraus_amplitude_damping(0.4)), abs=4 * err)


def test_positive_decompositions_carry_unit_weights():
    d = qpd_thermal(ThermalParams(1, 0.8, 0.3, 0.1))
    assert d.is_positive
    compiled = single_qubit_circuit("+", "X", [d] * 4).compile()
    _, signs = sample_circuit(compiled, 10_000, 3)
    assert compiled.gamma_total == 1.0
    assert np.all(signs == 1)


def test_sampling_is_batch_independent():
    d = qpd_thermal(ThermalParams(1, 2, 1))
    compiled = single_qubit_circuit("+i", "Y", [d, d]).compile()
    m_all, s_all = sample_circuit(compiled, 1000, 77)
    m_a, s_a = sample_circuit(compiled, 400, 77)
    m_b, s_b = sample_circuit(compiled, 600, 77, first_shot=400)
    assert np.array_equal(m_all, np.vstack([m_a, m_b]))
    assert np.array_equal(s_all, np.concatenate([s_a, s_b]))


def test_sample_circuit_rejects_zero_shots():
    with pytest.raises(ValueError):
        sample_circuit(single_qubit_circuit("0", "Z", []).compile(), 0, 1)


@pytest.mark.parametrize("state", ["0", "1", "+", "-", "+i", "-i"])
def test_tomography_of_negative_site(state):
    params = ThermalParams(1, 2, 1)
    for basis in ("X", "Y", "Z"):
        est, err, _ = sampled_expectation(state, basis, [qpd_thermal(params)], 200_000, 100)
        exact = exact_expectation(state, basis, kraus_thermal(params))
        assert abs(est - exact) <= 5 * max(err, 1e-12)


def test_kernel_throughput():
    d = qpd_thermal(ThermalParams(1, 2, 1))
    compiled = single_qubit_circuit("+", "X", [d] * 8).compile()
    sample_circuit(compiled, 10, 1)
    start = time.perf_counter()
    sample_circuit(compiled, 200_000, 1)
    assert time.perf_counter() - start < 5.0
