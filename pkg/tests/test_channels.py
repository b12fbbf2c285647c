import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermstab.channels import (
    BathSpec,
    Branch,
    ChannelDecomposition,
    PauliChannelProbs,
    ThermalParams,
    decomposition_for_model,
    equilibrium_excitation,
    negativity,
    pta_channel,
    pta_thermal,
    qpd_amplitude_damping,
    qpd_thermal,
    relaxation_probs,
    reset_approximation,
    total_overhead,
)


@st.composite
def thermal_params(draw, max_ratio=2.0):
    t1 = draw(st.floats(0.05, 20.0))
    t2 = draw(st.floats(0.01, max_ratio)) * t1
    tau = draw(st.floats(0.0, 2.0)) * t1
    p1 = draw(st.floats(0.0, 0.5))
    return ThermalParams(t1, t2, tau, p1)


# ---------------------------------------------------------------- parameter types


@pytest.mark.parametrize(
    "kwargs, message",
    [
        (dict(t1=0, t2=1, tau=0), "t1"),
        (dict(t1=1, t2=0, tau=0), "t2"),
        (dict(t1=1, t2=1, tau=-1), "tau"),
        (dict(t1=1, t2=2.5, tau=0), "2*t1"),
        (dict(t1=1, t2=1, tau=0, p1=0.6), "p1"),
        (dict(t1=1, t2=1, tau=0, p1=-0.1), "p1"),
    ],
)
def test_thermal_params_rejects(kwargs, message):
    with pytest.raises(ValueError, match=message):
        ThermalParams(**kwargs)


def test_thermal_params_accepts_t2_equal_2t1():
    p = ThermalParams(1.0, 2.0, 0.3)
    assert p.gamma_phi == pytest.approx(0.0)


def test_bath_spec_rejects_nonpositive():
    with pytest.raises(ValueError):
        BathSpec(0.0, 0.1)
    with pytest.raises(ValueError):
        BathSpec(5e9, -1.0)


def test_decomposition_normalization_enforced():
    with pytest.raises(ValueError):
        ChannelDecomposition(0.5, 0.0, 0.4, 0.0)
    with pytest.raises(ValueError):
        ChannelDecomposition(1.1, 0.0, -0.1, 0.0)


def test_pauli_probs_invariants():
    probs = PauliChannelProbs(0.1, 0.2, 0.3)
    assert probs.p_identity == pytest.approx(0.4)
    with pytest.raises(ValueError):
        PauliChannelProbs(0.5, 0.5, 0.5)


# ---------------------------------------------------------------- relaxation_probs


def test_relaxation_probs_zero_duration():
    assert relaxation_probs(ThermalParams(1, 1, 0)) == (0.0, 0.0)


def test_relaxation_probs_no_pure_dephasing():
    assert relaxation_probs(ThermalParams(1, 2, 0.7))[1] == pytest.approx(0.0, abs=1e-15)


def test_relaxation_probs_unit_values():
    pg, pp = relaxation_probs(ThermalParams(1, 1, 1))
    assert pg == pytest.approx(0.632121, abs=1e-6)
    assert pp == pytest.approx(0.196735, abs=1e-6)


# ---------------------------------------------------------------- pta


@pytest.mark.parametrize(
    "pg, pp, expected",
    [
        (0.0, 0.0, (0.0, 0.0, 0.0)),
        (0.0, 0.2, (0.0, 0.0, 0.2)),
        (0.632121, 0.196735, (0.158030, 0.158030, 0.158030)),
    ],
)
def test_pta_channel_examples(pg, pp, expected):
    probs = pta_channel(pg, pp)
    assert (probs.p_x, probs.p_y, probs.p_z) == pytest.approx(expected, abs=2e-6)


@given(thermal_params())
def test_pta_thermal_independent_of_p1(params):
    cold = pta_thermal(ThermalParams(params.t1, params.t2, params.tau, 0.0))
    hot = pta_thermal(params)
    assert (cold.p_x, cold.p_y, cold.p_z) == pytest.approx((hot.p_x, hot.p_y, hot.p_z), abs=1e-15)


# ---------------------------------------------------------------- decompositions


def test_qpd_thermal_pure_reset_regime():
    d = qpd_thermal(ThermalParams(1, 1, 0.5))
    assert d.coefficients == pytest.approx((math.exp(-0.5), 0.0, 1 - math.exp(-0.5), 0.0, 0.0, 0.0), abs=1e-15)
    assert d.coefficients[:4] == pytest.approx((0.606531, 0, 0.393469, 0), abs=1e-6)


def test_qpd_thermal_negative_regime():
    d = qpd_thermal(ThermalParams(1, 2, 1))
    # q+- = (e^-1 +- e^-1/2)/2 evaluated directly
    assert d.q_identity == pytest.approx(0.4872050, abs=1e-7)
    assert d.q_pauli_z == pytest.approx(-0.1193256, abs=1e-7)
    assert d.q_reset0 == pytest.approx(0.632121, abs=1e-6)
    assert d.q_reset1 == 0.0
    assert negativity(d) == pytest.approx(1.2386512, abs=1e-7)


def test_qpd_thermal_infinite_temperature_split():
    d = qpd_thermal(ThermalParams(1, 1, 0.5, 0.5))
    assert d.q_reset0 == pytest.approx(d.q_reset1)
    assert d.q_reset0 == pytest.approx(0.196735, abs=1e-6)


@pytest.mark.parametrize(
    "pg, expected",
    [
        (0.0, (1.0, 0.0, 0.0, 0.0)),
        (1.0, (0.0, 0.0, 1.0, 0.0)),
        (0.5, (0.603553, -0.103553, 0.5, 0.0)),
    ],
)
def test_qpd_amplitude_damping(pg, expected):
    assert qpd_amplitude_damping(pg).coefficients[:4] == pytest.approx(expected, abs=1e-6)


def test_reset_approximation_matches_exact_at_t1_eq_t2():
    p = ThermalParams(1, 1, 0.5)
    assert reset_approximation(p).coefficients == pytest.approx(qpd_thermal(p).coefficients, abs=1e-15)


def test_reset_approximation_examples():
    d = reset_approximation(ThermalParams(1, 2, 1))
    assert d.coefficients[:4] == pytest.approx((0.4872050, 0.0, 0.5127950, 0.0), abs=1e-7)
    p = ThermalParams(1, 1.5, 1, 0.1)
    d = reset_approximation(p)
    assert d.q_reset1 == pytest.approx(0.1 * (1 - d.q_identity), abs=1e-15)


def test_zero_duration_is_identity():
    for params in (ThermalParams(1, 2, 0), ThermalParams(1, 0.5, 0, 0.3)):
        for model in ("exact_qpd", "pta", "reset_approx"):
            assert decomposition_for_model(params, model).is_identity


def test_unknown_model_rejected():
    with pytest.raises(ValueError):
        decomposition_for_model(ThermalParams(1, 1, 0.1), "twirl")


# ---------------------------------------------------------------- negativity and overhead


def test_negativity_examples():
    assert negativity(ChannelDecomposition(0.7, 0.1, 0.2, 0.0)) == 1.0
    assert negativity(qpd_amplitude_damping(0.5)) == pytest.approx(0.5 + math.sqrt(0.5), abs=1e-12)
    combined = negativity(qpd_thermal(ThermalParams(1, 2, 1)))
    alone = negativity(qpd_amplitude_damping(1 - math.exp(-1)))
    assert combined == pytest.approx(alone, abs=1e-12)


def test_total_overhead_examples():
    assert total_overhead([1, 1, 1], 3) == (1.0, 1.0)
    g, v = total_overhead([1.2071] * 10)
    assert g == pytest.approx(6.568, abs=1e-3)
    assert v == pytest.approx(43.14, abs=1e-2)


def test_total_overhead_rejects_gamma_below_one():
    with pytest.raises(ValueError):
        total_overhead([0.9])


# ---------------------------------------------------------------- properties


@given(thermal_params())
def test_coefficients_sum_to_one(params):
    for d in (qpd_thermal(params), reset_approximation(params), pta_thermal(params).to_decomposition()):
        assert sum(d.coefficients) == pytest.approx(1.0, abs=1e-12)
        assert d.q_identity >= 0 and d.q_reset0 >= 0 and d.q_reset1 >= 0


@given(thermal_params())
def test_positivity_iff_t2_le_t1(params):
    # below this q_Z underflows to exactly zero
    if params.tau < 1e-6 * params.t1:
        return
    q_z = qpd_thermal(params).q_pauli_z
    if params.t2 <= params.t1:
        assert q_z >= 0
    else:
        assert q_z < 0


@given(thermal_params())
def test_negativity_independent_of_temperature(params):
    ref = negativity(qpd_thermal(ThermalParams(params.t1, params.t2, params.tau, 0.0)))
    assert negativity(qpd_thermal(params)) == pytest.approx(ref, abs=1e-12)


@given(thermal_params())
def test_combining_beats_splitting(params):
    pg, _ = relaxation_probs(params)
    combined = negativity(qpd_thermal(params))
    split = negativity(qpd_amplitude_damping(pg))
    assert combined <= split + 1e-12
    if abs(params.t2 - 2 * params.t1) < 1e-12:
        assert combined == pytest.approx(split, abs=1e-12)


@given(thermal_params())
def test_negativity_at_least_one(params):
    assert negativity(qpd_thermal(params)) >= 1.0


def test_branch_order_is_canonical():
    assert [b.name for b in Branch] == ["I", "Z", "R0", "R1", "X", "Y"]


# ---------------------------------------------------------------- bath


def test_equilibrium_excitation_limits_and_reference():
    assert equilibrium_excitation(BathSpec(5e9, 1e-4)) == pytest.approx(0.0, abs=1e-12)
    assert equilibrium_excitation(BathSpec(5e9, 1e6)) == pytest.approx(0.5, abs=1e-4)
    assert equilibrium_excitation(BathSpec(5e9, 0.109)) == pytest.approx(0.1, abs=2e-3)


@settings(max_examples=50)
@given(st.floats(0.01, 1.0), st.floats(0.01, 1.0))
def test_equilibrium_excitation_monotone(t_a, t_b):
    lo, hi = sorted((t_a, t_b))
    assert equilibrium_excitation(BathSpec(5e9, lo)) <= equilibrium_excitation(BathSpec(5e9, hi))
