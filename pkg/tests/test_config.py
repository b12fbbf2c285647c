import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermstab.config import (
    DEVICE_PRESETS,
    ConfigError,
    ExperimentConfig,
    build_circuit,
    format_poly,
    load_config,
    parse_config,
    parse_poly,
    preset_params,
)


def test_defaults_are_valid():
    cfg = ExperimentConfig().validate()
    assert cfg.params.t1 == 1.0
    assert parse_config("") == cfg


configs = st.builds(
    ExperimentConfig,
    code=st.just("surface"),
    distance=st.sampled_from([3, 5, 7]),
    state=st.sampled_from(["0", "1", "+"]),
    rounds=st.integers(1, 20),
    t1=st.floats(0.1, 500),
    t2=st.floats(0.1, 500),
    tau=st.floats(0, 10),
    p1=st.floats(0, 0.5),
    channel_model=st.sampled_from(["exact_qpd", "pta", "reset_approx"]),
    noise_policy=st.sampled_from(["before_measure", "around_measure_reset"]),
    final_layer_noise=st.booleans(),
    shots=st.integers(1, 10**9),
    master_seed=st.integers(0, 2**64 - 1),
    decoder=st.sampled_from(["lookup", "greedy", "none"]),
    output_dir=st.text("abcxyz_/", min_size=1, max_size=12),
)


@settings(max_examples=100, deadline=None)
@given(configs)
def test_round_trip_is_lossless_and_idempotent(cfg):
    cfg = cfg.replace(t2=min(cfg.t2, 2 * cfg.t1))
    text = cfg.to_text()
    back = parse_config(text)
    assert back == cfg
    assert back.to_text() == text
    assert back.digest() == cfg.digest()


def test_bb_round_trip():
    cfg = ExperimentConfig(code="bb", l=6, m=6, poly_a=((3, 0), (0, 1), (0, 2)), poly_b=((0, 3), (1, 0), (2, 0)))
    assert parse_config(cfg.to_text()) == cfg


def test_digest_changes_with_content():
    assert ExperimentConfig().digest() != ExperimentConfig(shots=11).digest()


def test_all_problems_reported_together():
    text = """
[code]
distance = 4
colour = red
[noise]
t2 = 5.0
channel_model = lindblad
[run]
shots = 0
[extra]
x = 1
"""
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    problems = info.value.problems
    joined = "\n".join(problems)
    for needle in ("colour", "[extra]", "distance", "t2", "channel_model", "shots"):
        assert needle in joined, needle
    assert len(problems) >= 6


@pytest.mark.parametrize(
    "text",
    [
        "[code]\nrounds = three\n",
        "[noise]\nfinal_layer_noise = maybe\n",
        "[code]\ncode = bb\nstate = +\n",
        "[code]\ncode = bb\n[run]\ndecoder = greedy\n",
        "[code]\ncode = bb\npoly_a = 0,0 1\n",
        "[run]\nmaster_seed = -1\n",
        "[noise]\npreset = nowhere\n",
        "not an ini file",
    ],
)
def test_invalid_configs_raise(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_preset_fills_coherence_times():
    cfg = parse_config("[noise]\npreset = fez\ntau = 1.0\n")
    assert (cfg.t1, cfg.t2) == DEVICE_PRESETS["fez"]
    cfg = parse_config("[noise]\npreset = fez\nt1 = 100\nt2 = 50\n")
    assert (cfg.t1, cfg.t2) == (100.0, 50.0)
    assert preset_params("boston", tau=2.0).tau == 2.0
    with pytest.raises(ValueError):
        preset_params("nowhere")


def test_overrides_win(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[run]\nshots = 50\n")
    assert load_config(path, {"shots": 7}).shots == 7


def test_poly_round_trip():
    poly = ((0, 0), (1, 0), (0, 1))
    assert format_poly(poly) == "0,0 1,0 0,1"
    assert parse_poly(format_poly(poly)) == poly


@pytest.mark.parametrize(
    "cfg, n_sites",
    [
        (ExperimentConfig(rounds=2), 3 * 17),
        (ExperimentConfig(rounds=2, final_layer_noise=False), 2 * 17),
        (ExperimentConfig(rounds=2, tau=0.0), 3 * 17),
    ],
)
def test_build_circuit(cfg, n_sites):
    c = build_circuit(cfg)
    assert len(c.noise_sites()) == n_sites
    assert c.meta["code"] == "surface"
