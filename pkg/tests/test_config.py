import json

import pytest

from beamcs import AngleMode, MatrixKind
from beamcs.config import (
    ConfigError,
    PROFILE_NAMES,
    config_echo,
    build_experiment,
    load_document,
    load_experiment,
    profile_defaults,
)


def test_profile_names():
    assert set(PROFILE_NAMES) == {"paper", "ci"}


def test_paper_profile_defaults():
    cfg = build_experiment(profile_defaults("paper"))
    assert cfg.channel.num_antennas == 256
    assert cfg.channel.num_paths == 3
    assert cfg.channel.angle_mode is AngleMode.ON_GRID
    assert cfg.num_samples == 20000
    assert cfg.train.learning_rate == 0.01
    assert cfg.train.batch_size == 128
    assert cfg.train.max_epochs == 1000
    assert cfg.train.num_updates == 9
    assert cfg.m_values == (20, 25, 30, 35, 40)
    assert cfg.kinds == tuple(MatrixKind)
    assert cfg.metric.block_length == 200
    # the headline numbers need the plain [0, 1] map and the full epoch run
    assert cfg.floor == 0.0
    assert cfg.train.early_stop_patience == 0


def test_ci_profile_defaults():
    cfg = build_experiment(profile_defaults("ci"))
    assert cfg.channel.num_antennas == 32
    assert cfg.channel.num_paths == 2
    assert cfg.num_samples == 2000
    assert cfg.m_values == (8, 12, 16)
    assert cfg.train.max_epochs == 200
    assert cfg.floor == 0.1


def test_unknown_profile():
    with pytest.raises(ConfigError, match="unknown profile"):
        profile_defaults("huge")


def test_profile_defaults_are_copies():
    a = profile_defaults("ci")
    a["train"]["batch_size"] = 7
    assert profile_defaults("ci")["train"]["batch_size"] == 64


def test_merge_precedence(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"profile": "ci", "train": {"batch_size": 32}}))
    doc = load_document(str(path), None, overrides={"train": {"batch_size": 8}})
    assert doc["train"]["batch_size"] == 8  # override beats file
    assert doc["train"]["learning_rate"] == 0.02  # untouched ci default
    doc = load_document(str(path), None)
    assert doc["train"]["batch_size"] == 32  # file beats profile


def test_profile_flag_beats_file_key(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"profile": "ci"}))
    doc = load_document(str(path), "paper")
    assert doc["channel"]["num_antennas"] == 256


def test_profile_from_file_key(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"profile": "ci"}))
    doc = load_document(str(path), None)
    assert doc["channel"]["num_antennas"] == 32
    assert "profile" not in doc  # consumed, not forwarded


def test_default_profile_is_paper():
    doc = load_document(None, None)
    assert doc["channel"]["num_antennas"] == 256


def test_bad_config_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_document(str(path), None)
    path.write_text("[1, 2]")
    with pytest.raises(ConfigError, match="JSON object"):
        load_document(str(path), None)


def test_seed_cascades():
    cfg = load_experiment(None, "ci", overrides={"seed": 5})
    assert cfg.seed == 5
    assert cfg.channel.seed == 5
    assert cfg.train.seed == 5


def test_explicit_section_seed_wins():
    cfg = load_experiment(
        None, "ci", overrides={"seed": 5, "train": {"seed": 9}}
    )
    assert cfg.channel.seed == 5
    assert cfg.train.seed == 9


@pytest.mark.parametrize(
    "overrides, message",
    [
        ({"m_values": []}, "nonempty"),
        ({"m_values": [8, 8, 12]}, "strictly increasing"),
        ({"m_values": [12, 8]}, "strictly increasing"),
        ({"m_values": [0, 8]}, "positive"),
        ({"m_values": [8, 64]}, "stacked vector width"),
        ({"m_values": [8, 63], "metric": {"block_length": 50}}, "block_length"),
        ({"kinds": ["gaussian", "gaussian"]}, "distinct"),
        ({"kinds": ["rademacher"]}, "matrix kind must be one of"),
        ({"channel": {"angle_mode": "diagonal"}}, "angle_mode must be one of"),
        ({"recovery": {"solver": "simplex"}}, "solver must be one of"),
        ({"data": {"ratios": [0.5, 0.5]}}, "exactly 3"),
        ({"data": {"floor": 1.0}}, "floor"),
        ({"data": {"floor": -0.2}}, "floor"),
        ({"train": {"batch_size": 1}}, "invalid configuration"),
        ({"channel": {"num_antennas": -4}}, "invalid configuration"),
    ],
)
def test_build_experiment_rejects(overrides, message):
    with pytest.raises(ConfigError, match=message):
        load_experiment(None, "ci", overrides=overrides)


def test_missing_required_key():
    doc = profile_defaults("ci")
    del doc["channel"]["num_antennas"]
    with pytest.raises(ConfigError, match="invalid configuration"):
        build_experiment(doc)


def test_section_must_be_object():
    doc = profile_defaults("ci")
    doc["train"] = "fast"
    with pytest.raises(ConfigError, match="must be an object"):
        build_experiment(doc)


def test_config_echo_omits_out_dir():
    cfg = load_experiment(None, "ci", overrides={"out_dir": "/tmp/x"})
    echo = config_echo(cfg)
    assert "out_dir" not in json.dumps(echo)
    assert echo["channel"]["num_antennas"] == 32
    assert echo["m_values"] == [8, 12, 16]
    json.dumps(echo)  # must already be JSON-ready


def test_config_echo_independent_of_out_dir():
    a = config_echo(load_experiment(None, "ci", overrides={"out_dir": "/a"}))
    b = config_echo(load_experiment(None, "ci", overrides={"out_dir": "/b"}))
    assert a == b
