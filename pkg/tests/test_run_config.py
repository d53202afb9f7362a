from pathlib import Path

import pytest

from scalewave.config.run_config import (
    RunConfig,
    apply_overrides,
    iter_keys,
    load_run_config,
    parse_config_text,
)
from scalewave.errors import ConfigError, DataError
from scalewave.state import RunState


def test_defaults_validate():
    config = load_run_config()
    assert config.sipr.k == 8
    assert config.patch.patch_len == 16
    assert config.wavelet.basis == "db4"
    assert config.seed == 0


def test_every_section_field_is_a_key():
    keys = {k for k, _, _ in iter_keys()}
    assert {"data.panel_path", "sipr.k", "wavelet.levels", "train.loss_mode", "backtest.top_k", "run.seed"} <= keys


def test_file_then_overrides(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(
        "# comment\n"
        "sipr.k = 4   # trailing comment\n"
        "\n"
        "wavelet.trainable = no\n"
        "train.learning_rate = 0.05\n"
        "split.valid_start = 2020-03-02\n"
        "split.test_start = 2020-04-01\n",
        encoding="utf-8",
    )
    config = load_run_config(path, {"sipr.k": "5", "data.index_symbol": "none"}, require_split=True)
    assert config.sipr.k == 5
    assert config.wavelet.trainable is False
    assert config.train.learning_rate == 0.05
    assert config.data.index_symbol is None
    assert config.split_boundaries() == ("2020-03-02", "2020-04-01")


def test_unknown_key_names_the_line():
    with pytest.raises(ConfigError) as info:
        parse_config_text("sipr.k = 3\nsipr.bogus = 1\n", "x.cfg")
    assert "line 2" in str(info.value)
    assert "sipr.bogus" in str(info.value)


def test_line_without_equals_is_rejected():
    with pytest.raises(ConfigError) as info:
        parse_config_text("sipr.k 3\n")
    assert "line 1" in str(info.value)


@pytest.mark.parametrize("key, value", [
    ("sipr.k", "three"),
    ("sipr.k", "0"),
    ("train.learning_rate", "-0.1"),
    ("wavelet.trainable", "maybe"),
    ("patch.stride", "32"),
    ("wavelet.levels", "9"),
    ("wavelet.basis", "coif1"),
    ("backtest.benchmark", "spx"),
    ("sipr.init", "random"),
])
def test_invalid_values_raise_config_error(key, value):
    with pytest.raises(ConfigError):
        load_run_config(None, {key: value})


def test_l_min_above_l_max():
    with pytest.raises(ConfigError) as info:
        load_run_config(None, {"sipr.l_min": "40"})
    assert "l_min" in str(info.value)


def test_too_deep_levels_name_the_maximum():
    with pytest.raises(ConfigError) as info:
        load_run_config(None, {"wavelet.levels": "5"})
    assert "maximum feasible is 4" in str(info.value)


def test_split_order_and_requirement():
    with pytest.raises(ConfigError):
        load_run_config(None, {"split.valid_start": "2020-05-01", "split.test_start": "2020-04-01"})
    with pytest.raises(ConfigError):
        load_run_config(None, require_split=True)
    with pytest.raises(ConfigError):
        load_run_config(None, {"split.valid_start": "May 1", "split.test_start": "2020-06-01"})


def test_missing_config_file(tmp_path):
    with pytest.raises(DataError):
        load_run_config(tmp_path / "missing.cfg")


def test_builders_follow_sections():
    config = apply_overrides(RunConfig(), {
        "patch.patch_len": "8", "patch.stride": "4", "wavelet.levels": "2", "wavelet.window_len": "32",
        "sipr.weight_mode": "uniform", "sipr.band_radius": "3", "train.epochs": "2",
        "wavelet.shared": "true",
    })
    tok = config.tokenizer()
    assert (tok.window_len, tok.patch_len, tok.patch_stride, tok.levels) == (32, 8, 4, 2)
    assert config.dtw_options().band_radius == 3
    assert config.train_config().epochs == 2
    assert config.initial_filters(3).shared


def test_fixed_wavelet_freezes_filters():
    config = load_run_config(None, {"wavelet.basis": "haar", "wavelet.trainable": "false",
                                    "train.freeze_filters": "true"})
    assert config.train_config().freeze_filters
    assert config.initial_filters(2).k == 2


def test_run_state_layout(tmp_path):
    state = RunState(base_dir=tmp_path, artifact_dir=Path("out"))
    state.ensure_dirs()
    assert state.artifact_dir == (tmp_path / "out").resolve()
    assert state.artifact_dir.is_dir()
    assert state.report_path.name == "report.json"
    assert state.resolve("data/p.csv") == (tmp_path / "data" / "p.csv").resolve()
    assert state.relative(tmp_path / "out" / "x.json") == str(Path("out") / "x.json")
