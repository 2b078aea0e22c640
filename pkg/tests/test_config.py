"""Tests for config parsing, validation and serialization."""
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from crnsim.config import (
    DEFAULT_CONFIG,
    ConfigError,
    dump_config,
    load_config,
    parse_config_text,
    save_config,
    validate_config,
    with_overrides,
)


class TestParsing:
    def test_empty_text_gives_defaults(self):
        assert load_config("") == DEFAULT_CONFIG

    def test_comments_and_blank_lines(self):
        values = parse_config_text("# header\n\nrounds = 200   # short run\nmode = sendora_like\n")
        assert values == {'rounds': 200, 'mode': "sendora_like"}

    def test_int_accepts_integral_float_text(self):
        assert parse_config_text("rounds = 1e3")['rounds'] == 1000

    def test_int_rejects_fraction(self):
        with pytest.raises(ConfigError, match="line 1: rounds:"):
            parse_config_text("rounds = 2.5")

    def test_float_accepts_int_text(self):
        assert parse_config_text("r_s = 8")['r_s'] == 8.0

    def test_non_finite_rejected(self):
        with pytest.raises(ConfigError):
            parse_config_text("r_s = nan")

    def test_unknown_key_reports_line(self):
        with pytest.raises(ConfigError, match="line 2: unknown key 'radius'") as excinfo:
            parse_config_text("rounds = 10\nradius = 3\n")
        assert excinfo.value.line == 2

    def test_duplicate_key(self):
        with pytest.raises(ConfigError, match="duplicate key 'seed'"):
            parse_config_text("seed = 1\nseed = 2\n")

    def test_missing_equals(self):
        with pytest.raises(ConfigError, match="line 1:"):
            parse_config_text("rounds 10")

    def test_missing_value(self):
        with pytest.raises(ConfigError, match="missing value"):
            parse_config_text("rounds =")


class TestResolution:
    def test_p0_rescales_transitions(self):
        config = load_config("p0 = 0.7")
        assert config['p_bi'] == pytest.approx(0.42)
        assert config['p_ib'] == pytest.approx(0.18)
        assert config['p_bi'] / (config['p_ib'] + config['p_bi']) == pytest.approx(0.7)

    def test_inconsistent_p0_rejected(self):
        with pytest.raises(ConfigError) as excinfo:
            load_config("p0 = 0.7\np_ib = 0.3\np_bi = 0.3\n")
        assert excinfo.value.key == 'p0'

    def test_baseline_mode_turns_sleep_off(self):
        assert load_config("mode = leachc_like")['sleep'] == "none"

    def test_baseline_mode_with_sleep_rejected(self):
        with pytest.raises(ConfigError, match="requires sleep = none"):
            load_config("mode = leachc_like\nsleep = all_sleep_ns\n")

    def test_overrides(self, default_config):
        config = with_overrides(default_config, rounds=10, mode="without_subsets")
        assert config['rounds'] == 10
        assert config['sleep'] == "none"
        assert default_config['rounds'] == 5000

    def test_override_type_error(self, default_config):
        with pytest.raises(ConfigError):
            with_overrides(default_config, rounds="many")


class TestValidation:
    @pytest.mark.parametrize("text,key", [
        ("r_s = 25", 'r_s'),
        ("qd_min = 1.0", 'qd_min'),
        ("tau_max = 0.095", 't_set'),
        ("snr_db_min = 0\nsnr_db_max = -5\n", 'snr_db_min'),
        ("window = 1", 'window'),
        ("num_crs = 0", 'num_crs'),
        ("mode = fastest", 'mode'),
        ("sleep = forever", 'sleep'),
        ("pd_node_mode = median", 'pd_node_mode'),
        ("sink_x = 150", 'sink_x'),
        ("p_ack_loss = 1.0", 'p_ack_loss'),
        ("e0 = 0", 'e0'),
    ])
    def test_rejected_values_name_the_key(self, text, key):
        with pytest.raises(ConfigError) as excinfo:
            load_config(text)
        assert excinfo.value.key == key

    def test_unknown_key_in_dict(self, default_config):
        broken = dict(default_config, radius=3.0)
        with pytest.raises(ConfigError, match="unknown key"):
            validate_config(broken)


class TestFiles:
    def test_load_from_path(self, tmp_path):
        path = tmp_path / "run.txt"
        path.write_text("rounds = 42\nseed = 7\n")
        config = load_config(path)
        assert config['rounds'] == 42
        assert config['seed'] == 7

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read config file"):
            load_config(tmp_path / "absent.txt")

    def test_dump_reloads_to_same_config(self, default_config, tmp_path):
        config = with_overrides(default_config, p0=0.3, r_s=7.5, mode="sendora_like")
        path = tmp_path / "config.txt"
        save_config(config, path)

        text = path.read_text()
        assert text.startswith("# crnsim configuration\n")
        assert "mode = sendora_like\n" in text
        assert load_config(path) == config

    def test_dump_lists_every_key(self, default_config):
        lines = [l for l in dump_config(default_config).splitlines() if not l.startswith("#")]
        assert [l.split(" = ")[0] for l in lines] == list(DEFAULT_CONFIG)
