"""Tests for resource caps and the verify-suite configuration."""

import json

import pytest

from qkolmo.config import ResourceCaps, load_caps, load_verify_config, parse_caps_overrides
from qkolmo.errors import ResourceCapError, SpecParseError


class TestResourceCaps:
    """Test cap loading from defaults, environment and overrides."""

    def test_defaults(self):
        """Test the default caps with an empty environment."""
        caps = load_caps(environ={})
        assert caps == ResourceCaps()
        assert caps.max_time == 64

    def test_pairs_from_environment(self):
        """Test the name=value form of QKOLMO_CAPS."""
        caps = load_caps(environ={"QKOLMO_CAPS": "max_time=128, max_net_input_length=2"})
        assert caps.max_time == 128
        assert caps.max_net_input_length == 2

    def test_json_from_environment(self):
        """Test the JSON form of QKOLMO_CAPS."""
        caps = load_caps(environ={"QKOLMO_CAPS": json.dumps({"max_cover_points": 10})})
        assert caps.max_cover_points == 10

    def test_overrides_beat_environment(self):
        """Test that explicit overrides are applied last."""
        caps = load_caps({"max_time": 8}, environ={"QKOLMO_CAPS": "max_time=128"})
        assert caps.max_time == 8

    @pytest.mark.parametrize("raw", ["max_timez=3", "max_time", "max_time=-1", "{bad json", "[1, 2]"])
    def test_invalid_environment(self, raw):
        """Test that unknown caps and malformed entries are parse errors."""
        with pytest.raises(SpecParseError):
            load_caps(environ={"QKOLMO_CAPS": raw})

    def test_parse_empty(self):
        """Test that a blank variable means no overrides."""
        assert parse_caps_overrides("  ") == {}

    def test_check_raises_with_attributes(self):
        """Test the error raised when a cap is exceeded."""
        caps = load_caps({"max_time": 4}, environ={})
        caps.check("max_time", 4)
        with pytest.raises(ResourceCapError) as info:
            caps.check("max_time", 5, "simulation")
        assert (info.value.cap, info.value.value, info.value.limit) == ("max_time", 5, 4)
        assert "simulation" in str(info.value)


class TestVerifyConfig:
    """Test loading verify-suite configs."""

    def test_packaged_default(self):
        """Test the packaged default config."""
        config = load_verify_config()
        assert config.seed == 1
        assert "identity" in config.machines
        assert config.run_approx

    def test_file(self, tmp_path):
        """Test a partial config file."""
        path = tmp_path / "verify.json"
        path.write_text(json.dumps({"seed": 7, "machines": ["prefix"]}), encoding="utf-8")
        config = load_verify_config(path)
        assert (config.seed, config.machines, config.t_max) == (7, ["prefix"], 16)

    def test_bad_files(self, tmp_path):
        """Test unreadable, malformed and unknown-key configs."""
        with pytest.raises(SpecParseError):
            load_verify_config(tmp_path / "missing.json")
        path = tmp_path / "bad.json"
        path.write_text('{"seed": 1, "colour": "blue"}', encoding="utf-8")
        with pytest.raises(SpecParseError):
            load_verify_config(path)
