"""Tests for the seeded verify suites."""

import pytest

from qkolmo.config import VerifyConfig, load_verify_config
from qkolmo.errors import InvalidParameterError
from qkolmo.machine import dump_spec, load_fixture
from qkolmo.verify import resolve_machine, run_verify_suite


@pytest.fixture
def small_config() -> VerifyConfig:
    """A quick config: few trials, short horizons and no random machines."""
    return VerifyConfig(
        seed=1,
        machines=["identity", "prefix", "two_times"],
        n_max=2,
        t_max=8,
        random_machines=0,
        bound_trials=10,
        blind_code_trials=20,
        compression_trials=5,
        pipeline_trials=3,
        run_approx=False,
    )


class TestSuites:
    """Test individual suites on small configs."""

    def test_coding_suite(self, small_config):
        """Test that the blind code suite passes."""
        report = run_verify_suite(small_config, only=["coding"])
        assert report.passed
        assert [r.name for r in report.results] == ["coding"]

    def test_exact_suites(self, small_config):
        """Test the validation, halting, compression and pipeline suites."""
        report = run_verify_suite(small_config, only=["validation", "halting", "compression", "pipeline"])
        assert report.passed, report.render()

    def test_relation_suite(self, small_config):
        """Test the relation suite over parameter-prefixed scheme inputs."""
        report = run_verify_suite(small_config, only=["relation"])
        assert report.passed, report.render()
        assert "<k', sigma>" in report.results[0].detail

    def test_non_unitary_machine_fails(self, small_config):
        """Test that a colliding machine fails validation."""
        config = small_config.model_copy(update={"machines": ["collision"], "n_max": 1, "t_max": 4})
        report = run_verify_suite(config, only=["validation"])
        assert not report.passed
        assert "collision" in report.results[0].failures[0]

    def test_missing_machine_aborts_suite(self, small_config):
        """Test that a domain error inside a suite is reported as a failure."""
        config = small_config.model_copy(update={"machines": ["no_such_machine"]})
        report = run_verify_suite(config, only=["validation"])
        assert not report.passed
        assert report.results[0].detail.startswith("aborted")

    def test_unknown_suite(self, small_config):
        """Test that unknown suite names raise."""
        with pytest.raises(InvalidParameterError):
            run_verify_suite(small_config, only=["astrology"])

    def test_render(self, small_config):
        """Test the report text."""
        text = run_verify_suite(small_config, only=["coding"]).render()
        assert text.startswith("# qkolmo verify-suite seed=1")
        assert text.rstrip().endswith("verdict: pass")
        assert "PASS coding" in text

    def test_resolve_machine_from_file(self, tmp_path):
        """Test that machine names may be paths to description files."""
        path = tmp_path / "mine.qtm"
        path.write_text(dump_spec(load_fixture("identity")), encoding="utf-8")
        assert resolve_machine(str(path)).name == "mine"
        assert resolve_machine("prefix").name == "prefix"


@pytest.mark.slow
class TestFullRun:
    """Test the packaged default configuration end to end."""

    def test_default_config_passes(self):
        """Test that every suite passes on the default config."""
        report = run_verify_suite(load_verify_config())
        assert report.passed, report.render()
