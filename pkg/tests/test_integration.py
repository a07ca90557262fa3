"""Integration tests for the qkolmo command line.

These tests start ``python -m qkolmo`` in a subprocess.
Run with: pytest tests/test_integration.py -v
"""

import os
import subprocess
import sys
from pathlib import Path

import pytest

SRC = Path(__file__).resolve().parent.parent / "src"


def run_module(*argv: str, env_caps: str = "") -> subprocess.CompletedProcess:
    """Run the lab as a module with src on the path."""
    env = {**os.environ, "PYTHONPATH": str(SRC), "QKOLMO_CAPS": env_caps}
    return subprocess.run(
        [sys.executable, "-m", "qkolmo", *argv], capture_output=True, text=True, env=env, timeout=600, check=False
    )


@pytest.mark.integration
def test_module_simulate():
    """Test a simulation through the module entry point."""
    result = run_module("simulate", "two_times", "--input", "1")
    assert result.returncode == 0
    assert "halts at t=3, output 1" in result.stdout


@pytest.mark.integration
def test_module_encode_decode(tmp_path):
    """Test writing a program and decoding it in a second process."""
    program = tmp_path / "late.qprog"
    encoded = run_module("encode", "two_times", "--ket", "1", "--tmax", "8", "--out", str(program))
    assert encoded.returncode == 0
    assert "codeword 01" in encoded.stdout
    decoded = run_module("decode", str(program), "--tmax", "8")
    assert decoded.returncode == 0
    assert "output 1" in decoded.stdout


@pytest.mark.integration
def test_caps_from_environment():
    """Test that QKOLMO_CAPS reaches the subprocess and a tight cap fails cleanly."""
    result = run_module("simulate", "identity", "--input", "01", "--tmax", "10", env_caps="max_time=2")
    assert result.returncode == 1
    assert "max_time exceeded" in result.stderr


@pytest.mark.integration
def test_usage_error():
    """Test argparse usage errors."""
    result = run_module("counting")
    assert result.returncode == 2
    assert "counting needs" in result.stderr


@pytest.mark.integration
@pytest.mark.slow
def test_verify_suite_default_config():
    """Test the full default verify suite."""
    result = run_module("verify-suite")
    assert result.returncode == 0, result.stdout
    assert result.stdout.rstrip().endswith("verdict: pass")
