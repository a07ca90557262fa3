#!/usr/bin/env python3
"""
Smoke check for a qkolmo installation
Runs one exact simulation, one encode/decode round trip and the coding suite.
"""

import sys

from qkolmo import QubitString, decode_program, encode_input, load_fixture
from qkolmo.config import load_verify_config
from qkolmo.errors import QkolmoError
from qkolmo.machine import halting_time
from qkolmo.verify import run_verify_suite


def smoke_check() -> int:
    """Return 0 when every step passes."""
    try:
        identity = load_fixture("identity")
        t = halting_time(identity, QubitString.classical("01"), 10)
        if t != 3:
            print(f"❌ identity machine halted at t={t}, expected 3", file=sys.stderr)
            return 1
        print("✓ exact simulation")

        program = encode_input(load_fixture("two_times"), {"1": 1}, t_max=8)
        output = decode_program(program, t_max=8)
        if output.label() != "1" or program.quantum_length != 2:
            print(f"❌ round trip gave {output.label()} with {program.quantum_length} qubits", file=sys.stderr)
            return 1
        print("✓ universal encode/decode")

        config = load_verify_config().model_copy(update={"blind_code_trials": 100})
        if not run_verify_suite(config, only=["coding"]).passed:
            print("❌ coding suite failed", file=sys.stderr)
            return 1
        print("✓ coding suite")

        print("✅ Smoke check passed")
        return 0

    except QkolmoError as e:
        print(f"❌ Smoke check failed: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(smoke_check())
