#!/usr/bin/env python3
"""
Set up a qkolmo development checkout
Creates .venv, installs the package with its dev extras and runs scripts/smoke_check.py inside it.
"""

import os
import subprocess
import sys
from pathlib import Path

VENV = Path(".venv")
SMOKE_CHECK = Path(__file__).with_name("smoke_check.py")


def venv_python() -> Path:
    return VENV / ("Scripts/python.exe" if os.name == "nt" else "bin/python")


def main() -> int:
    try:
        if not VENV.exists():
            subprocess.run([sys.executable, "-m", "venv", str(VENV)], check=True)
        python = str(venv_python())
        subprocess.run([python, "-m", "pip", "install", "-e", ".[dev]"], check=True)
        subprocess.run([python, str(SMOKE_CHECK)], check=True)
    except subprocess.CalledProcessError as e:
        print(f"❌ setup failed: {e}", file=sys.stderr)
        return 1
    print(f"✅ qkolmo installed in {VENV}; activate it and try `qkolmo verify-suite`")
    return 0


if __name__ == "__main__":
    sys.exit(main())
