"""
Entry point for running the lab as a module.
Usage: python -m qkolmo <command> ...
"""

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
