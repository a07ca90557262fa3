"""qkolmo lab

Quantum Turing machines, halting spaces, quantum Kolmogorov complexity and the quantum Brudno
construction at desk scale.
"""

from .brudno import SourceModel, beta_min, load_source, universal_typical_projector
from .errors import QkolmoError
from .machine import QtmSpec, apply, load_fixture, load_spec, validate_unitarity
from .qubits import QubitString
from .universal import decode_program, encode_input

__version__ = "0.3.0"
__all__ = [
    "QkolmoError",
    "QtmSpec",
    "QubitString",
    "SourceModel",
    "apply",
    "beta_min",
    "decode_program",
    "encode_input",
    "load_fixture",
    "load_source",
    "load_spec",
    "universal_typical_projector",
    "validate_unitarity",
]
