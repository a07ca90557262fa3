"""Universal encoding of halting inputs: codeword for the halting time plus compressed payload.

A program for machine M and a pure input psi of length n that halts at time t consists of
M's description, a blind prefix codeword for t and the standard compression of psi inside the
halting space at t. Its quantum part is exactly n + 1 qubits long. The decoder recomputes the
halting spaces, rebuilds the codewords to find t, decompresses and runs M for t steps.

Usage:
    >>> from qkolmo.machine import load_fixture
    >>> from qkolmo.linalg import vec
    >>> program = encode_input(load_fixture("identity"), vec(1, 0), t_max=8)
    >>> program.codeword, program.quantum_length
    ('0', 2)
"""

from __future__ import annotations

import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Literal

import numpy as np

from .coding import (
    CompressionMap,
    PrefixCode,
    blind_prefix_code,
    ceil_log2,
    compress,
    compress_numeric,
    decompress,
    self_delim_encode,
)
from .config import ResourceCaps, resolve_caps
from .errors import DecodeError, InvalidParameterError, NonHaltingError, SpecParseError
from .halting import ApproxHaltingSpace, BallTester, HaltingSpace, approx_halting_space, halting_spaces
from .linalg import CRat, RadicalVec, ScaledUnitVector, operator_norm, to_numpy
from .machine import QtmSpec, dump_spec, parse_spec, read_output, run
from .qubits import QubitString, strings_of_length

logger = logging.getLogger(__name__)

Mode = Literal["exact", "approx"]

# Rank threshold for projected frames in similar_subspace_isometry
FRAME_ATOL = 1e-9
# approx_halting_space at accuracy delta settles at eps <= 18 delta
APPROX_EPS_FACTOR = 18
# Target decode accuracy an approximate program is planned for
DEFAULT_PROGRAM_DELTA = Fraction(1, 100)
PROGRAM_SECTIONS = ("machine", "mode", "n", "eps0", "delta", "levels", "codeword", "payload")


def default_eps0(n: int) -> Fraction:
    return Fraction(1, 81 * 4**n)


@dataclass(frozen=True)
class HaltingTimeSequence:
    """Halting times t_1 < t_2 < ... of length-n inputs with their halting spaces."""

    machine_id: str
    n: int
    mode: Mode
    eps0: Fraction | None
    spaces: tuple[HaltingSpace | ApproxHaltingSpace, ...]

    @property
    def times(self) -> list[int]:
        return [s.t for s in self.spaces]

    @property
    def dims(self) -> list[int]:
        return [s.dim for s in self.spaces]

    @property
    def lengths(self) -> list[int]:
        """Codeword lengths n + 1 - ceil(log d_i)."""
        return [self.n + 1 - ceil_log2(d) for d in self.dims]

    def code(self) -> PrefixCode:
        return blind_prefix_code(self.lengths)

    def index_of(self, t: int) -> int:
        try:
            return self.times.index(t)
        except ValueError:
            raise NonHaltingError(f"no length-{self.n} input halts at t={t}") from None


def halting_time_sequence(
    spec: QtmSpec,
    n: int,
    t_max: int,
    mode: Mode = "exact",
    eps0: Any = None,
    caps: ResourceCaps | None = None,
) -> HaltingTimeSequence:
    """All t <= t_max with a nonzero (exact or approximate) halting space for length-n inputs."""
    caps = resolve_caps(caps)
    if mode == "exact":
        spaces: list[HaltingSpace | ApproxHaltingSpace] = [s for s in halting_spaces(spec, n, t_max, caps) if s.dim]
        eps = None
    elif mode == "approx":
        eps = Fraction(eps0) if eps0 is not None else default_eps0(n)
        caps.check("max_time", t_max, "halting horizon")
        spaces = []
        for t in range(1, t_max + 1):
            space = approx_halting_space(spec, n, eps, t, caps)
            if space.dim:
                spaces.append(space)
    else:
        raise InvalidParameterError(f"unknown mode '{mode}'")
    total = sum(s.dim for s in spaces)
    if total > 1 << n:
        logger.warning(f"halting dimensions of {spec.name} at n={n} sum to {total} > 2^{n}")
    logger.info(f"halting times of {spec.name} at n={n}: {[(s.t, s.dim) for s in spaces]}")
    return HaltingTimeSequence(spec.machine_id, n, mode, eps, tuple(spaces))


# ---------------------------------------------------------------------------
# fine tuning


@dataclass(frozen=True)
class SubspaceIsometry:
    """U = sum_i w_i v_i^dag mapping span(v) onto span(w), zero on the complement."""

    matrix: np.ndarray
    source: np.ndarray
    dim: int

    @property
    def defect(self) -> float:
        """||(U - 1) restricted to the source subspace||."""
        return operator_norm((self.matrix - np.eye(self.matrix.shape[0])) @ self.source)

    def bound(self, eps: float) -> float:
        """(8/3) sqrt(eps) (5/2)^dim, valid when the subspaces are eps-similar."""
        return 8 / 3 * math.sqrt(eps) * 2.5**self.dim


def _frame(vectors: Sequence[Any] | np.ndarray) -> np.ndarray:
    arr = np.column_stack([v if isinstance(v, np.ndarray) else to_numpy(v) for v in vectors])
    q, r = np.linalg.qr(arr)
    signs = np.sign(np.diag(r).real)
    signs[signs == 0] = 1
    return q * signs


def similar_subspace_isometry(source: Sequence[Any], target: Sequence[Any]) -> SubspaceIsometry:
    """Gram-Schmidt of P_W v_i over an orthonormal frame v of V."""
    if len(source) != len(target):
        raise InvalidParameterError(f"subspaces of dimensions {len(source)} and {len(target)}")
    if not source:
        raise InvalidParameterError("isometry between zero subspaces")
    v = _frame(source)
    w = _frame(target)
    projected = w @ (w.conj().T @ v)
    q, r = np.linalg.qr(projected)
    if np.min(np.abs(np.diag(r))) < FRAME_ATOL:
        raise InvalidParameterError("target subspace is orthogonal to part of the source")
    signs = np.sign(np.diag(r).real)
    signs[signs == 0] = 1
    images = q * signs
    return SubspaceIsometry(images @ v.conj().T, v @ v.conj().T, len(source))


def cascade_depth(n: int, eps0: float, delta: float) -> int:
    """Least N with const_n (18/80)^{N/2} < delta / 6, const_n = (8/3) sqrt(11/2 eps0) (5/2)^{2^n}."""
    const = 8 / 3 * math.sqrt(5.5 * eps0) * 2.5 ** (1 << n)
    depth = 0
    while const * (18 / 80) ** (depth / 2) >= delta / 6:
        depth += 1
    return depth


@dataclass(frozen=True)
class FineTuning:
    """Composite of the cascade steps applied before truncation."""

    matrix: np.ndarray
    planned: int
    applied: int
    defects: tuple[float, ...]


def fine_tuning(
    spec: QtmSpec, space: ApproxHaltingSpace, levels: int, delta: Any, caps: ResourceCaps | None = None
) -> FineTuning:
    """Cascade of isometries V_0 -> V_1 -> ... between approximate spaces at accuracies eps_k = eps_{k-1} / 80.

    Stops after ``levels`` steps, after the first step with ||U_k - 1|| < delta / 6, or as soon as
    every vector of the current space already meets the next accuracy (then U_k = 1).
    """
    caps = resolve_caps(caps)
    caps.check("max_fine_tune_levels", levels, "fine-tuning cascade")
    budget = float(delta) / 6
    tester = BallTester(spec, space.n, space.t, caps)
    total = np.eye(1 << space.n, dtype=complex)
    current = space
    defects: list[float] = []
    for level in range(1, levels + 1):
        accuracy = current.eps / 80
        if tester.subspace_deviation(current.vectors) <= float(APPROX_EPS_FACTOR * accuracy):
            logger.info(f"fine-tuning settled before level {level}: the space already meets eps={accuracy}")
            break
        finer = approx_halting_space(spec, space.n, accuracy, space.t, caps)
        if finer.dim != current.dim:
            raise InvalidParameterError(
                f"approximate spaces at t={space.t} change dimension from {current.dim} to {finer.dim}"
            )
        step = similar_subspace_isometry(current.vectors, finer.vectors)
        logger.info(f"fine-tuning level {level}: eps={finer.eps}, ||U - 1|| = {step.defect:.3g}")
        total = step.matrix @ total
        defects.append(step.defect)
        current = finer
        if step.defect < budget:
            break
    return FineTuning(total, levels, len(defects), tuple(defects))


# ---------------------------------------------------------------------------
# programs


@dataclass(frozen=True)
class UniversalProgram:
    machine_text: str
    n: int
    codeword: str
    payload: RadicalVec | np.ndarray
    mode: Mode = "exact"
    eps0: Fraction | None = None
    levels: int = 0
    delta: Fraction | None = None

    @property
    def machine_bits(self) -> str:
        """Self-delimited byte length followed by the description bytes."""
        data = self.machine_text.encode("utf-8")
        return self_delim_encode(len(data)) + "".join(format(b, "08b") for b in data)

    @property
    def payload_qubits(self) -> int:
        return (len(self.payload) - 1).bit_length()

    @property
    def quantum_length(self) -> int:
        return len(self.codeword) + self.payload_qubits

    @property
    def total_length(self) -> int:
        return len(self.machine_bits) + self.quantum_length


def _as_vector(psi: Sequence[Any] | Mapping[str, Any], n: int | None) -> list[CRat]:
    if isinstance(psi, Mapping):
        width = n if n is not None else max(len(s) for s in psi)
        if any(len(s) != width for s in psi):
            raise InvalidParameterError("ket mixes string lengths; halting inputs have one length")
        return [CRat.of(psi.get(s, 0)) for s in strings_of_length(width)]
    return [CRat.of(x) for x in psi]


def _length_of(dim: int) -> int:
    n = dim.bit_length() - 1
    if 1 << n != dim:
        raise InvalidParameterError(f"vector of length {dim} is not in some H_n")
    return n


def encode_input(
    spec: QtmSpec,
    psi: Sequence[Any] | Mapping[str, Any],
    t_max: int,
    mode: Mode = "exact",
    eps0: Any = None,
    levels: int | None = None,
    caps: ResourceCaps | None = None,
    delta: Any = DEFAULT_PROGRAM_DELTA,
) -> UniversalProgram:
    """Program (machine, codeword, payload) for an exact pure halting input psi.

    In approx mode ``levels`` defaults to the cascade depth that brings the fine-tuning tail
    below delta / 6; the program records both so the decoder rebuilds the same cascade.
    """
    caps = resolve_caps(caps)
    vector = _as_vector(psi, None)
    n = _length_of(len(vector))
    if not any(vector):
        raise InvalidParameterError("zero input vector")
    exact_seq = halting_time_sequence(spec, n, t_max, "exact", caps=caps)
    home = next((s for s in exact_seq.spaces if CompressionMap.for_subspace(s.vectors).contains(vector)), None)
    if home is None:
        raise NonHaltingError(f"input does not halt within t_max={t_max}")
    if mode == "exact":
        i = exact_seq.index_of(home.t)
        cmap = CompressionMap.for_subspace(home.vectors)
        payload: RadicalVec | np.ndarray = compress(cmap, vector)
        codeword = exact_seq.code().codewords[i]
        program = UniversalProgram(dump_spec(spec), n, codeword, payload)
    else:
        delta_q = Fraction(delta)
        if delta_q <= 0:
            raise InvalidParameterError(f"approximate programs need a positive delta, got {delta}")
        seq = halting_time_sequence(spec, n, t_max, "approx", eps0, caps)
        assert seq.eps0 is not None
        if levels is None:
            levels = cascade_depth(n, float(seq.eps0), float(delta_q))
        i = seq.index_of(home.t)
        space = seq.spaces[i]
        assert isinstance(space, ApproxHaltingSpace)
        if space.dim != home.dim:
            raise InvalidParameterError(
                f"approximate space at t={home.t} has dimension {space.dim}, exact space {home.dim}"
            )
        tune = fine_tuning(spec, space, levels, delta_q, caps)
        unit_psi = to_numpy(vector) / np.linalg.norm(to_numpy(vector))
        payload = compress_numeric(CompressionMap.for_subspace(space.vectors), tune.matrix.conj().T @ unit_psi)
        codeword = seq.code().codewords[i]
        program = UniversalProgram(dump_spec(spec), n, codeword, payload, mode, seq.eps0, levels, delta_q)
    logger.info(f"encoded length-{n} input halting at t={home.t}: codeword '{codeword}', {program.payload_qubits} payload qubits")
    return program


def decode_program(
    program: UniversalProgram, delta: Any = 0, t_max: int = 16, caps: ResourceCaps | None = None
) -> QubitString:
    """Recompute halting times up to t_max, match the codeword, decompress and run.

    ``delta == 0`` decodes exactly (exact programs only); otherwise the output is within
    trace distance delta of M(psi), each of decompression, fine tuning and simulation getting delta/3.
    Approximate programs never compute exact halting spaces: the fine-tuning cascade is rebuilt
    from the approximate spaces with the levels and delta recorded in the program.
    """
    caps = resolve_caps(caps)
    spec = parse_spec(program.machine_text)
    seq = halting_time_sequence(spec, program.n, t_max, program.mode, program.eps0, caps)
    code = seq.code()
    if program.codeword not in code.codewords:
        raise DecodeError(f"codeword '{program.codeword}' matches no halting time up to t={t_max}")
    i = code.codewords.index(program.codeword)
    space = seq.spaces[i]
    cmap = CompressionMap.for_subspace(space.vectors)
    labels = strings_of_length(program.n)
    if Fraction(delta) == 0:
        if program.mode != "exact" or not isinstance(program.payload, RadicalVec):
            raise InvalidParameterError("exact decoding needs an exact-mode program")
        direction = decompress(cmap, program.payload, 0)
        assert isinstance(direction, ScaledUnitVector)
        sigma = QubitString.from_ket(dict(zip(labels, direction.direction, strict=True)))
    else:
        amplitudes = decompress(cmap, program.payload, Fraction(delta) / 3)
        assert isinstance(amplitudes, np.ndarray)
        if program.mode == "approx":
            assert isinstance(space, ApproxHaltingSpace)
            planned = program.delta if program.delta is not None else DEFAULT_PROGRAM_DELTA
            amplitudes = fine_tuning(spec, space, program.levels, planned, caps).matrix @ amplitudes
        sigma = QubitString.from_float_ket(dict(zip(labels, amplitudes, strict=True)), program.n)
    logger.debug(f"codeword '{program.codeword}' decodes to halting time {space.t}")
    return read_output(run(spec, sigma, space.t, caps))


# ---------------------------------------------------------------------------
# program files


def dump_program(program: UniversalProgram) -> str:
    parts = [f"[machine]\n{program.machine_text.rstrip()}\n", f"[mode]\n{program.mode}\n", f"[n]\n{program.n}\n"]
    if program.eps0 is not None:
        parts.append(f"[eps0]\n{program.eps0}\n")
    if program.delta is not None:
        parts.append(f"[delta]\n{program.delta}\n")
    parts.append(f"[levels]\n{program.levels}\n")
    parts.append(f"[codeword]\n{program.codeword}\n")
    lines = []
    if isinstance(program.payload, RadicalVec):
        for c, r in zip(program.payload.coefficients, program.payload.radicands, strict=True):
            lines.append(f"radical {c} {r}")
    else:
        for x in program.payload:
            lines.append(f"float {float(x.real)!r} {float(x.imag)!r}")
    parts.append("[payload]\n" + "\n".join(lines) + "\n")
    return "".join(parts)


def _split_sections(text: str) -> dict[str, list[str]]:
    sections: dict[str, list[str]] = {}
    current: str | None = None
    for line in text.splitlines():
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]") and stripped[1:-1] in PROGRAM_SECTIONS:
            current = stripped[1:-1]
            if current in sections:
                raise SpecParseError(f"duplicate [{current}] section")
            sections[current] = []
        elif current is None:
            if stripped:
                raise SpecParseError(f"content before the first section: '{stripped}'")
        else:
            sections[current].append(line)
    return sections


def _single(sections: dict[str, list[str]], name: str, required: bool = True) -> str | None:
    values = [x.strip() for x in sections.get(name, []) if x.strip()]
    if not values:
        if required:
            raise SpecParseError(f"missing [{name}] section")
        return None
    if len(values) > 1:
        raise SpecParseError(f"[{name}] holds more than one value")
    return values[0]


def load_program(source: str | Path) -> UniversalProgram:
    try:
        text = Path(source).read_text(encoding="utf-8") if isinstance(source, Path) else source
    except OSError as e:
        raise SpecParseError(f"cannot read program file {source}: {e}") from e
    sections = _split_sections(text)
    if "machine" not in sections:
        raise SpecParseError("missing [machine] section")
    mode = _single(sections, "mode")
    if mode not in ("exact", "approx"):
        raise SpecParseError(f"unknown mode '{mode}'")
    codeword = _single(sections, "codeword")
    if codeword is None or set(codeword) - {"0", "1"}:
        raise SpecParseError("missing or non-binary [codeword]")
    try:
        n = int(_single(sections, "n") or "")
        levels = int(_single(sections, "levels", required=False) or 0)
        eps_text = _single(sections, "eps0", required=False)
        eps0 = Fraction(eps_text) if eps_text else None
        delta_text = _single(sections, "delta", required=False)
        delta = Fraction(delta_text) if delta_text else None
        coefficients, radicands, floats = [], [], []
        for raw in sections.get("payload", []):
            fields = raw.split()
            if not fields:
                continue
            if fields[0] == "radical" and len(fields) == 3:
                coefficients.append(CRat.parse(fields[1]))
                radicands.append(Fraction(fields[2]))
            elif fields[0] == "float" and len(fields) == 3:
                floats.append(complex(float(fields[1]), float(fields[2])))
            else:
                raise SpecParseError(f"bad payload line '{raw.strip()}'")
    except (ValueError, ZeroDivisionError) as e:
        raise SpecParseError(f"malformed program: {e}") from e
    if coefficients and floats:
        raise SpecParseError("payload mixes radical and float entries")
    payload: RadicalVec | np.ndarray = RadicalVec(tuple(coefficients), tuple(radicands)) if coefficients else np.array(floats)
    if not len(payload):
        raise SpecParseError("empty payload")
    machine_text = "\n".join(sections["machine"]).strip() + "\n"
    parse_spec(machine_text)
    return UniversalProgram(machine_text, n, codeword, payload, mode, eps0, levels, delta)  # type: ignore[arg-type]
