"""Classical prefix codes and quantum standard (de)compression.

Usage:
    >>> from qkolmo.coding import blind_prefix_code, self_delim_encode
    >>> self_delim_encode(5)
    '110101'
    >>> blind_prefix_code([1, 2, 2]).codewords
    ('0', '10', '11')
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from .errors import DecodeError, InvalidParameterError, KraftViolationError, NotInSubspaceError, SpecParseError
from .linalg import (
    CRat,
    RadicalVec,
    ScaledUnitVector,
    approx_to_digits,
    gram_schmidt,
    inner,
    norm_sq,
    project_onto,
    rank_and_membership,
    rational_sqrt,
    scale,
    to_numpy,
    unit,
)
from .qubits import QubitString, direct_sum_dim, index_string, string_index

logger = logging.getLogger(__name__)

# Double precision keeps this many binary digits
MAX_FLOAT_DIGITS = 52


def self_delim_encode(k: int) -> str:
    """s_k = 1^floor(log k) 0 bin(k), of length 2 floor(log k) + 2."""
    if k < 1:
        raise InvalidParameterError(f"self-delimiting code needs k >= 1, got {k}")
    return "1" * (k.bit_length() - 1) + "0" + format(k, "b")


def self_delim_decode(stream: str) -> tuple[int, str]:
    """Split a stream into (k, rest) for a leading self-delimited integer."""
    ones = 0
    while ones < len(stream) and stream[ones] == "1":
        ones += 1
    if ones >= len(stream) or stream[ones] != "0":
        raise DecodeError("self-delimited integer: missing terminating 0")
    start = ones + 1
    digits = stream[start : start + ones + 1]
    if len(digits) < ones + 1 or set(digits) - {"0", "1"}:
        raise DecodeError(f"self-delimited integer: expected {ones + 1} binary digits")
    if digits[0] != "1":
        raise DecodeError("self-delimited integer: binary part has a leading zero")
    return int(digits, 2), stream[start + ones + 1 :]


def kraft_sum(lengths: Sequence[int]) -> Fraction:
    if any(ell < 0 for ell in lengths):
        raise InvalidParameterError("codeword lengths must be non-negative")
    return sum((Fraction(1, 1 << ell) for ell in lengths), Fraction(0))


def kraft_check(lengths: Sequence[int]) -> bool:
    return kraft_sum(lengths) <= 1


def is_prefix_free(codewords: Sequence[str]) -> bool:
    ordered = sorted(codewords)
    return all(not b.startswith(a) for a, b in zip(ordered, ordered[1:], strict=False))


@dataclass(frozen=True)
class PrefixCode:
    """Codewords assigned online, in order of arrival."""

    codewords: tuple[str, ...] = ()

    @property
    def kraft_mass(self) -> Fraction:
        return kraft_sum([len(c) for c in self.codewords])

    def extend(self, next_len: int) -> PrefixCode:
        return blind_prefix_extend(self, next_len)

    def __len__(self) -> int:
        return len(self.codewords)


def blind_prefix_extend(code: PrefixCode, next_len: int) -> PrefixCode:
    """Append the lexicographically first length-``next_len`` word that is neither prefix nor extension of a codeword."""
    if next_len < 0:
        raise InvalidParameterError(f"negative codeword length {next_len}")
    if code.kraft_mass + Fraction(1, 1 << next_len) > 1:
        raise KraftViolationError(f"no room for a codeword of length {next_len} (mass {code.kraft_mass})")
    value, limit = 0, 1 << next_len
    while value < limit:
        candidate = format(value, f"0{next_len}b") if next_len else ""
        blocker = next((c for c in code.codewords if len(c) <= next_len and candidate.startswith(c)), None)
        if blocker is not None:
            # skip every word below the blocking codeword
            value = (int(blocker, 2) + 1 << (next_len - len(blocker))) if blocker else limit
            continue
        if any(len(c) > next_len and c.startswith(candidate) for c in code.codewords):
            value += 1
            continue
        return PrefixCode((*code.codewords, candidate))
    raise KraftViolationError(f"no free codeword of length {next_len}")


def blind_prefix_code(lengths: Sequence[int]) -> PrefixCode:
    code = PrefixCode()
    for ell in lengths:
        code = code.extend(ell)
    return code


def dump_codewords(code: PrefixCode | Sequence[str]) -> str:
    words = code.codewords if isinstance(code, PrefixCode) else tuple(code)
    return "".join(f"{w}\n" for w in words)


def load_codewords(source: str | Path) -> PrefixCode:
    try:
        text = Path(source).read_text(encoding="utf-8") if isinstance(source, Path) else source
    except OSError as e:
        raise SpecParseError(f"cannot read codeword file {source}: {e}") from e
    words = []
    for lineno, line in enumerate(text.splitlines(), 1):
        word = line.strip()
        if set(word) - {"0", "1"}:
            raise SpecParseError(f"line {lineno}: codeword '{word}' is not binary")
        words.append(word)
    if not is_prefix_free(words):
        raise SpecParseError("codeword list is not prefix-free")
    return PrefixCode(tuple(words))


# ---------------------------------------------------------------------------
# standard compression


def ceil_log2(n: int) -> int:
    if n < 1:
        raise InvalidParameterError(f"ceil(log2) of {n}")
    return (n - 1).bit_length()


def standard_basis(vectors: Sequence[Sequence[Any]]) -> list[ScaledUnitVector]:
    """Gram-Schmidt of P_U e_1, P_U e_2, ... with primitive (coprime integer) directions."""
    if not vectors:
        raise InvalidParameterError("standard basis of an empty span")
    dim = len(vectors[0])
    orthogonal = gram_schmidt(vectors)
    if not orthogonal:
        raise InvalidParameterError("standard basis of the zero subspace")
    projected = [project_onto(orthogonal, unit(i, dim)) for i in range(dim)]
    return [u.primitive() for u in gram_schmidt(projected)]


@dataclass(frozen=True)
class CompressionMap:
    """C_U: standard basis of U onto the first computational basis vectors of ceil(log N) qubits."""

    basis: tuple[ScaledUnitVector, ...]
    n: int

    @classmethod
    def for_subspace(cls, vectors: Sequence[Sequence[Any]]) -> CompressionMap:
        if not vectors:
            raise InvalidParameterError("compression map of an empty subspace")
        dim = len(vectors[0])
        n = dim.bit_length() - 1
        if 1 << n != dim:
            raise InvalidParameterError(f"ambient dimension {dim} is not a power of two")
        return cls(tuple(standard_basis(vectors)), n)

    @property
    def source_dim(self) -> int:
        return len(self.basis)

    @property
    def target_qubits(self) -> int:
        return ceil_log2(self.source_dim)

    def contains(self, v: Sequence[Any]) -> bool:
        return rank_and_membership([u.direction for u in self.basis], v)[1]


def _direction_of(psi: ScaledUnitVector | Sequence[Any]) -> ScaledUnitVector:
    return psi if isinstance(psi, ScaledUnitVector) else ScaledUnitVector.from_vector(psi)


def compress(cmap: CompressionMap, psi: ScaledUnitVector | Sequence[Any]) -> RadicalVec:
    """Exact coefficients of the unit vector ``psi`` in the standard basis, padded to 2^k entries."""
    v = _direction_of(psi)
    if v.dim != 1 << cmap.n:
        raise NotInSubspaceError(f"vector of dimension {v.dim} is not in H_{cmap.n}")
    if not cmap.contains(v.direction):
        raise NotInSubspaceError("vector is not in the compressed subspace")
    coefficients = [inner(u.direction, v.direction) for u in cmap.basis]
    radicands = [Fraction(1) / (u.norm_sq * v.norm_sq) for u in cmap.basis]
    pad = (1 << cmap.target_qubits) - len(coefficients)
    return RadicalVec(tuple(coefficients) + (CRat(),) * pad, tuple(radicands) + (Fraction(1),) * pad)


def compress_numeric(cmap: CompressionMap, psi: np.ndarray) -> np.ndarray:
    """Float compression <u_i, psi> for psi (approximately) inside U."""
    psi = np.asarray(psi, dtype=complex)
    out = np.zeros(1 << cmap.target_qubits, dtype=complex)
    for i, u in enumerate(cmap.basis):
        out[i] = np.vdot(u.to_numpy(), psi)
    return out


def decompression_unitary(cmap: CompressionMap) -> list[ScaledUnitVector]:
    """Exact orthonormal basis of H_n: the standard basis followed by completed computational vectors."""
    dim = 1 << cmap.n
    completed = gram_schmidt([u.direction for u in cmap.basis] + [unit(i, dim) for i in range(dim)])
    return [u.primitive() for u in completed]


def decompression_precision_log2(n: int, delta: float) -> float:
    """log2 of the entry accuracy delta / (2^{n+1} (10 sqrt(2^n))^{2^n})."""
    return math.log2(delta) - (n + 1) - (1 << n) * math.log2(10 * math.sqrt(1 << n))


def decompress(cmap: CompressionMap, chi: RadicalVec | np.ndarray, delta: Any = 0) -> ScaledUnitVector | np.ndarray:
    """Inverse of compress. ``delta == 0`` is the exact mode; otherwise a float vector within delta."""
    if len(chi) != 1 << cmap.target_qubits:
        raise DecodeError(f"payload has {len(chi)} entries, expected {1 << cmap.target_qubits}")
    if delta == 0:
        if not isinstance(chi, RadicalVec):
            raise InvalidParameterError("exact decompression needs an exact payload")
        return _decompress_exact(cmap, chi)
    if delta < 0:
        raise InvalidParameterError(f"negative decompression accuracy {delta}")
    amplitudes = chi.to_numpy() if isinstance(chi, RadicalVec) else np.asarray(chi, dtype=complex)
    digits = math.ceil(-decompression_precision_log2(cmap.n, float(delta)))
    if digits > MAX_FLOAT_DIGITS:
        logger.debug(f"decompression wants {digits} binary digits; using {MAX_FLOAT_DIGITS}")
        digits = MAX_FLOAT_DIGITS
    columns = []
    for u in decompression_unitary(cmap)[: len(amplitudes)]:
        columns.append(approx_to_digits(u.direction, digits) / math.sqrt(u.norm_sq))
    if len(columns) < len(amplitudes):
        raise DecodeError("payload register is larger than the ambient space")
    return np.column_stack(columns) @ amplitudes


def _decompress_exact(cmap: CompressionMap, chi: RadicalVec) -> ScaledUnitVector:
    tail = chi.coefficients[cmap.source_dim :]
    if any(tail):
        raise DecodeError("payload has weight outside the compressed subspace")
    terms = [(c, r, u) for c, r, u in zip(chi.coefficients, chi.radicands, cmap.basis, strict=False) if c]
    if not terms:
        raise DecodeError("zero payload")
    # psi = sum c_i sqrt(r_i) d_i / sqrt(s_i); pull out a common sqrt(r_0 / s_0)
    c0, r0, u0 = terms[0]
    reference = r0 / u0.norm_sq
    direction = [CRat()] * (1 << cmap.n)
    for c, r, u in terms:
        ratio = rational_sqrt((r / u.norm_sq) / reference)
        if ratio is None:
            raise DecodeError("payload radicands do not share a common square class")
        direction = [a + b for a, b in zip(direction, scale(u.direction, c * ratio), strict=True)]
    return ScaledUnitVector.from_vector(direction).primitive()


def embed_fixed_length(sigma: QubitString) -> QubitString:
    """Place the basis string with direct-sum index i onto the length-(max_len + 1) string of value i."""
    n = sigma.max_len
    targets = [string_index(format(i, f"0{n + 1}b")) for i in range(sigma.dim)]
    size = direct_sum_dim(n + 1)
    if sigma.exact:
        rows = [[CRat()] * size for _ in range(size)]
        for i, a in enumerate(targets):
            for j, b in enumerate(targets):
                rows[a][b] = sigma.matrix[i][j]
        return QubitString(n + 1, tuple(tuple(r) for r in rows))
    arr = np.zeros((size, size), dtype=complex)
    arr[np.ix_(targets, targets)] = sigma.matrix
    return QubitString(n + 1, arr)


def unembed_fixed_length(tau: QubitString) -> QubitString:
    """Inverse of embed_fixed_length; rejects weight on short strings or on 11...1."""
    m = tau.max_len
    if m < 1:
        raise DecodeError("a fixed-length embedding has length at least 1")
    diag = tau.diagonal()
    outside = [i for i in range(tau.dim) if len(index_string(i)) != m or i == tau.dim - 1]
    tol = 0 if tau.exact else 1e-12
    if any(abs(diag[i]) > tol for i in outside):
        raise DecodeError("state lies outside the fixed-length embedding")
    sources = [string_index(format(v, f"0{m}b")) for v in range((1 << m) - 1)]
    if tau.exact:
        rows = tuple(tuple(tau.matrix[a][b] for b in sources) for a in sources)
        return QubitString(m - 1, rows)
    return QubitString(m - 1, tau.matrix[np.ix_(sources, sources)])


def isometry_defect(cmap: CompressionMap) -> int:
    """Number of nonzero Gram off-diagonal entries of the standard basis (0 for a valid map)."""
    dirs = [u.direction for u in cmap.basis]
    return sum(1 for i in range(len(dirs)) for j in range(i + 1, len(dirs)) if inner(dirs[i], dirs[j]))


def exact_vector_numpy(v: ScaledUnitVector | Sequence[Any]) -> np.ndarray:
    return v.to_numpy() if isinstance(v, ScaledUnitVector) else to_numpy(v) / math.sqrt(norm_sq(v))
