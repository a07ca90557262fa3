"""Qubit strings: density operators on the direct sum of H_0, H_1, ..., H_n.

The ordered basis is {lambda, 0, 1, 00, 01, ...}; a string of length k sits at index 2^k - 1 + int(s, 2).
Matrices are either exact (tuples of CRat) or float (numpy arrays).
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import numpy as np
import scipy.linalg

from .errors import DimensionMismatchError, InvalidParameterError, NonHermitianError, SpecParseError
from .linalg import (
    HERMITIAN_ATOL,
    ONE,
    ZERO,
    CMat,
    CRat,
    is_positive_semidefinite_exact,
    matrix_to_numpy,
    norm_sq,
)

logger = logging.getLogger(__name__)

# Float PSD tolerance
PSD_ATOL = 1e-10


def string_index(s: str) -> int:
    """Position of the classical string ``s`` in the basis {lambda, 0, 1, 00, ...}."""
    if s and set(s) - {"0", "1"}:
        raise SpecParseError(f"not a binary string: '{s}'")
    return (1 << len(s)) - 1 + (int(s, 2) if s else 0)


def index_string(i: int) -> str:
    if i < 0:
        raise InvalidParameterError(f"negative basis index {i}")
    k = (i + 1).bit_length() - 1
    offset = i - ((1 << k) - 1)
    return format(offset, f"0{k}b") if k else ""


def strings_of_length(k: int) -> list[str]:
    return [format(v, f"0{k}b") if k else "" for v in range(1 << k)]


def strings_up_to(n: int) -> list[str]:
    return [s for k in range(n + 1) for s in strings_of_length(k)]


def direct_sum_dim(n: int) -> int:
    return (1 << (n + 1)) - 1


def _is_exact_matrix(matrix: Any) -> bool:
    return not isinstance(matrix, np.ndarray)


@dataclass(frozen=True, eq=False)
class QubitString:
    """A density operator on the direct sum of H_k for k <= max_len."""

    max_len: int
    matrix: CMat | np.ndarray

    def __post_init__(self) -> None:
        size = direct_sum_dim(self.max_len)
        if self.exact:
            rows = tuple(tuple(CRat.of(x) for x in row) for row in self.matrix)
            if len(rows) != size or any(len(r) != size for r in rows):
                raise DimensionMismatchError(f"qubit string of max length {self.max_len} needs a {size}x{size} matrix")
            object.__setattr__(self, "matrix", rows)
            for i in range(size):
                for j in range(i, size):
                    if rows[i][j] != rows[j][i].conjugate():
                        raise NonHermitianError(f"qubit string matrix not hermitian at ({i}, {j})")
            trace = sum((rows[i][i] for i in range(size)), ZERO)
            if trace != 1:
                raise InvalidParameterError(f"qubit string trace is {trace}, not 1")
        else:
            arr = np.asarray(self.matrix, dtype=complex)
            if arr.shape != (size, size):
                raise DimensionMismatchError(f"qubit string of max length {self.max_len} needs shape ({size}, {size})")
            if not np.allclose(arr, arr.conj().T, atol=HERMITIAN_ATOL):
                raise NonHermitianError("qubit string matrix not hermitian")
            if abs(np.trace(arr) - 1) > 1e-9:
                raise InvalidParameterError(f"qubit string trace is {np.trace(arr).real:.12g}, not 1")
            object.__setattr__(self, "matrix", arr)

    # construction

    @classmethod
    def classical(cls, s: str, max_len: int | None = None) -> QubitString:
        n = len(s) if max_len is None else max_len
        if n < len(s):
            raise InvalidParameterError(f"max_len {n} shorter than '{s}'")
        size = direct_sum_dim(n)
        k = string_index(s)
        return cls(n, tuple(tuple(ONE if i == j == k else ZERO for j in range(size)) for i in range(size)))

    @classmethod
    def empty(cls) -> QubitString:
        return cls.classical("")

    @classmethod
    def from_ket(cls, amplitudes: Mapping[str, Any], max_len: int | None = None) -> QubitString:
        """Pure qubit string |v><v| / <v,v> from an (unnormalized) exact ket over classical strings."""
        amps = {s: CRat.of(a) for s, a in amplitudes.items() if CRat.of(a)}
        if not amps:
            raise InvalidParameterError("ket has no nonzero amplitude")
        n = max(len(s) for s in amps) if max_len is None else max_len
        size = direct_sum_dim(n)
        v = [ZERO] * size
        for s, a in amps.items():
            v[string_index(s)] = a
        nsq = norm_sq(v)
        support = [i for i in range(size) if v[i]]
        rows = [[ZERO] * size for _ in range(size)]
        for i in support:
            for j in support:
                rows[i][j] = v[i] * v[j].conjugate() / nsq
        return cls(n, tuple(tuple(r) for r in rows))

    @classmethod
    def from_vector(cls, v: Sequence[Any], n: int, max_len: int | None = None) -> QubitString:
        """Pure string from a vector over the 2^n strings of length n (exact or float)."""
        if len(v) != 1 << n:
            raise DimensionMismatchError(f"vector of length {len(v)} is not in H_{n}")
        if isinstance(v, np.ndarray) and not all(isinstance(x, CRat) for x in v):
            return cls.from_float_ket({s: complex(a) for s, a in zip(strings_of_length(n), v, strict=True)}, max_len)
        return cls.from_ket(dict(zip(strings_of_length(n), v, strict=True)), max_len)

    @classmethod
    def from_float_ket(cls, amplitudes: Mapping[str, complex], max_len: int | None = None) -> QubitString:
        n = max((len(s) for s in amplitudes), default=0) if max_len is None else max_len
        v = np.zeros(direct_sum_dim(n), dtype=complex)
        for s, a in amplitudes.items():
            v[string_index(s)] = a
        norm = np.linalg.norm(v)
        if norm == 0:
            raise InvalidParameterError("ket has no nonzero amplitude")
        v = v / norm
        return cls(n, np.outer(v, v.conj()))

    @classmethod
    def mixture(cls, parts: Iterable[tuple[Any, QubitString]]) -> QubitString:
        """Convex combination; exact when every weight and component is exact."""
        items = list(parts)
        if not items:
            raise InvalidParameterError("empty mixture")
        n = max(sigma.max_len for _, sigma in items)
        padded = [(w, sigma.padded(n)) for w, sigma in items]
        if all(sigma.exact and not isinstance(w, float) for w, sigma in padded):
            size = direct_sum_dim(n)
            rows = [[ZERO] * size for _ in range(size)]
            for w, sigma in padded:
                weight = CRat.of(w)
                for i in range(size):
                    for j in range(size):
                        if sigma.matrix[i][j]:
                            rows[i][j] = rows[i][j] + weight * sigma.matrix[i][j]
            return cls(n, tuple(tuple(r) for r in rows))
        total = sum(float(w) * sigma.to_numpy() for w, sigma in padded)
        return cls(n, total)

    # views

    @property
    def exact(self) -> bool:
        return _is_exact_matrix(self.matrix)

    @property
    def dim(self) -> int:
        return direct_sum_dim(self.max_len)

    def to_numpy(self) -> np.ndarray:
        return matrix_to_numpy(self.matrix)

    def entry(self, i: int, j: int) -> Any:
        return self.matrix[i][j]

    def diagonal(self) -> list[Any]:
        if self.exact:
            return [self.matrix[i][i].re for i in range(self.dim)]
        return [float(self.matrix[i, i].real) for i in range(self.dim)]

    def padded(self, n: int) -> QubitString:
        """The same state viewed inside the direct sum up to length ``n``."""
        if n == self.max_len:
            return self
        if n < self.max_len:
            raise InvalidParameterError(f"cannot pad max length {self.max_len} down to {n}")
        size, old = direct_sum_dim(n), self.dim
        if self.exact:
            rows = [[self.matrix[i][j] if i < old and j < old else ZERO for j in range(size)] for i in range(size)]
            return QubitString(n, tuple(tuple(r) for r in rows))
        arr = np.zeros((size, size), dtype=complex)
        arr[:old, :old] = self.matrix
        return QubitString(n, arr)

    def to_float(self) -> QubitString:
        return self if not self.exact else QubitString(self.max_len, self.to_numpy())

    def validate(self) -> None:
        """Full positivity check (exact pivoting in exact mode, eigenvalues in float mode)."""
        if self.exact:
            if not is_positive_semidefinite_exact(self.matrix):
                raise InvalidParameterError("qubit string matrix is not positive semidefinite")
            return
        eigenvalues = scipy.linalg.eigvalsh(self.matrix)
        if eigenvalues.min() < -PSD_ATOL:
            raise InvalidParameterError(f"qubit string has eigenvalue {eigenvalues.min():.3g}")

    def equals(self, other: QubitString) -> bool:
        """Exact equality after padding to a common length (exact strings only)."""
        n = max(self.max_len, other.max_len)
        a, b = self.padded(n), other.padded(n)
        if a.exact and b.exact:
            return a.matrix == b.matrix
        return bool(np.allclose(a.to_numpy(), b.to_numpy(), atol=1e-12))

    def label(self) -> str:
        """Classical label when the state is a single basis string, else a summary."""
        diag = self.diagonal()
        support = [i for i, x in enumerate(diag) if x]
        if len(support) == 1 and (diag[support[0]] == 1 if self.exact else abs(diag[support[0]] - 1) < 1e-12):
            return index_string(support[0]) or "λ"
        return f"<mixed/superposed over {len(support)} strings>"


def lengths(sigma: QubitString) -> tuple[int, Any]:
    """(base length, average length) of a qubit string."""
    diag = sigma.diagonal()
    base = 0
    average: Any = Fraction(0) if sigma.exact else 0.0
    tol = 0 if sigma.exact else 1e-12
    for i, p in enumerate(diag):
        k = len(index_string(i))
        if abs(p) > tol:
            base = max(base, k)
        average += k * p
    return base, average


def truncate_prefix(sigma: QubitString, k: int) -> QubitString:
    """Partial trace onto the first ``k`` cells, read back as a qubit string."""
    if k < 0:
        raise InvalidParameterError(f"prefix length must be >= 0, got {k}")
    base, _ = lengths(sigma)
    if base <= k:
        return sigma
    by_tail: dict[str, list[tuple[int, str]]] = {}
    for i in range(sigma.dim):
        s = index_string(i)
        by_tail.setdefault(s[k:], []).append((i, s[:k]))
    size = direct_sum_dim(k)
    if sigma.exact:
        rows = [[ZERO] * size for _ in range(size)]
        for group in by_tail.values():
            for i, a in group:
                for j, b in group:
                    x = sigma.matrix[i][j]
                    if x:
                        ia, jb = string_index(a), string_index(b)
                        rows[ia][jb] = rows[ia][jb] + x
        return QubitString(k, tuple(tuple(r) for r in rows))
    arr = np.zeros((size, size), dtype=complex)
    for group in by_tail.values():
        idx = [i for i, _ in group]
        target = [string_index(a) for _, a in group]
        arr[np.ix_(target, target)] += sigma.matrix[np.ix_(idx, idx)]
    return QubitString(k, arr)


def truncation_bound(average_length: float, k: int) -> float:
    """2 sqrt(avg / (k + 1)), the trace-distance bound of truncate_prefix."""
    return 2 * math.sqrt(float(average_length) / (k + 1))


def tensor_classical_prefix(prefix: str, sigma: QubitString) -> QubitString:
    """|prefix><prefix| (x) sigma as a qubit string."""
    n = len(prefix) + sigma.max_len
    size = direct_sum_dim(n)
    src = [string_index(prefix + index_string(i)) for i in range(sigma.dim)]
    if sigma.exact:
        rows = [[ZERO] * size for _ in range(size)]
        for i, a in enumerate(src):
            for j, b in enumerate(src):
                rows[a][b] = sigma.matrix[i][j]
        return QubitString(n, tuple(tuple(r) for r in rows))
    arr = np.zeros((size, size), dtype=complex)
    arr[np.ix_(src, src)] = sigma.matrix
    return QubitString(n, arr)


def parse_ket(text: str) -> dict[str, CRat]:
    """Parse ``amp:bits;amp:bits`` pure inputs, e.g. ``1:0;1:11``. A bare ``01`` means amplitude 1."""
    out: dict[str, CRat] = {}
    for item in text.split(";"):
        item = item.strip()
        if not item:
            continue
        amp, bits = item.split(":", 1) if ":" in item else ("1", item)
        bits = bits.strip()
        if bits in ("λ", "-"):
            bits = ""
        string_index(bits)
        out[bits] = out.get(bits, ZERO) + CRat.parse(amp)
    if not out:
        raise SpecParseError(f"empty ket '{text}'")
    return out
