"""Exact rational-complex linear algebra plus float spectral utilities.

Exact values use :class:`fractions.Fraction` for the real and imaginary parts of every entry
(:class:`CRat`), so ranks, kernels and orthogonality are decided with literal zero tests.
Spectral quantities (trace distance, entropies, norms) are computed on numpy arrays with
scipy's hermitian eigensolvers.

Usage:
    >>> from qkolmo.linalg import gram_schmidt, vec
    >>> [u.norm_sq for u in gram_schmidt([vec(1, 1), vec(1, 0)])]
    [Fraction(2, 1), Fraction(1, 2)]
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational as _RationalABC
from typing import Any, Union

import numpy as np
import scipy.linalg

from .errors import DimensionMismatchError, InvalidParameterError, NonHermitianError, SpecParseError

logger = logging.getLogger(__name__)

Rational = Fraction

# Hermiticity tolerance for float matrices
HERMITIAN_ATOL = 1e-10
# Eigenvalues below this are treated as zero in entropies
ENTROPY_CUTOFF = 1e-15


def _as_fraction(value: Any) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, _RationalABC)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as e:
            raise SpecParseError(f"not a rational number: '{value}'") from e
    raise TypeError(f"cannot convert {type(value).__name__} to an exact rational")


@dataclass(frozen=True, slots=True)
class CRat:
    """A Gaussian rational ``re + i*im``.

    Arithmetic with ints, Fractions and other CRats stays exact. Mixing with ``float`` or
    ``complex`` falls back to Python complex numbers.
    """

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "re", _as_fraction(self.re))
        object.__setattr__(self, "im", _as_fraction(self.im))

    @classmethod
    def of(cls, value: Any) -> CRat:
        """Coerce ints, Fractions, numeric strings and CRats to a CRat."""
        if isinstance(value, CRat):
            return value
        if isinstance(value, str):
            return cls.parse(value)
        return cls(_as_fraction(value))

    @classmethod
    def parse(cls, text: str) -> CRat:
        """Parse ``a/b+c/di`` style amplitudes: ``1``, ``-i``, ``1/2i``, ``3/5-4/5i``, ``0/1-1/2i``."""
        raw = text.strip().replace(" ", "")
        if not raw:
            raise SpecParseError("empty amplitude")
        if not raw.endswith("i"):
            return cls(_as_fraction(raw))
        body = raw[:-1]
        split = max(body.rfind("+"), body.rfind("-"))
        if split > 0:
            re_part, im_part = body[:split], body[split:]
        else:
            re_part, im_part = "0", body
        if im_part in ("", "+"):
            im_part = "1"
        elif im_part == "-":
            im_part = "-1"
        return cls(_as_fraction(re_part), _as_fraction(im_part))

    # arithmetic

    def _coerce(self, other: Any) -> CRat | complex | None:
        if isinstance(other, CRat):
            return other
        if isinstance(other, (int, Fraction)):
            return CRat(Fraction(other))
        if isinstance(other, (float, complex, np.number)):
            return complex(other)
        return None

    def __add__(self, other: Any) -> Any:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if isinstance(o, complex):
            return complex(self) + o
        return CRat(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other: Any) -> Any:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if isinstance(o, complex):
            return complex(self) - o
        return CRat(self.re - o.re, self.im - o.im)

    def __rsub__(self, other: Any) -> Any:
        return (-self) + other

    def __mul__(self, other: Any) -> Any:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if isinstance(o, complex):
            return complex(self) * o
        return CRat(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other: Any) -> Any:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if isinstance(o, complex):
            return complex(self) / o
        d = o.abs2()
        if d == 0:
            raise ZeroDivisionError("division by exact zero")
        return self * CRat(o.re / d, -o.im / d)

    def __rtruediv__(self, other: Any) -> Any:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o / self if isinstance(o, CRat) else o / complex(self)

    def __neg__(self) -> CRat:
        return CRat(-self.re, -self.im)

    def __eq__(self, other: object) -> bool:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if isinstance(o, complex):
            return complex(self) == o
        return self.re == o.re and self.im == o.im

    def __hash__(self) -> int:
        return hash((self.re, self.im))

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def conjugate(self) -> CRat:
        return CRat(self.re, -self.im)

    def abs2(self) -> Fraction:
        """Exact squared modulus."""
        return self.re * self.re + self.im * self.im

    def to_sympy(self) -> Any:
        import sympy as sp

        return sp.Rational(self.re.numerator, self.re.denominator) + sp.I * sp.Rational(
            self.im.numerator, self.im.denominator
        )

    def __str__(self) -> str:
        sign = "-" if self.im < 0 else "+"
        im = abs(self.im)
        return f"{self.re.numerator}/{self.re.denominator}{sign}{im.numerator}/{im.denominator}i"

    def __repr__(self) -> str:
        if self.im == 0:
            return f"CRat({self.re})"
        return f"CRat({self.re}, {self.im})"


ZERO = CRat()
ONE = CRat(Fraction(1))

CVec = tuple[CRat, ...]
CMat = tuple[tuple[CRat, ...], ...]
Scalar = Union[CRat, complex, Any]


def vec(*entries: Any) -> CVec:
    """Build an exact vector: ``vec(1, "1/2", CRat(0, 1))``."""
    return tuple(CRat.of(e) for e in entries)


def unit(index: int, dim: int) -> CVec:
    """Computational basis vector e_index of C^dim."""
    return tuple(ONE if i == index else ZERO for i in range(dim))


def conj(x: Any) -> Any:
    return x.conjugate()


def is_zero(x: Any) -> bool:
    """Literal zero test; sympy expressions are expanded first."""
    if isinstance(x, (CRat, int, Fraction, complex, float)):
        return x == 0
    import sympy as sp

    return bool(sp.expand(x) == 0)


def _check_same_dim(vectors: Sequence[Sequence[Any]]) -> int:
    dims = {len(v) for v in vectors}
    if len(dims) > 1:
        raise DimensionMismatchError(f"vectors of differing dimensions {sorted(dims)}")
    return dims.pop() if dims else 0


def inner(a: Sequence[Any], b: Sequence[Any]) -> Any:
    """<a, b>, conjugate-linear in the first argument."""
    if len(a) != len(b):
        raise DimensionMismatchError(f"inner product of dimensions {len(a)} and {len(b)}")
    total: Any = ZERO
    for x, y in zip(a, b, strict=True):
        if x and y:
            total = total + conj(x) * y
    return total


def norm_sq(v: Sequence[CRat]) -> Fraction:
    return sum((x.abs2() for x in v), Fraction(0))


def scale(v: Sequence[Any], c: Any) -> tuple[Any, ...]:
    return tuple(x * c for x in v)


def add(a: Sequence[Any], b: Sequence[Any]) -> tuple[Any, ...]:
    if len(a) != len(b):
        raise DimensionMismatchError(f"sum of dimensions {len(a)} and {len(b)}")
    return tuple(x + y for x, y in zip(a, b, strict=True))


def sub(a: Sequence[Any], b: Sequence[Any]) -> tuple[Any, ...]:
    return add(a, scale(b, -1))


def is_zero_vec(v: Sequence[Any]) -> bool:
    return all(is_zero(x) for x in v)


def rational_sqrt(q: Fraction) -> Fraction | None:
    """Exact square root of a non-negative rational, or None when it is irrational."""
    if q < 0:
        return None
    num, den = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if num * num == q.numerator and den * den == q.denominator:
        return Fraction(num, den)
    return None


@dataclass(frozen=True)
class ScaledUnitVector:
    """The unit vector ``direction / sqrt(norm_sq)`` kept without irrational entries."""

    direction: CVec
    norm_sq: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "direction", tuple(CRat.of(x) for x in self.direction))
        object.__setattr__(self, "norm_sq", _as_fraction(self.norm_sq))
        if self.norm_sq <= 0:
            raise InvalidParameterError("scaled unit vector needs a positive squared norm")
        actual = norm_sq(self.direction)
        if actual != self.norm_sq:
            raise InvalidParameterError(f"norm_sq {self.norm_sq} does not match direction ({actual})")

    @classmethod
    def from_vector(cls, v: Sequence[Any]) -> ScaledUnitVector:
        direction = tuple(CRat.of(x) for x in v)
        return cls(direction, norm_sq(direction))

    @property
    def dim(self) -> int:
        return len(self.direction)

    def primitive(self) -> ScaledUnitVector:
        """Same unit vector with the direction rescaled to coprime Gaussian integers."""
        denominators = [x.re.denominator for x in self.direction] + [x.im.denominator for x in self.direction]
        lcm = math.lcm(*denominators) if denominators else 1
        ints = [int(x.re * lcm) for x in self.direction] + [int(x.im * lcm) for x in self.direction]
        g = math.gcd(*ints) or 1
        factor = Fraction(lcm, g)
        return ScaledUnitVector(scale(self.direction, factor), self.norm_sq * factor * factor)

    def equivalent(self, other: ScaledUnitVector) -> bool:
        """True when both represent the same unit vector (directions differ by a positive factor)."""
        return self.primitive().direction == other.primitive().direction

    def to_numpy(self) -> np.ndarray:
        return to_numpy(self.direction) / math.sqrt(self.norm_sq)

    def __str__(self) -> str:
        return f"nsq {self.norm_sq} : " + ", ".join(str(x) for x in self.direction)


@dataclass(frozen=True)
class RadicalVec:
    """A vector with entries ``coefficients[i] * sqrt(radicands[i])``."""

    coefficients: CVec
    radicands: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        if len(self.coefficients) != len(self.radicands):
            raise DimensionMismatchError("coefficient and radicand counts differ")
        if any(r <= 0 for r in self.radicands):
            raise InvalidParameterError("radicands must be positive")

    def __len__(self) -> int:
        return len(self.coefficients)

    def norm_sq(self) -> Fraction:
        return sum((c.abs2() * r for c, r in zip(self.coefficients, self.radicands, strict=True)), Fraction(0))

    def to_numpy(self) -> np.ndarray:
        return np.array(
            [complex(c) * math.sqrt(r) for c, r in zip(self.coefficients, self.radicands, strict=True)],
            dtype=complex,
        )


# ---------------------------------------------------------------------------
# elimination


class Echelon:
    """Incrementally built row echelon form over exact scalars.

    Rows are stored sparsely ({column: value}) with a unit pivot at their smallest column.
    """

    def __init__(self, ncols: int):
        self.ncols = ncols
        self._rows: dict[int, dict[int, Any]] = {}

    @property
    def rank(self) -> int:
        return len(self._rows)

    def copy(self) -> Echelon:
        other = Echelon(self.ncols)
        other._rows = {p: dict(r) for p, r in self._rows.items()}
        return other

    @staticmethod
    def _sparse(row: Sequence[Any] | dict[int, Any]) -> dict[int, Any]:
        items = row.items() if isinstance(row, dict) else enumerate(row)
        return {j: x for j, x in items if not is_zero(x)}

    def reduce(self, row: Sequence[Any] | dict[int, Any]) -> dict[int, Any]:
        """Residual of ``row`` after eliminating every stored pivot."""
        residual = self._sparse(row)
        if not isinstance(row, dict) and len(row) != self.ncols:
            raise DimensionMismatchError(f"row of length {len(row)} in a {self.ncols}-column system")
        for pivot in sorted(self._rows):
            c = residual.get(pivot)
            if c is None:
                continue
            for j, x in self._rows[pivot].items():
                value = residual.get(j, ZERO) - c * x
                if is_zero(value):
                    residual.pop(j, None)
                else:
                    residual[j] = value
        return residual

    def add(self, row: Sequence[Any] | dict[int, Any]) -> bool:
        """Insert ``row``; returns False when it was already in the row span."""
        residual = self.reduce(row)
        if not residual:
            return False
        pivot = min(residual)
        p = residual[pivot]
        self._rows[pivot] = {j: x / p for j, x in residual.items()}
        return True

    def contains(self, row: Sequence[Any] | dict[int, Any]) -> bool:
        return not self.reduce(row)

    def kernel(self) -> list[CVec]:
        """Basis of {x : r.x = 0 for every stored row r}, one vector per free column."""
        pivots = sorted(self._rows)
        rref = {p: dict(r) for p, r in self._rows.items()}
        for p in reversed(pivots):
            for q in pivots:
                if q >= p:
                    break
                c = rref[q].get(p)
                if c is None:
                    continue
                for j, x in rref[p].items():
                    value = rref[q].get(j, ZERO) - c * x
                    if is_zero(value):
                        rref[q].pop(j, None)
                    else:
                        rref[q][j] = value
        pivot_set = set(pivots)
        basis: list[CVec] = []
        for free in range(self.ncols):
            if free in pivot_set:
                continue
            entries = [ZERO] * self.ncols
            entries[free] = ONE
            for p in pivots:
                c = rref[p].get(free)
                if c is not None:
                    entries[p] = -c
            basis.append(tuple(entries))
        return basis


def rank_and_membership(basis: Sequence[Sequence[Any]], candidate: Sequence[Any]) -> tuple[int, bool]:
    """Exact rank of ``basis`` and whether ``candidate`` lies in its span."""
    dim = _check_same_dim([*basis, candidate])
    echelon = Echelon(dim)
    for v in basis:
        echelon.add(v)
    return echelon.rank, echelon.contains(candidate)


def rank(vectors: Sequence[Sequence[Any]]) -> int:
    if not vectors:
        return 0
    echelon = Echelon(_check_same_dim(vectors))
    for v in vectors:
        echelon.add(v)
    return echelon.rank


def kernel(rows: Iterable[Sequence[Any]], dim: int) -> list[CVec]:
    """Exact null space of the matrix with the given rows."""
    echelon = Echelon(dim)
    for row in rows:
        if len(row) != dim:
            raise DimensionMismatchError(f"row of length {len(row)}, expected {dim}")
        echelon.add(row)
        if echelon.rank == dim:
            return []
    return echelon.kernel()


def gram_schmidt(vectors: Sequence[Sequence[Any]]) -> list[ScaledUnitVector]:
    """Exact Gram-Schmidt in input order; null vectors are dropped."""
    _check_same_dim(vectors)
    out: list[ScaledUnitVector] = []
    for v in vectors:
        w: tuple[Any, ...] = tuple(CRat.of(x) for x in v)
        for u in out:
            c = inner(u.direction, w)
            if c:
                w = sub(w, scale(u.direction, c / u.norm_sq))
        if not is_zero_vec(w):
            out.append(ScaledUnitVector(w, norm_sq(w)))
    return out


def project_onto(basis: Sequence[ScaledUnitVector], v: Sequence[Any]) -> tuple[Any, ...]:
    """P_U v for U spanned by the pairwise orthogonal ``basis``."""
    result: tuple[Any, ...] = tuple(ZERO for _ in v)
    for u in basis:
        c = inner(u.direction, v)
        if c:
            result = add(result, scale(u.direction, c / u.norm_sq))
    return result


def is_positive_semidefinite_exact(matrix: Sequence[Sequence[CRat]]) -> bool:
    """Exact PSD test for a hermitian matrix by symmetric pivoting on the diagonal."""
    m = [list(row) for row in matrix]
    while m:
        size = len(m)
        diag = [m[i][i].re for i in range(size)]
        if any(d < 0 for d in diag):
            return False
        pivot = next((i for i in range(size) if diag[i] > 0), None)
        if pivot is None:
            return all(not m[i][j] for i in range(size) for j in range(size))
        p = m[pivot][pivot]
        col = [m[i][pivot] for i in range(size)]
        m = [
            [m[i][j] - col[i] * col[j].conjugate() / p for j in range(size) if j != pivot]
            for i in range(size)
            if i != pivot
        ]
    return True


# ---------------------------------------------------------------------------
# precision-controlled views


def dyadic_round(x: Fraction, digits: int) -> Fraction:
    """Nearest multiple of 2^-digits (error at most 2^-(digits+1))."""
    scale_ = 1 << digits
    return Fraction(round(x * scale_), scale_)


def approx_to_digits(v: Sequence[Any], digits: int) -> np.ndarray:
    """Float rendering of ``v`` with every real and imaginary part within 2^-digits."""
    if digits < 1:
        raise InvalidParameterError(f"digits must be positive, got {digits}")
    if digits > 52:
        logger.debug(f"{digits} binary digits requested; the double view keeps 52")
    out = np.empty(len(v), dtype=complex)
    for i, x in enumerate(v):
        x = CRat.of(x)
        out[i] = complex(float(dyadic_round(x.re, digits)), float(dyadic_round(x.im, digits)))
    return out


def to_numpy(v: Sequence[Any]) -> np.ndarray:
    return np.array([complex(x) for x in v], dtype=complex)


def matrix_to_numpy(m: Sequence[Sequence[Any]] | np.ndarray) -> np.ndarray:
    if isinstance(m, np.ndarray):
        return m.astype(complex)
    return np.array([[complex(x) for x in row] for row in m], dtype=complex)


def outer(u: Sequence[Any], v: Sequence[Any]) -> CMat:
    """Exact |u><v|."""
    return tuple(tuple(a * conj(b) for b in v) for a in u)


def _hermitian_array(m: Sequence[Sequence[Any]] | np.ndarray, what: str) -> np.ndarray:
    if isinstance(m, np.ndarray):
        arr = m.astype(complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DimensionMismatchError(f"{what} is not square: {arr.shape}")
        if not np.allclose(arr, arr.conj().T, atol=HERMITIAN_ATOL):
            raise NonHermitianError(f"{what} is not hermitian")
        return arr
    size = len(m)
    if any(len(row) != size for row in m):
        raise DimensionMismatchError(f"{what} is not square")
    for i in range(size):
        for j in range(i, size):
            if m[i][j] != conj(m[j][i]):
                raise NonHermitianError(f"{what} is not hermitian at ({i}, {j})")
    return matrix_to_numpy(m)


def trace_distance(rho: Any, sigma: Any) -> float:
    """(1/2) * sum of |eigenvalues| of rho - sigma."""
    a = _hermitian_array(rho, "rho")
    b = _hermitian_array(sigma, "sigma")
    if a.shape != b.shape:
        raise DimensionMismatchError(f"trace distance of shapes {a.shape} and {b.shape}")
    eigenvalues = scipy.linalg.eigvalsh(a - b)
    return float(0.5 * np.sum(np.abs(eigenvalues)))


def pure_trace_distance(psi: np.ndarray, phi: np.ndarray) -> float:
    """sqrt(1 - |<psi|phi>|^2) for unit vectors (normalized here)."""
    psi = np.asarray(psi, dtype=complex)
    phi = np.asarray(phi, dtype=complex)
    overlap = np.vdot(psi, phi) / (np.linalg.norm(psi) * np.linalg.norm(phi))
    return float(math.sqrt(max(0.0, 1.0 - abs(overlap) ** 2)))


def von_neumann_entropy(rho: np.ndarray) -> float:
    """Base-2 von Neumann entropy."""
    eigenvalues = scipy.linalg.eigvalsh(_hermitian_array(rho, "rho"))
    eigenvalues = eigenvalues[eigenvalues > ENTROPY_CUTOFF]
    return float(-np.sum(eigenvalues * np.log2(eigenvalues)))


def operator_norm(m: np.ndarray) -> float:
    if m.size == 0:
        return 0.0
    return float(scipy.linalg.svdvals(m)[0])


def trace_norm(m: np.ndarray) -> float:
    """Tr|m| (sum of singular values); twice the trace distance for density differences."""
    if m.size == 0:
        return 0.0
    return float(np.sum(scipy.linalg.svdvals(m)))


def partial_trace_last_qubits(rho: np.ndarray, n_keep: int, n_total: int) -> np.ndarray:
    """Trace out the last ``n_total - n_keep`` qubits of a 2^n_total dimensional operator."""
    if rho.shape != (2**n_total, 2**n_total):
        raise DimensionMismatchError(f"expected a {2**n_total}x{2**n_total} operator, got {rho.shape}")
    if not 0 <= n_keep <= n_total:
        raise InvalidParameterError(f"cannot keep {n_keep} of {n_total} qubits")
    keep, drop = 2**n_keep, 2 ** (n_total - n_keep)
    return np.einsum("ajbj->ab", rho.reshape(keep, drop, keep, drop))


def binary_entropy_term(x: float) -> float:
    """eta(x) = -x log2 x with eta(0) = 0."""
    return 0.0 if x <= 0 else -x * math.log2(x)


def fannes_bound(distance: float, dim: int) -> float:
    """Continuity bound |S(rho) - S(sigma)| <= 2T log d + eta(2T), valid for 2T <= 1/e."""
    if distance < 0 or 2 * distance > 1 / math.e:
        raise InvalidParameterError(f"Fannes bound needs 0 <= 2T <= 1/e, got T={distance}")
    return 2 * distance * math.log2(dim) + binary_entropy_term(2 * distance)


def composition_defect(unitaries: Sequence[np.ndarray]) -> tuple[float, float]:
    """(||U_K...U_1 - 1||, sum_k ||U_k - 1||) for square matrices of one size."""
    if not unitaries:
        return 0.0, 0.0
    size = unitaries[0].shape[0]
    identity = np.eye(size, dtype=complex)
    product = identity.copy()
    total = 0.0
    for u in unitaries:
        if u.shape != (size, size):
            raise DimensionMismatchError(f"operator of shape {u.shape} in a {size}-dimensional product")
        product = u @ product
        total += operator_norm(u - identity)
    return operator_norm(product - identity), total
