"""Ergodic sources, typical projectors and the universal typical subspace.

Diagonal sources (i.i.d. with a diagonal local density, diagonal Markov chains) are handled with
exact rational probabilities; general i.i.d. sources go through float spectra. The universal
projector is assembled from integer symmetric operators with exact span tests.

Usage:
    >>> from qkolmo.brudno import beta_min, load_source_fixture
    >>> beta_min(load_source_fixture("iid_skewed"), 2, "1/10").rank
    2
"""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any, Literal

import numpy as np
import scipy.linalg
from scipy.stats import unitary_group
from sympy.utilities.iterables import multiset_permutations

from .config import ResourceCaps, resolve_caps
from .errors import InvalidParameterError, SpecParseError
from .linalg import ZERO, CRat, Echelon, gram_schmidt, unit, von_neumann_entropy

logger = logging.getLogger(__name__)

SourceKind = Literal["iid", "markov"]
# Residual tolerance for float span membership
SPAN_ATOL = 1e-9


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as e:
        raise SpecParseError(f"'{text}' is not a rational number") from e


def _exact_eps(eps: Any) -> Fraction:
    value = Fraction(str(eps)) if isinstance(eps, float) else Fraction(eps)
    if not 0 < value < 1:
        raise InvalidParameterError(f"eps must lie in (0, 1), got {eps}")
    return value


@dataclass(frozen=True)
class SourceModel:
    """Shift-invariant source: i.i.d. copies of a qubit density, or a diagonal Markov chain."""

    kind: SourceKind
    name: str = "source"
    rho: tuple[tuple[CRat, CRat], tuple[CRat, CRat]] | None = None
    transition: tuple[tuple[Fraction, ...], ...] | None = None
    stationary: tuple[Fraction, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind == "iid":
            if self.rho is None:
                raise SpecParseError("i.i.d. source needs rho")
            (a, b), (c, d) = self.rho
            if c != b.conjugate() or a.im or d.im:
                raise SpecParseError("rho is not hermitian")
            if a.re + d.re != 1:
                raise SpecParseError(f"rho has trace {a.re + d.re}")
            if a.re < 0 or d.re < 0 or a.re * d.re < b.abs2():
                raise SpecParseError("rho is not positive semidefinite")
        elif self.kind == "markov":
            self._check_chain()
        else:
            raise SpecParseError(f"unknown source kind '{self.kind}'")

    def _check_chain(self) -> None:
        p, pi = self.transition, self.stationary
        if p is None or pi is None:
            raise SpecParseError("Markov source needs P and pi")
        k = len(pi)
        if k != 2 or any(len(row) != k for row in p) or len(p) != k:
            raise SpecParseError("Markov source over one qubit needs a 2x2 P and two-entry pi")
        if any(x < 0 for row in p for x in row) or any(sum(row) != 1 for row in p):
            raise SpecParseError("P is not row-stochastic")
        if any(x < 0 for x in pi) or sum(pi) != 1:
            raise SpecParseError("pi is not a probability vector")
        if any(sum(pi[i] * p[i][j] for i in range(k)) != pi[j] for j in range(k)):
            raise SpecParseError("pi is not stationary for P")
        echelon = Echelon(k)
        for j in range(k):
            echelon.add([CRat(p[i][j] - (1 if i == j else 0)) for i in range(k)])
        if echelon.rank < k - 1:
            logger.warning(f"source {self.name}: stationary distribution of P is not unique")

    @property
    def diagonal(self) -> bool:
        return self.kind == "markov" or (self.rho is not None and not self.rho[0][1])


def parse_source(text: str, name: str = "source") -> SourceModel:
    """Parse ``kind:``/``rho:`` or ``kind:``/``P:``/``pi:`` lines; ``#!`` starts a comment."""
    fields: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#!", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise SpecParseError(f"line {lineno}: expected 'key: value'")
        fields[key.strip()] = value.strip()
    kind = fields.get("kind")
    name = fields.get("name", name)
    if kind == "iid":
        entries = fields.get("rho", "").split()
        if len(entries) != 4:
            raise SpecParseError("rho needs four numbers: p00 re(p01) im(p01) p11")
        p00, re01, im01, p11 = (_fraction(x) for x in entries)
        off = CRat(re01, im01)
        rho = ((CRat(p00), off), (off.conjugate(), CRat(p11)))
        return SourceModel("iid", name, rho=rho)
    if kind == "markov":
        rows = [tuple(_fraction(x) for x in row.split()) for row in fields.get("P", "").split(";")]
        pi = tuple(_fraction(x) for x in fields.get("pi", "").split())
        return SourceModel("markov", name, transition=tuple(rows), stationary=pi)
    raise SpecParseError(f"unknown or missing source kind '{kind}'")


def load_source(path: str | Path) -> SourceModel:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise SpecParseError(f"cannot read source file {path}: {e}") from e
    return parse_source(text, name=path.stem)


def load_source_fixture(name: str) -> SourceModel:
    try:
        text = resources.files("qkolmo.data").joinpath(f"{name}.src").read_text(encoding="utf-8")
    except (FileNotFoundError, OSError) as e:
        raise SpecParseError(f"no packaged source named '{name}'") from e
    return parse_source(text, name=name)


def iid_source(p0: Any, name: str = "iid") -> SourceModel:
    """Diagonal i.i.d. source with P(0) = p0."""
    p = Fraction(p0)
    return SourceModel("iid", name, rho=((CRat(p), ZERO), (ZERO, CRat(1 - p))))


# ---------------------------------------------------------------------------
# local densities


def _check_length(source: SourceModel, n: int, caps: ResourceCaps) -> None:
    if n < 0:
        raise InvalidParameterError(f"negative block length {n}")
    if source.diagonal:
        caps.check("max_diagonal_source_length", n, f"local density of {source.name}")
    else:
        caps.check("max_general_source_length", n, f"local density of {source.name}")


def diagonal_probabilities(source: SourceModel, n: int, caps: ResourceCaps | None = None) -> list[Fraction]:
    """Exact probabilities of the 2^n strings of length n (lexicographic order), diagonal sources only."""
    caps = resolve_caps(caps)
    _check_length(source, n, caps)
    if not source.diagonal:
        raise InvalidParameterError(f"source {source.name} is not diagonal")
    if source.kind == "iid":
        assert source.rho is not None
        single = [source.rho[0][0].re, source.rho[1][1].re]
        probs = [Fraction(1)]
        for _ in range(n):
            probs = [p * q for p in probs for q in single]
        return probs
    assert source.transition is not None and source.stationary is not None
    if n == 0:
        return [Fraction(1)]
    probs = []
    for bits in itertools.product((0, 1), repeat=n):
        p = source.stationary[bits[0]]
        for a, b in itertools.pairwise(bits):
            p *= source.transition[a][b]
        probs.append(p)
    return probs


def local_density(source: SourceModel, n: int, caps: ResourceCaps | None = None) -> np.ndarray:
    """rho^{(n)} on H_n as a float matrix."""
    caps = resolve_caps(caps)
    _check_length(source, n, caps)
    if source.diagonal:
        return np.diag([float(p) for p in diagonal_probabilities(source, n, caps)]).astype(complex)
    assert source.rho is not None
    rho = np.array([[complex(x) for x in row] for row in source.rho])
    out = np.ones((1, 1), dtype=complex)
    for _ in range(n):
        out = np.kron(out, rho)
    return out


def local_spectrum(source: SourceModel, n: int, caps: ResourceCaps | None = None) -> list[Any]:
    """Eigenvalues of rho^{(n)}: exact Fractions for diagonal sources, floats otherwise."""
    caps = resolve_caps(caps)
    if source.diagonal:
        return list(diagonal_probabilities(source, n, caps))
    _check_length(source, n, caps)
    assert source.rho is not None
    single = scipy.linalg.eigvalsh(np.array([[complex(x) for x in row] for row in source.rho]))
    spectrum = np.ones(1)
    for _ in range(n):
        spectrum = np.outer(spectrum, single).ravel()
    return [float(x) for x in spectrum]


def consistency_check(source: SourceModel, n: int, caps: ResourceCaps | None = None) -> bool:
    """Tracing the last qubit of rho^{(n+1)} gives rho^{(n)} (exactly for diagonal sources)."""
    if source.diagonal:
        longer = diagonal_probabilities(source, n + 1, caps)
        marginal = [longer[2 * i] + longer[2 * i + 1] for i in range(len(longer) // 2)]
        return marginal == diagonal_probabilities(source, n, caps)
    longer_rho = local_density(source, n + 1, caps)
    traced = np.einsum("ajbj->ab", longer_rho.reshape(1 << n, 2, 1 << n, 2))
    return bool(np.allclose(traced, local_density(source, n, caps), atol=1e-12))


def _shannon(probabilities: Sequence[Any]) -> float:
    return -sum(float(p) * math.log2(float(p)) for p in probabilities if p > 0)


def entropy_rate(source: SourceModel) -> float:
    """S(rho) for i.i.d. sources, -sum pi_i P_ij log P_ij for Markov chains."""
    if source.kind == "iid":
        assert source.rho is not None
        return von_neumann_entropy(np.array([[complex(x) for x in row] for row in source.rho]))
    assert source.transition is not None and source.stationary is not None
    return sum(float(pi) * _shannon(row) for pi, row in zip(source.stationary, source.transition, strict=True))


def block_entropy(source: SourceModel, n: int, caps: ResourceCaps | None = None) -> float:
    return _shannon(local_spectrum(source, n, caps))


# ---------------------------------------------------------------------------
# minimal typical projectors


@dataclass(frozen=True)
class TypicalProjector:
    n: int
    rank: int
    mass: Any

    @property
    def log_trace(self) -> float:
        return math.log2(self.rank)


def beta_min(source: SourceModel, n: int, eps: Any, caps: ResourceCaps | None = None) -> TypicalProjector:
    """Greedy spectral projector: the fewest largest eigenvalues of rho^{(n)} with mass >= 1 - eps."""
    eps_q = _exact_eps(eps)
    spectrum = sorted(local_spectrum(source, n, caps), reverse=True)
    exact = source.diagonal
    target: Any = 1 - eps_q if exact else 1 - float(eps_q)
    mass: Any = Fraction(0) if exact else 0.0
    for rank, p in enumerate(spectrum, 1):
        mass += p
        if mass >= target:
            return TypicalProjector(n, rank, mass)
    # float spectra can fall short of 1 by rounding
    return TypicalProjector(n, len(spectrum), mass)


@dataclass(frozen=True)
class BetaRow:
    n: int
    beta: float
    rate: float

    @property
    def per_symbol(self) -> float:
        return self.beta / self.n

    @property
    def gap(self) -> float:
        return self.per_symbol - self.rate

    def tsv(self) -> str:
        return f"{self.n}\t{self.beta:.6f}\t{self.per_symbol:.6f}\t{self.rate:.6f}\t{self.gap:.6f}"


def beta_report(source: SourceModel, ns: Sequence[int], eps: Any, caps: ResourceCaps | None = None) -> list[BetaRow]:
    rate = entropy_rate(source)
    rows = []
    for n in ns:
        if n < 1:
            raise InvalidParameterError("beta report needs n >= 1")
        rows.append(BetaRow(n, beta_min(source, n, eps, caps).log_trace, rate))
        logger.debug(f"beta for {source.name} at n={n}: {rows[-1].beta:.4f}")
    return rows


def subadditivity_check(source: SourceModel, n: int, m: int, caps: ResourceCaps | None = None) -> tuple[float, float]:
    """(S(rho^{(n+m)}), S(rho^{(n)}) + S(rho^{(m)})); the first never exceeds the second."""
    return block_entropy(source, n + m, caps), block_entropy(source, n, caps) + block_entropy(source, m, caps)


# ---------------------------------------------------------------------------
# universal typical subspace


def block_length_lm(m: int) -> int:
    """The power of two l with l 2^{3l} <= m < 2l 2^{6l}."""
    if m < 8:
        raise InvalidParameterError(f"no block length for m={m} < 8")
    ell = 1
    while not ell * 8**ell <= m < 2 * ell * 64**ell:
        ell *= 2
        if ell * 8**ell > m:
            raise InvalidParameterError(f"no power-of-two block length for m={m}")
    return ell


def symmetric_subspace_dim(l: int, n: int) -> int:  # noqa: E741
    """dim SYM^n of the 4^l-dimensional algebra on l qubits."""
    return math.comb(n + 4**l - 1, 4**l - 1)


def _matrix_unit(k: int, l: int) -> tuple[int, int]:  # noqa: E741
    """e_k = |a><b| on l qubits."""
    return divmod(k, 1 << l)


def symmetric_basis(l: int, n: int, caps: ResourceCaps | None = None) -> list[dict[tuple[int, int], int]]:  # noqa: E741
    """Integer operators A_{i_1..i_n} = sum over orderings of e_{i_1} (x) ... (x) e_{i_n}, as sparse (row, col) maps."""
    caps = resolve_caps(caps)
    caps.check("max_symmetric_dimension", 1 << (l * n), "symmetric basis")
    out = []
    for multiset in itertools.combinations_with_replacement(range(4**l), n):
        op: dict[tuple[int, int], int] = {}
        for order in multiset_permutations(list(multiset)):
            row = col = 0
            for k in order:
                a, b = _matrix_unit(k, l)
                row = (row << l) | a
                col = (col << l) | b
            op[(row, col)] = op.get((row, col), 0) + 1
        out.append(op)
    return out


def symmetric_rank(l: int, n: int, caps: ResourceCaps | None = None) -> int:  # noqa: E741
    """Exact rank of the symmetric spanning set, flattened into 4^{ln}-dimensional vectors."""
    size = 1 << (l * n)
    echelon = Echelon(size * size)
    for op in symmetric_basis(l, n, caps):
        echelon.add({r * size + c: CRat(v) for (r, c), v in op.items()})
    return echelon.rank


def _apply_symmetric(multiset: Sequence[int], omega: str, l: int) -> dict[int, int]:  # noqa: E741
    """A_{multiset} |omega> as a sparse integer vector."""
    blocks = [int(omega[j * l : (j + 1) * l], 2) for j in range(len(omega) // l)]
    out: dict[int, int] = {}
    for order in multiset_permutations(list(multiset)):
        index = 0
        for k, block in zip(order, blocks, strict=True):
            a, b = _matrix_unit(k, l)
            if b != block:
                break
            index = (index << l) | a
        else:
            out[index] = out.get(index, 0) + 1
    return out


@dataclass(frozen=True)
class UniversalProjector:
    """Support of W^{(ln)} padded with the identity on m - ln trailing qubits."""

    l: int  # noqa: E741
    n: int
    m: int
    span: tuple[dict[int, int], ...]

    @property
    def block_rank(self) -> int:
        return len(self.span)

    @property
    def rank(self) -> int:
        return self.block_rank << (self.m - self.l * self.n)

    @property
    def log_trace(self) -> float:
        return math.log2(self.rank) if self.rank else float("-inf")

    def support_vectors(self) -> list[tuple[CRat, ...]]:
        """x_k = u_k (x) phi_i over the trailing computational basis."""
        pad = self.m - self.l * self.n
        size = 1 << self.m
        out = []
        for u in self.span:
            for tail in range(1 << pad):
                entries = [ZERO] * size
                for index, value in u.items():
                    entries[(index << pad) | tail] = CRat(value)
                out.append(tuple(entries))
        return out

    def completed_basis(self) -> list[Any]:
        """Support vectors followed by computational vectors, made independent and orthogonal exactly."""
        size = 1 << self.m
        echelon = Echelon(size)
        chosen = []
        for v in [*self.support_vectors(), *(unit(i, size) for i in range(size))]:
            if echelon.add(v):
                chosen.append(v)
        return gram_schmidt(chosen)

    def frame(self) -> np.ndarray:
        """Orthonormal float frame of the block span on ln qubits."""
        size = 1 << (self.l * self.n)
        if not self.span:
            return np.zeros((size, 0), dtype=complex)
        cols = np.zeros((size, len(self.span)), dtype=complex)
        for k, u in enumerate(self.span):
            for index, value in u.items():
                cols[index, k] = value
        q, _ = np.linalg.qr(cols)
        return q

    def projector(self) -> np.ndarray:
        """Float projector on H_m."""
        q = self.frame()
        block = q @ q.conj().T
        return np.kron(block, np.eye(1 << (self.m - self.l * self.n)))


def universal_typical_projector(
    codewords: Sequence[str], l: int, n: int, m: int, caps: ResourceCaps | None = None  # noqa: E741
) -> UniversalProjector:
    """Span of A_k |omega_i> over the symmetric basis and the codewords, kept by exact independence tests."""
    caps = resolve_caps(caps)
    if l < 1 or n < 1:
        raise InvalidParameterError("block length and block count must be positive")
    if m < l * n:
        raise InvalidParameterError(f"m={m} is shorter than l*n={l * n}")
    if len(set(codewords)) != len(codewords):
        raise InvalidParameterError("codewords must be distinct")
    if any(len(w) != l * n or set(w) - {"0", "1"} for w in codewords):
        raise InvalidParameterError(f"codewords must be binary strings of length {l * n}")
    caps.check("max_symmetric_dimension", 1 << (l * n), "universal typical projector")
    echelon = Echelon(1 << (l * n))
    span: list[dict[int, int]] = []
    multisets = list(itertools.combinations_with_replacement(range(4**l), n))
    for omega in codewords:
        for multiset in multisets:
            if echelon.rank == 1 << (l * n):
                break
            u = _apply_symmetric(multiset, omega, l)
            if u and echelon.add({i: CRat(v) for i, v in u.items()}):
                span.append(u)
    projector = UniversalProjector(l, n, m, tuple(span))
    logger.info(f"universal projector l={l} n={n} m={m}: block rank {projector.block_rank}, rank {projector.rank}")
    return projector


def empirical_typical_codewords(l: int, n: int, rate: Any) -> list[str]:  # noqa: E741
    """Strings of n l-bit blocks whose empirical block entropy is at most rate, at most 2^{ceil(rate n)} of them.

    The lexicographically first admissible strings are kept when the cap binds.
    """
    rate_f = float(rate)
    if rate_f <= 0:
        raise InvalidParameterError(f"rate must be positive, got {rate}")
    limit = 1 << math.ceil(rate_f * n)
    words = []
    for bits in itertools.product("01", repeat=l * n):
        word = "".join(bits)
        counts: dict[str, int] = {}
        for j in range(n):
            block = word[j * l : (j + 1) * l]
            counts[block] = counts.get(block, 0) + 1
        entropy = _shannon([Fraction(c, n) for c in counts.values()])
        if entropy <= rate_f + 1e-12:
            words.append(word)
    return words[:limit]


def trace_bound(l: int, n: int, rate: float) -> float:  # noqa: E741
    """log2 of (n + 1)^{4^l} 2^{R n} 2^l."""
    return 4**l * math.log2(n + 1) + rate * n + l


def normalized_trace_bound(l: int, n: int, rate: float) -> float:  # noqa: E741
    """(4^l / l) log(n + 1) / n + R / l + 1 / n, the per-qubit form of trace_bound."""
    return 4**l / l * math.log2(n + 1) / n + rate / l + 1 / n


def rotation_invariance_check(
    projector: UniversalProjector, codewords: Sequence[str], rng: np.random.Generator, trials: int = 5
) -> float:
    """Largest residual of U^{(x)n} |omega> outside the block span over random unitaries U on l qubits."""
    q = projector.frame()
    l, n = projector.l, projector.n  # noqa: E741
    worst = 0.0
    for _ in range(trials):
        u = unitary_group.rvs(1 << l, random_state=rng)
        big = np.ones((1, 1), dtype=complex)
        for _ in range(n):
            big = np.kron(big, u)
        for omega in codewords:
            v = big[:, int(omega, 2)]
            residual = v - q @ (q.conj().T @ v)
            worst = max(worst, float(np.linalg.norm(residual)))
    if worst > SPAN_ATOL:
        logger.warning(f"rotated codeword leaves the universal span by {worst:.3g}")
    return worst


def rate_of(codewords: Sequence[str], n: int) -> float:
    """log(#codewords) / n."""
    return math.log2(len(codewords)) / n if codewords else 0.0


