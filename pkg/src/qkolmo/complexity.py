"""Complexity estimates: counting and incompressibility bounds, Holevo chi, brute-force QC upper bounds.

Searched complexities are always upper bounds over an explicit candidate set; the only lower
bounds reported come from the counting and incompressibility theorems.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np

from .coding import self_delim_encode
from .config import ResourceCaps, resolve_caps
from .errors import DimensionMismatchError, InvalidParameterError, SearchExhaustedError
from .linalg import trace_distance, von_neumann_entropy
from .machine import QtmSpec, apply, classical_outputs, encode_pair
from .qubits import QubitString, lengths, strings_of_length, truncate_prefix, truncation_bound

logger = logging.getLogger(__name__)

# Upper end (exclusive) of the accuracy range of the counting bound
COUNTING_DELTA_LIMIT = 1 / (2 * math.e)
CHI_ATOL = 1e-10
ORTHONORMAL_ATOL = 1e-10


def _log2(x: float) -> float:
    return math.log2(x)


def _delta_term(delta: float) -> float:
    """4 delta log(1/delta) with the convention 0 log(1/0) = 0."""
    return 0.0 if delta == 0 else 4 * delta * _log2(1 / delta)


def counting_bound(d: int, delta: Any) -> float:
    """Upper bound (log d + 4 delta log 1/delta) / (1 - 4 delta) on log #N_delta."""
    if d < 1:
        raise InvalidParameterError(f"dimension must be >= 1, got {d}")
    delta = float(delta)
    if not 0 <= delta < COUNTING_DELTA_LIMIT:
        raise InvalidParameterError(f"delta must lie in [0, 1/(2e)), got {delta}")
    return (_log2(d) + _delta_term(delta)) / (1 - 4 * delta)


def orthonormal_incompressibility_bound(count: int, delta: Any) -> float:
    """(1 - 4 delta) log n - 1 - 4 delta log 1/delta: some member of n orthonormal strings has QC^delta above it."""
    if count < 1:
        raise InvalidParameterError("need at least one state")
    delta = float(delta)
    return (1 - 4 * delta) * _log2(count) - 1 - _delta_term(delta)


def holevo_incompressibility_bound(average_entropy: float, count: int, delta: Any) -> float:
    """S(average) - 4 delta log((n + 1) / (2 delta)) - 1 for n pure strings."""
    delta = float(delta)
    if delta <= 0:
        raise InvalidParameterError("the entropy form needs delta > 0")
    return average_entropy - 4 * delta * _log2((count + 1) / (2 * delta)) - 1


@dataclass(frozen=True)
class Ensemble:
    """Weights lambda_i with density operators rho_i on one space."""

    weights: tuple[float, ...]
    states: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if len(self.weights) != len(self.states) or not self.weights:
            raise InvalidParameterError("ensemble needs matching, non-empty weights and states")
        if any(w < 0 for w in self.weights) or abs(sum(self.weights) - 1) > 1e-12:
            raise InvalidParameterError("ensemble weights must be a probability vector")
        shapes = {s.shape for s in self.states}
        if len(shapes) != 1:
            raise DimensionMismatchError(f"ensemble states of shapes {sorted(shapes)}")
        for s in self.states:
            if abs(np.trace(s) - 1) > 1e-9:
                raise InvalidParameterError("ensemble state does not have unit trace")

    @classmethod
    def of_kets(cls, kets: Sequence[np.ndarray], weights: Sequence[float] | None = None) -> Ensemble:
        states = []
        for k in kets:
            v = np.asarray(k, dtype=complex)
            v = v / np.linalg.norm(v)
            states.append(np.outer(v, v.conj()))
        w = tuple(weights) if weights is not None else tuple([1 / len(states)] * len(states))
        return cls(w, tuple(states))

    def average(self) -> np.ndarray:
        return sum((w * s for w, s in zip(self.weights, self.states, strict=True)), np.zeros_like(self.states[0]))


def chi_quantity(ensemble: Ensemble) -> float:
    """S(sum lambda_i rho_i) - sum lambda_i S(rho_i)."""
    value = von_neumann_entropy(ensemble.average()) - sum(
        w * von_neumann_entropy(s) for w, s in zip(ensemble.weights, ensemble.states, strict=True)
    )
    if value < -CHI_ATOL:
        raise InvalidParameterError(f"negative chi quantity {value}: ensemble states are not density operators")
    return max(value, 0.0)


def dephase(ensemble: Ensemble) -> Ensemble:
    """Diagonal measurement applied to every member; chi can only decrease."""
    return Ensemble(ensemble.weights, tuple(np.diag(np.diag(s)) for s in ensemble.states))


# ---------------------------------------------------------------------------
# brute-force complexity


@dataclass(frozen=True)
class ComplexityBound:
    """Upper bound on QC (or average-length QK) over an explicit candidate set."""

    value: Any
    witness: str
    searched: int
    delta: float | None

    def describe(self) -> str:
        return f"<= {self.value} over {self.searched} searched inputs (witness {self.witness})"


def _distance(a: QubitString, b: QubitString) -> float:
    n = max(a.max_len, b.max_len)
    return trace_distance(a.padded(n).to_numpy(), b.padded(n).to_numpy())


def _candidates(max_len: int, extra: Iterable[QubitString]) -> list[tuple[Any, int, str, QubitString]]:
    out = []
    for k in range(max_len + 1):
        for s in strings_of_length(k):
            out.append((k, k, s or "λ", QubitString.classical(s)))
    for sigma in extra:
        base, average = lengths(sigma)
        out.append((base, average, sigma.label(), sigma))
    return out


def _search(
    spec: QtmSpec,
    rho: QubitString,
    accept: Any,
    max_len: int,
    candidates: Iterable[QubitString],
    t_max: int,
    caps: ResourceCaps,
    average: bool,
) -> ComplexityBound:
    pool = _candidates(max_len, candidates)
    pool.sort(key=lambda c: (c[1] if average else c[0]))
    for searched, (base, avg, label, sigma) in enumerate(pool, 1):
        out = apply(spec, sigma, t_max, caps)
        if out is not None and accept(out):
            value = avg if average else base
            logger.debug(f"witness {label} of length {value} after {searched} candidates")
            return ComplexityBound(value, label, searched, None)
    raise SearchExhaustedError(f"> {max_len} over the searched set ({len(pool)} candidates)")


def qc_upper_bound(
    spec: QtmSpec,
    rho: QubitString,
    delta: Any | None,
    max_len: int,
    candidates: Iterable[QubitString] = (),
    t_max: int = 16,
    k_max: int | None = None,
    caps: ResourceCaps | None = None,
) -> ComplexityBound:
    """Least base length of a searched input whose output is delta-close to rho.

    With ``delta is None`` the approximation-scheme criterion ||rho - M(k, sigma)|| < 1/k for all
    k <= k_max is used; the scheme's machine reads the parameter and runs M, so M(k, sigma) = M(sigma).
    """
    caps = resolve_caps(caps)
    if delta is None:
        if k_max is None or k_max < 1:
            raise InvalidParameterError("scheme mode needs k_max >= 1")
        tol = 1 / k_max
    else:
        tol = float(delta)
        if tol <= 0:
            raise InvalidParameterError(f"delta must be positive, got {delta}")
    bound = _search(spec, rho, lambda out: _distance(rho, out) < tol, max_len, candidates, t_max, caps, False)
    return ComplexityBound(bound.value, bound.witness, bound.searched, None if delta is None else tol)


def qk_average_upper_bound(
    spec: QtmSpec,
    rho: QubitString,
    delta: Any,
    max_len: int,
    candidates: Iterable[QubitString] = (),
    t_max: int = 16,
    caps: ResourceCaps | None = None,
) -> ComplexityBound:
    """Average-length analogue of qc_upper_bound."""
    caps = resolve_caps(caps)
    tol = float(delta)
    bound = _search(spec, rho, lambda out: _distance(rho, out) < tol, max_len, candidates, t_max, caps, True)
    return ComplexityBound(bound.value, bound.witness, bound.searched, tol)


@dataclass(frozen=True)
class RelationCheck:
    k: int
    approximate: int
    scheme: int
    witness: str = ""

    @property
    def bound(self) -> int:
        return self.scheme + 2 * int(math.floor(math.log2(self.k))) + 2

    @property
    def holds(self) -> bool:
        return self.approximate <= self.bound


def parameter_input_bound(
    spec: QtmSpec, rho: QubitString, k: int, max_len: int, t_max: int = 16, caps: ResourceCaps | None = None
) -> ComplexityBound:
    """Least length of an input <k', sigma> of the scheme machine whose output is 1/k-close to rho.

    The scheme machine reads the self-delimited k' and runs spec on sigma, so every input pays
    the 2 floor(log k') + 2 qubits of its parameter. Only the cheapest parameter of each code
    length up to k is tried.
    """
    caps = resolve_caps(caps)
    if k < 1:
        raise InvalidParameterError(f"k must be >= 1, got {k}")
    tol = 1 / k
    pool = []
    for j in range(k.bit_length()):
        for _, _, label, sigma in _candidates(max_len, ()):
            pool.append((lengths(encode_pair(1 << j, sigma))[0], 1 << j, label, sigma))
    pool.sort(key=lambda c: c[0])
    outputs: dict[str, QubitString | None] = {}
    for searched, (length, param, label, sigma) in enumerate(pool, 1):
        if label not in outputs:
            outputs[label] = apply(spec, sigma, t_max, caps)
        out = outputs[label]
        if out is not None and _distance(rho, out) < tol:
            witness = f"<{param}, {label}>"
            logger.debug(f"scheme input {witness} of length {length} after {searched} candidates")
            return ComplexityBound(length, witness, searched, tol)
    raise SearchExhaustedError(f"no scheme input <k', sigma> with k' <= {k} and l(sigma) <= {max_len}")


def relation_check(
    spec: QtmSpec, rho: QubitString, k: int, max_len: int, t_max: int = 16, caps: ResourceCaps | None = None
) -> RelationCheck:
    """QC^{1/k}(rho) on scheme inputs <k', sigma> against QC(rho) + 2 floor(log k) + 2 over the same searched set."""
    if k < 1:
        raise InvalidParameterError(f"k must be >= 1, got {k}")
    approximate = parameter_input_bound(spec, rho, k, max_len, t_max, caps)
    scheme = qc_upper_bound(spec, rho, None, max_len, t_max=t_max, k_max=max(k, 1 << 20), caps=caps)
    return RelationCheck(k, approximate.value, scheme.value, approximate.witness)


# ---------------------------------------------------------------------------
# incompressibility


@dataclass
class IncompressibilityReport:
    count: int
    delta: float
    orthonormal_bound: float
    holevo_bound: float
    average_entropy: float
    searched_bounds: list[int | None] = field(default_factory=list)

    @property
    def vacuous(self) -> bool:
        return max(self.orthonormal_bound, self.holevo_bound) <= 0

    @property
    def consistent(self) -> bool:
        """Some member's searched upper bound is not below both lower bounds (or was not found at all)."""
        needed = max(self.orthonormal_bound, self.holevo_bound)
        return any(b is None or b > needed for b in self.searched_bounds) or not self.searched_bounds


def incompressibility_audit(
    spec: QtmSpec | None,
    states: Sequence[np.ndarray],
    delta: Any,
    max_len: int = 0,
    t_max: int = 16,
    caps: ResourceCaps | None = None,
) -> IncompressibilityReport:
    """Both incompressibility bounds for an orthonormal family, plus searched QC^delta upper bounds.

    ``states`` are vectors over the strings of one length n; without a machine only the bounds are reported.
    """
    if not len(states):
        raise InvalidParameterError("empty family")
    kets = [np.asarray(s, dtype=complex) for s in states]
    gram = np.array([[np.vdot(a, b) for b in kets] for a in kets])
    if not np.allclose(gram, np.eye(len(kets)), atol=ORTHONORMAL_ATOL):
        raise InvalidParameterError("family is not orthonormal")
    delta_f = float(delta)
    entropy = von_neumann_entropy(Ensemble.of_kets(kets).average())
    report = IncompressibilityReport(
        len(kets),
        delta_f,
        orthonormal_incompressibility_bound(len(kets), delta_f),
        holevo_incompressibility_bound(entropy, len(kets), delta_f),
        entropy,
    )
    if spec is not None:
        n = len(kets[0]).bit_length() - 1
        labels = strings_of_length(n)
        for ket in kets:
            rho = QubitString.from_float_ket(dict(zip(labels, ket, strict=True)), n)
            try:
                report.searched_bounds.append(qc_upper_bound(spec, rho, delta_f, max_len, t_max=t_max, caps=caps).value)
            except SearchExhaustedError:
                report.searched_bounds.append(None)
    logger.info(
        f"incompressibility of {len(kets)} states at delta={delta_f}: "
        f"orthonormal {report.orthonormal_bound:.4f}, entropy form {report.holevo_bound:.4f}"
    )
    return report


# ---------------------------------------------------------------------------
# counting experiment


def _leading_vector(sigma: QubitString) -> tuple[np.ndarray, float]:
    values, vectors = np.linalg.eigh(sigma.to_numpy())
    return vectors[:, -1], float(values[-1])


def greedy_orthonormal_family(outputs: Sequence[QubitString], delta: float) -> list[np.ndarray]:
    """Orthonormal vectors, each within trace distance delta of a distinct output, chosen greedily."""
    if not outputs:
        return []
    n = max(o.max_len for o in outputs)
    family: list[np.ndarray] = []
    for out in outputs:
        padded = out.padded(n)
        v, weight = _leading_vector(padded)
        residual = v - sum((np.vdot(f, v) * f for f in family), np.zeros_like(v))
        norm = np.linalg.norm(residual)
        if norm < 1e-12:
            continue
        candidate = residual / norm
        if trace_distance(padded.to_numpy(), np.outer(candidate, candidate.conj())) < delta:
            family.append(candidate)
    return family


@dataclass(frozen=True)
class CountingExperiment:
    max_len: int
    delta: float
    outputs: int
    family: int
    bound: float

    @property
    def holds(self) -> bool:
        return self.family == 0 or math.log2(self.family) <= self.bound + 1e-12


def counting_experiment(
    spec: QtmSpec, max_len: int, delta: Any, t_max: int = 16, caps: ResourceCaps | None = None
) -> CountingExperiment:
    """Outputs of every classical input up to max_len against the counting bound for 2^{L+1} - 1 inputs."""
    caps = resolve_caps(caps)
    delta_f = float(delta)
    outputs = list(classical_outputs(spec, max_len, t_max, caps).values())
    family = greedy_orthonormal_family(outputs, delta_f)
    bound = counting_bound((1 << (max_len + 1)) - 1, delta_f)
    result = CountingExperiment(max_len, delta_f, len(outputs), len(family), bound)
    logger.info(f"counting experiment L={max_len}: family {result.family} vs bound 2^{bound:.3f}")
    return result


# ---------------------------------------------------------------------------
# truncation


@dataclass(frozen=True)
class TruncationProgram:
    k: int
    header: str
    distance: float
    average_length: float

    @property
    def length(self) -> float:
        """Average length of the program: header bits plus the truncated string."""
        return len(self.header) + self.average_length


def truncation_program(sigma: QubitString, delta: Any) -> TruncationProgram:
    """Smallest k with ||sigma - sigma_1^k|| < delta, with the self-delimited ceil(average length) as header."""
    delta_f = float(delta)
    if delta_f <= 0:
        raise InvalidParameterError("truncation needs delta > 0")
    base, average = lengths(sigma)
    for k in range(base + 1):
        truncated = truncate_prefix(sigma, k)
        distance = _distance(sigma, truncated)
        if distance < delta_f:
            header = self_delim_encode(max(1, math.ceil(average)))
            logger.debug(f"truncation at k={k}: distance {distance:.3g}, a priori bound {truncation_bound(average, k):.3g}")
            return TruncationProgram(k, header, distance, float(lengths(truncated)[1]))
    raise SearchExhaustedError("no truncation reaches the requested accuracy")
