"""Numerical checks of the halting-stability lemmas.

Every check returns a ``BoundCheck`` with the measured value next to the bound it must respect.
Weights come from the float stack of qf-weight operators, so a check costs one simulation of the
basis inputs plus a few small matrix products.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .config import ResourceCaps, resolve_caps
from .errors import DimensionMismatchError, InvalidParameterError
from .linalg import (
    CRat,
    inner,
    norm_sq,
    partial_trace_last_qubits,
    rank,
    trace_distance,
    trace_norm,
)
from .machine import QtmSpec, weight_operators_numpy

logger = logging.getLogger(__name__)

# Slack for float comparisons against the analytic bounds
BOUND_ATOL = 1e-9


@dataclass(frozen=True)
class BoundCheck:
    name: str
    value: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.value <= self.bound + BOUND_ATOL


@dataclass
class StabilityReport:
    """Tally of bound checks from randomized trials."""

    checks: list[BoundCheck] = field(default_factory=list)

    def add(self, check: BoundCheck) -> None:
        self.checks.append(check)

    @property
    def violations(self) -> list[BoundCheck]:
        return [c for c in self.checks if not c.holds]

    @property
    def passed(self) -> bool:
        return not self.violations

    def summary(self) -> dict[str, tuple[int, int]]:
        """name -> (checks run, violations)."""
        out: dict[str, tuple[int, int]] = {}
        for c in self.checks:
            runs, bad = out.get(c.name, (0, 0))
            out[c.name] = (runs + 1, bad + (0 if c.holds else 1))
        return out


def _weights(ops: np.ndarray, psi: np.ndarray) -> np.ndarray:
    return np.einsum("d,tde,e->t", psi.conj(), ops, psi).real


def deviation(ops: np.ndarray, psi: np.ndarray) -> float:
    """Least eps for which the unit vector psi is eps-t-halting, t being the last index of ops."""
    w = _weights(ops, psi)
    return float(max([*w[:-1], 1 - w[-1]]))


class WeightOracle:
    """Float qf-weight operators A_0..A_t of one machine on H_n."""

    def __init__(self, spec: QtmSpec, n: int, t: int, caps: ResourceCaps | None = None):
        self.n = n
        self.t = t
        self.ops = weight_operators_numpy(spec, n, t, resolve_caps(caps))

    @property
    def dim(self) -> int:
        return self.ops.shape[1]

    def _vector(self, v: Sequence[Any] | np.ndarray) -> np.ndarray:
        arr = np.asarray([complex(x) for x in v] if not isinstance(v, np.ndarray) else v, dtype=complex)
        if arr.shape != (self.dim,):
            raise DimensionMismatchError(f"vector of shape {arr.shape} against H_{self.n}")
        return arr

    def eps_at(self, psi: Sequence[Any] | np.ndarray, t: int | None = None) -> float:
        """eps_min of the normalized psi at halting time t (default: the oracle's horizon)."""
        t = self.t if t is None else t
        if not 1 <= t <= self.t:
            raise InvalidParameterError(f"halting time {t} outside 1..{self.t}")
        v = self._vector(psi)
        return deviation(self.ops[: t + 1], v / np.linalg.norm(v))

    def matrix_element_bound(self, phi: Sequence[Any] | np.ndarray, psi: Sequence[Any] | np.ndarray) -> BoundCheck:
        """|<qf|M_C^{t'}(|phi><psi|)|qf>| <= sqrt(eps delta) for t' < t, and the non-qf part at t."""
        a, b = self._vector(phi), self._vector(psi)
        a, b = a / np.linalg.norm(a), b / np.linalg.norm(b)
        eps, delta = max(0.0, deviation(self.ops, a)), max(0.0, deviation(self.ops, b))
        elements = [abs(np.vdot(b, op @ a)) for op in self.ops[:-1]]
        elements.append(abs(np.vdot(b, (np.eye(self.dim) - self.ops[-1]) @ a)))
        return BoundCheck("matrix-element", float(max(elements)), math.sqrt(eps * delta))

    def superposition_bound(
        self, vectors: Sequence[Sequence[Any] | np.ndarray], alphas: Sequence[complex]
    ) -> BoundCheck:
        """sum_i alpha_i phi_i deviates from halting by at most (sum_i |alpha_i| sqrt(eps_i))^2."""
        if len(vectors) != len(alphas) or not vectors:
            raise InvalidParameterError("superposition needs matching, non-empty vectors and coefficients")
        units = [self._vector(v) / np.linalg.norm(self._vector(v)) for v in vectors]
        bound = sum(abs(al) * math.sqrt(max(0.0, deviation(self.ops, u))) for al, u in zip(alphas, units, strict=True))
        combo = sum((al * u for al, u in zip(alphas, units, strict=True)), np.zeros(self.dim, dtype=complex))
        w = _weights(self.ops, combo)
        value = max([*w[:-1], float(np.vdot(combo, combo).real) - w[-1]])
        return BoundCheck("superposition", float(value), bound**2)

    def almost_orthogonality_bound(
        self, psi: Sequence[Any] | np.ndarray, t_psi: int, phi: Sequence[Any] | np.ndarray, t_phi: int
    ) -> BoundCheck | None:
        """|<psi|phi>| <= sqrt(1 - (1 - eps - delta)^2) for halting times t_psi != t_phi; None if eps + delta > 1."""
        if t_psi == t_phi:
            raise InvalidParameterError("almost-orthogonality compares different halting times")
        eps, delta = max(0.0, self.eps_at(psi, t_psi)), max(0.0, self.eps_at(phi, t_phi))
        if eps + delta > 1:
            return None
        a, b = self._vector(psi), self._vector(phi)
        overlap = abs(np.vdot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b))
        return BoundCheck("almost-orthogonality", float(overlap), math.sqrt(1 - (1 - eps - delta) ** 2))

    def control_state_bounds(self, psi: Sequence[Any] | np.ndarray, phi: Sequence[Any] | np.ndarray) -> list[BoundCheck]:
        """Weights move by at most the trace norm of the input difference, and by |1 - |v|^2| under normalization."""
        a, b = self._vector(psi), self._vector(phi)
        ua, ub = a / np.linalg.norm(a), b / np.linalg.norm(b)
        gap = trace_norm(np.outer(ua, ua.conj()) - np.outer(ub, ub.conj()))
        moved = float(np.max(np.abs(_weights(self.ops, ua) - _weights(self.ops, ub))))
        rescaled = float(np.max(np.abs(_weights(self.ops, a) - _weights(self.ops, ua))))
        return [
            BoundCheck("control-state", moved, gap),
            BoundCheck("norm-deviation", rescaled, abs(1 - float(np.vdot(a, a).real))),
        ]


def inner_product_dimension_check(vectors: Sequence[Sequence[Any]]) -> tuple[bool, bool]:
    """(premise, independent): pairwise |<u,v>| < 1/(N-1) for normalized vectors forces rank N.

    Both parts are exact; the premise is compared as |<u,v>|^2 (N-1)^2 < |u|^2 |v|^2.
    """
    size = len(vectors)
    exact = [tuple(CRat.of(x) for x in v) for v in vectors]
    premise = True
    for i in range(size):
        for j in range(i + 1, size):
            c = inner(exact[i], exact[j])
            if c.abs2() * (size - 1) ** 2 >= norm_sq(exact[i]) * norm_sq(exact[j]):
                premise = False
                break
        if not premise:
            break
    return premise, rank(exact) == size if exact else True


def contractivity_check(rho: np.ndarray, sigma: np.ndarray, n_keep: int, n_total: int) -> BoundCheck:
    """Partial trace over the last qubits does not increase the trace distance."""
    reduced = trace_distance(
        partial_trace_last_qubits(rho, n_keep, n_total), partial_trace_last_qubits(sigma, n_keep, n_total)
    )
    return BoundCheck("contractivity", reduced, trace_distance(rho, sigma))


def _random_unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def _random_density(rng: np.random.Generator, dim: int) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def run_stability_trials(
    spec: QtmSpec,
    n: int,
    t: int,
    trials: int,
    rng: np.random.Generator,
    halting_vectors: Sequence[Sequence[Any]] = (),
    caps: ResourceCaps | None = None,
) -> StabilityReport:
    """Sample near-halting and random inputs of length n and check every lemma at time t.

    ``halting_vectors`` (exact t-halting directions) seed the near-halting samples; without them
    the samples are uniform on the sphere.
    """
    caps = resolve_caps(caps)
    oracle = WeightOracle(spec, n, t, caps)
    seeds = [np.array([complex(x) for x in v]) for v in halting_vectors]
    report = StabilityReport()

    def sample() -> np.ndarray:
        base = seeds[int(rng.integers(len(seeds)))] if seeds else _random_unit(rng, oracle.dim)
        v = base / np.linalg.norm(base) + rng.uniform(0, 0.3) * _random_unit(rng, oracle.dim)
        return v / np.linalg.norm(v)

    for _ in range(trials):
        phi, psi = sample(), sample()
        report.add(oracle.matrix_element_bound(phi, psi))
        alphas = rng.normal(size=2) + 1j * rng.normal(size=2)
        alphas = alphas / np.linalg.norm(alphas)
        report.add(oracle.superposition_bound([phi, psi], list(alphas)))
        for check in oracle.control_state_bounds(phi * rng.uniform(0.8, 1.2), psi):
            report.add(check)
        if t > 1:
            other = oracle.almost_orthogonality_bound(phi, t, psi, int(rng.integers(1, t)))
            if other is not None:
                report.add(other)
        n_total = n + 1
        report.add(contractivity_check(_random_density(rng, 2**n_total), _random_density(rng, 2**n_total), n, n_total))
    bad = report.violations
    if bad:
        logger.warning(f"{len(bad)} bound violations for {spec.name} at n={n}, t={t}")
    logger.info(f"stability trials for {spec.name} (n={n}, t={t}): {report.summary()}")
    return report
