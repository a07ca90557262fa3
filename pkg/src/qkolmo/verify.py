"""Seeded property suites behind ``qkolmo verify-suite``.

Each suite exercises one family of invariants and returns a ``SuiteResult``. Randomized suites
draw from generators derived from the config seed only, so a report depends on nothing but
the config and the installed code.

Usage:
    >>> from qkolmo.config import load_verify_config
    >>> report = run_verify_suite(load_verify_config(), only=["coding"])
    >>> report.passed
    True
"""

from __future__ import annotations

import logging
import math
import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Any

import numpy as np

from .brudno import (
    SPAN_ATOL,
    beta_report,
    consistency_check,
    empirical_typical_codewords,
    load_source,
    load_source_fixture,
    rotation_invariance_check,
    subadditivity_check,
    symmetric_rank,
    symmetric_subspace_dim,
    trace_bound,
    universal_typical_projector,
)
from .coding import (
    CompressionMap,
    blind_prefix_code,
    compress,
    decompress,
    exact_vector_numpy,
    is_prefix_free,
    isometry_defect,
    kraft_sum,
)
from .complexity import Ensemble, chi_quantity, counting_bound, counting_experiment, dephase, relation_check
from .config import ResourceCaps, VerifyConfig, load_caps
from .errors import InvalidParameterError, QkolmoError
from .halting import approx_halting_space, eps_t_halting, halting_spaces, mutually_orthogonal
from .linalg import CRat, ScaledUnitVector, trace_distance
from .machine import QtmSpec, apply, load_fixture, load_spec, random_reversible_machine, validate_unitarity
from .qubits import QubitString, strings_of_length
from .stability import inner_product_dimension_check, run_stability_trials
from .universal import decode_program, encode_input

logger = logging.getLogger(__name__)

# Slack for float comparisons in the suites
SUITE_ATOL = 1e-10
BETA_NS = (4, 8, 12, 16)
BETA_EPS = Fraction(1, 10)
COUNTING_DELTA = Fraction(1, 16)
COUNTING_MAX_LEN = 6
RELATION_KS = (2, 4, 8)
RELATION_TARGETS = 20
FLOAT_DECODE_DELTA = 1e-4
COMPRESSION_DELTAS = (1e-3, 1e-6)


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    detail: str
    failures: tuple[str, ...] = ()

    def lines(self) -> list[str]:
        head = f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"
        return [head, *(f"    {f}" for f in self.failures)]


@dataclass
class VerifyReport:
    seed: int
    caps: ResourceCaps
    results: list[SuiteResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def render(self) -> str:
        lines = [f"# qkolmo verify-suite seed={self.seed}", f"# caps: {self.caps.model_dump_json()}"]
        for result in self.results:
            lines.extend(result.lines())
        lines.append(f"verdict: {'pass' if self.passed else 'fail'}")
        return "\n".join(lines) + "\n"


def resolve_machine(name: str) -> QtmSpec:
    """A packaged fixture name or a path to a ``.qtm`` file."""
    path = Path(name)
    if path.suffix == ".qtm" or path.exists():
        return load_spec(path)
    return load_fixture(name)


class SuiteContext:
    """Shared inputs for one verify run: caps, machines, sources and per-suite generators."""

    def __init__(self, config: VerifyConfig):
        self.config = config
        self.caps = load_caps(config.caps)

    def rng(self, suite: str) -> np.random.Generator:
        return np.random.default_rng([self.config.seed, *suite.encode()])

    @cached_property
    def machines(self) -> list[QtmSpec]:
        return [resolve_machine(m) for m in self.config.machines]

    @cached_property
    def random_machines(self) -> list[QtmSpec]:
        rng = self.rng("random-machines")
        return [
            random_reversible_machine(rng, n_states=2 + i % 2, name=f"random{i}") for i in range(self.config.random_machines)
        ]

    @cached_property
    def identity(self) -> QtmSpec:
        return load_fixture("identity")


def _random_subspace_vector(rng: np.random.Generator, basis: Sequence[Sequence[Any]]) -> list[CRat]:
    """Small-integer combination of exact basis directions (never the zero vector)."""
    while True:
        coeffs = [CRat(int(rng.integers(-3, 4)), int(rng.integers(-2, 3))) for _ in basis]
        combo = [sum((c * v[i] for c, v in zip(coeffs, basis, strict=True)), CRat()) for i in range(len(basis[0]))]
        if any(combo):
            return combo


# ---------------------------------------------------------------------------
# suites


def suite_validation(ctx: SuiteContext) -> SuiteResult:
    failures = []
    machines = [*ctx.machines, *ctx.random_machines]
    n_max = max(1, ctx.config.n_max)
    for spec in machines:
        if not validate_unitarity(spec, ctx.config.t_max, n_max, ctx.caps):
            failures.append(f"{spec.name} ({spec.machine_id}) is not unitary up to t={ctx.config.t_max}")
    return SuiteResult("validation", not failures, f"{len(machines)} machines checked", tuple(failures))


def suite_halting(ctx: SuiteContext) -> SuiteResult:
    failures = []
    checked = 0
    for spec in [*ctx.machines, *ctx.random_machines]:
        if not spec.is_rational:
            logger.debug(f"halting suite skips {spec.name}: irrational amplitudes")
            continue
        for n in range(1, ctx.config.n_max + 1):
            spaces = halting_spaces(spec, n, ctx.config.t_max, ctx.caps)
            checked += 1
            total = sum(s.dim for s in spaces)
            if total > 1 << n:
                failures.append(f"{spec.name} n={n}: dimensions sum to {total} > {1 << n}")
            if not mutually_orthogonal(spaces):
                failures.append(f"{spec.name} n={n}: halting spaces are not orthogonal")
    return SuiteResult("halting", not failures, f"{checked} (machine, n) pairs exact", tuple(failures))


def suite_approx(ctx: SuiteContext) -> SuiteResult:
    spec, n = ctx.identity, 1
    delta = Fraction(ctx.config.approx_delta)
    t_max = ctx.config.approx_t_max
    exact = halting_spaces(spec, n, t_max, ctx.caps)
    failures = []
    for t in range(1, t_max + 1):
        approx = approx_halting_space(spec, n, delta, t, ctx.caps)
        if approx.dim != exact[t - 1].dim:
            failures.append(f"t={t}: approximate dim {approx.dim}, exact dim {exact[t - 1].dim}")
        for v in approx.vectors:
            if not eps_t_halting(spec, QubitString.from_vector(v, n), t, 20 * delta, ctx.caps):
                failures.append(f"t={t}: basis vector is not {20 * delta}-{t}-halting")
    return SuiteResult("approx", not failures, f"identity n=1 delta={delta} t<={t_max}", tuple(failures))


def _kraft_lengths(rng: np.random.Generator) -> list[int]:
    lengths: list[int] = []
    mass = Fraction(0)
    for _ in range(int(rng.integers(1, 65))):
        ell = int(rng.integers(1, 13))
        if mass + Fraction(1, 1 << ell) <= 1:
            lengths.append(ell)
            mass += Fraction(1, 1 << ell)
    return lengths


def suite_coding(ctx: SuiteContext) -> SuiteResult:
    failures = []
    worked = blind_prefix_code([1, 2, 2]).codewords
    if worked != ("0", "10", "11"):
        failures.append(f"lengths [1, 2, 2] gave {worked}")
    rng = ctx.rng("coding")
    for trial in range(ctx.config.blind_code_trials):
        lengths = _kraft_lengths(rng)
        try:
            code = blind_prefix_code(lengths)
        except QkolmoError as e:
            failures.append(f"trial {trial}: {e}")
            continue
        if [len(c) for c in code.codewords] != lengths or not is_prefix_free(code.codewords):
            failures.append(f"trial {trial}: bad code for {lengths}")
        elif kraft_sum(lengths) > 1:
            failures.append(f"trial {trial}: Kraft mass {kraft_sum(lengths)}")
    return SuiteResult("coding", not failures, f"{ctx.config.blind_code_trials} blind codes", tuple(failures[:10]))


def suite_compression(ctx: SuiteContext) -> SuiteResult:
    rng = ctx.rng("compression")
    failures = []
    worst = 0.0
    for trial in range(ctx.config.compression_trials):
        n = int(rng.integers(1, 5))
        dim = 1 << n
        k = int(rng.integers(1, dim + 1))
        spanning = [
            [CRat(int(rng.integers(-2, 3)), int(rng.integers(-1, 2))) for _ in range(dim)] for _ in range(k)
        ]
        if not any(any(v) for v in spanning):
            continue
        cmap = CompressionMap.for_subspace(spanning)
        if isometry_defect(cmap):
            failures.append(f"trial {trial}: standard basis is not orthogonal")
            continue
        psi = _random_subspace_vector(rng, [u.direction for u in cmap.basis])
        payload = compress(cmap, psi)
        restored = decompress(cmap, payload, 0)
        assert isinstance(restored, ScaledUnitVector)
        if not restored.equivalent(ScaledUnitVector.from_vector(psi)):
            failures.append(f"trial {trial}: exact round trip changed the vector")
        expected = exact_vector_numpy(psi)
        for delta in COMPRESSION_DELTAS:
            error = float(np.linalg.norm(decompress(cmap, payload, delta) - expected))
            worst = max(worst, error / delta)
            if error > delta:
                failures.append(f"trial {trial}: float error {error:.3g} > {delta}")
    detail = f"{ctx.config.compression_trials} subspaces, worst float error {worst:.3g} of budget"
    return SuiteResult("compression", not failures, detail, tuple(failures[:10]))


def _pipeline_machines(ctx: SuiteContext) -> list[tuple[QtmSpec, int]]:
    pairs = [(ctx.identity, 1), (ctx.identity, 2)]
    for spec in ctx.random_machines:
        for n in range(1, ctx.config.n_max + 1):
            if any(s.dim for s in halting_spaces(spec, n, ctx.config.t_max, ctx.caps)):
                return [*pairs, (spec, n)]
    return pairs


def suite_pipeline(ctx: SuiteContext) -> SuiteResult:
    rng = ctx.rng("pipeline")
    failures = []
    runs = 0
    t_max = ctx.config.t_max
    for spec, n in _pipeline_machines(ctx):
        spaces = [s for s in halting_spaces(spec, n, t_max, ctx.caps) if s.dim]
        labels = strings_of_length(n)
        for trial in range(ctx.config.pipeline_trials):
            space = spaces[int(rng.integers(len(spaces)))]
            psi = _random_subspace_vector(rng, space.vectors)
            expected = apply(spec, QubitString.from_ket(dict(zip(labels, psi, strict=True))), t_max, ctx.caps)
            program = encode_input(spec, psi, t_max, caps=ctx.caps)
            runs += 1
            if program.quantum_length != n + 1:
                failures.append(f"{spec.name} n={n} trial {trial}: quantum length {program.quantum_length}")
            assert expected is not None
            exact = decode_program(program, 0, t_max, ctx.caps)
            if not exact.equals(expected):
                failures.append(f"{spec.name} n={n} trial {trial}: exact decode differs from M(psi)")
            approx = decode_program(program, FLOAT_DECODE_DELTA, t_max, ctx.caps)
            size = max(approx.max_len, expected.max_len)
            gap = trace_distance(approx.padded(size).to_numpy(), expected.padded(size).to_numpy())
            if gap >= FLOAT_DECODE_DELTA:
                failures.append(f"{spec.name} n={n} trial {trial}: float decode off by {gap:.3g}")
    return SuiteResult("pipeline", not failures, f"{runs} encode/decode round trips", tuple(failures[:10]))


def suite_counting(ctx: SuiteContext) -> SuiteResult:
    failures = [f"counting_bound({d}, 0) != log {d}" for d in range(1, 17) if abs(counting_bound(d, 0) - math.log2(d)) > SUITE_ATOL]
    experiment = counting_experiment(ctx.identity, COUNTING_MAX_LEN, COUNTING_DELTA, ctx.config.t_max, ctx.caps)
    if not experiment.holds:
        failures.append(f"family of {experiment.family} exceeds 2^{experiment.bound:.3f}")
    detail = f"{experiment.outputs} outputs, family {experiment.family} <= 2^{experiment.bound:.3f} (upper bound)"
    return SuiteResult("counting", not failures, detail, tuple(failures))


def _random_density(rng: np.random.Generator, dim: int, rank: int) -> np.ndarray:
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def suite_bounds(ctx: SuiteContext) -> SuiteResult:
    rng = ctx.rng("bounds")
    failures = []
    spec = ctx.identity
    n, t = 2, 3
    halting = [v for s in halting_spaces(spec, n, t, ctx.caps) if s.t == t for v in s.vectors]
    report = run_stability_trials(spec, n, t, ctx.config.bound_trials, rng, halting, ctx.caps)
    failures.extend(f"{c.name}: {c.value:.6g} > {c.bound:.6g}" for c in report.violations)
    for trial in range(ctx.config.bound_trials):
        dim = 1 << int(rng.integers(1, 3))
        members = int(rng.integers(1, 5))
        states = tuple(_random_density(rng, dim, int(rng.integers(1, dim + 1))) for _ in range(members))
        weights = rng.dirichlet(np.ones(members))
        ensemble = Ensemble(tuple(float(w) for w in weights), states)
        chi = chi_quantity(ensemble)
        if chi < -SUITE_ATOL:
            failures.append(f"chi trial {trial}: {chi}")
    premise_trials = 0
    for _ in range(50):
        size = int(rng.integers(2, 5))
        vectors = [[CRat(int(x)) for x in rng.integers(-1, 2, size=8)] for _ in range(size)]
        if not all(any(v) for v in vectors):
            continue
        premise, independent = inner_product_dimension_check(vectors)
        premise_trials += premise
        if premise and not independent:
            failures.append("inner-product premise held for a dependent family")
    orthogonal = Ensemble.of_kets([np.eye(4)[i] for i in range(4)])
    if chi_quantity(dephase(orthogonal)) > chi_quantity(orthogonal) + SUITE_ATOL:
        failures.append("dephasing increased chi")
    detail = f"{len(report.checks)} lemma checks, {ctx.config.bound_trials} chi samples, {premise_trials} Gram premises"
    return SuiteResult("bounds", not failures, detail, tuple(failures[:10]))


def suite_brudno(ctx: SuiteContext) -> SuiteResult:
    failures = []
    rng = ctx.rng("brudno")
    sources = [load_source(s) if Path(s).suffix == ".src" else load_source_fixture(s) for s in ctx.config.sources]
    for source in sources:
        for n in range(1, 5):
            if not consistency_check(source, n, ctx.caps):
                failures.append(f"{source.name}: marginal of rho^({n + 1}) is not rho^({n})")
            for m in range(1, 5 - n):
                joint, split = subadditivity_check(source, n, m, ctx.caps)
                if joint > split + SUITE_ATOL:
                    failures.append(f"{source.name}: S({n + m}) = {joint:.6f} > {split:.6f}")
        if source.kind == "iid":
            rows = beta_report(source, BETA_NS, BETA_EPS, ctx.caps)
            if abs(rows[-1].gap) > 0.15:
                failures.append(f"{source.name}: beta/n gap {rows[-1].gap:.4f} at n={rows[-1].n}")
            if abs(rows[-1].gap) > abs(rows[0].gap):
                failures.append(f"{source.name}: gap grew from n={rows[0].n} to n={rows[-1].n}")
    for n in range(1, 4):
        if symmetric_rank(1, n, ctx.caps) != symmetric_subspace_dim(1, n):
            failures.append(f"symmetric rank at l=1, n={n} differs from C({n + 3}, 3)")
    instances = 0
    for n in (2, 3, 4):
        for rate in (0.5, 0.9):
            codewords = empirical_typical_codewords(1, n, rate)
            projector = universal_typical_projector(codewords, 1, n, n, ctx.caps)
            instances += 1
            if projector.log_trace > trace_bound(1, n, rate) + SUITE_ATOL:
                failures.append(f"l=1 n={n} R={rate}: log trace {projector.log_trace:.3f} over bound")
            residual = rotation_invariance_check(projector, codewords, rng)
            if residual > SPAN_ATOL:
                failures.append(f"l=1 n={n} R={rate}: rotated codeword leaves the span by {residual:.3g}")
    detail = f"{len(sources)} sources, {instances} universal projectors"
    return SuiteResult("brudno", not failures, detail, tuple(failures))


def suite_relation(ctx: SuiteContext) -> SuiteResult:
    rng = ctx.rng("relation")
    failures = []
    pool = [s for k in range(4) for s in strings_of_length(k)]
    for _ in range(RELATION_TARGETS):
        target = QubitString.classical(pool[int(rng.integers(len(pool)))])
        for k in RELATION_KS:
            check = relation_check(ctx.identity, target, k, max_len=4, t_max=ctx.config.t_max, caps=ctx.caps)
            if not check.holds:
                failures.append(f"{target.label()} k={k}: {check.approximate} ({check.witness}) > {check.bound}")
            if check.approximate < 2:
                failures.append(f"{target.label()} k={k}: witness {check.witness} skipped its parameter")
    detail = f"{RELATION_TARGETS} targets, k in {list(RELATION_KS)}, scheme inputs <k', sigma> over searched sigma"
    return SuiteResult("relation", not failures, detail, tuple(failures))


SUITES: dict[str, Callable[[SuiteContext], SuiteResult]] = {
    "validation": suite_validation,
    "halting": suite_halting,
    "approx": suite_approx,
    "coding": suite_coding,
    "compression": suite_compression,
    "pipeline": suite_pipeline,
    "counting": suite_counting,
    "bounds": suite_bounds,
    "brudno": suite_brudno,
    "relation": suite_relation,
}


def run_verify_suite(config: VerifyConfig, only: Sequence[str] | None = None) -> VerifyReport:
    """Run the selected suites (all by default); a suite that raises a domain error fails."""
    names = list(only) if only else list(SUITES)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise InvalidParameterError(f"unknown suites {unknown}; choose from {list(SUITES)}")
    if not config.run_approx and "approx" in names and only is None:
        names.remove("approx")
    ctx = SuiteContext(config)
    report = VerifyReport(config.seed, ctx.caps)
    for name in names:
        start = time.perf_counter()
        try:
            result = SUITES[name](ctx)
        except QkolmoError as e:
            logger.error(f"suite {name} aborted: {e}")
            result = SuiteResult(name, False, f"aborted: {e}")
        logger.info(f"suite {name}: {'pass' if result.passed else 'fail'} in {time.perf_counter() - start:.1f}s")
        report.results.append(result)
    return report
