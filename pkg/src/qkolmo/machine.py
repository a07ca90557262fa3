"""Quantum Turing machine model with exact finite-window evolution.

A machine has two tape tracks (input, output); a tape symbol is a two character string over
{0, 1, #} whose first character is the input track and second the output track. Rules map a
(state, read symbol) pair to a superposition of (state, written symbol, move) successors.

Usage:
    >>> from qkolmo.machine import apply, load_fixture
    >>> from qkolmo.qubits import QubitString
    >>> identity = load_fixture("identity")
    >>> apply(identity, QubitString.classical("01"), t_max=10).label()
    '01'
"""

from __future__ import annotations

import hashlib
import logging
from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Any, NamedTuple

import numpy as np
import sympy as sp

from .coding import self_delim_encode
from .config import ResourceCaps, resolve_caps
from .errors import InvalidParameterError, MachineDefinitionError, SpecParseError
from .linalg import ONE, ZERO, CMat, CRat, conj, is_zero, rational_sqrt
from .qubits import QubitString, direct_sum_dim, index_string, string_index, strings_of_length, tensor_classical_prefix

logger = logging.getLogger(__name__)

BLANK = "#"
BLANK_SYMBOL = "##"
TRACK_CHARS = frozenset("01#")
MOVES = {"L": -1, "R": 1}
# Symbols a machine reads on a fresh cell of the input track
INPUT_SYMBOLS = ("0#", "1#", "##")
ALL_SYMBOLS = tuple(a + b for a in "01#" for b in "01#")
# Float qf-weights this close to 0 or 1 count as exact
FLOAT_WEIGHT_ATOL = 1e-12


@dataclass(frozen=True)
class Transition:
    target: str
    write: str
    move: int
    amplitude: CRat


@dataclass(frozen=True)
class RuleGroup:
    """All successors of one (state, read symbol) pair, scaled by 1/sqrt(norm_sq)."""

    state: str
    read: str
    transitions: tuple[Transition, ...]
    norm_sq: Fraction = Fraction(1)


class Configuration(NamedTuple):
    state: str
    cells: tuple[tuple[int, str], ...]
    head: int


def _check_symbol(symbol: str, where: str) -> None:
    if len(symbol) != 2 or set(symbol) - TRACK_CHARS:
        raise MachineDefinitionError(f"{where}: '{symbol}' is not a two-track symbol over {{0,1,#}}")


@dataclass(frozen=True)
class QtmSpec:
    """A validated-on-construction transition table."""

    states: tuple[str, ...]
    initial: str
    final: str
    rules: tuple[RuleGroup, ...]
    name: str = "machine"
    _table: Mapping[tuple[str, str], tuple[tuple[Transition, Any], ...]] = field(
        init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        known = set(self.states)
        if len(known) != len(self.states):
            raise MachineDefinitionError("duplicate state names")
        if self.initial not in known or self.final not in known:
            raise MachineDefinitionError("initial and final states must be declared")
        if self.initial == self.final:
            raise MachineDefinitionError("initial and final states must differ")
        table: dict[tuple[str, str], tuple[tuple[Transition, Any], ...]] = {}
        for group in self.rules:
            where = f"rule ({group.state}, {group.read})"
            if group.state not in known:
                raise MachineDefinitionError(f"{where}: unknown state")
            _check_symbol(group.read, where)
            if (group.state, group.read) in table:
                raise MachineDefinitionError(f"{where}: defined twice")
            if group.norm_sq <= 0:
                raise MachineDefinitionError(f"{where}: normsq must be positive")
            if not group.transitions:
                raise MachineDefinitionError(f"{where}: no successors")
            root = rational_sqrt(group.norm_sq)
            effective = []
            for tr in group.transitions:
                if tr.target not in known:
                    raise MachineDefinitionError(f"{where}: unknown target state '{tr.target}'")
                _check_symbol(tr.write, where)
                if tr.move not in (-1, 1):
                    raise MachineDefinitionError(f"{where}: move must be L or R")
                if not tr.amplitude:
                    raise MachineDefinitionError(f"{where}: zero amplitude")
                if root is not None:
                    effective.append((tr, tr.amplitude / root))
                else:
                    effective.append((tr, tr.amplitude.to_sympy() / sp.sqrt(sp.Rational(group.norm_sq))))
            table[(group.state, group.read)] = tuple(effective)
        object.__setattr__(self, "_table", MappingProxyType(table))

    @cached_property
    def is_rational(self) -> bool:
        """True when every effective amplitude is a Gaussian rational."""
        return all(rational_sqrt(g.norm_sq) is not None for g in self.rules)

    def successors(self, state: str, symbol: str) -> tuple[tuple[Transition, Any], ...]:
        return self._table.get((state, symbol), ())

    def one(self) -> Any:
        return ONE if self.is_rational else sp.Integer(1)

    def lift(self, x: Any) -> Any:
        """Bring an input coefficient into this machine's amplitude field."""
        if not self.is_rational and isinstance(x, CRat):
            return x.to_sympy()
        return x

    @cached_property
    def machine_id(self) -> str:
        return hashlib.sha256(dump_spec(self).encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# spec file format


def parse_spec(text: str, name: str = "machine") -> QtmSpec:
    """Parse the line-oriented machine format (see ``dump_spec``)."""
    states: list[str] | None = None
    initial = final = None
    groups: list[RuleGroup] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#!", 1)[0].strip()
        if not line:
            continue
        where = f"line {lineno}"
        if "->" in line:
            groups.append(_parse_rule(line, where))
            continue
        key, _, value = line.partition(":")
        key, value = key.strip(), value.strip()
        if key == "states":
            states = value.split()
        elif key == "initial":
            initial = value
        elif key == "final":
            final = value
        elif key == "normsq":
            if not groups:
                raise SpecParseError(f"{where}: normsq before any rule")
            try:
                norm = Fraction(value)
            except (ValueError, ZeroDivisionError) as e:
                raise SpecParseError(f"{where}: bad normsq '{value}'") from e
            last = groups[-1]
            groups[-1] = RuleGroup(last.state, last.read, last.transitions, norm)
        else:
            raise SpecParseError(f"{where}: unknown header '{key}'")
    if states is None or initial is None or final is None:
        raise SpecParseError("machine spec needs 'states:', 'initial:' and 'final:' lines")
    return QtmSpec(tuple(states), initial, final, tuple(groups), name=name)


def _parse_rule(line: str, where: str) -> RuleGroup:
    lhs, _, rhs = line.partition("->")
    left = lhs.split()
    if len(left) != 2:
        raise SpecParseError(f"{where}: rule needs 'state symbol -> ...'")
    transitions = []
    for part in rhs.split(";"):
        fields = part.split()
        if len(fields) != 4:
            raise SpecParseError(f"{where}: successor '{part.strip()}' needs 'state symbol L|R amplitude'")
        target, write, move, amp = fields
        if move not in MOVES:
            raise SpecParseError(f"{where}: direction '{move}' is not L or R")
        transitions.append(Transition(target, write, MOVES[move], CRat.parse(amp)))
    return RuleGroup(left[0], left[1], tuple(transitions))


def dump_spec(spec: QtmSpec) -> str:
    lines = [f"states: {' '.join(spec.states)}", f"initial: {spec.initial}", f"final: {spec.final}"]
    for group in spec.rules:
        succ = " ; ".join(
            f"{tr.target} {tr.write} {'L' if tr.move < 0 else 'R'} {tr.amplitude}" for tr in group.transitions
        )
        lines.append(f"{group.state} {group.read} -> {succ}")
        if group.norm_sq != 1:
            lines.append(f"normsq: {group.norm_sq}")
    return "\n".join(lines) + "\n"


def load_spec(path: str | Path) -> QtmSpec:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise SpecParseError(f"cannot read machine file {path}: {e}") from e
    return parse_spec(text, name=path.stem)


def load_fixture(name: str) -> QtmSpec:
    """Load one of the packaged example machines (``identity``, ``prefix``, ``hadamard``...)."""
    try:
        text = resources.files("qkolmo.data").joinpath(f"{name}.qtm").read_text(encoding="utf-8")
    except (FileNotFoundError, OSError) as e:
        raise SpecParseError(f"no packaged machine named '{name}'") from e
    return parse_spec(text, name=name)


# ---------------------------------------------------------------------------
# evolution


def initial_configuration(spec: QtmSpec, bits: str) -> Configuration:
    cells = tuple((i, b + BLANK) for i, b in enumerate(bits))
    return Configuration(spec.initial, cells, 0)


def _successor(cfg: Configuration, tr: Transition) -> Configuration:
    cells = dict(cfg.cells)
    if tr.write == BLANK_SYMBOL:
        cells.pop(cfg.head, None)
    else:
        cells[cfg.head] = tr.write
    return Configuration(tr.target, tuple(sorted(cells.items())), cfg.head + tr.move)


def _read(cfg: Configuration) -> str:
    for pos, symbol in cfg.cells:
        if pos == cfg.head:
            return symbol
    return BLANK_SYMBOL


def step_branch(spec: QtmSpec, branch: Mapping[Configuration, Any]) -> dict:
    """One application of the transition rule to a superposition of configurations.

    The head moves at most one cell per step, so after t steps it lies in [-t, n + t].
    """
    out: dict[Configuration, Any] = {}
    for cfg, amp in branch.items():
        for tr, coeff in spec.successors(cfg.state, _read(cfg)):
            nxt = _successor(cfg, tr)
            out[nxt] = out.get(nxt, ZERO if spec.is_rational else sp.Integer(0)) + amp * coeff
    if spec.is_rational:
        return {c: a for c, a in out.items() if a}
    expanded = {c: sp.expand(a) for c, a in out.items()}
    return {c: a for c, a in expanded.items() if a != 0}


@dataclass(frozen=True)
class GlobalState:
    """The machine state M^t(sigma), kept as evolved branches of the input's basis strings.

    The density operator is sum_xy coefficients[x][y] |branch_x><branch_y|.
    """

    time: int
    window: tuple[int, int]
    labels: tuple[str, ...]
    coefficients: Any
    branches: tuple[Mapping[Configuration, Any], ...]
    final: str
    ket: tuple[Any, ...] | None = None

    def _pairs(self) -> Iterator[tuple[int, int, Any]]:
        for x in range(len(self.labels)):
            for y in range(len(self.labels)):
                rho = self.coefficients[x][y]
                if not is_zero(rho):
                    yield x, y, rho

    @property
    def amplitudes(self) -> dict[Configuration, Any]:
        """Configuration amplitudes of a pure state (requires a pure input)."""
        if self.ket is None:
            raise InvalidParameterError("amplitudes are only defined for pure inputs")
        out: dict[Configuration, Any] = {}
        for c, branch in zip(self.ket, self.branches, strict=True):
            for cfg, a in branch.items():
                out[cfg] = out.get(cfg, 0) + _mul(c, a)
        return {cfg: a for cfg, a in out.items() if not is_zero(a)}

    def norm_sq(self) -> Any:
        total: Any = 0
        for x, y, rho in self._pairs():
            bx, by = self.branches[x], self.branches[y]
            for cfg, a in bx.items():
                b = by.get(cfg)
                if b is not None:
                    total = total + rho * a * conj(b)
        return _simplify(total)

    def qf_weight(self) -> Any:
        return control_state(self).weight(self.final)


@dataclass(frozen=True)
class ControlState:
    states: tuple[str, ...]
    matrix: tuple[tuple[Any, ...], ...]

    def weight(self, state: str) -> Any:
        if state not in self.states:
            return 0
        i = self.states.index(state)
        return self.matrix[i][i]


def _mul(a: Any, b: Any) -> Any:
    """Product that lifts CRat into sympy when the other factor is symbolic."""
    if isinstance(a, CRat) and isinstance(b, sp.Basic):
        a = a.to_sympy()
    elif isinstance(b, CRat) and isinstance(a, sp.Basic):
        b = b.to_sympy()
    return a * b


def _simplify(x: Any) -> Any:
    if isinstance(x, (CRat, int, Fraction, complex, float)):
        return x
    return sp.expand(x)


def control_state(g: GlobalState) -> ControlState:
    """Partial trace of the global state over tape and head."""
    keyed = []
    for branch in g.branches:
        by_rest: dict[tuple, dict[str, Any]] = {}
        for cfg, a in branch.items():
            by_rest.setdefault((cfg.cells, cfg.head), {})[cfg.state] = a
        keyed.append(by_rest)
    states = sorted({cfg.state for branch in g.branches for cfg in branch})
    index = {q: i for i, q in enumerate(states)}
    acc: list[list[Any]] = [[0] * len(states) for _ in states]
    for x, y, rho in g._pairs():
        kx, ky = keyed[x], keyed[y]
        for rest, amps_x in kx.items():
            amps_y = ky.get(rest)
            if amps_y is None:
                continue
            for q, a in amps_x.items():
                for q2, b in amps_y.items():
                    acc[index[q]][index[q2]] = acc[index[q]][index[q2]] + rho * a * conj(b)
    return ControlState(tuple(states), tuple(tuple(_simplify(v) for v in row) for row in acc))


def _input_decomposition(spec: QtmSpec, sigma: QubitString) -> tuple[tuple[str, ...], Any, tuple[Any, ...] | None]:
    diag = sigma.diagonal()
    tol = 0 if sigma.exact else 1e-14
    support = [i for i, p in enumerate(diag) if abs(p) > tol]
    labels = tuple(index_string(i) for i in support)
    if sigma.exact:
        coeffs = tuple(tuple(spec.lift(sigma.matrix[i][j]) for j in support) for i in support)
    else:
        coeffs = tuple(tuple(complex(sigma.matrix[i, j]) for j in support) for i in support)
    return labels, coeffs, None


def trajectory(spec: QtmSpec, sigma: QubitString, t_max: int, caps: ResourceCaps | None = None) -> Iterator[GlobalState]:
    """Yield M^t(sigma) for t = 0, 1, ..., t_max."""
    caps = resolve_caps(caps)
    caps.check("max_time", t_max, "simulation horizon")
    labels, coeffs, ket = _input_decomposition(spec, sigma)
    n = max((len(s) for s in labels), default=0)
    one = spec.one()
    branches: list[dict[Configuration, Any]] = [{initial_configuration(spec, s): one} for s in labels]
    for t in range(t_max + 1):
        window = (-t, n + t)
        yield GlobalState(
            t, window, labels, coeffs, tuple(MappingProxyType(b) for b in branches), spec.final, ket
        )
        if t == t_max:
            return
        branches = [step_branch(spec, b) for b in branches]
        size = sum(len(b) for b in branches)
        caps.check("max_configurations", size, f"at t={t + 1}")


def run(spec: QtmSpec, sigma: QubitString, t: int, caps: ResourceCaps | None = None) -> GlobalState:
    """The exact global state after ``t`` steps."""
    if t < 0:
        raise InvalidParameterError(f"negative time {t}")
    state = None
    for state in trajectory(spec, sigma, t, caps):
        pass
    assert state is not None
    return state


def run_ket(spec: QtmSpec, ket: Mapping[str, Any], t: int, caps: ResourceCaps | None = None) -> GlobalState:
    """``run`` for a pure exact input given as {bits: amplitude}; keeps the ket for ``amplitudes``."""
    sigma = QubitString.from_ket(ket)
    g = run(spec, sigma, t, caps)
    norm = sum((CRat.of(a).abs2() for a in ket.values()), Fraction(0))
    root = rational_sqrt(norm)
    scale_ = CRat(1 / root) if root is not None else 1 / sp.sqrt(sp.Rational(norm))
    amps = tuple(_mul(spec.lift(CRat.of(ket[s])), scale_) for s in g.labels)
    return GlobalState(g.time, g.window, g.labels, g.coefficients, g.branches, g.final, amps)


def _weight_class(w: Any, exact: bool) -> str:
    """'zero', 'one' or 'partial'."""
    if exact:
        if is_zero(w):
            return "zero"
        if is_zero(w - 1):
            return "one"
        return "partial"
    value = complex(w).real
    if abs(value) <= FLOAT_WEIGHT_ATOL:
        return "zero"
    if abs(value - 1) <= FLOAT_WEIGHT_ATOL:
        return "one"
    return "partial"


def halting_time(spec: QtmSpec, sigma: QubitString, t_max: int, caps: ResourceCaps | None = None) -> int | None:
    """Least t <= t_max with qf-weight exactly 1 at t and exactly 0 before, else None."""
    if t_max < 1:
        raise InvalidParameterError(f"t_max must be >= 1, got {t_max}")
    for g in trajectory(spec, sigma, t_max, caps):
        kind = _weight_class(g.qf_weight(), sigma.exact)
        if kind == "one" and g.time > 0:
            return g.time
        if kind != "zero":
            logger.debug(f"qf-weight not in {{0, 1}} at t={g.time}; input does not halt")
            return None
    return None


def _to_exact(x: Any) -> CRat | None:
    if isinstance(x, CRat):
        return x
    if isinstance(x, (int, Fraction)):
        return CRat(Fraction(x))
    if isinstance(x, (complex, float)):
        return None
    re, im = sp.expand(x).as_real_imag()
    if re.is_Rational and im.is_Rational:
        return CRat(Fraction(int(re.p), int(re.q)), Fraction(int(im.p), int(im.q)))
    return None


def _split_output(cfg: Configuration) -> tuple[tuple, str]:
    """(junk, read string): the output track from cell 0 up to its first blank is read."""
    output = {pos: sym[1] for pos, sym in cfg.cells if sym[1] != BLANK}
    bits = []
    pos = 0
    while pos in output:
        bits.append(output[pos])
        pos += 1
    junk_output = tuple(sorted((p, b) for p, b in output.items() if not 0 <= p < len(bits)))
    input_track = tuple((p, sym[0]) for p, sym in cfg.cells if sym[0] != BLANK)
    return (cfg.state, input_track, junk_output, cfg.head), "".join(bits)


def read_output(g: GlobalState) -> QubitString:
    """Apply the reading operation and trace out the junk index."""
    keyed = []
    for branch in g.branches:
        by_junk: dict[tuple, dict[str, Any]] = {}
        for cfg, a in branch.items():
            junk, s = _split_output(cfg)
            by_junk.setdefault(junk, {})[s] = a
        keyed.append(by_junk)
    reads = {s for k in keyed for amps in k.values() for s in amps}
    n = max((len(s) for s in reads), default=0)
    size = direct_sum_dim(n)
    acc: dict[tuple[int, int], Any] = {}
    for x, y, rho in g._pairs():
        kx, ky = keyed[x], keyed[y]
        for junk, amps_x in kx.items():
            amps_y = ky.get(junk)
            if amps_y is None:
                continue
            for s, a in amps_x.items():
                for s2, b in amps_y.items():
                    key = (string_index(s), string_index(s2))
                    acc[key] = acc.get(key, 0) + rho * a * conj(b)
    values = {k: _simplify(v) for k, v in acc.items()}
    exact = {k: _to_exact(v) for k, v in values.items()}
    if all(v is not None for v in exact.values()):
        rows = [[ZERO] * size for _ in range(size)]
        for (i, j), v in exact.items():
            rows[i][j] = v
        return QubitString(n, tuple(tuple(r) for r in rows))
    arr = np.zeros((size, size), dtype=complex)
    for (i, j), v in values.items():
        arr[i, j] = complex(v)
    return QubitString(n, arr)


def apply(spec: QtmSpec, sigma: QubitString, t_max: int, caps: ResourceCaps | None = None) -> QubitString | None:
    """M(sigma): the read output at the halting time, or None when sigma does not halt by t_max."""
    t = halting_time(spec, sigma, t_max, caps)
    if t is None:
        return None
    return read_output(run(spec, sigma, t, caps))


# ---------------------------------------------------------------------------
# unitarity


def _reachable_configurations(spec: QtmSpec, t_max: int, n_max: int, caps: ResourceCaps) -> set[Configuration]:
    frontier = {initial_configuration(spec, s) for k in range(n_max + 1) for s in strings_of_length(k)}
    seen = set(frontier)
    for _ in range(t_max - 1):
        nxt = set()
        for cfg in frontier:
            for tr, _coeff in spec.successors(cfg.state, _read(cfg)):
                c = _successor(cfg, tr)
                if c not in seen:
                    nxt.add(c)
        seen |= nxt
        caps.check("max_configurations", len(seen), "unitarity check")
        frontier = nxt
        if not frontier:
            break
    return seen


def validate_unitarity(spec: QtmSpec, t_max: int, n_max: int, caps: ResourceCaps | None = None) -> bool:
    """Exact isometry check of the evolution restricted to the reachable configurations."""
    if t_max < 1 or n_max < 1:
        raise InvalidParameterError("t_max and n_max must be >= 1")
    caps = resolve_caps(caps)
    configs = sorted(_reachable_configurations(spec, t_max, n_max, caps))
    predecessors: dict[Configuration, list[tuple[int, CRat]]] = {}
    group_norm: dict[tuple[str, str], Fraction] = {(g.state, g.read): g.norm_sq for g in spec.rules}
    for k, cfg in enumerate(configs):
        symbol = _read(cfg)
        column: dict[Configuration, CRat] = {}
        for tr, _coeff in spec.successors(cfg.state, symbol):
            succ = _successor(cfg, tr)
            column[succ] = column.get(succ, ZERO) + tr.amplitude
        norm = sum((a.abs2() for a in column.values()), Fraction(0))
        if norm != group_norm.get((cfg.state, symbol), Fraction(1)) or not column:
            logger.info(f"column of {cfg.state} reading {symbol} at head {cfg.head} is not a unit vector")
            return False
        for succ, a in column.items():
            if a:
                predecessors.setdefault(succ, []).append((k, a))
    gram: dict[tuple[int, int], CRat] = {}
    for preds in predecessors.values():
        for i, (k1, a1) in enumerate(preds):
            for k2, a2 in preds[i + 1 :]:
                gram[(k1, k2)] = gram.get((k1, k2), ZERO) + a1.conjugate() * a2
    clash = next((pair for pair, v in gram.items() if v), None)
    if clash is not None:
        a, b = configs[clash[0]], configs[clash[1]]
        logger.info(f"columns of ({a.state}, head {a.head}) and ({b.state}, head {b.head}) are not orthogonal")
        return False
    logger.debug(f"evolution is an isometry on {len(configs)} reachable configurations")
    return True


# ---------------------------------------------------------------------------
# parameter encoding


def encode_pair(k: int, sigma: QubitString) -> QubitString:
    """|s_k><s_k| (x) sigma."""
    return tensor_classical_prefix(self_delim_encode(k), sigma)


def encode_rational(delta: Fraction, sigma: QubitString) -> QubitString:
    """<l, <m, sigma>> for delta = l/m in lowest terms."""
    delta = Fraction(delta)
    if delta <= 0:
        raise InvalidParameterError(f"rational parameter must be positive, got {delta}")
    return encode_pair(delta.numerator, encode_pair(delta.denominator, sigma))


# ---------------------------------------------------------------------------
# halting operators on H_n


def basis_trajectories(spec: QtmSpec, n: int, t: int, caps: ResourceCaps | None = None) -> list[list[dict]]:
    """branches[t'][x] = V^{t'} applied to the x-th length-n basis input, for t' = 0..t."""
    caps = resolve_caps(caps)
    caps.check("max_time", t, "simulation horizon")
    one = spec.one()
    current = [{initial_configuration(spec, s): one} for s in strings_of_length(n)]
    out = [current]
    for step in range(1, t + 1):
        current = [step_branch(spec, b) for b in current]
        caps.check("max_configurations", sum(len(b) for b in current), f"at t={step}")
        out.append(current)
    return out


def qf_weight_operators(spec: QtmSpec, n: int, t: int, caps: ResourceCaps | None = None) -> list[CMat]:
    """A_{t'}[x][y] = sum over qf configurations of conj(a_x) a_y, so psi^dag A psi is the qf-weight."""
    ops = []
    for branches in basis_trajectories(spec, n, t, caps):
        halted = [{c: a for c, a in b.items() if c.state == spec.final} for b in branches]
        size = len(halted)
        rows = []
        for x in range(size):
            row = []
            for y in range(size):
                total: Any = 0
                for cfg, a in halted[x].items():
                    b = halted[y].get(cfg)
                    if b is not None:
                        total = total + conj(a) * b
                row.append(_simplify(total))
            rows.append(tuple(row))
        ops.append(tuple(rows))
    return ops


def weight_operators_numpy(spec: QtmSpec, n: int, t: int, caps: ResourceCaps | None = None) -> np.ndarray:
    """Float stack of qf-weight operators, shape (t + 1, 2^n, 2^n)."""
    ops = qf_weight_operators(spec, n, t, caps)
    return np.array([[[complex(x) for x in row] for row in op] for op in ops], dtype=complex)


# ---------------------------------------------------------------------------
# random machines

# Pythagorean (cos, sin) pairs for exact rational rotations
ROTATIONS = ((Fraction(3, 5), Fraction(4, 5)), (Fraction(5, 13), Fraction(12, 13)), (Fraction(8, 17), Fraction(15, 17)))


def random_reversible_machine(rng: np.random.Generator, n_states: int = 2, name: str | None = None) -> QtmSpec:
    """A right-moving machine whose local transition is a rational isometry.

    The control path is classical: each non-final state either continues on an input bit or jumps
    to the final state, and reading a blank always halts. Rational rotations then superpose the
    written symbols of successors sharing a target state.
    """
    if n_states < 1:
        raise InvalidParameterError("need at least one working state")
    working = [f"q{i}" for i in range(n_states)]
    final = "qf"
    sources = [(q, r) for q in working + [final] for r in INPUT_SYMBOLS]
    free: dict[str, list[str]] = {q: list(ALL_SYMBOLS) for q in working + [final]}
    for q in free:
        rng.shuffle(free[q])
    assignment: dict[tuple[str, str], tuple[str, str]] = {}
    for q, r in sources:
        if q == final or r == BLANK_SYMBOL:
            target = final
        elif rng.random() < 0.25 and len(free[final]) > len(working) + 3:
            target = final
        else:
            candidates = [p for p in working if free[p]]
            target = candidates[int(rng.integers(len(candidates)))]
        assignment[(q, r)] = (target, free[target].pop())
    # rotations between pairs of used targets sharing a state
    columns: dict[tuple[str, str], dict[tuple[str, str], CRat]] = {src: {tgt: ONE} for src, tgt in assignment.items()}
    by_state: dict[str, list[tuple[str, str]]] = {}
    for tgt in assignment.values():
        by_state.setdefault(tgt[0], []).append(tgt)
    for targets in by_state.values():
        for a, b in zip(targets[::2], targets[1::2], strict=False):
            c, s = ROTATIONS[int(rng.integers(len(ROTATIONS)))]
            phase = CRat(0, 1) if rng.random() < 0.5 else ONE
            for col in columns.values():
                xa, xb = col.get(a, ZERO), col.get(b, ZERO)
                if not xa and not xb:
                    continue
                # [[c, -s*phase], [s*phase, c]] for real phase; [[c, -is], [-is, c]] otherwise
                if phase == ONE:
                    ya, yb = xa * c - xb * s, xa * s + xb * c
                else:
                    ya, yb = xa * c - xb * s * phase, xb * c - xa * s * phase
                col[a], col[b] = ya, yb
    groups = []
    for (q, r), col in columns.items():
        transitions = tuple(Transition(tq, w, 1, amp) for (tq, w), amp in sorted(col.items()) if amp)
        groups.append(RuleGroup(q, r, transitions))
    return QtmSpec(tuple(working + [final]), working[0], final, tuple(groups), name=name or f"random{n_states}")


def classical_outputs(spec: QtmSpec, max_len: int, t_max: int, caps: ResourceCaps | None = None) -> dict[str, QubitString]:
    """apply() on every classical input of length <= max_len that halts within t_max."""
    out = {}
    for k in range(max_len + 1):
        for s in strings_of_length(k):
            result = apply(spec, QubitString.classical(s), t_max, caps)
            if result is not None:
                out[s] = result
    return out
