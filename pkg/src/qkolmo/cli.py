#!/usr/bin/env python3
"""
qkolmo command line

Batch front end over the library: every verb maps onto one module operation and prints a
report (plain text or TSV) headed by provenance lines.

Usage:
    qkolmo validate identity --tmax 8 --nmax 3
    qkolmo simulate identity --input 01 --tmax 10
    qkolmo counting --d 8 --delta 0
"""

import argparse
import logging
import sys
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .brudno import (
    beta_report,
    empirical_typical_codewords,
    entropy_rate,
    load_source,
    load_source_fixture,
    normalized_trace_bound,
    rate_of,
    trace_bound,
    universal_typical_projector,
)
from .coding import blind_prefix_code, dump_codewords, kraft_sum, self_delim_encode
from .complexity import (
    Ensemble,
    chi_quantity,
    counting_bound,
    counting_experiment,
    incompressibility_audit,
    qc_upper_bound,
    qk_average_upper_bound,
)
from .config import ResourceCaps, load_caps, load_verify_config, parse_caps_overrides
from .errors import NonHaltingError, QkolmoError
from .halting import approx_halting_space, dump_subspace, halting_spaces
from .linalg import von_neumann_entropy
from .machine import QtmSpec, halting_time, read_output, run, validate_unitarity
from .qubits import QubitString, parse_ket
from .universal import decode_program, dump_program, encode_input, halting_time_sequence, load_program
from .verify import resolve_machine, run_verify_suite

logger = logging.getLogger(__name__)

FORMATS = ("text", "tsv")


@dataclass
class Report:
    """Command output: provenance header, free text lines and an optional table."""

    provenance: list[str] = field(default_factory=list)
    lines: list[str] = field(default_factory=list)
    header: tuple[str, ...] = ()
    rows: list[tuple[Any, ...]] = field(default_factory=list)
    ok: bool = True

    def render(self, fmt: str) -> str:
        out = [f"# {p}" for p in self.provenance]
        if fmt == "tsv" and self.header:
            out.append("\t".join(self.header))
            out.extend("\t".join(str(x) for x in row) for row in self.rows)
        else:
            out.extend(self.lines)
        return "\n".join(out) + "\n"


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as e:
        raise argparse.ArgumentTypeError(f"'{text}' is not a rational number") from e


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"'{text}' is not a comma separated list of integers") from e


def _machine_provenance(spec: QtmSpec, caps: ResourceCaps) -> list[str]:
    return [f"machine: {spec.name} sha256={spec.machine_id}", f"caps: {caps.model_dump_json()}"]


def _describe_output(sigma: QubitString) -> list[str]:
    label = sigma.label()
    if not label.startswith("<"):
        return [f"output {label}"]
    weights = [f"  {i}: {float(w):.6g}" for i, w in enumerate(sigma.diagonal()) if abs(float(w)) > 1e-15]
    return [f"output {label}", "diagonal weights (direct-sum index):", *weights]


def _input_string(args: argparse.Namespace) -> QubitString:
    if args.ket is not None:
        return QubitString.from_ket(parse_ket(args.ket))
    return QubitString.classical(args.input or "")


# ---------------------------------------------------------------------------
# verbs


def cmd_validate(args: argparse.Namespace, caps: ResourceCaps) -> Report:
    spec = resolve_machine(args.machine)
    unitary = validate_unitarity(spec, args.tmax, args.nmax, caps)
    report = Report(_machine_provenance(spec, caps))
    report.lines.append(f"unitary: {'yes' if unitary else 'no'}")
    report.header, report.rows = ("machine", "tmax", "nmax", "unitary"), [(spec.name, args.tmax, args.nmax, unitary)]
    report.ok = unitary
    return report


def cmd_simulate(args: argparse.Namespace, caps: ResourceCaps) -> Report:
    spec = resolve_machine(args.machine)
    sigma = _input_string(args)
    t = halting_time(spec, sigma, args.tmax, caps)
    if t is None:
        raise NonHaltingError(f"input {sigma.label()} does not halt within t_max={args.tmax}")
    out = read_output(run(spec, sigma, t, caps))
    report = Report(_machine_provenance(spec, caps))
    described = _describe_output(out)
    report.lines.append(f"halts at t={t}, {described[0]}")
    report.lines.extend(described[1:])
    report.header, report.rows = ("t", "output"), [(t, out.label())]
    return report


def cmd_halting_spaces(args: argparse.Namespace, caps: ResourceCaps) -> Report:
    spec = resolve_machine(args.machine)
    spaces = halting_spaces(spec, args.n, args.tmax, caps)
    report = Report(_machine_provenance(spec, caps) + [f"mode: exact, n={args.n}"])
    report.header = ("t", "dim")
    dumped = []
    for space in spaces:
        if not space.dim:
            continue
        report.rows.append((space.t, space.dim))
        report.lines.append(f"t={space.t} dim={space.dim}")
        report.lines.extend(f"  {line}" for line in dump_subspace(space.basis).splitlines())
        dumped.append(f"# t={space.t}\n{dump_subspace(space.basis)}")
    total = sum(s.dim for s in spaces)
    report.lines.append(f"total dimension {total} of {1 << args.n}")
    if args.out:
        Path(args.out).write_text("".join(dumped), encoding="utf-8")
    return report


def cmd_approx_spaces(args: argparse.Namespace, caps: ResourceCaps) -> Report:
    spec = resolve_machine(args.machine)
    times = [args.t] if args.t else list(range(1, args.tmax + 1))
    report = Report(_machine_provenance(spec, caps) + [f"mode: approx, n={args.n}, delta={args.delta}"])
    report.header = ("t", "dim", "eps")
    for t in times:
        space = approx_halting_space(spec, args.n, args.delta, t, caps)
        report.rows.append((t, space.dim, space.eps))
        report.lines.append(f"t={t} dim={space.dim} eps={space.eps}")
        report.lines.extend(f"  {line}" for line in dump_subspace(space.basis).splitlines())
    return report


def cmd_code(args: argparse.Namespace, caps: ResourceCaps) -> Report:
    report = Report([f"caps: {caps.model_dump_json()}"])
    if args.self_delim is not None:
        word = self_delim_encode(args.self_delim)
        report.lines.append(f"s_{args.self_delim} = {word}")
        report.header, report.rows = ("k", "codeword"), [(args.self_delim, word)]
        return report
    if args.machine:
        spec = resolve_machine(args.machine)
        seq = halting_time_sequence(spec, args.n, args.tmax, caps=caps)
        report.provenance = _machine_provenance(spec, caps) + [f"halting-time code, n={args.n}"]
        lengths = seq.lengths
        words = seq.code().codewords
        report.header = ("t", "dim", "length", "codeword")
        report.rows = [(t, d, ell, w) for t, d, ell, w in zip(seq.times, seq.dims, lengths, words, strict=True)]
        report.lines = [f"t={t} dim={d} codeword {w or 'λ'}" for t, d, _, w in report.rows]
    else:
        lengths = args.lengths or []
        words = blind_prefix_code(lengths).codewords
        report.header = ("length", "codeword")
        report.rows = list(zip(lengths, words, strict=True))
        report.lines = dump_codewords(words).splitlines()
    report.lines.append(f"kraft sum {kraft_sum(lengths)}")
    return report


def cmd_encode(args: argparse.Namespace, caps: ResourceCaps) -> Report:
    spec = resolve_machine(args.machine)
    program = encode_input(spec, parse_ket(args.ket), args.tmax, args.mode, args.eps0, args.levels, caps, args.delta)
    text = dump_program(program)
    report = Report(_machine_provenance(spec, caps) + [f"mode: {program.mode}"])
    summary = f"codeword {program.codeword or 'λ'}, quantum length {program.quantum_length}"
    report.header = ("n", "codeword", "quantum_length", "total_length")
    report.rows = [(program.n, program.codeword, program.quantum_length, program.total_length)]
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        report.lines.append(summary)
    else:
        report.lines.extend([summary, *text.splitlines()])
    return report


def cmd_decode(args: argparse.Namespace, caps: ResourceCaps) -> Report:
    program = load_program(Path(args.program))
    out = decode_program(program, args.delta, args.tmax, caps)
    report = Report([f"program: {args.program}", f"mode: {program.mode}, delta={args.delta}", f"caps: {caps.model_dump_json()}"])
    report.lines.extend(_describe_output(out))
    report.header, report.rows = ("output",), [(out.label(),)]
    return report


def cmd_qc_bound(args: argparse.Namespace, caps: ResourceCaps) -> Report:
    spec = resolve_machine(args.machine)
    target = QubitString.from_ket(parse_ket(args.target))
    if args.average:
        bound = qk_average_upper_bound(spec, target, args.delta, args.max_len, t_max=args.tmax, caps=caps)
        what = f"QK-average^{args.delta}"
    elif args.kmax is not None:
        bound = qc_upper_bound(spec, target, None, args.max_len, t_max=args.tmax, k_max=args.kmax, caps=caps)
        what = f"QC (scheme, k <= {args.kmax})"
    else:
        bound = qc_upper_bound(spec, target, args.delta, args.max_len, t_max=args.tmax, caps=caps)
        what = f"QC^{args.delta}"
    report = Report(_machine_provenance(spec, caps))
    report.lines.append(f"{what} {bound.describe()}")
    report.lines.append("direction: upper")
    report.header = ("quantity", "direction", "value", "searched", "witness")
    report.rows = [(what, "upper", bound.value, bound.searched, bound.witness)]
    return report


def cmd_counting(args: argparse.Namespace, caps: ResourceCaps) -> Report:
    report = Report([f"caps: {caps.model_dump_json()}"])
    report.header = ("quantity", "direction", "value")
    if args.d is not None:
        bound = counting_bound(args.d, args.delta)
        report.lines.append(f"bound: {bound:.6g}")
        report.rows.append(("log #family", "upper", f"{bound:.6g}"))
    if args.machine:
        spec = resolve_machine(args.machine)
        report.provenance = _machine_provenance(spec, caps)
        experiment = counting_experiment(spec, args.max_len, args.delta, args.tmax, caps)
        report.lines.append(
            f"{experiment.outputs} outputs, orthonormal family {experiment.family}, "
            f"bound 2^{experiment.bound:.4f} ({'holds' if experiment.holds else 'VIOLATED'})"
        )
        report.rows.append(("family size", "measured", experiment.family))
        report.ok = experiment.holds
    if args.audit_n is not None:
        states = list(np.eye(1 << args.audit_n, dtype=complex))
        audit = incompressibility_audit(None, states, args.delta)
        report.lines.append(f"orthonormal bound: {audit.orthonormal_bound:.6g} (lower)")
        report.lines.append(f"entropy bound: {audit.holevo_bound:.6g} (lower)")
        if audit.vacuous:
            report.lines.append("both lower bounds are vacuous")
        report.rows.append(("orthonormal", "lower", f"{audit.orthonormal_bound:.6g}"))
        report.rows.append(("entropy", "lower", f"{audit.holevo_bound:.6g}"))
    return report


def cmd_chi(args: argparse.Namespace, caps: ResourceCaps) -> Report:
    kets = [parse_ket(k) for k in args.ket]
    size = max(len(s) for ket in kets for s in ket)
    states = tuple(QubitString.from_ket(k, size).to_numpy() for k in kets)
    weights = [Fraction(w) for w in args.weights.split(",")] if args.weights else [Fraction(1, len(kets))] * len(kets)
    ensemble = Ensemble(tuple(float(w) for w in weights), states)
    chi = chi_quantity(ensemble)
    average = von_neumann_entropy(ensemble.average())
    report = Report([f"ensemble of {len(kets)} states"])
    report.lines += [f"S(average): {average:.6f}", f"chi: {chi:.6f}"]
    report.header, report.rows = ("S_average", "chi"), [(f"{average:.6f}", f"{chi:.6f}")]
    return report


def cmd_brudno(args: argparse.Namespace, caps: ResourceCaps) -> Report:
    source = load_source(args.source) if Path(args.source).suffix == ".src" else load_source_fixture(args.source)
    report = Report([f"source: {source.name} ({source.kind})", f"caps: {caps.model_dump_json()}"])
    if args.universal:
        ell, n, m = args.universal
        codewords = empirical_typical_codewords(ell, n, args.rate)
        projector = universal_typical_projector(codewords, ell, n, m, caps)
        bound = trace_bound(ell, n, args.rate)
        report.lines += [
            f"codewords {len(codewords)} (rate {rate_of(codewords, n):.4f})",
            f"rank {projector.rank}, log trace {projector.log_trace:.4f} <= {bound:.4f} (upper)",
            f"per qubit {projector.log_trace / (ell * n):.4f} <= {normalized_trace_bound(ell, n, args.rate):.4f}",
        ]
        report.header = ("l", "n", "m", "rank", "log_trace", "bound")
        report.rows = [(ell, n, m, projector.rank, f"{projector.log_trace:.6f}", f"{bound:.6f}")]
        return report
    rows = beta_report(source, args.ns, args.eps, caps)
    report.lines.append(f"entropy rate {entropy_rate(source):.6f}")
    report.lines += ["n\tbeta\tbeta/n\ts\tgap", *(r.tsv() for r in rows)]
    report.header = ("n", "beta", "beta/n", "s", "gap")
    report.rows = [tuple(r.tsv().split("\t")) for r in rows]
    return report


def cmd_verify_suite(args: argparse.Namespace, caps: ResourceCaps) -> Report:
    config = load_verify_config(args.config)
    if args.seed is not None:
        config = config.model_copy(update={"seed": args.seed})
    verdict = run_verify_suite(config, only=args.suite)
    text = verdict.render().rstrip("\n").splitlines()
    report = Report(lines=text, ok=verdict.passed)
    report.header = ("suite", "verdict", "detail")
    report.rows = [(r.name, "pass" if r.passed else "fail", r.detail) for r in verdict.results]
    return report


COMMANDS: dict[str, Callable[[argparse.Namespace, ResourceCaps], Report]] = {
    "validate": cmd_validate,
    "simulate": cmd_simulate,
    "halting-spaces": cmd_halting_spaces,
    "approx-spaces": cmd_approx_spaces,
    "code": cmd_code,
    "encode": cmd_encode,
    "decode": cmd_decode,
    "qc-bound": cmd_qc_bound,
    "counting": cmd_counting,
    "chi": cmd_chi,
    "brudno": cmd_brudno,
    "verify-suite": cmd_verify_suite,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=FORMATS, default="text", help="report format")
    common.add_argument("--caps", default="", help="cap overrides as name=value pairs (on top of QKOLMO_CAPS)")
    common.add_argument("--verbose", "-v", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(prog="qkolmo", description="Quantum Kolmogorov complexity lab")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def machine_verb(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("machine", help="packaged fixture name or .qtm file")
        return p

    p = machine_verb("validate", "check unitarity on reachable configurations")
    p.add_argument("--tmax", type=int, default=16)
    p.add_argument("--nmax", type=int, default=3)

    p = machine_verb("simulate", "run a machine on an input")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--input", help="classical input string")
    group.add_argument("--ket", help="pure input 'amp:bits;amp:bits'")
    p.add_argument("--tmax", type=int, default=16)

    p = machine_verb("halting-spaces", "exact halting spaces of length-n inputs")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--tmax", type=int, default=16)
    p.add_argument("--out", help="write subspace dumps to this file")

    p = machine_verb("approx-spaces", "approximate halting spaces")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--delta", type=_fraction, required=True)
    p.add_argument("--t", type=int, help="single halting time")
    p.add_argument("--tmax", type=int, default=8)

    p = sub.add_parser("code", parents=[common], help="blind prefix codes")
    p.add_argument("--lengths", type=_int_list, help="comma separated codeword lengths")
    p.add_argument("--self-delim", type=int, help="print the self-delimiting code of k")
    p.add_argument("--machine", help="halting-time code of this machine")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--tmax", type=int, default=16)

    p = machine_verb("encode", "universal program for a halting input")
    p.add_argument("--ket", required=True, help="pure input 'amp:bits;amp:bits'")
    p.add_argument("--tmax", type=int, default=16)
    p.add_argument("--mode", choices=("exact", "approx"), default="exact")
    p.add_argument("--eps0", type=_fraction)
    p.add_argument("--levels", type=int, help="fine-tuning levels (default: depth planned from --delta)")
    p.add_argument(
        "--delta", type=_fraction, default=Fraction(1, 100), help="decode accuracy an approx program is planned for"
    )
    p.add_argument("--out", help="write the program file here")

    p = sub.add_parser("decode", parents=[common], help="run a universal program")
    p.add_argument("program", help="program file")
    p.add_argument("--delta", type=_fraction, default=Fraction(0))
    p.add_argument("--tmax", type=int, default=16)

    p = machine_verb("qc-bound", "searched upper bound on QC")
    p.add_argument("--target", required=True, help="target pure string 'amp:bits;amp:bits'")
    p.add_argument("--delta", type=_fraction, default=Fraction(1, 10))
    p.add_argument("--max-len", type=int, default=4)
    p.add_argument("--kmax", type=int, help="approximation-scheme criterion up to this k")
    p.add_argument("--average", action="store_true", help="average-length variant")
    p.add_argument("--tmax", type=int, default=16)

    p = sub.add_parser("counting", parents=[common], help="counting and incompressibility bounds")
    p.add_argument("--d", type=int, help="dimension for counting_bound")
    p.add_argument("--delta", type=_fraction, default=Fraction(0))
    p.add_argument("--machine", help="run the brute-force counting experiment on this machine")
    p.add_argument("--max-len", type=int, default=4)
    p.add_argument("--audit-n", type=int, help="incompressibility bounds for a basis of H_n")
    p.add_argument("--tmax", type=int, default=16)

    p = sub.add_parser("chi", parents=[common], help="Holevo chi of a pure-state ensemble")
    p.add_argument("--ket", action="append", required=True, help="ensemble member (repeatable)")
    p.add_argument("--weights", help="comma separated probabilities (default uniform)")

    p = sub.add_parser("brudno", parents=[common], help="typical projectors of a source")
    p.add_argument("source", help="packaged source name or .src file")
    p.add_argument("--ns", type=_int_list, default=[4, 8, 12, 16])
    p.add_argument("--eps", type=_fraction, default=Fraction(1, 10))
    p.add_argument("--universal", type=_int_list, help="l,n,m of a universal typical projector")
    p.add_argument("--rate", type=float, default=0.5)

    p = sub.add_parser("verify-suite", parents=[common], help="run the property suites")
    p.add_argument("--config", help="verify config JSON (default: packaged)")
    p.add_argument("--seed", type=int)
    p.add_argument("--suite", action="append", help="run only this suite (repeatable)")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO)
    if args.command == "brudno" and args.universal is not None and len(args.universal) != 3:
        parser.error("--universal takes l,n,m")
    if args.command == "code" and args.lengths is None and args.self_delim is None and args.machine is None:
        parser.error("code needs --lengths, --self-delim or --machine")
    if args.command == "counting" and args.d is None and args.machine is None and args.audit_n is None:
        parser.error("counting needs --d, --machine or --audit-n")

    try:
        caps = load_caps(parse_caps_overrides(args.caps))
        report = COMMANDS[args.command](args, caps)
    except QkolmoError as e:
        logger.error(f"{args.command} failed: {e}")
        return 1
    sys.stdout.write(report.render(args.format))
    return 0 if report.ok else 1


if __name__ == "__main__":
    sys.exit(main())
