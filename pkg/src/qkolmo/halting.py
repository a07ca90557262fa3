"""Halting subspaces: exact kernels, the ball test, interpolating subspaces and approximate spaces.

Exact spaces are null spaces of the linear halting constraints over H_n. The approximate route
works on a cover of the unit sphere of H_n (modulo global phase), tests small balls around the
cover points for approximate halting and then searches for a subspace separating the halting
points from the clearly non-halting ones, halving the accuracy until one is found.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np
import sympy as sp

from .config import ResourceCaps, resolve_caps
from .errors import InvalidParameterError, ResourceCapError, SpecParseError, UnsupportedAmplitudeError
from .linalg import (
    ONE,
    ZERO,
    CRat,
    CVec,
    Echelon,
    ScaledUnitVector,
    gram_schmidt,
    inner,
    to_numpy,
    unit,
)
from .machine import QtmSpec, _to_exact, basis_trajectories, trajectory, weight_operators_numpy
from .qubits import QubitString

logger = logging.getLogger(__name__)

# Ball test thresholds, as fractions of eps
ACCEPT_FRACTION = 7 / 8
REJECT_FRACTION = 1 / 4
# Rational approximation of eigenvectors in the data-driven interpolation step
CANDIDATE_DENOMINATOR = 1 << 20
# Points scored per numpy batch
BATCH_POINTS = 200_000
# Safety bound on eps halvings in approx_halting_space
MAX_HALVINGS = 40


@dataclass(frozen=True)
class HaltingSpace:
    """H^{(n)}(t): inputs of length n that halt exactly at time t."""

    machine_id: str
    n: int
    t: int
    basis: tuple[ScaledUnitVector, ...]

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def vectors(self) -> list[CVec]:
        return [u.direction for u in self.basis]


@dataclass(frozen=True)
class ApproxHaltingSpace:
    """H^{(n, delta)}(t) together with the accuracy eps it was produced at."""

    machine_id: str
    n: int
    delta: Fraction
    t: int
    basis: tuple[CVec, ...]
    eps: Fraction

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def vectors(self) -> list[CVec]:
        return list(self.basis)


def dimension_bound_threshold(n: int) -> Fraction:
    """Below 2^{-2n}/80 approximate halting spaces obey the 2^n dimension budget."""
    return Fraction(1, 80 * 4**n)


# ---------------------------------------------------------------------------
# exact spaces


def _constraint_rows(branches: Sequence[dict], final: str, halted: bool) -> list[list[Any]]:
    """Rows (a_x(c))_x for every configuration c in (or out of) the final state."""
    configs = sorted({c for b in branches for c in b if (c.state == final) == halted})
    return [[b.get(c, ZERO) for b in branches] for c in configs]


def _sympy_kernel(rows: list[list[Any]], dim: int) -> list[CVec]:
    if not rows:
        return [unit(i, dim) for i in range(dim)]
    matrix = sp.Matrix([[sp.sympify(x.to_sympy() if isinstance(x, CRat) else x) for x in row] for row in rows])
    basis = []
    for v in matrix.nullspace():
        entries = [_to_exact(sp.nsimplify(sp.expand(x))) for x in v]
        if any(e is None for e in entries):
            raise UnsupportedAmplitudeError("halting kernel has irrational entries")
        basis.append(tuple(entries))
    return basis


def halting_spaces(spec: QtmSpec, n: int, t_max: int, caps: ResourceCaps | None = None) -> list[HaltingSpace]:
    """Exact H^{(n)}(t) for t = 1..t_max (including empty ones), sharing one simulation."""
    caps = resolve_caps(caps)
    caps.check("max_exact_input_length", n, "exact halting kernels")
    caps.check("max_time", t_max, "halting horizon")
    trajectories = basis_trajectories(spec, n, t_max, caps)
    dim = 1 << n
    spaces = []
    if spec.is_rational:
        halted_before = Echelon(dim)
        for t in range(1, t_max + 1):
            for row in _constraint_rows(trajectories[t - 1], spec.final, halted=True):
                halted_before.add(row)
            echelon = halted_before.copy()
            for row in _constraint_rows(trajectories[t], spec.final, halted=False):
                if echelon.rank == dim:
                    break
                echelon.add(row)
            kernel = echelon.kernel() if echelon.rank < dim else []
            spaces.append(HaltingSpace(spec.machine_id, n, t, tuple(gram_schmidt(kernel))))
    else:
        before: list[list[Any]] = []
        for t in range(1, t_max + 1):
            before.extend(_constraint_rows(trajectories[t - 1], spec.final, halted=True))
            rows = before + _constraint_rows(trajectories[t], spec.final, halted=False)
            spaces.append(HaltingSpace(spec.machine_id, n, t, tuple(gram_schmidt(_sympy_kernel(rows, dim)))))
    dims = {s.t: s.dim for s in spaces if s.dim}
    logger.debug(f"exact halting dimensions for n={n}: {dims}")
    return spaces


def exact_halting_space(spec: QtmSpec, n: int, t: int, caps: ResourceCaps | None = None) -> HaltingSpace:
    """Exact kernel of the halting constraints at time t over H_n."""
    if t < 1:
        raise InvalidParameterError(f"halting time must be >= 1, got {t}")
    return halting_spaces(spec, n, t, caps)[-1]


# ---------------------------------------------------------------------------
# approximate halting of single strings


def halting_weights(spec: QtmSpec, sigma: QubitString, t: int, caps: ResourceCaps | None = None) -> list[Any]:
    """qf-weights <qf|M_C^{t'}(sigma)|qf> for t' = 0..t."""
    return [g.qf_weight() for g in trajectory(spec, sigma, t, caps)]


def eps_t_halting(spec: QtmSpec, sigma: QubitString, t: int, eps: Any, caps: ResourceCaps | None = None) -> bool:
    """qf-weight <= eps before t and >= 1 - eps at t."""
    if t < 1 or eps < 0:
        raise InvalidParameterError("eps_t_halting needs t >= 1 and eps >= 0")
    weights = halting_weights(spec, sigma, t, caps)
    if sigma.exact and spec.is_rational:
        values = [_to_exact(w) for w in weights]
        eps_q = Fraction(eps) if not isinstance(eps, float) else None
        if eps_q is not None and all(v is not None for v in values):
            return all(v.re <= eps_q for v in values[:-1]) and values[-1].re >= 1 - eps_q
    floats = [complex(w).real for w in weights]
    slack = 1e-12
    return all(w <= float(eps) + slack for w in floats[:-1]) and floats[-1] >= 1 - float(eps) - slack


def eps_min(spec: QtmSpec, sigma: QubitString, t: int, caps: ResourceCaps | None = None) -> float:
    """Smallest eps for which sigma is eps-t-halting."""
    floats = [complex(w).real for w in halting_weights(spec, sigma, t, caps)]
    return max([*floats[:-1], 1 - floats[-1]])


# ---------------------------------------------------------------------------
# ball test


def _deviation(ops: np.ndarray, points: np.ndarray) -> np.ndarray:
    """max_{t'} |w_{t'}(psi) - [t' == t]| for unit rows psi; ops has shape (t + 1, D, D)."""
    out = np.empty(len(points))
    target = np.zeros(ops.shape[0])
    target[-1] = 1.0
    for start in range(0, len(points), BATCH_POINTS):
        chunk = points[start : start + BATCH_POINTS]
        w = np.einsum("kd,tde,ke->tk", chunk.conj(), ops, chunk).real
        out[start : start + len(chunk)] = np.abs(w - target[:, None]).max(axis=0)
    return out


def _cap_distance(units: np.ndarray, phi0: np.ndarray, kappa: float) -> np.ndarray:
    """Distance from unit vectors to the spherical cap {Re<phi0, psi> >= kappa}."""
    cos_x = np.clip((units @ phi0.conj()).real, -1.0, 1.0)
    theta_x = np.arccos(cos_x)
    theta_c = math.acos(max(-1.0, min(1.0, kappa)))
    return np.where(theta_x <= theta_c, 0.0, 2 * np.sin((theta_x - theta_c) / 2))


def _cube_offsets(dim: int) -> np.ndarray:
    corners = np.array(list(itertools.product((-1.0, 1.0), repeat=2 * dim)))
    return corners[:, :dim] + 1j * corners[:, dim:]


def _ball_branch_and_bound(ops: np.ndarray, phi: np.ndarray, delta: float, eps: float, max_cells: int) -> int:
    dim = phi.size
    norm = float(np.linalg.norm(phi))
    kappa = (1 + norm * norm - delta * delta) / (2 * norm)
    if kappa >= 1:
        return 0
    kappa = max(kappa, -1.0)
    phi0 = phi / norm
    chord = math.sqrt(2 - 2 * kappa)
    offsets = _cube_offsets(dim)
    centers = phi0[None, :]
    half = chord
    real_dims = 2 * dim
    while True:
        count = len(centers) * len(offsets)
        if count > max_cells:
            raise ResourceCapError("max_net_cells", count, max_cells, "ball test refinement")
        half /= 2
        centers = (centers[:, None, :] + half * offsets[None, :, :]).reshape(-1, dim)
        radius = half * math.sqrt(real_dims)
        norms = np.linalg.norm(centers, axis=1)
        keep = (np.abs(norms - 1) <= radius) & (np.linalg.norm(centers - phi0, axis=1) <= chord + radius) & (norms > 0)
        centers, norms = centers[keep], norms[keep]
        if not len(centers):
            return 0
        units = centers / norms[:, None]
        dist = _cap_distance(units, phi0, kappa)
        # a unit vector inside a cell is within 2r of the projected center
        near = dist <= 2 * radius
        centers, units, dist = centers[near], units[near], dist[near]
        if not len(centers):
            return 0
        g = _deviation(ops, units)
        if np.any(g + dist <= ACCEPT_FRACTION * eps):
            return 1
        alive = g - 2 * radius <= REJECT_FRACTION * eps
        centers = centers[alive]
        if not len(centers):
            return 0


class BallTester:
    """Ball tests against one machine, input length and halting time."""

    def __init__(self, spec: QtmSpec, n: int, t: int, caps: ResourceCaps | None = None):
        self.caps = resolve_caps(caps)
        self.caps.check("max_net_input_length", n, "ball test")
        self.n = n
        self.t = t
        self.ops = weight_operators_numpy(spec, n, t, self.caps)

    def subspace_deviation(self, vectors: Sequence[Any] | np.ndarray) -> float:
        """max over unit psi in span(vectors) of max_{t'} |w_{t'}(psi) - [t' == t]|."""
        rows = _as_array(vectors)
        if not len(rows):
            return 0.0
        q, _ = np.linalg.qr(rows.T)
        worst = 0.0
        for k, op in enumerate(self.ops):
            compressed = q.conj().T @ op @ q
            eigenvalues = np.linalg.eigvalsh((compressed + compressed.conj().T) / 2)
            target = 1.0 if k == len(self.ops) - 1 else 0.0
            worst = max(worst, float(np.abs(eigenvalues - target).max()))
        return worst

    def test(self, phi: np.ndarray, delta: float, eps: float) -> int:
        return int(self.test_many(np.asarray(phi, dtype=complex)[None, :], delta, eps)[0])

    def test_many(self, points: np.ndarray, delta: float, eps: float) -> np.ndarray:
        """Vectorized B over rows of ``points``; returns an int array of 0/1 answers."""
        if delta <= 0 or eps <= 0:
            raise InvalidParameterError("ball test needs positive delta and eps")
        norms = np.linalg.norm(points, axis=1)
        if np.any(norms == 0):
            raise InvalidParameterError("ball test around the zero vector")
        kappa = (1 + norms**2 - delta**2) / (2 * norms)
        chord = np.sqrt(np.clip(2 - 2 * np.clip(kappa, -1, 1), 0, None))
        g0 = _deviation(self.ops, points / norms[:, None])
        empty = kappa >= 1
        accept = ~empty & (g0 <= ACCEPT_FRACTION * eps)
        reject = empty | (g0 - chord > REJECT_FRACTION * eps)
        result = accept.astype(int)
        ambiguous = np.flatnonzero(~accept & ~reject)
        if len(ambiguous):
            logger.debug(f"refining {len(ambiguous)} of {len(points)} balls (eps={eps:.4g})")
        for k in ambiguous:
            result[k] = _ball_branch_and_bound(self.ops, points[k], delta, eps, self.caps.max_net_cells)
        return result


def ball_halting_test(
    spec: QtmSpec, phi: Sequence[Any], delta: Any, eps: Any, t: int, caps: ResourceCaps | None = None
) -> int:
    """1 if the delta-ball around phi is (eps/4)-t-halting, 0 if it is not eps-t-halting."""
    n = len(phi).bit_length() - 1
    if 1 << n != len(phi):
        raise InvalidParameterError(f"vector of length {len(phi)} is not in some H_n")
    tester = BallTester(spec, n, t, caps)
    return tester.test(to_numpy(phi) if not isinstance(phi, np.ndarray) else phi, float(delta), float(eps))


# ---------------------------------------------------------------------------
# sphere cover


def phase_cover(n: int, delta: float, caps: ResourceCaps | None = None) -> np.ndarray:
    """Rational points covering the unit sphere of H_n up to delta, modulo global phase.

    In chart j the j-th coordinate is real, positive and of maximal modulus; the other coordinates
    run over a grid of mesh 1/H and the j-th is a rounded sqrt(1 - |rest|^2).
    """
    caps = resolve_caps(caps)
    caps.check("max_net_input_length", n, "sphere cover")
    dim = 1 << n
    real_dims = 2 * (dim - 1)
    c = 2 ** (-n / 2)
    if real_dims == 0:
        return np.ones((1, 1), dtype=complex)
    mesh_den = math.ceil((1 + 2 / c) * math.sqrt(real_dims) / (0.8 * delta))
    radius = math.sqrt(1 - c * c) + math.sqrt(real_dims) / (2 * mesh_den)
    m = math.floor(radius * mesh_den)
    per_chart = (2 * m + 1) ** real_dims
    caps.check("max_cover_points", per_chart * dim, f"cover of H_{n} at delta={delta:.3g}")
    lead_den = math.ceil(8 / delta)
    axes = np.arange(-m, m + 1) / mesh_den
    grid = np.stack(np.meshgrid(*([axes] * real_dims), indexing="ij"), axis=-1).reshape(-1, real_dims)
    rest = grid[:, : dim - 1] + 1j * grid[:, dim - 1 :]
    rest_sq = np.sum(np.abs(rest) ** 2, axis=1)
    keep = rest_sq <= radius * radius
    rest, rest_sq = rest[keep], rest_sq[keep]
    lead = np.round(np.sqrt(np.clip(1 - rest_sq, 0, None)) * lead_den) / lead_den
    charts = []
    for j in range(dim):
        points = np.empty((len(rest), dim), dtype=complex)
        points[:, j] = lead
        points[:, [i for i in range(dim) if i != j]] = rest
        charts.append(points)
    cover = np.concatenate(charts)
    logger.debug(f"cover of H_{n} at delta={delta:.3g}: {len(cover)} points")
    return cover


# ---------------------------------------------------------------------------
# interpolating subspaces


def _distances(q: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """dist(span Q, v) for orthonormal columns Q (batch axis first) and rows v."""
    coeffs = np.einsum("kdi,nd->kni", q.conj(), vectors)
    residual = np.sum(np.abs(vectors) ** 2, axis=1)[None, :] - np.sum(np.abs(coeffs) ** 2, axis=2)
    return np.sqrt(np.clip(residual, 0, None))


def _interpolates(q: np.ndarray, pos: np.ndarray, neg: np.ndarray, big_delta: float, small_tilde: float) -> np.ndarray:
    ok = np.ones(q.shape[0], dtype=bool)
    if len(pos):
        ok &= (_distances(q, pos) < big_delta).all(axis=1)
    if len(neg):
        ok &= (_distances(q, neg) > small_tilde).all(axis=1)
    return ok


def _rationalize(column: np.ndarray) -> CVec:
    return tuple(
        CRat(
            Fraction(float(x.real)).limit_denominator(CANDIDATE_DENOMINATOR),
            Fraction(float(x.imag)).limit_denominator(CANDIDATE_DENOMINATOR),
        )
        for x in column
    )


def _orthonormal(vectors: Sequence[CVec]) -> np.ndarray:
    q, _ = np.linalg.qr(np.column_stack([to_numpy(v) for v in vectors]))
    return q


def _as_array(vectors: Sequence[Any] | np.ndarray, dim: int | None = None) -> np.ndarray:
    if isinstance(vectors, np.ndarray):
        return vectors.astype(complex).reshape(-1, vectors.shape[-1]) if vectors.size else np.zeros((0, dim or 0))
    if not vectors:
        return np.zeros((0, dim or 0), dtype=complex)
    return np.array([to_numpy(v) if not isinstance(v, np.ndarray) else v for v in vectors], dtype=complex)


def interpolating_subspace(
    tilde_set: Sequence[Any] | np.ndarray,
    pos_set: Sequence[Any] | np.ndarray,
    d: int,
    big_delta: Any,
    small_delta: Any,
    big_tilde: Any,
    small_tilde: Any,
    caps: ResourceCaps | None = None,
) -> tuple[int, list[CVec] | None]:
    """Search a d-dimensional subspace close to every positive and far from every negative vector.

    Returns (1, basis) with dist < big_delta to positives and > small_tilde to negatives, or (0, None).
    Data-driven candidates come first, then a brute-force sweep over a rational chart grid.
    """
    caps = resolve_caps(caps)
    if not big_delta > small_delta or not big_tilde > small_tilde:
        raise InvalidParameterError("interpolation needs Delta > delta and Delta~ > delta~")
    pos_arr = _as_array(pos_set)
    dim = pos_arr.shape[1] if len(pos_arr) else _as_array(tilde_set).shape[1]
    neg_arr = _as_array(tilde_set, dim)
    if not 1 <= d <= dim:
        raise InvalidParameterError(f"subspace dimension {d} outside 1..{dim}")
    big_delta_f, small_tilde_f = float(big_delta), float(small_tilde)
    if d == dim:
        if len(neg_arr):
            return 0, None
        return 1, [unit(i, dim) for i in range(dim)]
    # data-driven candidates: dominant eigenvectors of the positive (minus negative) Gram operator
    gram_pos = pos_arr.T @ pos_arr.conj() if len(pos_arr) else np.zeros((dim, dim), dtype=complex)
    gram_neg = neg_arr.T @ neg_arr.conj() if len(neg_arr) else np.zeros((dim, dim), dtype=complex)
    for gram in (gram_pos, gram_pos - gram_neg):
        _, vecs = np.linalg.eigh((gram + gram.conj().T) / 2)
        basis = [_rationalize(vecs[:, -1 - i]) for i in range(d)]
        if len(gram_schmidt(basis)) < d:
            continue
        q = _orthonormal(basis)[None, :, :]
        if _interpolates(q, pos_arr, neg_arr, big_delta_f, small_tilde_f)[0]:
            logger.debug(f"interpolating subspace of dim {d} found from the Gram spectrum")
            return 1, basis
    return _chart_search(pos_arr, neg_arr, d, dim, big_delta, small_delta, big_tilde, small_tilde, caps)


def _chart_search(
    pos: np.ndarray,
    neg: np.ndarray,
    d: int,
    dim: int,
    big_delta: Any,
    small_delta: Any,
    big_tilde: Any,
    small_tilde: Any,
    caps: ResourceCaps,
) -> tuple[int, list[CVec] | None]:
    n = dim.bit_length() - 1
    step = min(Fraction(big_delta) - Fraction(small_delta), Fraction(big_tilde) - Fraction(small_tilde))
    step /= 8 * (1 << ((n + 1) // 2))
    m = math.floor(1 / step)
    params = 2 * d * (dim - d)
    per_chart = (2 * m + 1) ** params
    charts = list(itertools.combinations(range(dim), d))
    work = len(charts) * per_chart * max(1, len(pos) + len(neg))
    caps.check("max_search_work", work, f"interpolation grid for d={d} in dimension {dim}")
    values = np.arange(-m, m + 1) * float(step)
    chunk = max(1, BATCH_POINTS // max(1, len(pos) + len(neg)))
    for pivots in charts:
        others = [i for i in range(dim) if i not in pivots]
        for start in range(0, per_chart, chunk):
            idx = np.arange(start, min(per_chart, start + chunk))
            digits = np.stack(np.unravel_index(idx, (2 * m + 1,) * params), axis=1)
            x = values[digits[:, : params // 2]] + 1j * values[digits[:, params // 2 :]]
            frames = np.zeros((len(idx), dim, d), dtype=complex)
            frames[:, list(pivots), :] = np.eye(d)
            frames[:, others, :] = x.reshape(len(idx), dim - d, d)
            q, _ = np.linalg.qr(frames)
            hits = np.flatnonzero(_interpolates(q, pos, neg, float(big_delta), float(small_tilde)))
            if len(hits):
                row = digits[hits[0]]
                return 1, _chart_basis(row, pivots, others, d, dim, m, step)
    return 0, None


def _chart_basis(row: np.ndarray, pivots: Sequence[int], others: Sequence[int], d: int, dim: int, m: int, step: Fraction) -> list[CVec]:
    half = len(row) // 2
    entries = [[ZERO] * d for _ in range(dim)]
    for k, p in enumerate(pivots):
        entries[p][k] = ONE
    for flat in range(half):
        r, col = divmod(flat, d)
        re = (int(row[flat]) - m) * step
        im = (int(row[half + flat]) - m) * step
        entries[others[r]][col] = CRat(re, im)
    return [tuple(entries[i][k] for i in range(dim)) for k in range(d)]


# ---------------------------------------------------------------------------
# approximate halting spaces


def approx_halting_space(
    spec: QtmSpec, n: int, delta: Any, t: int, caps: ResourceCaps | None = None
) -> ApproxHaltingSpace:
    """The approximate halting space at accuracy delta and the eps it settles at (eps <= 18 delta)."""
    caps = resolve_caps(caps)
    delta_q = Fraction(delta)
    if delta_q <= 0:
        raise InvalidParameterError(f"delta must be positive, got {delta}")
    delta_f = float(delta_q)
    dim = 1 << n
    tester = BallTester(spec, n, t, caps)
    cover = phase_cover(n, delta_f, caps)
    eps = 18 * delta_q
    coarse = tester.test_many(cover, delta_f, float(18 * delta_q)).astype(bool)
    negatives = cover[~coarse]
    for halving in range(MAX_HALVINGS):
        positive = coarse if halving == 0 else tester.test_many(cover, delta_f, float(eps)).astype(bool)
        positives = cover[positive]
        logger.info(f"approx space n={n} t={t}: eps={eps} with {len(positives)} halting cover points")
        if not len(positives):
            return ApproxHaltingSpace(spec.machine_id, n, delta_q, t, (), eps)
        for d in range(dim, 0, -1):
            found, basis = interpolating_subspace(
                negatives, positives, d, 2 * delta_q, delta_q, Fraction(7, 4) * delta_q, Fraction(3, 2) * delta_q, caps
            )
            if found:
                assert basis is not None
                return ApproxHaltingSpace(spec.machine_id, n, delta_q, t, tuple(basis), eps)
        eps /= 2
    raise ResourceCapError("eps halvings", MAX_HALVINGS, MAX_HALVINGS, "no interpolating subspace found")


# ---------------------------------------------------------------------------
# prefix domains


def _prefix_overlaps_vanish(psi: CVec, phi: CVec, n: int, n_long: int) -> bool:
    tail = n_long - n
    for u in range(1 << tail):
        total = ZERO
        for a in range(1 << n):
            x, y = psi[a], phi[(a << tail) | u]
            if x and y:
                total = total + x.conjugate() * y
        if total:
            return False
    return True


def is_prefix_domain(spec: QtmSpec, n_max: int, t_max: int, caps: ResourceCaps | None = None) -> bool:
    """No halting string of length n overlaps the length-n prefix of a longer halting string."""
    by_length = {n: [v for s in halting_spaces(spec, n, t_max, caps) for v in s.vectors] for n in range(n_max + 1)}
    for n, short in by_length.items():
        for n_long in range(n + 1, n_max + 1):
            for psi in short:
                for phi in by_length[n_long]:
                    if not _prefix_overlaps_vanish(psi, phi, n, n_long):
                        logger.info(f"halting inputs of lengths {n} and {n_long} overlap")
                        return False
    return True


# ---------------------------------------------------------------------------
# dump format


def dump_subspace(vectors: Sequence[ScaledUnitVector | CVec]) -> str:
    lines = []
    for v in vectors:
        u = v if isinstance(v, ScaledUnitVector) else ScaledUnitVector.from_vector(v)
        lines.append(f"{u}\n")
    return "".join(lines)


def load_subspace(source: str | Path) -> list[ScaledUnitVector]:
    try:
        text = Path(source).read_text(encoding="utf-8") if isinstance(source, Path) else source
    except OSError as e:
        raise SpecParseError(f"cannot read subspace file {source}: {e}") from e
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        head, sep, body = line.partition(":")
        if not sep or not head.strip().startswith("nsq"):
            raise SpecParseError(f"line {lineno}: expected 'nsq p/q : entries'")
        try:
            nsq = Fraction(head.strip()[3:].strip())
            entries = tuple(CRat.parse(x) for x in body.split(","))
            out.append(ScaledUnitVector(entries, nsq))
        except (ValueError, ZeroDivisionError, InvalidParameterError) as e:
            raise SpecParseError(f"line {lineno}: {e}") from e
    return out


def mutually_orthogonal(spaces: Sequence[HaltingSpace]) -> bool:
    """Exact cross inner products between spaces of different times all vanish."""
    for a, b in itertools.combinations(spaces, 2):
        if a.t == b.t:
            continue
        for u in a.basis:
            for v in b.basis:
                if inner(u.direction, v.direction):
                    return False
    return True
