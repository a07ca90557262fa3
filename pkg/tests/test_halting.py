"""Tests for exact and approximate halting spaces."""

from fractions import Fraction

import numpy as np
import pytest

from qkolmo.config import load_caps
from qkolmo.errors import InvalidParameterError, ResourceCapError, SpecParseError
from qkolmo.halting import (
    BallTester,
    approx_halting_space,
    ball_halting_test,
    dimension_bound_threshold,
    dump_subspace,
    eps_min,
    eps_t_halting,
    exact_halting_space,
    halting_spaces,
    interpolating_subspace,
    is_prefix_domain,
    load_subspace,
    mutually_orthogonal,
    phase_cover,
)
from qkolmo.linalg import ScaledUnitVector, vec
from qkolmo.machine import load_fixture
from qkolmo.qubits import QubitString


@pytest.fixture
def identity():
    """Length-n inputs halt at t = n + 1."""
    return load_fixture("identity")


@pytest.fixture
def two_times():
    """'0' halts at t = 2 and '1' at t = 3."""
    return load_fixture("two_times")


class TestExactSpaces:
    """Test exact halting kernels."""

    def test_identity_single_time(self, identity):
        """Test that all of H_1 halts at t = 2."""
        assert [s.dim for s in halting_spaces(identity, 1, 4)] == [0, 2, 0, 0]
        assert exact_halting_space(identity, 2, 3).dim == 4

    def test_two_times_splits_basis(self, two_times):
        """Test one-dimensional spaces at t = 2 and t = 3."""
        spaces = halting_spaces(two_times, 1, 4)
        assert [s.dim for s in spaces] == [0, 1, 1, 0]
        assert spaces[1].basis[0].equivalent(ScaledUnitVector.from_vector(vec(1, 0)))
        assert spaces[2].basis[0].equivalent(ScaledUnitVector.from_vector(vec(0, 1)))
        assert mutually_orthogonal(spaces)

    def test_length_two_only(self):
        """Test a machine halting only on length-2 inputs."""
        spec = load_fixture("length_two")
        assert all(s.dim == 0 for s in halting_spaces(spec, 1, 5))
        assert [s.dim for s in halting_spaces(spec, 2, 5)] == [0, 0, 4, 0, 0]

    def test_never_halting(self):
        """Test that an unreachable final state gives empty spaces."""
        spec = load_fixture("qf_unreachable")
        assert all(s.dim == 0 for s in halting_spaces(spec, 2, 6))

    def test_irrational_machine(self):
        """Test the symbolic route on a machine with 1/sqrt(2) amplitudes."""
        spec = load_fixture("hadamard")
        assert all(s.dim == 0 for s in halting_spaces(spec, 1, 3))

    def test_dimension_budget(self, identity, two_times):
        """Test that exact halting dimensions sum to at most 2^n."""
        for spec in (identity, two_times):
            for n in range(1, 4):
                assert sum(s.dim for s in halting_spaces(spec, n, 8)) <= 1 << n

    def test_exact_cap(self, identity):
        """Test the input length cap of exact kernels."""
        with pytest.raises(ResourceCapError):
            halting_spaces(identity, 3, 6, load_caps({"max_exact_input_length": 2}))

    def test_bad_time(self, identity):
        """Test that t must be positive."""
        with pytest.raises(InvalidParameterError):
            exact_halting_space(identity, 1, 0)


class TestPrefixDomain:
    """Test the prefix property of halting domains."""

    def test_prefix_machine(self):
        """Test the machine with domain {0, 10, 11}."""
        assert is_prefix_domain(load_fixture("prefix"), 2, 6)

    def test_identity_is_not_prefix(self, identity):
        """Test that '0' and '00' both halting breaks the prefix property."""
        assert not is_prefix_domain(identity, 2, 6)


class TestApproximateHalting:
    """Test eps-t-halting of single strings and the ball test."""

    def test_eps_t_halting_exact(self, two_times):
        """Test exact thresholds on a superposition."""
        sigma = QubitString.from_ket({"0": 3, "1": 1})
        assert eps_t_halting(two_times, sigma, 2, Fraction(1, 10))
        assert not eps_t_halting(two_times, sigma, 2, Fraction(1, 20))
        assert eps_min(two_times, sigma, 2) == pytest.approx(0.1)

    def test_eps_t_halting_rejects_bad_parameters(self, two_times):
        """Test parameter validation."""
        with pytest.raises(InvalidParameterError):
            eps_t_halting(two_times, QubitString.classical("0"), 0, Fraction(1, 10))

    def test_ball_test_accepts_and_rejects(self, two_times):
        """Test ball answers far from the ambiguous zone."""
        assert ball_halting_test(two_times, vec(1, 0), Fraction(1, 100), Fraction(1, 10), 2) == 1
        assert ball_halting_test(two_times, vec(0, 1), Fraction(1, 100), Fraction(1, 10), 2) == 0

    def test_ball_test_vectorized(self, two_times):
        """Test that the vectorized tester agrees with single balls."""
        tester = BallTester(two_times, 1, 2)
        points = np.array([[1, 0], [0, 1], [np.sqrt(0.99), 0.1]], dtype=complex)
        assert list(tester.test_many(points, 0.01, 0.1)) == [1, 0, 1]
        with pytest.raises(InvalidParameterError):
            tester.test_many(points, 0.0, 0.1)

    def test_subspace_deviation(self, two_times):
        """Test the worst halting deviation over the unit vectors of a subspace."""
        tester = BallTester(two_times, 1, 2)
        assert tester.subspace_deviation([vec(1, 0)]) == pytest.approx(0.0, abs=1e-12)
        assert tester.subspace_deviation([vec(2, 1)]) == pytest.approx(0.2)
        assert tester.subspace_deviation([vec(1, 0), vec(0, 1)]) == pytest.approx(1.0)
        assert tester.subspace_deviation([]) == 0.0

    def test_ball_test_bad_dimension(self, two_times):
        """Test that vectors must live in some H_n."""
        with pytest.raises(InvalidParameterError):
            ball_halting_test(two_times, vec(1, 0, 0), Fraction(1, 100), Fraction(1, 10), 2)

    def test_dimension_bound_threshold(self):
        """Test the eps below which dimensions obey the 2^n budget."""
        assert dimension_bound_threshold(1) == Fraction(1, 320)


class TestCoverAndInterpolation:
    """Test the sphere cover and the interpolating subspace search."""

    def test_cover_is_dense(self):
        """Test that random unit vectors are delta-close to the cover modulo phase."""
        delta = 0.2
        cover = phase_cover(1, delta)
        rng = np.random.default_rng(11)
        units = cover / np.linalg.norm(cover, axis=1)[:, None]
        for _ in range(20):
            v = rng.normal(size=2) + 1j * rng.normal(size=2)
            v /= np.linalg.norm(v)
            overlaps = np.abs(units.conj() @ v)
            assert np.sqrt(max(0.0, 2 - 2 * overlaps.max())) <= delta

    def test_cover_cap(self):
        """Test the cover size cap."""
        with pytest.raises(ResourceCapError):
            phase_cover(1, 0.001, load_caps({"max_cover_points": 1000}))

    def test_interpolation_from_data(self):
        """Test a subspace found from the positive Gram spectrum."""
        positives = [vec(1, 0, 0, 0), vec(0, 1, 0, 0)]
        negatives = [vec(0, 0, 1, 0), vec(0, 0, 0, 1)]
        found, basis = interpolating_subspace(
            negatives, positives, 2, Fraction(1, 10), Fraction(1, 20), Fraction(1, 2), Fraction(1, 4)
        )
        assert found == 1
        assert basis is not None and len(basis) == 2

    def test_interpolation_full_space_with_negatives(self):
        """Test that the whole space never separates anything."""
        found, basis = interpolating_subspace(
            [vec(1, 0)], [vec(0, 1)], 2, Fraction(1, 10), Fraction(1, 20), Fraction(1, 2), Fraction(1, 4)
        )
        assert (found, basis) == (0, None)

    def test_interpolation_parameter_order(self):
        """Test that Delta must exceed delta."""
        with pytest.raises(InvalidParameterError):
            interpolating_subspace([], [vec(1, 0)], 1, Fraction(1, 20), Fraction(1, 10), Fraction(1, 2), Fraction(1, 4))

    @pytest.mark.slow
    def test_identity_approx_space(self, identity):
        """Test the approximate space of the identity machine at delta = 1/50."""
        assert approx_halting_space(identity, 1, Fraction(1, 50), 2).dim == 2
        assert approx_halting_space(identity, 1, Fraction(1, 50), 1).dim == 0


class TestSubspaceFiles:
    """Test the subspace dump format."""

    def test_dump_and_load(self, two_times):
        """Test that dumped bases load back to the same vectors."""
        space = exact_halting_space(two_times, 1, 3)
        loaded = load_subspace(dump_subspace(space.basis))
        assert [u.direction for u in loaded] == [u.direction for u in space.basis]

    def test_load_errors(self):
        """Test malformed dump lines."""
        with pytest.raises(SpecParseError):
            load_subspace("1, 0\n")
        with pytest.raises(SpecParseError):
            load_subspace("nsq 3 : 1/1+0/1i, 0/1+0/1i\n")
