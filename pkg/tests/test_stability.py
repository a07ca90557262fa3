"""Tests for the halting-stability bound checks."""

import numpy as np
import pytest

from qkolmo.errors import DimensionMismatchError, InvalidParameterError
from qkolmo.linalg import vec
from qkolmo.machine import load_fixture
from qkolmo.stability import (
    BoundCheck,
    StabilityReport,
    WeightOracle,
    contractivity_check,
    inner_product_dimension_check,
    run_stability_trials,
)


@pytest.fixture
def two_times_oracle() -> WeightOracle:
    """Weight operators of the two_times machine on H_1 up to t = 3."""
    return WeightOracle(load_fixture("two_times"), 1, 3)


class TestWeightOracle:
    """Test eps_min and the individual bounds."""

    def test_eps_at(self):
        """Test that H_1 halts at t = 2 for the identity machine and not at t = 1."""
        oracle = WeightOracle(load_fixture("identity"), 1, 2)
        assert oracle.eps_at(vec(1, 1)) == pytest.approx(0.0, abs=1e-12)
        assert oracle.eps_at(vec(1, 1), t=1) == pytest.approx(1.0)

    def test_eps_at_validation(self, two_times_oracle):
        """Test time range and vector shape validation."""
        with pytest.raises(InvalidParameterError):
            two_times_oracle.eps_at(vec(1, 0), t=4)
        with pytest.raises(DimensionMismatchError):
            two_times_oracle.eps_at(vec(1, 0, 0, 0))

    def test_matrix_element_bound(self, two_times_oracle):
        """Test cross terms between inputs of different halting times."""
        check = two_times_oracle.matrix_element_bound(vec(0, 1), vec(1, 1))
        assert check.holds

    def test_almost_orthogonality(self, two_times_oracle):
        """Test that exactly halting inputs at different times are orthogonal."""
        check = two_times_oracle.almost_orthogonality_bound(vec(1, 0), 2, vec(0, 1), 3)
        assert check is not None
        assert check.value == pytest.approx(0.0)
        assert check.holds
        with pytest.raises(InvalidParameterError):
            two_times_oracle.almost_orthogonality_bound(vec(1, 0), 2, vec(0, 1), 2)

    def test_far_from_halting_gives_no_bound(self, two_times_oracle):
        """Test that eps + delta > 1 gives no check."""
        assert two_times_oracle.almost_orthogonality_bound(vec(0, 1), 2, vec(1, 0), 3) is None

    def test_superposition_bound(self, two_times_oracle):
        """Test a superposition of two inputs halting at t = 3."""
        check = two_times_oracle.superposition_bound([vec(0, 1), vec(1, 2)], [0.6, 0.8])
        assert check.holds
        with pytest.raises(InvalidParameterError):
            two_times_oracle.superposition_bound([vec(0, 1)], [0.6, 0.8])

    def test_control_state_bounds(self, two_times_oracle):
        """Test weight movement under input changes and rescaling."""
        checks = two_times_oracle.control_state_bounds(np.array([1.1, 0.2]), vec(1, 0))
        assert [c.name for c in checks] == ["control-state", "norm-deviation"]
        assert all(c.holds for c in checks)


class TestExactChecks:
    """Test the exact dimension check and contractivity."""

    @pytest.mark.parametrize(
        "vectors,expected",
        [
            ([(1, 0), (0, 1)], (True, True)),
            ([(1, 0), (1, 0)], (False, False)),
            ([(1, 0, 0), (0, 1, 0), (0, 0, 1)], (True, True)),
        ],
    )
    def test_inner_product_dimension_check(self, vectors, expected):
        """Test the premise and the independence conclusion."""
        assert inner_product_dimension_check(vectors) == expected

    def test_contractivity(self):
        """Test that tracing out a qubit does not increase the distance."""
        rng = np.random.default_rng(5)
        for _ in range(10):
            g = rng.normal(size=(2, 4, 4)) + 1j * rng.normal(size=(2, 4, 4))
            rho, sigma = (m @ m.conj().T for m in g)
            check = contractivity_check(rho / np.trace(rho).real, sigma / np.trace(sigma).real, 1, 2)
            assert check.holds


class TestTrials:
    """Test randomized trials and the report."""

    def test_report_summary(self):
        """Test tallies of checks and violations."""
        report = StabilityReport()
        report.add(BoundCheck("a", 0.1, 0.2))
        report.add(BoundCheck("a", 0.3, 0.2))
        report.add(BoundCheck("b", 0.0, 0.0))
        assert report.summary() == {"a": (2, 1), "b": (1, 0)}
        assert not report.passed
        assert len(report.violations) == 1

    def test_identity_trials(self):
        """Test seeded trials on the identity machine."""
        report = run_stability_trials(load_fixture("identity"), 2, 3, 20, np.random.default_rng(1))
        assert report.passed
        assert report.summary()["contractivity"] == (20, 0)

    def test_seeded_near_halting_trials(self):
        """Test near-halting samples around exact halting directions."""
        report = run_stability_trials(
            load_fixture("two_times"), 1, 3, 20, np.random.default_rng(2), halting_vectors=[vec(0, 1)]
        )
        assert report.passed
        assert report.summary()["superposition"] == (20, 0)
