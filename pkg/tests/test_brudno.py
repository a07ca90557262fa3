"""Tests for ergodic sources, typical projectors and the universal typical subspace."""

import logging
import math
from fractions import Fraction

import numpy as np
import pytest

from qkolmo.brudno import (
    beta_min,
    beta_report,
    block_length_lm,
    consistency_check,
    diagonal_probabilities,
    empirical_typical_codewords,
    entropy_rate,
    iid_source,
    load_source,
    load_source_fixture,
    local_spectrum,
    normalized_trace_bound,
    parse_source,
    rate_of,
    rotation_invariance_check,
    subadditivity_check,
    symmetric_basis,
    symmetric_rank,
    symmetric_subspace_dim,
    trace_bound,
    universal_typical_projector,
)
from qkolmo.config import load_caps
from qkolmo.errors import InvalidParameterError, ResourceCapError, SpecParseError


@pytest.fixture
def skewed():
    """i.i.d. source with local spectrum (9/10, 1/10)."""
    return load_source_fixture("iid_skewed")


@pytest.fixture
def plus_source():
    """i.i.d. copies of the pure state |+>."""
    return parse_source("kind: iid\nrho: 1/2 1/2 0 1/2\n", name="plus")


class TestSources:
    """Test parsing and local densities of sources."""

    def test_fixture(self, skewed):
        """Test the packaged i.i.d. source."""
        assert skewed.name == "iid_skewed"
        assert skewed.diagonal
        assert diagonal_probabilities(skewed, 2) == [Fraction(81, 100), Fraction(9, 100), Fraction(9, 100), Fraction(1, 100)]

    def test_markov_probabilities(self, caplog):
        """Test the frozen chain and its non-unique stationary distribution."""
        with caplog.at_level(logging.WARNING, logger="qkolmo.brudno"):
            frozen = load_source_fixture("markov_frozen")
        assert "not unique" in caplog.text
        assert diagonal_probabilities(frozen, 2) == [Fraction(1, 2), 0, 0, Fraction(1, 2)]

    def test_non_diagonal_source(self, plus_source):
        """Test a pure non-diagonal local density."""
        assert not plus_source.diagonal
        assert local_spectrum(plus_source, 1) == pytest.approx([0.0, 1.0], abs=1e-12)
        with pytest.raises(InvalidParameterError):
            diagonal_probabilities(plus_source, 1)

    @pytest.mark.parametrize(
        "text",
        [
            "kind: iid\nrho: 1/2 1 0 1/2\n",
            "kind: iid\nrho: 1/2 0 0 1/3\n",
            "kind: iid\nrho: 1 0\n",
            "kind: markov\nP: 1/2 1/2 ; 0 1\npi: 1/2 1/2\n",
            "kind: quantum\n",
            "rho 1 0 0 0\n",
        ],
    )
    def test_parse_errors(self, text):
        """Test rejected source descriptions."""
        with pytest.raises(SpecParseError):
            parse_source(text)

    def test_load_source_file(self, tmp_path):
        """Test loading a source from disk."""
        path = tmp_path / "fair.src"
        path.write_text("kind: iid\nrho: 1/2 0 0 1/2\n", encoding="utf-8")
        assert load_source(path).name == "fair"
        with pytest.raises(SpecParseError):
            load_source(tmp_path / "missing.src")
        with pytest.raises(SpecParseError):
            load_source_fixture("no_such_source")

    def test_consistency(self, skewed, plus_source):
        """Test that local densities are marginals of longer ones."""
        assert consistency_check(skewed, 3)
        assert consistency_check(load_source_fixture("markov_frozen"), 3)
        assert consistency_check(plus_source, 2)

    def test_length_caps(self, plus_source):
        """Test the caps on block lengths."""
        with pytest.raises(ResourceCapError):
            local_spectrum(plus_source, 5, load_caps({"max_general_source_length": 4}))


class TestEntropy:
    """Test entropy rates and subadditivity."""

    def test_entropy_rates(self, skewed):
        """Test the rates of the packaged sources."""
        assert entropy_rate(skewed) == pytest.approx(0.468996, abs=1e-6)
        assert entropy_rate(load_source_fixture("markov_frozen")) == 0.0
        assert entropy_rate(iid_source(Fraction(1, 2))) == pytest.approx(1.0)

    def test_subadditivity(self):
        """Test S(rho^(n+m)) <= S(rho^(n)) + S(rho^(m)) on the frozen chain."""
        joint, separate = subadditivity_check(load_source_fixture("markov_frozen"), 2, 3)
        assert joint == pytest.approx(1.0)
        assert separate == pytest.approx(2.0)


class TestBetaMin:
    """Test minimal typical projectors."""

    @pytest.mark.parametrize("n,rank", [(2, 2), (4, 5), (16, 573)])
    def test_ranks(self, skewed, n, rank):
        """Test greedy ranks at eps = 1/10."""
        assert beta_min(skewed, n, Fraction(1, 10)).rank == rank

    def test_exact_mass(self, skewed):
        """Test that diagonal sources keep exact masses."""
        projector = beta_min(skewed, 2, "1/10")
        assert projector.mass == Fraction(9, 10)
        assert projector.log_trace == pytest.approx(1.0)

    def test_pure_source(self, plus_source):
        """Test that a pure local density has a rank-one projector."""
        assert beta_min(plus_source, 2, 0.1).rank == 1

    def test_eps_range(self, skewed):
        """Test that eps must lie in (0, 1)."""
        with pytest.raises(InvalidParameterError):
            beta_min(skewed, 2, 0)

    def test_report(self, skewed):
        """Test rows converging toward the entropy rate."""
        rows = beta_report(skewed, [16], Fraction(1, 10))
        assert rows[0].per_symbol == pytest.approx(math.log2(573) / 16)
        assert rows[0].per_symbol == pytest.approx(0.57265, abs=1e-5)
        assert rows[0].tsv().startswith("16\t")
        with pytest.raises(InvalidParameterError):
            beta_report(skewed, [0], Fraction(1, 10))


class TestUniversalSubspace:
    """Test symmetric operators and the universal typical projector."""

    @pytest.mark.parametrize("m,ell", [(8, 1), (127, 1), (128, 2), (2048, 2), (16384, 4)])
    def test_block_length(self, m, ell):
        """Test the power-of-two block length for m."""
        assert block_length_lm(m) == ell

    def test_block_length_too_small(self):
        """Test that m below 8 has no block length."""
        with pytest.raises(InvalidParameterError):
            block_length_lm(7)

    def test_symmetric_dimensions(self):
        """Test dimensions of symmetric subspaces and the rank of the spanning set."""
        assert [symmetric_subspace_dim(1, n) for n in (1, 2, 3)] == [4, 10, 20]
        assert symmetric_rank(1, 2) == 10
        assert len(symmetric_basis(1, 2)) == 10

    def test_symmetric_cap(self):
        """Test the symmetric dimension cap."""
        with pytest.raises(ResourceCapError):
            symmetric_basis(1, 9)

    def test_projector_rank(self):
        """Test the symmetric subspace of two qubits, padded to four."""
        assert universal_typical_projector(["00"], 1, 2, 2).rank == 3
        padded = universal_typical_projector(["00"], 1, 2, 4)
        assert padded.block_rank == 3
        assert padded.rank == 12

    def test_projector_matrix(self):
        """Test idempotence and trace of the float projector."""
        projector = universal_typical_projector(["00"], 1, 2, 3)
        p = projector.projector()
        assert np.allclose(p @ p, p)
        assert np.trace(p).real == pytest.approx(projector.rank)
        assert len(projector.completed_basis()) == 8

    def test_rotation_invariance(self):
        """Test that rotated codewords stay inside the span."""
        projector = universal_typical_projector(["00"], 1, 2, 2)
        assert rotation_invariance_check(projector, ["00"], np.random.default_rng(4)) < 1e-9

    @pytest.mark.parametrize(
        "codewords,m",
        [(["00"], 1), (["00", "00"], 2), (["0"], 2), (["0a"], 2)],
    )
    def test_projector_validation(self, codewords, m):
        """Test rejected codeword sets and register sizes."""
        with pytest.raises(InvalidParameterError):
            universal_typical_projector(codewords, 1, 2, m)

    def test_empirical_codewords(self):
        """Test codewords of low empirical entropy."""
        assert empirical_typical_codewords(1, 4, 0.1) == ["0000", "1111"]
        assert len(empirical_typical_codewords(1, 4, 0.9)) == 10
        assert rate_of(["0000", "1111"], 4) == pytest.approx(0.25)
        with pytest.raises(InvalidParameterError):
            empirical_typical_codewords(1, 4, 0)

    def test_empirical_codewords_cap(self):
        """Test that a binding cap keeps the lexicographically first admissible strings."""
        words = empirical_typical_codewords(2, 3, 0.92)
        assert words == ["000000", "000001", "000010", "000011", "000100", "000101", "001000", "001010"]
        assert len(words) == 1 << math.ceil(0.92 * 3)

    def test_trace_bound(self):
        """Test that the projector rank respects the trace bound."""
        words = empirical_typical_codewords(1, 4, 0.5)
        projector = universal_typical_projector(words, 1, 4, 4)
        assert projector.log_trace <= trace_bound(1, 4, rate_of(words, 4))
        assert normalized_trace_bound(1, 4, 0.5) == pytest.approx(trace_bound(1, 4, 0.5) / 4)
