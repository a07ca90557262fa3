"""Tests for qubit strings on the direct sum of fixed-length spaces."""

from fractions import Fraction

import numpy as np
import pytest

from qkolmo.errors import InvalidParameterError, NonHermitianError, SpecParseError
from qkolmo.linalg import CRat, trace_distance
from qkolmo.qubits import (
    QubitString,
    direct_sum_dim,
    index_string,
    lengths,
    parse_ket,
    string_index,
    strings_up_to,
    tensor_classical_prefix,
    truncate_prefix,
    truncation_bound,
)


@pytest.fixture
def plus() -> QubitString:
    """(|0> + |1>)/sqrt(2) as an exact qubit string."""
    return QubitString.from_ket({"0": 1, "1": 1})


@pytest.fixture
def short_long_mixture() -> QubitString:
    """Equal mixture of '0' and '0111'."""
    return QubitString.mixture([(Fraction(1, 2), QubitString.classical("0")), (Fraction(1, 2), QubitString.classical("0111"))])


class TestIndexing:
    """Test the direct-sum basis order."""

    def test_string_index(self):
        """Test the order lambda, 0, 1, 00, 01, ..."""
        assert [string_index(s) for s in ["", "0", "1", "00", "01", "10", "11", "000"]] == list(range(8))

    def test_index_string_inverts(self):
        """Test that index_string inverts string_index."""
        assert all(string_index(index_string(i)) == i for i in range(direct_sum_dim(4)))

    def test_direct_sum_dim(self):
        """Test the dimension 2^(n+1) - 1."""
        assert direct_sum_dim(0) == 1
        assert direct_sum_dim(2) == 7
        assert len(strings_up_to(2)) == 7


class TestQubitString:
    """Test construction and validation of qubit strings."""

    def test_classical_label(self):
        """Test labels of classical strings."""
        assert QubitString.classical("01").label() == "01"
        assert QubitString.empty().label() == "λ"

    def test_from_ket_normalizes(self, plus):
        """Test that kets are normalized exactly."""
        assert plus.exact
        assert plus.entry(1, 1) == CRat(Fraction(1, 2))
        assert plus.entry(1, 2) == CRat(Fraction(1, 2))
        assert plus.label() == "<mixed/superposed over 2 strings>"
        plus.validate()

    def test_zero_ket_rejected(self):
        """Test that an all-zero ket raises."""
        with pytest.raises(InvalidParameterError):
            QubitString.from_ket({"0": 0})

    def test_trace_must_be_one(self):
        """Test the unit-trace check."""
        with pytest.raises(InvalidParameterError):
            QubitString(0, ((CRat(2),),))

    def test_hermiticity_checked(self):
        """Test that a non-hermitian matrix is rejected."""
        rows = [[CRat()] * 3 for _ in range(3)]
        rows[0][0] = CRat(1)
        rows[0][1] = CRat(0, 1)
        with pytest.raises(NonHermitianError):
            QubitString(1, tuple(tuple(r) for r in rows))

    def test_padded_keeps_state(self):
        """Test that padding embeds without changing the state."""
        sigma = QubitString.classical("1")
        padded = sigma.padded(3)
        assert padded.max_len == 3
        assert padded.label() == "1"
        assert padded.equals(sigma)
        with pytest.raises(InvalidParameterError):
            padded.padded(1)

    def test_float_view(self, plus):
        """Test the float conversion and float kets."""
        floaty = QubitString.from_float_ket({"0": 1.0, "1": 1.0})
        assert not floaty.exact
        assert floaty.equals(plus.to_float())
        assert trace_distance(floaty.to_numpy(), plus.to_numpy()) == pytest.approx(0.0, abs=1e-12)

    def test_mixture_is_exact(self, short_long_mixture):
        """Test exact convex combinations of different lengths."""
        assert short_long_mixture.exact
        assert short_long_mixture.max_len == 4
        assert short_long_mixture.diagonal()[string_index("0")] == Fraction(1, 2)


class TestLengths:
    """Test base and average lengths, truncation and prefixes."""

    def test_lengths(self, short_long_mixture):
        """Test base length and average length of a mixture."""
        assert lengths(short_long_mixture) == (4, Fraction(5, 2))
        assert lengths(QubitString.classical("011")) == (3, Fraction(3))

    def test_truncate_classical(self):
        """Test truncating a classical string to its prefix."""
        assert truncate_prefix(QubitString.classical("011"), 1).label() == "0"
        assert truncate_prefix(QubitString.classical("011"), 5).label() == "011"

    def test_truncate_mixture(self, short_long_mixture):
        """Test that truncation merges strings with a common prefix."""
        truncated = truncate_prefix(short_long_mixture, 1)
        assert truncated.label() == "0"
        distance = trace_distance(short_long_mixture.to_numpy(), truncated.padded(4).to_numpy())
        assert distance == pytest.approx(0.5)
        assert distance <= truncation_bound(2.5, 1)

    def test_truncate_superposition_decoheres(self):
        """Test that tracing out the tail of a superposition loses coherence."""
        sigma = QubitString.from_ket({"00": 1, "11": 1})
        truncated = truncate_prefix(sigma, 1)
        assert np.allclose(truncated.to_numpy(), np.diag([0, 0.5, 0.5]))

    def test_negative_prefix(self):
        """Test that negative prefix lengths raise."""
        with pytest.raises(InvalidParameterError):
            truncate_prefix(QubitString.classical("0"), -1)

    def test_tensor_classical_prefix(self, plus):
        """Test prepending a classical prefix."""
        assert tensor_classical_prefix("1", QubitString.classical("0")).label() == "10"
        prefixed = tensor_classical_prefix("01", plus)
        assert prefixed.max_len == 3
        assert prefixed.entry(string_index("010"), string_index("011")) == CRat(Fraction(1, 2))


class TestParseKet:
    """Test the amp:bits ket notation."""

    def test_parse_ket(self):
        """Test amplitudes and bare strings."""
        assert parse_ket("1:0;1/2i:11") == {"0": CRat(1), "11": CRat(0, Fraction(1, 2))}
        assert parse_ket("01") == {"01": CRat(1)}

    def test_parse_ket_accumulates(self):
        """Test that repeated strings add their amplitudes."""
        assert parse_ket("1:0;2:0") == {"0": CRat(3)}

    def test_parse_ket_empty(self):
        """Test that an empty ket is a parse error."""
        with pytest.raises(SpecParseError):
            parse_ket(" ; ")
