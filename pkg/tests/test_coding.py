"""Tests for prefix codes and quantum standard compression."""

from fractions import Fraction

import numpy as np
import pytest

from qkolmo.coding import (
    CompressionMap,
    PrefixCode,
    blind_prefix_code,
    ceil_log2,
    compress,
    decompress,
    decompression_precision_log2,
    dump_codewords,
    embed_fixed_length,
    exact_vector_numpy,
    is_prefix_free,
    isometry_defect,
    kraft_check,
    kraft_sum,
    load_codewords,
    self_delim_decode,
    self_delim_encode,
    standard_basis,
    unembed_fixed_length,
)
from qkolmo.errors import DecodeError, InvalidParameterError, KraftViolationError, NotInSubspaceError, SpecParseError
from qkolmo.linalg import CRat, ScaledUnitVector, inner, vec
from qkolmo.qubits import QubitString


@pytest.fixture
def plane() -> list:
    """A two-dimensional subspace of H_2 with complex entries."""
    return [vec(1, 1, 0, 0), vec(0, CRat(0, 1), 1, 0)]


class TestSelfDelimiting:
    """Test the self-delimiting integer code."""

    @pytest.mark.parametrize("k,word", [(1, "01"), (2, "1010"), (3, "1011"), (5, "110101"), (8, "1110" + "1000")])
    def test_encode(self, k, word):
        """Test worked codewords."""
        assert self_delim_encode(k) == word
        assert len(word) == 2 * (k.bit_length() - 1) + 2

    def test_decode_leaves_rest(self):
        """Test decoding a prefix of a longer stream."""
        assert self_delim_decode(self_delim_encode(13) + "0110") == (13, "0110")

    def test_decode_errors(self):
        """Test truncated streams."""
        with pytest.raises(DecodeError):
            self_delim_decode("111")
        with pytest.raises(DecodeError):
            self_delim_decode("110")

    def test_encode_rejects_zero(self):
        """Test that k must be positive."""
        with pytest.raises(InvalidParameterError):
            self_delim_encode(0)


class TestBlindPrefixCode:
    """Test online prefix codes built from lengths alone."""

    def test_worked_example(self):
        """Test lengths 1, 2, 2."""
        assert blind_prefix_code([1, 2, 2]).codewords == ("0", "10", "11")

    def test_out_of_order_lengths(self):
        """Test that later short codewords avoid earlier long ones."""
        code = blind_prefix_code([3, 1, 2])
        assert code.codewords == ("000", "1", "01")
        assert is_prefix_free(code.codewords)

    def test_kraft_violation(self):
        """Test that a full code cannot grow."""
        with pytest.raises(KraftViolationError):
            blind_prefix_code([1, 1, 1])

    def test_random_kraft_lengths(self):
        """Test seeded length sequences within the Kraft budget."""
        rng = np.random.default_rng(3)
        for _ in range(50):
            lengths: list[int] = []
            for ell in rng.integers(1, 9, size=30):
                if kraft_check([*lengths, int(ell)]):
                    lengths.append(int(ell))
            code = blind_prefix_code(lengths)
            assert [len(c) for c in code.codewords] == lengths
            assert is_prefix_free(code.codewords)
            assert code.kraft_mass == kraft_sum(lengths) <= 1

    def test_empty_codeword(self):
        """Test that length 0 takes the whole budget."""
        assert PrefixCode().extend(0).codewords == ("",)

    def test_codeword_files(self, tmp_path):
        """Test writing and reading codeword lists."""
        path = tmp_path / "code.txt"
        path.write_text(dump_codewords(blind_prefix_code([2, 2, 1])), encoding="utf-8")
        assert load_codewords(path).codewords == ("00", "01", "1")
        with pytest.raises(SpecParseError):
            load_codewords("0\n01\n")
        with pytest.raises(SpecParseError):
            load_codewords("02\n")


class TestCompression:
    """Test the exact and float standard compression maps."""

    def test_ceil_log2(self):
        """Test target register sizes."""
        assert [ceil_log2(n) for n in (1, 2, 3, 4, 5)] == [0, 1, 2, 2, 3]

    def test_standard_basis_is_orthogonal(self, plane):
        """Test the exact orthogonality of the standard basis."""
        basis = standard_basis(plane)
        assert len(basis) == 2
        assert inner(basis[0].direction, basis[1].direction) == 0
        assert isometry_defect(CompressionMap.for_subspace(plane)) == 0

    def test_exact_round_trip(self, plane):
        """Test that decompressing a compressed vector gives it back exactly."""
        cmap = CompressionMap.for_subspace(plane)
        psi = vec(2, CRat(2, -1), -1, 0)
        payload = compress(cmap, psi)
        assert len(payload) == 2
        assert payload.norm_sq() == 1
        restored = decompress(cmap, payload)
        assert isinstance(restored, ScaledUnitVector)
        assert restored.equivalent(ScaledUnitVector.from_vector(psi))

    def test_float_decompression_accuracy(self, plane):
        """Test the float route against the requested accuracy."""
        cmap = CompressionMap.for_subspace(plane)
        psi = vec(1, 0, CRat(0, 1), 0)
        payload = compress(cmap, psi)
        for delta in (1e-2, 1e-6):
            approx = decompress(cmap, payload, delta)
            assert np.linalg.norm(approx - exact_vector_numpy(psi)) <= delta

    def test_vector_outside_subspace(self, plane):
        """Test that compressing a foreign vector raises."""
        cmap = CompressionMap.for_subspace(plane)
        with pytest.raises(NotInSubspaceError):
            compress(cmap, vec(0, 0, 0, 1))
        with pytest.raises(NotInSubspaceError):
            compress(cmap, vec(1, 0))

    def test_one_dimensional_subspace(self):
        """Test that a line compresses to zero qubits."""
        cmap = CompressionMap.for_subspace([vec(0, 3, 4, 0)])
        assert cmap.target_qubits == 0
        assert len(compress(cmap, vec(0, 3, 4, 0))) == 1

    def test_payload_size_mismatch(self, plane):
        """Test that a payload of the wrong size is rejected."""
        cmap = CompressionMap.for_subspace(plane)
        with pytest.raises(DecodeError):
            decompress(cmap, np.ones(4) / 2, 1e-3)

    def test_non_power_of_two_ambient(self):
        """Test that the ambient space must be some H_n."""
        with pytest.raises(InvalidParameterError):
            CompressionMap.for_subspace([vec(1, 0, 0)])

    def test_precision_budget_decreases_with_n(self):
        """Test the digit budget of decompression."""
        assert decompression_precision_log2(2, 1e-3) < decompression_precision_log2(1, 1e-3) < 0


class TestFixedLengthEmbedding:
    """Test the embedding of H_{<=n} into H_{n+1}."""

    def test_embed_classical(self):
        """Test that lambda, 0 and 1 land on 00, 01 and 10."""
        assert embed_fixed_length(QubitString.classical("", 1)).label() == "00"
        assert embed_fixed_length(QubitString.classical("0")).label() == "01"
        assert embed_fixed_length(QubitString.classical("1")).label() == "10"

    def test_unembed_inverts(self):
        """Test that unembedding gives back the superposition."""
        sigma = QubitString.from_ket({"": 1, "1": CRat(0, 1)})
        assert unembed_fixed_length(embed_fixed_length(sigma)).equals(sigma)

    def test_unembed_rejects_all_ones(self):
        """Test that 11...1 is outside the embedding."""
        with pytest.raises(DecodeError):
            unembed_fixed_length(QubitString.classical("11"))
        with pytest.raises(DecodeError):
            unembed_fixed_length(QubitString.classical("0", 2))

    def test_mixed_length_weight(self):
        """Test that the embedded state keeps its diagonal weights."""
        sigma = QubitString.mixture([(Fraction(1, 4), QubitString.classical("0")), (Fraction(3, 4), QubitString.empty())])
        embedded = embed_fixed_length(sigma)
        diag = embedded.diagonal()
        assert sum(diag) == 1
        assert max(diag) == Fraction(3, 4)
