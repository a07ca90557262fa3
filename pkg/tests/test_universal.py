"""Tests for the universal encoding of halting inputs."""

import dataclasses
import math
from fractions import Fraction

import numpy as np
import pytest

from qkolmo.config import load_caps
from qkolmo.errors import DecodeError, InvalidParameterError, NonHaltingError, ResourceCapError, SpecParseError
from qkolmo.halting import ApproxHaltingSpace
from qkolmo.linalg import trace_distance, vec
from qkolmo.machine import load_fixture
from qkolmo.qubits import QubitString
from qkolmo.universal import (
    cascade_depth,
    decode_program,
    default_eps0,
    dump_program,
    encode_input,
    fine_tuning,
    halting_time_sequence,
    load_program,
    similar_subspace_isometry,
)


@pytest.fixture
def identity():
    """Length-n inputs halt at t = n + 1."""
    return load_fixture("identity")


@pytest.fixture
def two_times():
    """'0' halts at t = 2 and '1' at t = 3."""
    return load_fixture("two_times")


class TestHaltingTimeSequence:
    """Test halting times, dimensions and codeword lengths."""

    def test_two_times_sequence(self, two_times):
        """Test two one-dimensional spaces with two-bit codewords."""
        seq = halting_time_sequence(two_times, 1, 8)
        assert seq.times == [2, 3]
        assert seq.dims == [1, 1]
        assert seq.lengths == [2, 2]
        assert seq.code().codewords == ("00", "01")

    def test_identity_sequence(self, identity):
        """Test a single full-dimensional space."""
        seq = halting_time_sequence(identity, 2, 8)
        assert (seq.times, seq.dims, seq.lengths) == ([3], [4], [1])

    def test_index_of_missing_time(self, identity):
        """Test that asking for a non-halting time raises."""
        with pytest.raises(NonHaltingError):
            halting_time_sequence(identity, 1, 8).index_of(5)

    def test_unknown_mode(self, identity):
        """Test mode validation."""
        with pytest.raises(InvalidParameterError):
            halting_time_sequence(identity, 1, 4, mode="fuzzy")  # type: ignore[arg-type]

    def test_default_eps0(self):
        """Test the default approximation accuracy."""
        assert default_eps0(1) == Fraction(1, 324)


class TestEncodeDecode:
    """Test exact programs."""

    def test_identity_program(self, identity):
        """Test that the quantum part is n + 1 qubits long."""
        program = encode_input(identity, vec(1, 0), t_max=8)
        assert program.codeword == "0"
        assert program.payload_qubits == 1
        assert program.quantum_length == 2
        assert program.total_length == len(program.machine_bits) + 2
        assert decode_program(program, t_max=8).label() == "0"

    def test_two_times_programs(self, two_times):
        """Test codewords picking the halting time."""
        early = encode_input(two_times, {"0": 1}, t_max=8)
        late = encode_input(two_times, {"1": 1}, t_max=8)
        assert (early.codeword, late.codeword) == ("00", "01")
        assert late.quantum_length == 2
        assert decode_program(late, t_max=8).label() == "1"

    def test_superposition_survives(self, identity):
        """Test exact decoding of a superposed input."""
        psi = {"01": 1, "10": -1}
        program = encode_input(identity, psi, t_max=8)
        assert program.quantum_length == 3
        assert decode_program(program, t_max=8).equals(QubitString.from_ket(psi))

    def test_float_decoding(self, identity):
        """Test decoding to accuracy delta."""
        program = encode_input(identity, vec(3, 4), t_max=8)
        out = decode_program(program, delta=Fraction(1, 100), t_max=8)
        expected = QubitString.from_ket({"0": 3, "1": 4})
        size = max(out.max_len, expected.max_len)
        assert trace_distance(out.padded(size).to_numpy(), expected.padded(size).to_numpy()) <= 0.01

    def test_non_halting_input(self, two_times):
        """Test that an input with mixed halting times has no program."""
        with pytest.raises(NonHaltingError):
            encode_input(two_times, vec(1, 1), t_max=8)

    def test_bad_inputs(self, identity):
        """Test zero and wrongly sized vectors."""
        with pytest.raises(InvalidParameterError):
            encode_input(identity, vec(0, 0), t_max=8)
        with pytest.raises(InvalidParameterError):
            encode_input(identity, vec(1, 0, 0), t_max=8)
        with pytest.raises(InvalidParameterError):
            encode_input(identity, {"0": 1, "01": 1}, t_max=8)

    def test_unknown_codeword(self, identity):
        """Test that a codeword outside the code fails to decode."""
        program = dataclasses.replace(encode_input(identity, vec(1, 0), t_max=8), codeword="1")
        with pytest.raises(DecodeError):
            decode_program(program, t_max=8)


class TestProgramFiles:
    """Test the program file format."""

    def test_dump_and_load(self, tmp_path, two_times):
        """Test that a written program decodes after reading it back."""
        program = encode_input(two_times, {"1": 1}, t_max=8)
        path = tmp_path / "late.qprog"
        path.write_text(dump_program(program), encoding="utf-8")
        loaded = load_program(path)
        assert loaded.machine_text == program.machine_text
        assert (loaded.n, loaded.codeword, loaded.mode) == (1, "01", "exact")
        assert decode_program(loaded, t_max=8).label() == "1"

    def test_missing_sections(self):
        """Test malformed program files."""
        with pytest.raises(SpecParseError):
            load_program("[mode]\nexact\n")
        with pytest.raises(SpecParseError):
            load_program("stray\n[machine]\n")

    def test_missing_file(self, tmp_path):
        """Test that an unreadable program file is a parse error."""
        with pytest.raises(SpecParseError):
            load_program(tmp_path / "missing.qprog")

    def test_bad_payload_line(self, identity):
        """Test that unknown payload entries are parse errors."""
        text = dump_program(encode_input(identity, vec(1, 0), t_max=8))
        with pytest.raises(SpecParseError):
            load_program(text.replace("radical", "cubic", 1))


class TestFineTuning:
    """Test isometries between similar subspaces."""

    def test_similar_lines(self):
        """Test the isometry between two nearby lines."""
        iso = similar_subspace_isometry([np.array([1, 0], dtype=complex)], [np.array([1, 0.01], dtype=complex)])
        image = iso.matrix @ np.array([1, 0])
        assert np.allclose(image, np.array([1, 0.01]) / np.linalg.norm([1, 0.01]))
        assert iso.defect == pytest.approx(0.01, rel=1e-3)

    def test_dimension_mismatch(self):
        """Test that subspaces must have equal dimension."""
        with pytest.raises(InvalidParameterError):
            similar_subspace_isometry([vec(1, 0)], [vec(1, 0), vec(0, 1)])

    def test_orthogonal_target(self):
        """Test that an orthogonal target has no isometry."""
        with pytest.raises(InvalidParameterError):
            similar_subspace_isometry([vec(1, 0)], [vec(0, 1)])

    def test_cascade_depth(self):
        """Test the number of fine-tuning levels."""
        assert cascade_depth(1, 1e-6, 1.0) == 0
        assert cascade_depth(1, 1e-4, 0.01) >= cascade_depth(1, 1e-4, 0.5) > 0
        assert cascade_depth(1, 1 / 50, 1 / 100) == 11

    def test_cascade_settles_on_full_space(self, identity):
        """Test that a space already meeting every accuracy needs no fine-tuning step."""
        space = ApproxHaltingSpace(identity.machine_id, 1, Fraction(1, 50), 2, (vec(1, 0), vec(0, 1)), Fraction(9, 25))
        tune = fine_tuning(identity, space, 11, Fraction(1, 100))
        assert (tune.planned, tune.applied) == (11, 0)
        assert np.allclose(tune.matrix, np.eye(2))

    def test_cascade_step(self, two_times, mocker):
        """Test one isometry onto a finer space, then truncation once the space has settled."""
        tilted = ApproxHaltingSpace(two_times.machine_id, 1, Fraction(1, 50), 2, (vec(2, 1),), Fraction(9, 25))
        finer = ApproxHaltingSpace(two_times.machine_id, 1, Fraction(9, 2000), 2, (vec(1, 0),), Fraction(81, 1000))
        build = mocker.patch("qkolmo.universal.approx_halting_space", return_value=finer)
        tune = fine_tuning(two_times, tilted, 5, Fraction(1, 100))
        assert build.call_count == 1
        assert (tune.planned, tune.applied) == (5, 1)
        assert tune.defects[0] == pytest.approx(math.sqrt(2 - 4 / math.sqrt(5)))
        image = tune.matrix @ (np.array([2, 1]) / math.sqrt(5))
        assert np.allclose(image, [1, 0])

    def test_cascade_dimension_change(self, two_times, mocker):
        """Test that a finer space of another dimension is rejected."""
        tilted = ApproxHaltingSpace(two_times.machine_id, 1, Fraction(1, 50), 2, (vec(2, 1),), Fraction(9, 25))
        empty = ApproxHaltingSpace(two_times.machine_id, 1, Fraction(9, 2000), 2, (), Fraction(81, 1000))
        mocker.patch("qkolmo.universal.approx_halting_space", return_value=empty)
        with pytest.raises(InvalidParameterError):
            fine_tuning(two_times, tilted, 5, Fraction(1, 100))

    def test_cascade_level_cap(self, identity):
        """Test the cap on planned levels."""
        space = ApproxHaltingSpace(identity.machine_id, 1, Fraction(1, 50), 2, (vec(1, 0), vec(0, 1)), Fraction(9, 25))
        with pytest.raises(ResourceCapError):
            fine_tuning(identity, space, 11, Fraction(1, 100), load_caps({"max_fine_tune_levels": 4}))

    @pytest.mark.slow
    def test_approximate_program(self, identity, tmp_path):
        """Test an approximate-mode program of the identity machine and its planned cascade."""
        program = encode_input(identity, vec(1, 0), t_max=3, mode="approx", eps0=Fraction(1, 50))
        assert program.mode == "approx"
        assert program.quantum_length == 2
        assert program.levels == cascade_depth(1, 1 / 50, 1 / 100) == 11
        assert program.delta == Fraction(1, 100)
        path = tmp_path / "approx.qprog"
        path.write_text(dump_program(program), encoding="utf-8")
        loaded = load_program(path)
        assert (loaded.levels, loaded.delta) == (11, Fraction(1, 100))
        out = decode_program(loaded, delta=Fraction(1, 100), t_max=3)
        assert trace_distance(out.to_numpy(), QubitString.classical("0", out.max_len).to_numpy()) <= 0.01
