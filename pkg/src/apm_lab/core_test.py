"""Tests for core module."""

import numpy as np
import pytest

from apm_lab.conftest import bits, chi_square_statistic, write_lines
from apm_lab.core import (
    BitString,
    Matching,
    SeededRng,
    complete_matching,
    count_matchings,
    enumerate_matchings,
    extract_z,
    extract_z_batch,
    load_matching,
    matT_apply,
    matT_index_table,
    sample_matching,
)
from apm_lab.errors import DimensionError, DomainError, OutputError, ResourceError, ValidationError


class TestBitString:
    """Tests for the packed bit vector."""

    def test_string_roundtrip(self):
        """Character k of the text should be bit k."""
        x = bits("1011")
        assert [x[k] for k in range(4)] == [1, 0, 1, 1]
        assert x.to_string() == "1011"
        assert x.to_int() == 0b1101

    def test_long_strings_span_words(self):
        """Strings longer than one word keep every bit."""
        text = "10" * 70
        x = bits(text)
        assert len(x.words) == 3
        assert str(x) == text
        assert x.weight() == 70

    def test_xor_and_dot(self):
        """XOR and GF(2) inner product."""
        assert str(bits("1100") ^ bits("1010")) == "0110"
        assert bits("1100").dot(bits("1010")) == 1
        assert bits("1100").dot(bits("1100")) == 0

    def test_complement(self):
        assert str(bits("1001").complement()) == "0110"

    def test_rejects_bad_characters(self):
        """Only 0 and 1 are accepted."""
        with pytest.raises(ValidationError):
            BitString.from_string("10a1")

    def test_length_mismatch(self):
        """Operations on strings of different lengths fail."""
        with pytest.raises(DimensionError):
            bits("10") ^ bits("101")

    def test_to_array(self):
        assert bits("0110").to_array().tolist() == [0, 1, 1, 0]


class TestMatching:
    """Tests for matchings and their text forms."""

    def test_from_pairs_canonicalizes(self):
        """Pair order and orientation are normalised."""
        matching = Matching.from_pairs(6, [(5, 2), (1, 0)])
        assert matching.pairs == ((0, 1), (2, 5))
        assert matching.m == 2
        assert matching.alpha == pytest.approx(1 / 3)

    def test_parse_semicolons_and_lines(self):
        """Both separators give the same matching."""
        assert Matching.parse("0 1;2 3", 4) == Matching.parse("2 3\n# comment\n0 1\n", 4)

    def test_str_uses_semicolons(self):
        assert str(Matching.parse("2 3;0 1", 4)) == "0 1;2 3"

    def test_rejects_shared_vertex(self):
        """Edges must be disjoint."""
        with pytest.raises(ValidationError):
            Matching.parse("0 1;1 2", 4)

    def test_rejects_out_of_range_vertex(self):
        with pytest.raises(DomainError):
            Matching.parse("0 4", 4)

    def test_rejects_bad_syntax(self):
        with pytest.raises(ValidationError):
            Matching.parse("0 1 2", 4)

    def test_load_matching(self, tmp_path):
        """Matching files hold one pair per line."""
        path = write_lines(tmp_path / "m.txt", ["0 3", "1 2"])
        assert load_matching(path, 4).pairs == ((0, 3), (1, 2))

    def test_load_missing_file(self, tmp_path):
        with pytest.raises(OutputError):
            load_matching(tmp_path / "missing.txt", 4)

    def test_is_perfect(self):
        assert Matching.parse("0 1;2 3", 4).is_perfect
        assert not Matching.parse("0 1", 4).is_perfect


class TestExtractor:
    """Tests for extract_z and M^T."""

    def test_all_zero_input(self):
        assert str(extract_z(bits("0000"), Matching.parse("0 1", 4))) == "0"

    def test_direct_parities(self):
        assert str(extract_z(bits("1010"), Matching.parse("0 1;2 3", 4))) == "11"

    def test_equal_endpoints(self):
        """x = 1111 gives z = 0^m for any matching."""
        for matching in enumerate_matchings(4, 2):
            assert extract_z(bits("1111"), matching).weight() == 0

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            extract_z(bits("101"), Matching.parse("0 1", 4))

    def test_batch_matches_scalar(self, rng):
        """The vectorised extractor agrees with extract_z on every point."""
        matching = sample_matching(8, 3, rng)
        batch = extract_z_batch(np.arange(256), matching)
        for y in range(256):
            assert batch[y] == extract_z(BitString.from_int(y, 8), matching).to_int()

    def test_matT_apply(self):
        """M^T s sets both endpoints of each selected edge."""
        matching = Matching.parse("0 1;2 3", 4)
        assert str(matT_apply(matching, bits("10"))) == "1100"
        assert str(matT_apply(matching, bits("00"))) == "0000"
        assert str(matT_apply(matching, bits("11"))) == "1111"

    def test_matT_index_table(self, rng):
        """The lookup table agrees with matT_apply."""
        matching = sample_matching(10, 3, rng)
        table = matT_index_table(matching)
        for s in range(8):
            assert table[s] == matT_apply(matching, BitString.from_int(s, 3)).to_int()

    def test_parity_identity(self, rng):
        """<x, M^T s> = <z(x, M), s> over GF(2)."""
        matching = sample_matching(10, 4, rng)
        for _ in range(50):
            x = rng.bits(10)
            s = rng.bits(4)
            assert x.dot(matT_apply(matching, s)) == extract_z(x, matching).dot(s)


    def test_linear_over_gf2(self):
        """z(x xor x') = z(x) xor z(x') for every x, x' and every matching, n <= 8."""
        for n in range(2, 9):
            points = np.arange(1 << n)
            pairs = np.bitwise_xor.outer(points, points)
            for m in range(1, n // 2 + 1):
                for matching in enumerate_matchings(n, m):
                    z = extract_z_batch(points, matching)
                    assert np.array_equal(z[pairs], np.bitwise_xor.outer(z, z))

    def test_complement_invariant(self):
        """Flipping every bit of x leaves z unchanged, n <= 8."""
        for n in range(2, 9):
            points = np.arange(1 << n)
            for m in range(1, n // 2 + 1):
                for matching in enumerate_matchings(n, m):
                    z = extract_z_batch(points, matching)
                    assert np.array_equal(z[points ^ ((1 << n) - 1)], z)

    def test_complement_invariant_scalar(self, rng):
        for _ in range(50):
            matching = sample_matching(12, 5, rng)
            x = rng.bits(12)
            assert extract_z(x.complement(), matching) == extract_z(x, matching)

class TestCounting:
    """Tests for counting and enumerating matchings."""

    @pytest.mark.parametrize("n,m,expected", [(4, 1, 6), (4, 2, 3), (7, 0, 1), (12, 3, 13860)])
    def test_count_matchings(self, n, m, expected):
        assert count_matchings(n, m) == expected

    def test_count_too_many_edges(self):
        with pytest.raises(DomainError):
            count_matchings(4, 3)

    def test_enumerate_small_cases(self):
        """Hand-checkable enumerations."""
        assert [str(mt) for mt in enumerate_matchings(2, 1)] == ["0 1"]
        assert [str(mt) for mt in enumerate_matchings(3, 1)] == ["0 1", "0 2", "1 2"]

    @pytest.mark.parametrize("n,m", [(n, m) for n in range(0, 11) for m in range(n // 2 + 1)])
    def test_enumerate_count_and_uniqueness(self, n, m):
        """Enumeration yields count_matchings distinct matchings."""
        matchings = list(enumerate_matchings(n, m))
        assert len(matchings) == count_matchings(n, m)
        assert len(set(matchings)) == len(matchings)
        assert all(mt.m == m for mt in matchings)

    def test_enumerate_cap(self):
        """Exceeding the cap fails before any work is done."""
        with pytest.raises(ResourceError):
            enumerate_matchings(12, 3, cap=1000)


class TestSampling:
    """Tests for sampling and completing matchings."""

    def test_empty_matching(self, rng):
        assert sample_matching(6, 0, rng).pairs == ()

    def test_perfect_matching(self, rng):
        assert sample_matching(4, 2, rng).covered() == [0, 1, 2, 3]

    def test_uniform_over_single_edges(self, rng):
        """60000 draws on (4, 1) pass a chi-square test at 0.001."""
        index = {mt: k for k, mt in enumerate(enumerate_matchings(4, 1))}
        counts = np.zeros(6)
        for _ in range(60_000):
            counts[index[sample_matching(4, 1, rng)]] += 1
        # Critical value of chi-square with 5 degrees of freedom at 0.001
        assert chi_square_statistic(counts, np.full(6, 1 / 6)) < 20.515

    def test_sample_too_large(self, rng):
        with pytest.raises(DomainError):
            sample_matching(5, 3, rng)

    def test_complete_matching(self):
        """Uncovered vertices are paired in ascending order."""
        assert complete_matching(Matching.parse("0 1", 4)) == Matching.parse("0 1;2 3", 4)
        assert complete_matching(Matching.parse("1 4", 6)) == Matching.parse("1 4;0 2;3 5", 6)

    def test_complete_perfect_unchanged(self):
        perfect = Matching.parse("0 3;1 2", 4)
        assert complete_matching(perfect) == perfect

    def test_complete_odd_n(self):
        with pytest.raises(DomainError):
            complete_matching(Matching.parse("0 1", 5))


class TestSeededRng:
    """Tests for reproducible random streams."""

    def test_same_seed_same_stream(self):
        a = SeededRng(7)
        b = SeededRng(7)
        assert [a.integers(0, 1000) for _ in range(10)] == [b.integers(0, 1000) for _ in range(10)]

    def test_children_differ(self):
        """Child streams are distinct from each other and from the parent."""
        parent = SeededRng(7)
        draws = {
            tuple(stream.integers(0, 2**30) for _ in range(4))
            for stream in (parent, parent.child(0), parent.child(1), SeededRng(7, stream_id=1))
        }
        assert len(draws) == 4

    def test_child_is_reproducible(self):
        assert SeededRng(3).child(5).random() == SeededRng(3).child(5).random()

    def test_bits_length(self, rng):
        assert len(rng.bits(130)) == 130
