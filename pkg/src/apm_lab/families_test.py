"""Tests for set families."""

import pytest

from apm_lab.core import SeededRng
from apm_lab.errors import DomainError, OutputError, ResourceError, ValidationError
from apm_lab.families import SetFamily
from apm_lab.families.factory import get_family, list_families


class TestFactory:
    """Tests for family lookup."""

    def test_list(self):
        assert list_families() == ["full", "prefix-parity", "first-bits-fixed", "random", "file"]

    def test_case_insensitive(self):
        family = get_family("First-Bits-Fixed")
        assert isinstance(family, SetFamily)
        assert family.get_name() == "first-bits-fixed"

    def test_unknown(self):
        with pytest.raises(DomainError):
            get_family("cylinder")

    def test_file_needs_path(self):
        with pytest.raises(ValidationError):
            get_family("file")

    def test_every_family_describes_itself(self, set_file):
        for name in list_families():
            options = {"path": str(set_file)} if name == "file" else {}
            assert get_family(name, **options).describe()


class TestBuild:
    """Tests for building A_c."""

    @pytest.mark.parametrize("name", ["prefix-parity", "first-bits-fixed", "random"])
    def test_size_is_two_to_the_n_minus_c(self, name, rng):
        family = get_family(name)
        for c in range(0, 4):
            subset = family.build(8, c, rng)
            assert subset.size == 2 ** (8 - c)
            assert subset.deficiency == pytest.approx(c)

    def test_full_ignores_c(self, rng):
        assert get_family("full").build(6, 3, rng).size == 64

    def test_first_bits_fixed_members(self, rng):
        subset = get_family("first-bits-fixed").build(4, 2, rng)
        assert [str(p) for p in subset.bitstrings()] == ["0000", "0010", "0001", "0011"]

    def test_prefix_parity_members(self, rng, prefix_parity_set):
        subset = get_family("prefix-parity").build(4, 1, rng)
        assert subset.members.tolist() == prefix_parity_set.members.tolist()

    def test_random_is_seeded(self):
        family = get_family("random")
        a = family.build(10, 3, SeededRng(1).child(0))
        b = family.build(10, 3, SeededRng(1).child(0))
        assert a.members.tolist() == b.members.tolist()

    @pytest.mark.parametrize(
        "name,c", [("prefix-parity", 5), ("first-bits-fixed", 9), ("random", -1)]
    )
    def test_c_out_of_range(self, name, c, rng):
        with pytest.raises(DomainError):
            get_family(name).build(8, c, rng)

    def test_file_family(self, set_file, rng):
        family = get_family("file", path=str(set_file))
        assert family.ignores_c()
        assert family.build(4, 0, rng).size == 8

    def test_file_family_wrong_n(self, set_file, rng):
        with pytest.raises(ValidationError):
            get_family("file", path=str(set_file)).build(6, 0, rng)

    def test_file_family_missing(self, tmp_path, rng):
        with pytest.raises(OutputError):
            get_family("file", path=str(tmp_path / "none.txt")).build(4, 0, rng)

    @pytest.mark.parametrize("name", list_families())
    def test_oversized_cube_is_a_resource_error(self, name, set_file, rng):
        """n = 40 is refused before any 2^n array is allocated."""
        options = {"path": str(set_file)} if name == "file" else {}
        with pytest.raises(ResourceError):
            get_family(name, **options).build(40, 0, rng)
