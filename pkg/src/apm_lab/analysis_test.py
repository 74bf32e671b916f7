"""Tests for analysis module."""

import time
from fractions import Fraction

import numpy as np
import pytest

from apm_lab.analysis import (
    Distribution,
    SubsetA,
    conditional_dist,
    deficiency_sweep,
    distance_from_uniform_via_spectrum,
    expected_l2_via_levels,
    expected_tvd,
    gk,
    gk_is_decreasing,
    l2_distance_sq,
    level_bound_check,
    level_weight_bound,
    load_subset,
    matching_hit_fraction,
    matching_hit_prob,
    pm_spectrum_via_f,
    save_subset,
    tvd,
)
from apm_lab.conftest import assert_within_sigma, bits, random_subset
from apm_lab.core import Matching, SeededRng, extract_z, sample_matching
from apm_lab.errors import DimensionError, DomainError, ResourceError
from apm_lab.spectral import fwht


class TestSubsetA:
    """Tests for flat sources."""

    def test_full_cube(self):
        subset = SubsetA.full(5)
        assert subset.size == 32
        assert subset.deficiency == 0.0

    def test_deficiency(self, prefix_parity_set):
        assert prefix_parity_set.size == 8
        assert prefix_parity_set.deficiency == pytest.approx(1.0)

    def test_duplicates_removed(self):
        assert SubsetA(3, [5, 1, 5]).members.tolist() == [1, 5]

    def test_empty_rejected(self):
        with pytest.raises(DomainError):
            SubsetA(3, [])

    def test_member_out_of_range(self):
        with pytest.raises(DomainError):
            SubsetA(3, [8])

    def test_file_roundtrip(self, tmp_path, prefix_parity_set):
        path = tmp_path / "a.txt"
        save_subset(prefix_parity_set, path)
        loaded = load_subset(path)
        assert loaded.n == 4
        assert loaded.members.tolist() == prefix_parity_set.members.tolist()

    def test_from_predicate(self):
        subset = SubsetA.from_predicate(3, lambda points: (points & 1) == 0)
        assert subset.members.tolist() == [0, 2, 4, 6]

    @pytest.mark.parametrize(
        "build", [lambda: SubsetA.full(40), lambda: SubsetA.from_predicate(40, lambda p: p == 0)]
    )
    def test_oversized_cube(self, build):
        with pytest.raises(ResourceError):
            build()

    def test_from_bitstrings_mixed_lengths(self):
        with pytest.raises(DimensionError):
            SubsetA.from_bitstrings([bits("01"), bits("011")])


class TestDistributions:
    """Tests for p_M and distances."""

    def test_full_cube_gives_uniform(self, rng):
        matching = sample_matching(6, 2, rng)
        dist = conditional_dist(SubsetA.full(6), matching)
        assert dist.probs.tolist() == [0.25] * 4

    def test_prefix_parity_on_its_edge(self, prefix_parity_set):
        dist = conditional_dist(prefix_parity_set, Matching.parse("0 1", 4))
        assert dist.probs.tolist() == [1.0, 0.0]

    def test_singleton_gives_point_mass(self):
        x = bits("0110")
        matching = Matching.parse("0 1;2 3", 4)
        dist = conditional_dist(SubsetA.from_bitstrings([x]), matching)
        z = extract_z(x, matching).to_int()
        assert dist.probs[z] == 1.0

    def test_tvd_examples(self):
        uniform = Distribution.uniform(1)
        assert tvd(uniform, uniform) == 0.0
        assert tvd(Distribution.point_mass(1, 0), Distribution.point_mass(1, 1)) == 2.0
        assert tvd(Distribution.point_mass(1, 0), uniform) == 1.0

    def test_tvd_length_mismatch(self):
        with pytest.raises(DimensionError):
            tvd(Distribution.uniform(1), Distribution.uniform(2))

    def test_unnormalised_rejected(self):
        with pytest.raises(DomainError):
            Distribution(1, [0.5, 0.6])

    def test_l2_via_spectrum(self, rng):
        """||p - U||^2 equals the spectral weight off zero."""
        for _ in range(20):
            subset = random_subset(8, rng)
            dist = conditional_dist(subset, sample_matching(8, 3, rng))
            direct = l2_distance_sq(dist, Distribution.uniform(3))
            assert distance_from_uniform_via_spectrum(dist) == pytest.approx(direct, abs=1e-15)


class TestFourierPath:
    """Tests for reading p_M off the spectrum of 1_A."""

    def test_zero_coefficient(self, rng):
        subset = random_subset(6, rng)
        spectrum = pm_spectrum_via_f(subset, sample_matching(6, 2, rng))
        assert spectrum.coeffs[0] == pytest.approx(0.25, abs=1e-15)

    def test_full_cube_has_no_weight_off_zero(self):
        spectrum = pm_spectrum_via_f(SubsetA.full(6), Matching.parse("0 1;2 3;4 5", 6))
        assert np.all(spectrum.coeffs[1:] == 0.0)

    def test_matches_direct_transform(self, rng):
        """100 random (A, M), n <= 10: both paths agree within 1e-12."""
        start = time.perf_counter()
        for index in range(100):
            stream = rng.child(index)
            n = stream.integers(2, 11)
            m = stream.integers(0, n // 2 + 1)
            subset = random_subset(n, stream)
            matching = sample_matching(n, m, stream)
            via_f = pm_spectrum_via_f(subset, matching).coeffs
            direct = fwht(conditional_dist(subset, matching).as_function()).coeffs
            assert np.max(np.abs(via_f - direct)) < 1e-12
        assert time.perf_counter() - start < 10.0


class TestExpectedTvd:
    """Tests for the exact and Monte Carlo oracles."""

    def test_full_cube_is_zero(self):
        assert expected_tvd(SubsetA.full(4), 1).mean == 0.0

    def test_prefix_parity_exact(self, prefix_parity_set):
        """Only M = {(0, 1)} of the six matchings sees a biased z."""
        report = expected_tvd(prefix_parity_set, 1, "exact")
        assert report.mean == pytest.approx(1 / 6, abs=1e-15)
        assert report.mean_sq == pytest.approx(1 / 6, abs=1e-15)
        assert report.stderr == 0.0
        assert report.matchings_evaluated == 6
        assert report.cs_violations == 0

    def test_prefix_parity_monte_carlo(self, prefix_parity_set):
        report = expected_tvd(prefix_parity_set, 1, "mc", trials=100_000, rng=SeededRng(11))
        assert report.matchings_evaluated == 100_000
        assert_within_sigma(report.mean, 1 / 6, report.stderr)

    def test_thread_count_does_not_change_result(self, rng):
        """Block boundaries and reductions are fixed, so results are bit-identical."""
        subset = random_subset(10, rng, min_size=64)
        one = expected_tvd(subset, 3, "mc", trials=10_000, rng=SeededRng(5), threads=1)
        four = expected_tvd(subset, 3, "mc", trials=10_000, rng=SeededRng(5), threads=4)
        assert one == four
        exact_one = expected_tvd(subset, 2, "exact", threads=1)
        exact_four = expected_tvd(subset, 2, "exact", threads=4)
        assert exact_one == exact_four

    def test_cap_exceeded(self, prefix_parity_set):
        with pytest.raises(ResourceError):
            expected_tvd(SubsetA.full(12), 3, "exact", cap=100)

    def test_unknown_mode(self, prefix_parity_set):
        with pytest.raises(DomainError):
            expected_tvd(prefix_parity_set, 1, "sometimes")

    def test_progress_events(self, prefix_parity_set):
        events = []
        expected_tvd(prefix_parity_set, 1, progress_callback=lambda e, d: events.append(e))
        assert events[0] == "oracle_start"
        assert "block_done" in events
        assert events[-1] == "oracle_done"

    def test_l2_identity(self, rng):
        """The level-weight formula equals the enumerated mean of 2^{2m}||p_M - U||^2."""
        for n, m in ((6, 2), (8, 3), (8, 4)):
            subset = random_subset(n, rng, min_size=4)
            report = expected_tvd(subset, m, "exact")
            assert expected_l2_via_levels(subset, m) == pytest.approx(
                report.mean_l2_scaled, rel=1e-9
            )
            assert report.mean_sq <= report.mean_l2_scaled * (1 + 1e-12)
            assert report.cs_violations == 0


class TestCombinatorics:
    """Tests for hit probabilities, g(k) and the level bound."""

    def test_hit_prob_examples(self):
        assert matching_hit_prob(4, 1, 2) == Fraction(1, 6)
        assert matching_hit_prob(4, 2, 4) == 1
        assert matching_hit_prob(9, 3, 3) == 0

    def test_hit_prob_matches_enumeration(self):
        """Exact agreement for every n <= 8, m <= n/2 and even k."""
        for n in range(2, 9):
            for m in range(n // 2 + 1):
                for k in range(0, n + 1, 2):
                    assert matching_hit_fraction(n, m, k) == matching_hit_prob(n, m, k)

    def test_level_bound_values(self):
        assert level_weight_bound(1, 2) == pytest.approx(8.0)
        assert level_weight_bound(1, 4) == pytest.approx(4.0)

    def test_level_bound_range(self):
        with pytest.raises(DomainError):
            level_weight_bound(1, 5)

    def test_gk_values(self):
        assert gk(8, 2, 2) == Fraction(1, 14)
        assert gk(8, 2, 4) == Fraction(1, 70)
        assert gk(4, 2, 4) == 1

    def test_gk_odd(self):
        with pytest.raises(DomainError):
            gk(8, 2, 3)

    def test_gk_decreasing(self):
        for n in range(4, 17, 2):
            assert gk_is_decreasing(n, n // 4)

    def test_level_bound_holds(self, rng):
        """Normalised level weights of random large sets respect the bound."""
        for _ in range(5):
            subset = random_subset(10, rng, min_size=256)
            assert all(row["holds"] for row in level_bound_check(subset))


class TestSweep:
    """Tests for sweeps over set families."""

    def test_full_family_all_zero(self):
        rows = deficiency_sweep(6, 1, "full", range(0, 3))
        assert [row.mean for row in rows] == [0.0, 0.0, 0.0]

    def test_prefix_parity_row(self):
        (row,) = deficiency_sweep(4, 1, "prefix-parity", [1])
        assert (row.c, row.size, row.stderr) == (1, 8, 0.0)
        assert row.mean == pytest.approx(1 / 6, abs=1e-15)
        assert row.mean_sq == pytest.approx(1 / 6, abs=1e-15)

    def test_monotone_in_c(self):
        """Nested first-bits-fixed sets at (12, 3): mean never decreases in c."""
        rows = deficiency_sweep(12, 3, "first-bits-fixed", range(0, 7), threads=4)
        means = [row.mean for row in rows]
        assert means[0] == 0.0
        assert all(a <= b + 1e-15 for a, b in zip(means, means[1:]))
        assert all(row.proven_regime for row in rows)

    def test_file_family_single_row(self, set_file):
        rows = deficiency_sweep(4, 1, "file", range(0, 5), path=str(set_file))
        assert len(rows) == 1
        assert rows[0].c == pytest.approx(1.0)
        assert rows[0].mean == pytest.approx(1 / 6, abs=1e-15)
