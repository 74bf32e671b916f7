"""Tests for adversary module."""

import math

import pytest

from apm_lab.adversary import (
    FirstBits,
    FullMemory,
    NoMemory,
    ParityBank,
    PartitionFile,
    SubsetBits,
    advantage_table,
    classical_advantage_exact,
    key_expansion_report,
    load_partition,
    parse_memory_spec,
    quantum_adversary_trial,
    table_edges,
)
from apm_lab.conftest import assert_rate_near, bits, write_lines
from apm_lab.core import SeededRng
from apm_lab.errors import DimensionError, DomainError, OutputError, ResourceError, ValidationError


def full_information_advantage(m):
    return (2 - 2 / 2**m) / 4


class TestMemorySpecs:
    """Tests for memory descriptions and parsing."""

    def test_first_bits_keys(self):
        assert FirstBits(2).message_keys(3).tolist() == [0, 1, 2, 3, 0, 1, 2, 3]
        assert FirstBits(2).bits(3) == 2

    def test_subset_keys_follow_index_order(self):
        assert SubsetBits([1, 0]).message_keys(2).tolist() == [0, 2, 1, 3]

    def test_parity_keys(self):
        bank = ParityBank([bits("11")])
        assert bank.message_keys(2).tolist() == [0, 1, 1, 0]

    def test_parity_mask_length(self):
        with pytest.raises(DimensionError):
            ParityBank([bits("111")]).message_keys(2)

    def test_partition_unlisted_points_share_a_class(self):
        memory = PartitionFile({bits("00"): "a", bits("11"): "b"})
        assert memory.message_keys(2).tolist() == [0, 2, 2, 1]
        assert memory.bits(2) == 2

    def test_subset_index_out_of_range(self):
        with pytest.raises(DomainError):
            SubsetBits([5]).message_keys(4)

    @pytest.mark.parametrize(
        "text,kind,name",
        [
            ("none", NoMemory, "none"),
            ("full", FullMemory, "full"),
            ("first:3", FirstBits, "first:3"),
            ("subset:0, 4,2", SubsetBits, "subset:0,4,2"),
        ],
    )
    def test_parse(self, text, kind, name):
        memory = parse_memory_spec(text)
        assert type(memory) is kind
        assert memory.get_name() == name

    def test_parse_files(self, tmp_path):
        masks = write_lines(tmp_path / "masks.txt", ["# masks", "1100", "0011"])
        labels = write_lines(tmp_path / "labels.txt", ["0000 left", "1111 right"])
        assert parse_memory_spec(f"parity:{masks}").bits(4) == 2
        assert parse_memory_spec(f"file:{labels}").get_name() == "file:2"

    @pytest.mark.parametrize("text", ["first:x", "subset:1,1", "everything", "first", "none:2"])
    def test_parse_rejects(self, text):
        with pytest.raises(ValidationError):
            parse_memory_spec(text)

    def test_missing_partition_file(self, tmp_path):
        with pytest.raises(OutputError):
            load_partition(tmp_path / "missing.txt")

    def test_bad_partition_line(self, tmp_path):
        path = write_lines(tmp_path / "labels.txt", ["0101"])
        with pytest.raises(ValidationError):
            load_partition(path)


class TestClassicalAdvantage:
    """Tests for the exact Bayes-optimal classical advantage."""

    def test_no_memory(self):
        assert classical_advantage_exact(NoMemory(), 6, 2) == 0.0

    def test_single_fixed_bit(self):
        """One stored bit never decides an edge, so every p_M stays uniform."""
        assert classical_advantage_exact(FirstBits(1), 4, 1) == 0.0

    def test_empty_prefix(self):
        assert classical_advantage_exact(FirstBits(0), 8, 2) == 0.0

    def test_first_two_bits(self):
        """Only M = {(0, 1)} of the six single edges is decided by x_0, x_1."""
        assert classical_advantage_exact(FirstBits(2), 4, 1) == pytest.approx(1 / 24, abs=1e-15)
        assert classical_advantage_exact(SubsetBits([1, 0]), 4, 1) == pytest.approx(
            1 / 24, abs=1e-15
        )

    def test_single_parity(self):
        bank = ParityBank([bits("1100")])
        assert classical_advantage_exact(bank, 4, 1) == pytest.approx(1 / 24, abs=1e-15)

    @pytest.mark.parametrize("n,m", [(4, 1), (6, 2), (8, 4)])
    def test_full_information(self, n, m):
        assert classical_advantage_exact(FullMemory(), n, m) == pytest.approx(
            full_information_advantage(m), abs=1e-12
        )

    def test_refinement_never_decreases(self):
        """first:c is refined by first:c+1."""
        values = [classical_advantage_exact(FirstBits(c), 8, 2) for c in range(0, 9)]
        assert all(a <= b + 1e-15 for a, b in zip(values, values[1:]))
        assert values[-1] == pytest.approx(full_information_advantage(2), abs=1e-12)

    def test_threads_do_not_change_result(self):
        one = classical_advantage_exact(FirstBits(3), 10, 2, threads=1)
        four = classical_advantage_exact(FirstBits(3), 10, 2, threads=4)
        assert one == four

    def test_too_large(self):
        with pytest.raises(ResourceError):
            classical_advantage_exact(NoMemory(), 16, 2)

    def test_matching_too_large(self):
        with pytest.raises(DomainError):
            classical_advantage_exact(NoMemory(), 6, 4)


class TestQuantumAdversary:
    """Tests for the fingerprint-state adversary."""

    def test_real_vs_uniform(self):
        """1/2 + alpha/2 = 0.625 at n = 8, m = 2."""
        estimate = quantum_adversary_trial(8, 2, "real-vs-uniform", 20_000, SeededRng(51))
        assert_rate_near(estimate.successes, estimate.trials, 0.625)

    def test_apm_mode(self):
        estimate = quantum_adversary_trial(8, 2, "apm", 20_000, SeededRng(52))
        assert_rate_near(estimate.successes, estimate.trials, 0.75)

    @pytest.mark.parametrize("n", [4, 10, 16])
    def test_apm_mode_does_not_depend_on_n(self, n):
        """Success 1/2 + m/n at m = n // 4, whatever n is."""
        m = n // 4
        estimate = quantum_adversary_trial(n, m, "apm", 20_000, SeededRng(53 + n))
        assert_rate_near(estimate.successes, estimate.trials, 0.5 + m / n)

    def test_unknown_mode(self):
        with pytest.raises(DomainError):
            quantum_adversary_trial(8, 2, "both", 10)

    def test_odd_n(self):
        with pytest.raises(DomainError):
            quantum_adversary_trial(9, 2, "real-vs-uniform", 10)


class TestScenarios:
    """Tests for the classical-versus-quantum memory comparison."""

    def test_quantum_memory_beats_three_stored_bits(self):
        """At n = 12, m = 3: classical 3/88 with 3 bits, quantum 1/8 with log2 12 qubits."""
        report = key_expansion_report(FirstBits(3), 12, 3, trials=20_000, rng=SeededRng(61))
        assert report.classical_advantage == pytest.approx(3 / 88, abs=1e-12)
        assert report.c == 3
        assert report.quantum_memory_qubits == pytest.approx(math.log2(12))
        assert report.quantum_memory_qubits > report.c
        assert abs(report.quantum_advantage - 0.125) <= 3 * report.quantum_stderr
        assert report.quantum_advantage > 2 * report.classical_advantage
        assert not report.degenerate

    def test_degenerate_scenario(self):
        report = key_expansion_report(FullMemory(), 6, 0, trials=2_000, rng=SeededRng(62))
        assert report.degenerate
        assert report.classical_advantage == 0.0

    def test_advantage_table(self):
        """Default rows share m = 2; first:3 sees an edge inside the prefix w.p. 3m / C(n, 2)."""
        rows = advantage_table([8, 12], 3)
        assert [(row["n"], row["m"], row["c"]) for row in rows] == [(8, 2, 3), (12, 2, 3)]
        assert rows[0]["classical_advantage"] == pytest.approx(3 / 56, abs=1e-12)
        assert rows[1]["classical_advantage"] == pytest.approx(1 / 44, abs=1e-12)

    def test_advantage_table_fixed_alpha(self):
        rows = advantage_table([8, 12], 3, alpha=0.25)
        assert [row["m"] for row in rows] == [2, 3]
        assert rows[1]["classical_advantage"] == pytest.approx(3 / 88, abs=1e-12)
        assert rows[1]["quantum_apm_advantage"] == 0.25
        assert rows[1]["quantum_real_vs_uniform_advantage"] == 0.125

    def test_advantage_table_custom_edges(self):
        rows = advantage_table([8], 0, m=1)
        assert rows == [
            {
                "n": 8,
                "m": 1,
                "c": 0,
                "classical_advantage": 0.0,
                "quantum_apm_advantage": 0.125,
                "quantum_real_vs_uniform_advantage": 0.0625,
            }
        ]

    def test_classical_advantage_decays_at_fixed_edges(self):
        rows = advantage_table([8, 10, 12, 14], 3, m=2)
        values = [row["classical_advantage"] for row in rows]
        assert values[1] == pytest.approx(1 / 30, abs=1e-12)
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_classical_advantage_decays_at_fixed_alpha(self):
        """With perfect matchings the quantum advantage stays at 1/2 while first:3 fades."""
        rows = advantage_table([8, 10, 12], 3, alpha=0.5)
        values = [row["classical_advantage"] for row in rows]
        assert values == pytest.approx([3 / 28, 1 / 12, 3 / 44], abs=1e-12)
        assert all(a > b for a, b in zip(values, values[1:]))
        assert {row["quantum_apm_advantage"] for row in rows} == {0.5}

    def test_alpha_must_give_whole_edges(self):
        assert table_edges(12, alpha=0.25) == 3
        assert table_edges(12) == 2
        with pytest.raises(DomainError):
            table_edges(10, alpha=0.25)
