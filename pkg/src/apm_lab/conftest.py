"""Shared pytest fixtures and test utilities for apm-lab tests."""

import math
from pathlib import Path
from typing import Iterable

import numpy as np
import pytest

from apm_lab.analysis import SubsetA
from apm_lab.core import BitString, SeededRng

# ============================================================================
# Fixtures
# ============================================================================


@pytest.fixture(autouse=True)
def isolated_config(tmp_path, monkeypatch):
    """Point the preferences file at a temp dir and clear the seed variable."""
    config_dir = tmp_path / "config" / "apm-lab"
    monkeypatch.setattr("apm_lab.config.get_config_dir", lambda: config_dir)
    monkeypatch.delenv("APM_LAB_SEED", raising=False)
    return config_dir


@pytest.fixture
def rng():
    """A fixed random stream."""
    return SeededRng(20240917)


@pytest.fixture
def prefix_parity_set():
    """A = {x in {0,1}^4 : x_0 xor x_1 = 0}, |A| = 8."""
    return SubsetA(4, [y for y in range(16) if ((y ^ (y >> 1)) & 1) == 0])


@pytest.fixture
def set_file(tmp_path, prefix_parity_set):
    """The prefix-parity set written as a set file."""
    path = tmp_path / "set.txt"
    write_lines(path, [str(point) for point in prefix_parity_set.bitstrings()])
    return path


@pytest.fixture
def stream_file(tmp_path):
    """x = 10110100, M = {(0,5), (2,3)}, w = 10, in an arbitrary order."""
    path = tmp_path / "stream.txt"
    write_lines(
        path,
        [
            "# bits, edges and promise bits",
            "e 2 3",
            "b 0 1",
            "b 1 0",
            "w 5 0 1",
            "b 2 1",
            "b 3 1",
            "e 0 5",
            "b 4 0",
            "b 5 1",
            "w 2 3 0",
            "b 6 0",
            "b 7 0",
        ],
    )
    return path


# ============================================================================
# Helper Functions
# ============================================================================


def write_lines(path: Path, lines: Iterable[str]) -> Path:
    """Write lines to a file, one per line."""
    path.write_text("".join(f"{line}\n" for line in lines))
    return path


def random_subset(n: int, rng: SeededRng, min_size: int = 1) -> SubsetA:
    """A uniformly random nonempty subset of {0,1}^n."""
    size = rng.integers(min_size, (1 << n) + 1)
    members = rng.generator.choice(1 << n, size=size, replace=False)
    return SubsetA(n, members)


def bits(text: str) -> BitString:
    return BitString.from_string(text)


def binomial_sigma(p: float, trials: int) -> float:
    """Standard deviation of an empirical rate with true value p."""
    return math.sqrt(p * (1.0 - p) / trials)


def assert_rate_near(successes: int, trials: int, p: float, bands: float = 3.0):
    """Assert that successes / trials lies within `bands` binomial sigmas of p."""
    rate = successes / trials
    sigma = binomial_sigma(p, trials)
    assert abs(rate - p) <= bands * sigma, (
        f"rate {rate:.5f} is {abs(rate - p) / sigma:.2f} sigma from {p:.5f}"
    )


def assert_within_sigma(value: float, target: float, sigma: float, bands: float = 3.0):
    """Assert |value - target| <= bands * sigma."""
    assert abs(value - target) <= bands * sigma, (
        f"{value:.6f} is not within {bands} sigma ({sigma:.6f}) of {target:.6f}"
    )


def chi_square_statistic(counts: np.ndarray, probs: np.ndarray) -> float:
    """Pearson statistic of observed counts against expected probabilities."""
    counts = np.asarray(counts, dtype=np.float64)
    expected = counts.sum() * np.asarray(probs, dtype=np.float64)
    return float(np.sum((counts - expected) ** 2 / expected))
