"""Conditional distributions p_M, total variation distance and the exact and
Monte Carlo oracles for how close the extracted string z is to uniform.

Total variation distance uses the factor-free convention sum_z |p(z) - q(z)|,
which ranges over [0, 2]; one-sample distinguishing succeeds with
probability 1/2 + tvd/4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, List, Optional, Sequence, Union

import numpy as np

from apm_lab.core import (
    BitString,
    Matching,
    SeededRng,
    count_matchings,
    enumerate_matchings,
    extract_z_batch,
    matT_index_table,
    sample_matching,
)
from apm_lab.errors import get_error
from apm_lab.parallel import TRIAL_BLOCK, map_chunks, run_blocks
from apm_lab.spectral import CubeFunction, Spectrum, fwht, level_weight, weight_profile

# Largest dimension for which a set is held point by point
MAX_EXACT_N = 20

# Matchings handed to one worker at a time by the exact oracle
MATCHING_CHUNK = 2048

MODES = ("exact", "mc")


def check_exact_n(n: int) -> None:
    """Raise ResourceError before anything of size 2^n is allocated."""
    if n > MAX_EXACT_N:
        raise get_error("exact_infeasible", n=n, limit=MAX_EXACT_N)

PROB_TOLERANCE = 1e-9
INEQUALITY_TOLERANCE = 1e-9


@dataclass(eq=False)
class Distribution:
    """Probability vector over {0,1}^m."""

    m: int
    probs: np.ndarray

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if self.probs.shape != (1 << self.m,):
            raise get_error(
                "length_mismatch",
                what="probability vector",
                got=self.probs.size,
                expected=1 << self.m,
            )
        if np.any(self.probs < 0) or abs(float(np.sum(self.probs)) - 1.0) > PROB_TOLERANCE:
            raise get_error(
                "out_of_range",
                what="probability vector",
                value="unnormalised",
                allowed="non-negative entries summing to 1",
            )

    @classmethod
    def uniform(cls, m: int) -> "Distribution":
        return cls(m, np.full(1 << m, 1.0 / (1 << m)))

    @classmethod
    def point_mass(cls, m: int, z: int) -> "Distribution":
        probs = np.zeros(1 << m)
        probs[z] = 1.0
        return cls(m, probs)

    def as_function(self) -> CubeFunction:
        return CubeFunction(self.m, self.probs)


@dataclass(eq=False)
class SubsetA:
    """Nonempty set A of points of {0,1}^n, stored as sorted integer codes."""

    n: int
    members: np.ndarray

    def __post_init__(self):
        if not 0 <= self.n <= 62:
            raise get_error("out_of_range", what="n", value=self.n, allowed="[0, 62]")
        members = np.unique(np.asarray(self.members, dtype=np.int64))
        if members.size == 0:
            raise get_error("out_of_range", what="|A|", value=0, allowed=">= 1")
        if members[0] < 0 or members[-1] >= (1 << self.n):
            raise get_error(
                "out_of_range", what="member", value=int(members[-1]), allowed=f"[0, 2^{self.n})"
            )
        self.members = members

    @classmethod
    def full(cls, n: int) -> "SubsetA":
        check_exact_n(n)
        return cls(n, np.arange(1 << n, dtype=np.int64))

    @classmethod
    def from_bitstrings(cls, points: Iterable[BitString]) -> "SubsetA":
        points = list(points)
        if not points:
            raise get_error("out_of_range", what="|A|", value=0, allowed=">= 1")
        n = len(points[0])
        for point in points:
            if len(point) != n:
                raise get_error("length_mismatch", what="member", got=len(point), expected=n)
        return cls(n, np.array([p.to_int() for p in points], dtype=np.int64))

    @classmethod
    def from_predicate(cls, n: int, predicate: Callable[[np.ndarray], np.ndarray]) -> "SubsetA":
        """Points y whose membership predicate(y) is true; predicate is vectorised."""
        check_exact_n(n)
        points = np.arange(1 << n, dtype=np.int64)
        return cls(n, points[np.asarray(predicate(points), dtype=bool)])

    @property
    def size(self) -> int:
        return int(self.members.size)

    @property
    def min_entropy(self) -> float:
        """log2 |A|: min-entropy of the flat source on A."""
        return math.log2(self.size)

    @property
    def deficiency(self) -> float:
        """c = n - log2 |A|."""
        return self.n - self.min_entropy

    def indicator(self) -> CubeFunction:
        check_exact_n(self.n)
        values = np.zeros(1 << self.n)
        values[self.members] = 1.0
        return CubeFunction(self.n, values)

    def bitstrings(self) -> List[BitString]:
        return [BitString.from_int(int(v), self.n) for v in self.members]


def load_subset(path: Union[str, Path]) -> SubsetA:
    """Read a set file: one bitstring per line."""
    path = Path(path)
    if not path.exists():
        raise get_error("file_not_found", path=path)
    lines = [line.strip() for line in path.read_text().splitlines()]
    return SubsetA.from_bitstrings(
        BitString.from_string(line) for line in lines if line and not line.startswith("#")
    )


def save_subset(subset: SubsetA, path: Union[str, Path]) -> None:
    Path(path).write_text("".join(f"{point}\n" for point in subset.bitstrings()))


@dataclass
class TvdReport:
    """E_M[tvd(p_M, U)] and companions, for one set A and edge count m."""

    mean: float
    mean_sq: float
    stderr: float
    mode: str
    matchings_evaluated: int
    mean_l2_scaled: float = 0.0
    cs_violations: int = 0


@dataclass
class SweepRow:
    """One c of a sweep over a set family."""

    c: float
    size: int
    mean: float
    mean_sq: float
    stderr: float
    mode: str
    matchings_evaluated: int
    reference: float
    proven_regime: bool


def _check_same_n(subset: SubsetA, matching: Matching) -> None:
    if subset.n != matching.n:
        raise get_error("length_mismatch", what="matching", got=matching.n, expected=subset.n)


def _counts(subset: SubsetA, matching: Matching) -> np.ndarray:
    return np.bincount(extract_z_batch(subset.members, matching), minlength=1 << matching.m)


def conditional_dist(subset: SubsetA, matching: Matching) -> Distribution:
    """p_M(z) = |{x in A : z(x, M) = z}| / |A|."""
    _check_same_n(subset, matching)
    return Distribution(matching.m, _counts(subset, matching) / subset.size)


def tvd(p: Distribution, q: Distribution) -> float:
    """sum_z |p(z) - q(z)|, in [0, 2]."""
    if p.m != q.m:
        raise get_error("length_mismatch", what="distribution", got=p.m, expected=q.m)
    return float(np.sum(np.abs(p.probs - q.probs)))


def l2_distance_sq(p: Distribution, q: Distribution) -> float:
    """Normalised squared l2 distance 2^-m sum_z (p(z) - q(z))^2."""
    if p.m != q.m:
        raise get_error("length_mismatch", what="distribution", got=p.m, expected=q.m)
    return float(np.mean((p.probs - q.probs) ** 2))


def distance_from_uniform_via_spectrum(p: Distribution) -> float:
    """sum_{s != 0} p^(s)^2, which equals l2_distance_sq(p, U)."""
    coeffs = fwht(p.as_function()).coeffs
    return float(np.sum(coeffs[1:] ** 2))


def pm_spectrum_via_f(
    subset: SubsetA, matching: Matching, f_spectrum: Optional[Spectrum] = None
) -> Spectrum:
    """Spectrum of p_M read off the spectrum of f = 1_A.

    p_M^(s) = 2^n / (|A| 2^m) * f^(M^T s).

    Args:
        subset: The set A
        matching: The matching M
        f_spectrum: fwht(subset.indicator()), if already computed

    Returns:
        Spectrum over {0,1}^m
    """
    _check_same_n(subset, matching)
    if f_spectrum is None:
        f_spectrum = fwht(subset.indicator())
    scale = float(1 << subset.n) / (subset.size * float(1 << matching.m))
    return Spectrum(matching.m, scale * f_spectrum.coeffs[matT_index_table(matching)])


def _evaluate(subset: SubsetA, matchings: Sequence[Matching], m: int) -> tuple:
    """tvd, 2^{2m}||p - U||^2 and Cauchy-Schwarz failures for each matching."""
    uniform = 1.0 / (1 << m)
    tvds = np.empty(len(matchings))
    l2s = np.empty(len(matchings))
    for index, matching in enumerate(matchings):
        diff = _counts(subset, matching) / subset.size - uniform
        tvds[index] = np.sum(np.abs(diff))
        # 2^{2m} * 2^{-m} * sum diff^2
        l2s[index] = float(1 << m) * np.sum(diff**2)
    violations = int(np.count_nonzero(tvds**2 > l2s * (1 + 1e-12) + 1e-15))
    return tvds, l2s, violations


def _report(tvds: np.ndarray, l2s: np.ndarray, violations: int, mode: str) -> TvdReport:
    count = tvds.size
    mean = float(np.sum(tvds) / count)
    mean_sq = float(np.sum(tvds**2) / count)
    stderr = 0.0
    if mode == "mc" and count > 1:
        stderr = float(np.std(tvds, ddof=1) / math.sqrt(count))
    return TvdReport(
        mean=mean,
        mean_sq=mean_sq,
        stderr=stderr,
        mode=mode,
        matchings_evaluated=count,
        mean_l2_scaled=float(np.sum(l2s) / count),
        cs_violations=violations,
    )


def expected_tvd(
    subset: SubsetA,
    m: int,
    mode: str = "exact",
    trials: int = 10_000,
    rng: Optional[SeededRng] = None,
    cap: Optional[int] = None,
    threads: Optional[int] = None,
    progress_callback: Optional[Callable] = None,
) -> TvdReport:
    """E_M[tvd(p_M, U)] over uniform m-edge matchings M.

    Args:
        subset: The set A (x uniform on A)
        m: Number of edges
        mode: "exact" (every matching) or "mc" (sampled matchings)
        trials: Sampled matchings in mc mode
        rng: Random stream for mc mode
        cap: Enumeration cap for exact mode (default: configured)
        threads: Worker count
        progress_callback: Optional callback(event, data)

    Returns:
        TvdReport

    Raises:
        ResourceError: If exact mode would exceed the cap
    """
    if mode not in MODES:
        raise get_error("out_of_range", what="mode", value=mode, allowed=MODES)
    total = count_matchings(subset.n, m)
    if progress_callback:
        progress_callback(
            "oracle_start", {"mode": mode, "total": total if mode == "exact" else trials}
        )

    if mode == "exact":
        matchings = enumerate_matchings(subset.n, m, cap)
        parts = map_chunks(
            lambda chunk: _evaluate(subset, chunk, m),
            matchings,
            MATCHING_CHUNK,
            threads,
            progress_callback,
        )
    else:
        if trials < 1:
            raise get_error("out_of_range", what="trials", value=trials, allowed=">= 1")
        rng = rng or SeededRng(0)

        def block(index: int, items: range) -> tuple:
            block_rng = rng.child(index)
            chunk = [sample_matching(subset.n, m, block_rng) for _ in items]
            return _evaluate(subset, chunk, m)

        parts = run_blocks(block, trials, TRIAL_BLOCK, threads, progress_callback)

    tvds = np.concatenate([part[0] for part in parts])
    l2s = np.concatenate([part[1] for part in parts])
    report = _report(tvds, l2s, sum(part[2] for part in parts), mode)
    if progress_callback:
        progress_callback("oracle_done", {"report": report})
    return report


def matching_hit_prob(n: int, m: int, k: int) -> Fraction:
    """Pr_M[some s has M^T s = v] for a fixed v of weight k: C(m, k/2) / C(n, k)."""
    if not 0 <= k <= n:
        raise get_error("out_of_range", what="k", value=k, allowed=f"[0, {n}]")
    if k % 2:
        return Fraction(0)
    return Fraction(math.comb(m, k // 2), math.comb(n, k))


def matching_hit_fraction(n: int, m: int, k: int, cap: Optional[int] = None) -> Fraction:
    """Enumerated counterpart of matching_hit_prob, with v = 1^k 0^(n-k)."""
    if not 0 <= k <= n:
        raise get_error("out_of_range", what="k", value=k, allowed=f"[0, {n}]")
    support = set(range(k))
    hits = 0
    total = 0
    for matching in enumerate_matchings(n, m, cap):
        total += 1
        inside = [pair for pair in matching.pairs if pair[0] in support and pair[1] in support]
        straddling = any((i in support) != (j in support) for i, j in matching.pairs)
        if not straddling and 2 * len(inside) == k:
            hits += 1
    return Fraction(hits, total)


def level_weight_bound(c: float, k: int) -> float:
    """(4 sqrt(2) c / k)^k, defined for 1 <= k <= 4c."""
    if not 1 <= k <= 4 * c:
        raise get_error("out_of_range", what="k", value=k, allowed=f"[1, 4c] with c = {c}")
    return (4.0 * math.sqrt(2.0) * c / k) ** k


def normalized_level_weight(
    subset: SubsetA, k: int, f_spectrum: Optional[Spectrum] = None
) -> float:
    """(2^{2n} / |A|^2) * sum_{|v| = k} f^(v)^2 for f = 1_A."""
    if f_spectrum is None:
        f_spectrum = fwht(subset.indicator())
    return float(4**subset.n) / subset.size**2 * level_weight(f_spectrum, k)


def level_bound_check(subset: SubsetA, c: Optional[float] = None) -> List[dict]:
    """Compare normalised level weights against the level bound for every k.

    Args:
        subset: The set A; requires |A| >= 2^(n - c)
        c: Deficiency parameter (default: n - log2 |A|)

    Returns:
        Rows with keys k, weight, bound, holds
    """
    c = subset.deficiency if c is None else c
    if c < subset.deficiency - 1e-12:
        raise get_error(
            "out_of_range", what="c", value=c, allowed=f">= n - log2|A| = {subset.deficiency}"
        )
    f_spectrum = fwht(subset.indicator())
    rows = []
    for k in range(1, min(int(math.floor(4 * c)), subset.n) + 1):
        weight = normalized_level_weight(subset, k, f_spectrum)
        bound = level_weight_bound(c, k)
        holds = weight <= bound + INEQUALITY_TOLERANCE
        rows.append({"k": k, "weight": weight, "bound": bound, "holds": holds})
    return rows


def gk(n: int, m: int, k: int) -> Fraction:
    """g(k) = C(m, k/2) / C(n, k) for even k in [2, 2m]."""
    if k % 2:
        raise get_error("odd_k", k=k)
    if not 2 <= k <= 2 * m or k > n:
        raise get_error("out_of_range", what="k", value=k, allowed=f"even k in [2, {2 * m}]")
    return Fraction(math.comb(m, k // 2), math.comb(n, k))


def gk_is_decreasing(n: int, m: int) -> bool:
    """g(k - 2) >= g(k) for every even k in [4, 2m]."""
    return all(gk(n, m, k - 2) >= gk(n, m, k) for k in range(4, 2 * m + 1, 2))


def expected_l2_via_levels(subset: SubsetA, m: int) -> float:
    """E_M[2^{2m} ||p_M - U||^2] from the level weights of f = 1_A.

    Equals (2^{2n} / |A|^2) * sum over even k >= 2 of g(k) * W_k(f), and
    upper-bounds E_M[tvd(p_M, U)^2].
    """
    if 2 * m > subset.n:
        raise get_error("matching_too_large", n=subset.n, m=m)
    profile = weight_profile(fwht(subset.indicator()))
    total = sum(
        float(gk(subset.n, m, k)) * profile[k] for k in range(2, min(2 * m, subset.n) + 1, 2)
    )
    return float(4**subset.n) / subset.size**2 * total


def deficiency_sweep(
    n: int,
    m: int,
    family: str,
    c_values: Sequence[int],
    mode: str = "exact",
    trials: int = 10_000,
    rng: Optional[SeededRng] = None,
    cap: Optional[int] = None,
    threads: Optional[int] = None,
    progress_callback: Optional[Callable] = None,
    **family_options,
) -> List[SweepRow]:
    """E_M[tvd] for each member A_c of a named set family.

    Each row also carries the reference scale c * sqrt(alpha / n) and whether
    m <= n/4 (the regime the closeness guarantee is proven for).
    """
    from apm_lab.families.factory import get_family

    rng = rng or SeededRng(0)
    source = get_family(family, **family_options)
    rows = []
    c_values = list(c_values)
    if source.ignores_c():
        c_values = c_values[:1]
    for c in c_values:
        stream = rng.child(int(c))
        subset = source.build(n, c, stream.child(0))
        report = expected_tvd(
            subset, m, mode, trials, stream.child(1), cap, threads, progress_callback
        )
        row_c = subset.deficiency if source.ignores_c() else c
        alpha = m / n
        rows.append(
            SweepRow(
                c=row_c,
                size=subset.size,
                mean=report.mean,
                mean_sq=report.mean_sq,
                stderr=report.stderr,
                mode=report.mode,
                matchings_evaluated=report.matchings_evaluated,
                reference=row_c * math.sqrt(alpha / n),
                proven_regime=4 * m <= n,
            )
        )
    return rows
