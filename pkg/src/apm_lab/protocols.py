"""One-way protocol harness for the alpha-Partial Matching problem.

Alice holds x, Bob holds a matching M and a string w with the promise
w = z(x, M) xor b^m; Bob must output b. Instances come from the hard
distribution (x, M, b uniform); solvers are looked up by name like the
set families are.
"""

from __future__ import annotations

import itertools
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Union

import numpy as np

from apm_lab.core import (
    BitString,
    Matching,
    SeededRng,
    count_matchings,
    enumerate_matchings,
    extract_z,
    sample_matching,
)
from apm_lab.errors import get_error
from apm_lab.parallel import TRIAL_BLOCK, run_blocks
from apm_lab.qsim import run_quantum_message_protocol

COVER_MODES = ("exact", "mc")


def _index_bits(n: int) -> int:
    """ceil(log2 n) bits to name an index, at least one."""
    return max(1, (n - 1).bit_length())


@dataclass(frozen=True)
class ApmInstance:
    """(x, M, w) together with the hidden answer b."""

    x: BitString
    matching: Matching
    w: BitString
    b: int

    def __post_init__(self):
        if self.b not in (0, 1):
            raise get_error("out_of_range", what="b", value=self.b, allowed="{0, 1}")
        if len(self.w) != self.matching.m:
            raise get_error("length_mismatch", what="w", got=len(self.w), expected=self.matching.m)
        if promise_string(self.x, self.matching, self.b) != self.w:
            raise get_error(
                "out_of_range",
                what="w",
                value=str(self.w),
                allowed="z(x, M) or its complement",
            )

    @property
    def n(self) -> int:
        return self.matching.n

    @property
    def m(self) -> int:
        return self.matching.m


def promise_string(x: BitString, matching: Matching, b: int) -> BitString:
    """z(x, M) xor b^m."""
    z = extract_z(x, matching)
    return z.complement() if b else z


def sample_hard_instance(n: int, m: int, rng: SeededRng) -> ApmInstance:
    """x, M and b uniform; w = z xor b^m."""
    matching = sample_matching(n, m, rng)
    x = rng.bits(n)
    b = rng.bit()
    return ApmInstance(x, matching, promise_string(x, matching, b), b)


@dataclass
class Guess:
    """A solver's answer; learned is True when the bit was derived, not guessed."""

    bit: int
    learned: bool


class ApmSolver(ABC):
    """Abstract base class for one-way alpha-PM solvers."""

    @abstractmethod
    def get_name(self) -> str:
        """Get the registry name of this solver.

        Returns:
            Solver name (e.g., "quantum")
        """
        pass

    @abstractmethod
    def check(self, n: int, m: int) -> None:
        """Validate the solver parameters against an instance shape.

        Raises:
            DomainError: If the solver cannot run on (n, m)
        """
        pass

    @abstractmethod
    def solve(self, instance: ApmInstance, rng: SeededRng) -> Guess:
        """Run Alice's message and Bob's decision on one instance.

        Args:
            instance: The instance; the solver must not read instance.b
            rng: Randomness for the message and the fallback coin

        Returns:
            Guess
        """
        pass

    @abstractmethod
    def message_cost(self, n: int) -> Dict[str, float]:
        """Size of Alice's message for a given n.

        Returns:
            Dict of named costs (qubits or bits)
        """
        pass

    @abstractmethod
    def params(self) -> Dict[str, int]:
        pass


class QuantumSolver(ApmSolver):
    """Alice sends `copies` fingerprint states of log n qubits each."""

    def __init__(self, copies: int = 1):
        self.copies = int(copies)

    def get_name(self) -> str:
        return "quantum"

    def check(self, n: int, m: int) -> None:
        if n % 2:
            raise get_error("odd_n", n=n)
        if self.copies < 1:
            raise get_error("out_of_range", what="copies", value=self.copies, allowed=">= 1")

    def solve(self, instance: ApmInstance, rng: SeededRng) -> Guess:
        for _ in range(self.copies):
            outcome = run_quantum_message_protocol(instance.x, instance.matching, rng)
            if outcome is not None:
                ell, z_ell = outcome
                return Guess(z_ell ^ instance.w[ell], True)
        return Guess(rng.bit(), False)

    def message_cost(self, n: int) -> Dict[str, float]:
        return {"qubits": float(self.copies * _index_bits(n))}

    def params(self) -> Dict[str, int]:
        return {"copies": self.copies}


class ClassicalSolver(ApmSolver):
    """Alice sends d random positions of x with their values (birthday strategy)."""

    def __init__(self, d: int = 0):
        self.d = int(d)

    def get_name(self) -> str:
        return "classical"

    def check(self, n: int, m: int) -> None:
        if not 0 <= self.d <= n:
            raise get_error("out_of_range", what="d", value=self.d, allowed=f"[0, {n}]")

    def solve(self, instance: ApmInstance, rng: SeededRng) -> Guess:
        chosen = np.zeros(instance.n, dtype=bool)
        chosen[rng.generator.choice(instance.n, size=self.d, replace=False)] = True
        # Lowest covered edge wins
        for ell, (i, j) in enumerate(instance.matching.pairs):
            if chosen[i] and chosen[j]:
                return Guess(instance.x[i] ^ instance.x[j] ^ instance.w[ell], True)
        return Guess(rng.bit(), False)

    def message_cost(self, n: int) -> Dict[str, float]:
        return {
            "bits": float(self.d * (_index_bits(n) + 1)),
            "bits_newman": float(self.d + _index_bits(n)),
        }

    def params(self) -> Dict[str, int]:
        return {"d": self.d}


def _get_solver_registry():
    return {"quantum": QuantumSolver, "classical": ClassicalSolver}


def get_solver(name: str, **params) -> ApmSolver:
    """Get a solver instance.

    Args:
        name: "quantum" or "classical"
        **params: copies= for quantum, d= for classical

    Returns:
        ApmSolver instance

    Raises:
        ValidationError: If the name is unknown
    """
    solvers = _get_solver_registry()
    key = name.lower()
    if key not in solvers:
        raise get_error("out_of_range", what="solver", value=name, allowed=", ".join(solvers))
    if key == "quantum":
        return QuantumSolver(params.get("copies", 1))
    return ClassicalSolver(params.get("d", 0))


def list_solvers() -> List[str]:
    return list(_get_solver_registry().keys())


def solve_apm_quantum(instance: ApmInstance, copies: int, rng: SeededRng) -> int:
    solver = QuantumSolver(copies)
    solver.check(instance.n, instance.m)
    return solver.solve(instance, rng).bit


def solve_apm_classical(instance: ApmInstance, d: int, rng: SeededRng) -> int:
    solver = ClassicalSolver(d)
    solver.check(instance.n, instance.m)
    return solver.solve(instance, rng).bit


@dataclass
class SuccessReport:
    """Success counts of a solver over hard-distribution trials."""

    trials: int
    successes: int
    rate: float
    stderr: float
    conditional_correct: int
    learned: int
    solver: str = ""
    params: Dict[str, int] = field(default_factory=dict)
    message_cost: Dict[str, float] = field(default_factory=dict)


def estimate_success(
    solver: Union[str, ApmSolver],
    n: int,
    m: int,
    trials: int = 10_000,
    rng: Optional[SeededRng] = None,
    threads: Optional[int] = None,
    progress_callback: Optional[Callable] = None,
    **solver_params,
) -> SuccessReport:
    """Run a solver on fresh hard instances and count successes.

    Args:
        solver: Solver instance or registry name
        n: Number of bits of x
        m: Number of matching edges
        trials: Number of instances
        rng: Random stream; block b of trials uses child stream b
        threads: Worker count
        progress_callback: Optional callback(event, data)
        **solver_params: Forwarded to get_solver when solver is a name

    Returns:
        SuccessReport
    """
    if isinstance(solver, str):
        solver = get_solver(solver, **solver_params)
    if trials < 1:
        raise get_error("out_of_range", what="trials", value=trials, allowed=">= 1")
    if 2 * m > n or m < 0:
        raise get_error("matching_too_large", n=n, m=m)
    solver.check(n, m)
    rng = rng or SeededRng(0)

    def block(index: int, items: range) -> np.ndarray:
        block_rng = rng.child(index)
        counts = np.zeros(3, dtype=np.int64)
        for _ in items:
            instance = sample_hard_instance(n, m, block_rng)
            guess = solver.solve(instance, block_rng)
            correct = guess.bit == instance.b
            counts[0] += correct
            if guess.learned:
                counts[1] += 1
                counts[2] += correct
        return counts

    if progress_callback:
        progress_callback("oracle_start", {"mode": "mc", "total": trials})
    successes, learned, conditional = np.sum(
        run_blocks(block, trials, TRIAL_BLOCK, threads, progress_callback), axis=0
    ).tolist()
    rate = successes / trials
    return SuccessReport(
        trials=trials,
        successes=int(successes),
        rate=rate,
        stderr=math.sqrt(rate * (1.0 - rate) / trials),
        conditional_correct=int(conditional),
        learned=int(learned),
        solver=solver.get_name(),
        params=solver.params(),
        message_cost=solver.message_cost(n),
    )


def _check_cover_args(n: int, m: int, d: int) -> None:
    if 2 * m > n or m < 0:
        raise get_error("matching_too_large", n=n, m=m)
    if not 0 <= d <= n:
        raise get_error("out_of_range", what="d", value=d, allowed=f"[0, {n}]")


def _has_inner_edge(matching: Matching, chosen: set) -> bool:
    return any(i in chosen and j in chosen for i, j in matching.pairs)


def covered_edge_prob(
    n: int,
    m: int,
    d: int,
    mode: str = "exact",
    trials: int = 10_000,
    rng: Optional[SeededRng] = None,
    cap: Optional[int] = None,
    threads: Optional[int] = None,
) -> Union[Fraction, float]:
    """Pr over a uniform d-subset S and uniform M that an edge of M lies in S.

    The probability only depends on |S| (and on M only through m), so exact
    mode fixes one side and enumerates the other, whichever is smaller.

    Returns:
        Fraction in exact mode, float in mc mode

    Raises:
        ResourceError: If exact mode would exceed the enumeration cap
    """
    from apm_lab.config import get_enumeration_cap

    _check_cover_args(n, m, d)
    if mode not in COVER_MODES:
        raise get_error("out_of_range", what="mode", value=mode, allowed=COVER_MODES)

    if mode == "exact":
        cap = get_enumeration_cap() if cap is None else cap
        matchings = count_matchings(n, m)
        subsets = math.comb(n, d)
        if min(matchings, subsets) > cap:
            raise get_error("enumeration_cap", count=min(matchings, subsets), cap=cap)
        if matchings <= subsets:
            chosen = set(range(d))
            hits = sum(_has_inner_edge(mt, chosen) for mt in enumerate_matchings(n, m, cap))
            return Fraction(hits, matchings)
        fixed = Matching(n, tuple((2 * k, 2 * k + 1) for k in range(m)))
        hits = sum(
            _has_inner_edge(fixed, set(subset)) for subset in itertools.combinations(range(n), d)
        )
        return Fraction(hits, subsets)

    if trials < 1:
        raise get_error("out_of_range", what="trials", value=trials, allowed=">= 1")
    rng = rng or SeededRng(0)

    def block(index: int, items: range) -> int:
        block_rng = rng.child(index)
        hits = 0
        for _ in items:
            matching = sample_matching(n, m, block_rng)
            chosen = set(block_rng.generator.choice(n, size=d, replace=False).tolist())
            hits += _has_inner_edge(matching, chosen)
        return hits

    return sum(run_blocks(block, trials, TRIAL_BLOCK, threads)) / trials


def covered_edge_formula(n: int, m: int, d: int) -> Fraction:
    """Inclusion-exclusion: 1 - sum_j (-1)^j C(m, j) C(n - 2j, d - 2j) / C(n, d)."""
    _check_cover_args(n, m, d)
    uncovered = sum(
        (-1) ** j * math.comb(m, j) * math.comb(n - 2 * j, d - 2 * j)
        for j in range(m + 1)
        if 2 * j <= d
    )
    return 1 - Fraction(uncovered, math.comb(n, d))


def birthday_subset_size(n: int, m: int) -> int:
    """Smallest d with d >= sqrt(n / alpha) = n / sqrt(m), capped at n."""
    if m < 1:
        raise get_error("out_of_range", what="m", value=m, allowed=">= 1")
    if 2 * m > n:
        raise get_error("matching_too_large", n=n, m=m)
    d = math.isqrt((n * n + m - 1) // m)
    while d * d * m < n * n:
        d += 1
    return min(d, n)
