"""Privacy amplification and key expansion against bounded memories.

Alice and Bob share a public seed Y (a matching) and a secret X; the key is
Z = z(X, Y). An eavesdropper who stored a function of X before Y was
revealed tries to tell (Y, Z) from (Y, uniform). The classical side is the
exact Bayes-optimal advantage given the stored message; the quantum side
simulates an adversary holding one fingerprint state of X.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np

from apm_lab.core import (
    BitString,
    SeededRng,
    count_matchings,
    enumerate_matchings,
    extract_z,
    extract_z_batch,
    sample_matching,
)
from apm_lab.errors import get_error
from apm_lab.parallel import TRIAL_BLOCK, map_chunks, run_blocks
from apm_lab.protocols import estimate_success
from apm_lab.qsim import run_quantum_message_protocol
from apm_lab.spectral import popcounts

# Largest n for which every point of the cube is classified
MAX_ADVERSARY_N = 14

# Edges per row of an advantage table when neither m nor alpha is given
DEFAULT_TABLE_EDGES = 2

ADVERSARY_MODES = ("apm", "real-vs-uniform")


class MemorySpec(ABC):
    """A deterministic classical memory: a map from {0,1}^n to messages."""

    @abstractmethod
    def get_name(self) -> str:
        pass

    @abstractmethod
    def bits(self, n: int) -> int:
        """Number of stored bits c."""
        pass

    @abstractmethod
    def message_keys(self, n: int) -> np.ndarray:
        """Message label of every point; entry y is the label of point y.

        Returns:
            int64 array of length 2^n

        Raises:
            DomainError: If the memory does not fit on n bits
        """
        pass

    def describe(self) -> str:
        return self.get_name()


class NoMemory(MemorySpec):
    def get_name(self) -> str:
        return "none"

    def bits(self, n: int) -> int:
        return 0

    def message_keys(self, n: int) -> np.ndarray:
        return np.zeros(1 << n, dtype=np.int64)


class FullMemory(MemorySpec):
    def get_name(self) -> str:
        return "full"

    def bits(self, n: int) -> int:
        return n

    def message_keys(self, n: int) -> np.ndarray:
        return np.arange(1 << n, dtype=np.int64)


class SubsetBits(MemorySpec):
    """Stores x_i for each listed index i."""

    def __init__(self, indices: Sequence[int]):
        self.indices = [int(i) for i in indices]
        if len(set(self.indices)) != len(self.indices):
            raise get_error(
                "bad_syntax",
                what="memory indices",
                text=self.indices,
                hint="Each index may be stored once.",
            )

    def get_name(self) -> str:
        return "subset:" + ",".join(str(i) for i in self.indices)

    def bits(self, n: int) -> int:
        return len(self.indices)

    def _check(self, n: int) -> None:
        for i in self.indices:
            if not 0 <= i < n:
                raise get_error("out_of_range", what="memory index", value=i, allowed=f"[0, {n})")

    def message_keys(self, n: int) -> np.ndarray:
        self._check(n)
        points = np.arange(1 << n, dtype=np.int64)
        keys = np.zeros_like(points)
        for r, i in enumerate(self.indices):
            keys |= ((points >> i) & 1) << r
        return keys


class FirstBits(SubsetBits):
    """Stores the first c bits of x."""

    def __init__(self, c: int):
        if c < 0:
            raise get_error("out_of_range", what="c", value=c, allowed=">= 0")
        super().__init__(range(c))
        self.c = c

    def get_name(self) -> str:
        return f"first:{self.c}"


class ParityBank(MemorySpec):
    """Stores <x, mask> over GF(2) for each mask."""

    def __init__(self, masks: Sequence[BitString]):
        self.masks = list(masks)

    def get_name(self) -> str:
        return f"parity:{len(self.masks)}"

    def bits(self, n: int) -> int:
        return len(self.masks)

    def message_keys(self, n: int) -> np.ndarray:
        points = np.arange(1 << n, dtype=np.int64)
        weights = popcounts(n)
        keys = np.zeros_like(points)
        for r, mask in enumerate(self.masks):
            if len(mask) != n:
                raise get_error("length_mismatch", what="parity mask", got=len(mask), expected=n)
            keys |= (weights[points & mask.to_int()] & 1) << r
        return keys


class PartitionFile(MemorySpec):
    """Arbitrary labelling of points; unlisted points share one extra class."""

    def __init__(self, labels: Dict[BitString, str]):
        self.labels = dict(labels)

    def get_name(self) -> str:
        return f"file:{len(set(self.labels.values()))}"

    def bits(self, n: int) -> int:
        classes = np.unique(self.message_keys(n)).size
        return (classes - 1).bit_length()

    def message_keys(self, n: int) -> np.ndarray:
        names = sorted(set(self.labels.values()))
        code = {name: k for k, name in enumerate(names)}
        keys = np.full(1 << n, len(names), dtype=np.int64)
        for point, name in self.labels.items():
            if len(point) != n:
                raise get_error("length_mismatch", what="point", got=len(point), expected=n)
            keys[point.to_int()] = code[name]
        return keys


def _read_lines(path: Union[str, Path]) -> List[str]:
    path = Path(path)
    if not path.exists():
        raise get_error("file_not_found", path=path)
    lines = [line.strip() for line in path.read_text().splitlines()]
    return [line for line in lines if line and not line.startswith("#")]


def load_parity_bank(path: Union[str, Path]) -> ParityBank:
    """One mask bitstring per line."""
    return ParityBank([BitString.from_string(line) for line in _read_lines(path)])


def load_partition(path: Union[str, Path]) -> PartitionFile:
    """Lines of the form "<bitstring> <label>"."""
    labels = {}
    for line in _read_lines(path):
        parts = line.split(maxsplit=1)
        if len(parts) != 2:
            raise get_error(
                "bad_syntax",
                what="partition line",
                text=line,
                hint='Expected "<bitstring> <label>".',
            )
        labels[BitString.from_string(parts[0])] = parts[1].strip()
    return PartitionFile(labels)


def parse_memory_spec(text: str) -> MemorySpec:
    """Parse first:c, subset:i,j,..., parity:FILE, file:PATH, none or full."""
    text = text.strip()
    kind, _, arg = text.partition(":")
    kind = kind.lower()
    if kind == "none" and not arg:
        return NoMemory()
    if kind == "full" and not arg:
        return FullMemory()
    try:
        if kind == "first":
            return FirstBits(int(arg))
        if kind == "subset":
            return SubsetBits([int(part) for part in arg.split(",") if part.strip()])
    except ValueError:
        raise get_error(
            "bad_syntax", what="memory spec", text=text, hint="Counts and indices are integers."
        ) from None
    if kind == "parity" and arg:
        return load_parity_bank(arg)
    if kind == "file" and arg:
        return load_partition(arg)
    raise get_error(
        "bad_syntax",
        what="memory spec",
        text=text,
        hint="Use first:c, subset:i,j,..., parity:FILE, file:PATH, none or full.",
    )


def _check_adversary_size(n: int, m: int) -> None:
    if n > MAX_ADVERSARY_N:
        raise get_error("exact_infeasible", n=n, limit=MAX_ADVERSARY_N)
    if m < 0 or 2 * m > n:
        raise get_error("matching_too_large", n=n, m=m)


def classical_advantage_exact(
    spec: MemorySpec,
    n: int,
    m: int,
    cap: Optional[int] = None,
    threads: Optional[int] = None,
    progress_callback: Optional[Callable] = None,
) -> float:
    """Optimal advantage over 1/2 for telling (Y, Z) from (Y, U) given the memory.

    Every message class A_msg is a flat source; the joint distance is the
    average of tvd(p_{A_msg, M}, U) over M and over messages weighted by
    |A_msg| / 2^n, and the advantage is that distance over 4.

    Raises:
        ResourceError: If n is too large or the matchings exceed the cap
    """
    _check_adversary_size(n, m)
    raw = spec.message_keys(n)
    _, keys, sizes = np.unique(raw, return_inverse=True, return_counts=True)
    keys = keys.astype(np.int64).ravel()
    classes = sizes.size
    weights = sizes / float(1 << n)
    points = np.arange(1 << n, dtype=np.int64)
    cells = 1 << m

    def evaluate(chunk) -> np.ndarray:
        out = np.empty(len(chunk))
        for index, matching in enumerate(chunk):
            joint = np.bincount(
                keys * cells + extract_z_batch(points, matching), minlength=classes * cells
            ).reshape(classes, cells)
            distances = np.sum(np.abs(joint / sizes[:, None] - 1.0 / cells), axis=1)
            out[index] = np.sum(weights * distances)
        return out

    if progress_callback:
        progress_callback("oracle_start", {"mode": "exact", "total": count_matchings(n, m)})
    parts = map_chunks(evaluate, enumerate_matchings(n, m, cap), 256, threads, progress_callback)
    values = np.concatenate(parts)
    return float(np.sum(values) / values.size / 4.0)


@dataclass
class AdversaryEstimate:
    trials: int
    successes: int
    rate: float
    stderr: float


def quantum_adversary_trial(
    n: int,
    m: int,
    mode: str = "real-vs-uniform",
    trials: int = 10_000,
    rng: Optional[SeededRng] = None,
    threads: Optional[int] = None,
    progress_callback: Optional[Callable] = None,
) -> AdversaryEstimate:
    """Adversary holding one fingerprint state of X, measured once Y is public.

    apm mode: decide whether w = Z or its complement (success 1/2 + alpha).
    real-vs-uniform mode: decide whether w = Z or w is uniform
    (success 1/2 + alpha/2).
    """
    if mode not in ADVERSARY_MODES:
        raise get_error("out_of_range", what="mode", value=mode, allowed=ADVERSARY_MODES)
    if n % 2:
        raise get_error("odd_n", n=n)
    if mode == "apm":
        report = estimate_success("quantum", n, m, trials, rng, threads, progress_callback)
        return AdversaryEstimate(report.trials, report.successes, report.rate, report.stderr)

    if trials < 1:
        raise get_error("out_of_range", what="trials", value=trials, allowed=">= 1")
    if m < 0 or 2 * m > n:
        raise get_error("matching_too_large", n=n, m=m)
    rng = rng or SeededRng(0)

    def block(index: int, items: range) -> int:
        block_rng = rng.child(index)
        wins = 0
        for _ in items:
            x = block_rng.bits(n)
            matching = sample_matching(n, m, block_rng)
            uniform = block_rng.bit()
            w = block_rng.bits(m) if uniform else extract_z(x, matching)
            outcome = run_quantum_message_protocol(x, matching, block_rng)
            if outcome is None:
                guess = block_rng.bit()
            else:
                ell, z_ell = outcome
                guess = int(w[ell] != z_ell)
            wins += guess == uniform
        return wins

    if progress_callback:
        progress_callback("oracle_start", {"mode": "mc", "total": trials})
    successes = int(np.sum(run_blocks(block, trials, TRIAL_BLOCK, threads, progress_callback)))
    rate = successes / trials
    return AdversaryEstimate(trials, successes, rate, math.sqrt(rate * (1.0 - rate) / trials))


@dataclass
class ScenarioReport:
    """Classical memory versus quantum memory for one (n, m)."""

    n: int
    m: int
    memory: str
    c: int
    classical_advantage: float
    quantum_success: float
    quantum_stderr: float
    quantum_advantage: float
    quantum_memory_qubits: float
    trials: int
    degenerate: bool


def key_expansion_report(
    spec: MemorySpec,
    n: int,
    m: int,
    trials: int = 10_000,
    rng: Optional[SeededRng] = None,
    cap: Optional[int] = None,
    threads: Optional[int] = None,
    progress_callback: Optional[Callable] = None,
) -> ScenarioReport:
    """Exact classical advantage next to the simulated quantum attack."""
    rng = rng or SeededRng(0)
    classical = classical_advantage_exact(spec, n, m, cap, threads, progress_callback)
    quantum = quantum_adversary_trial(
        n, m, "real-vs-uniform", trials, rng, threads, progress_callback
    )
    return ScenarioReport(
        n=n,
        m=m,
        memory=spec.get_name(),
        c=spec.bits(n),
        classical_advantage=classical,
        quantum_success=quantum.rate,
        quantum_stderr=quantum.stderr,
        quantum_advantage=quantum.rate - 0.5,
        quantum_memory_qubits=math.log2(n),
        trials=trials,
        degenerate=m == 0,
    )


def table_edges(n: int, m: Optional[int] = None, alpha: Optional[float] = None) -> int:
    """Edge count of one advantage-table row: m as given, or alpha * n when alpha is set.

    Raises:
        DomainError: If alpha * n is not a whole number
    """
    if alpha is None:
        return DEFAULT_TABLE_EDGES if m is None else m
    edges = alpha * n
    if abs(edges - round(edges)) > 1e-9:
        raise get_error("out_of_range", what="alpha * n", value=edges, allowed="whole numbers")
    return int(round(edges))


def advantage_table(
    n_values: Sequence[int],
    c: int,
    m: Optional[int] = None,
    alpha: Optional[float] = None,
    cap: Optional[int] = None,
    threads: Optional[int] = None,
) -> List[dict]:
    """Exact advantage of a first-c-bits memory as n grows.

    Rows share either the edge count m (default DEFAULT_TABLE_EDGES) or,
    when alpha is given, the edge fraction alpha = m / n.

    Args:
        n_values: Dimensions to tabulate
        c: Stored prefix length
        m: Edge count used for every n
        alpha: Edge fraction used for every n; replaces m

    Returns:
        Rows with n, m, c, classical_advantage and the quantum reference
        advantages alpha (apm) and alpha / 2 (real-vs-uniform)
    """
    rows = []
    for n in n_values:
        edges = table_edges(n, m, alpha)
        rows.append(
            {
                "n": n,
                "m": edges,
                "c": c,
                "classical_advantage": classical_advantage_exact(
                    FirstBits(c), n, edges, cap, threads
                ),
                "quantum_apm_advantage": edges / n,
                "quantum_real_vs_uniform_advantage": edges / (2 * n),
            }
        )
    return rows
