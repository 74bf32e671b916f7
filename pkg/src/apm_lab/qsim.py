"""Statevector simulation of the log n-qubit fingerprint state.

The register is modelled directly as an n-dimensional complex vector over the
index space [n] (n need not be a power of two). Only three kinds of
operation occur: diagonal sign flips, projective measurements in the
computational basis (single edges or a whole perfect matching) and a final
two-dimensional +/- basis readout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from apm_lab.core import (
    BitString,
    Matching,
    SeededRng,
    complete_matching,
    extract_z,
    sample_matching,
)
from apm_lab.errors import get_error
from apm_lab.parallel import TRIAL_BLOCK, run_blocks

NORM_TOLERANCE = 1e-9
ZERO_AMPLITUDE = 1e-12


@dataclass(eq=False)
class QuantumState:
    """Unit vector of n complex amplitudes."""

    n: int
    amps: np.ndarray

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=np.complex128)
        if self.amps.shape != (self.n,):
            raise get_error(
                "length_mismatch", what="amplitudes", got=self.amps.size, expected=self.n
            )
        if abs(self.norm() - 1.0) > NORM_TOLERANCE:
            raise get_error("out_of_range", what="state norm", value=self.norm(), allowed="1")

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def support(self) -> List[int]:
        return np.flatnonzero(np.abs(self.amps) > ZERO_AMPLITUDE).tolist()

    def copy(self) -> "QuantumState":
        return QuantumState(self.n, self.amps.copy())


def _renormalized(n: int, amps: np.ndarray) -> QuantumState:
    return QuantumState(n, amps / np.linalg.norm(amps))


def uniform_state(n: int) -> QuantumState:
    if n < 1:
        raise get_error("out_of_range", what="n", value=n, allowed=">= 1")
    return QuantumState(n, np.full(n, 1.0 / np.sqrt(n)))


def make_fingerprint_state(x: BitString) -> QuantumState:
    """(1/sqrt(n)) sum_i (-1)^{x_i} |i>."""
    n = len(x)
    if n < 1:
        raise get_error("out_of_range", what="n", value=n, allowed=">= 1")
    signs = 1.0 - 2.0 * x.to_array()
    return QuantumState(n, signs / np.sqrt(n))


def apply_phase(state: QuantumState, i: int, bit: int) -> QuantumState:
    """|i> -> (-1)^bit |i>, in place."""
    if not 0 <= i < state.n:
        raise get_error("out_of_range", what="index", value=i, allowed=f"[0, {state.n})")
    if bit:
        state.amps[i] = -state.amps[i]
    return state


def measure_pair_projector(
    state: QuantumState, i: int, j: int, rng: SeededRng
) -> Tuple[bool, QuantumState]:
    """Two-outcome measurement E1 = |i><i| + |j><j|, E0 = I - E1.

    Returns:
        (True if E1 fired, collapsed state)
    """
    p_fire = float(np.abs(state.amps[i]) ** 2 + np.abs(state.amps[j]) ** 2)
    fired = rng.random() < p_fire
    amps = state.amps.copy()
    if fired:
        keep = amps[[i, j]]
        amps[:] = 0.0
        amps[[i, j]] = keep
    else:
        amps[[i, j]] = 0.0
    return fired, _renormalized(state.n, amps)


def measure_matching(
    state: QuantumState, perfect: Matching, rng: SeededRng
) -> Tuple[int, QuantumState]:
    """Measure with the n/2 two-dimensional projectors of a perfect matching.

    Returns:
        (index of the observed edge, state collapsed onto that edge)

    Raises:
        DomainError: If the matching is not perfect on [n]
    """
    if perfect.n != state.n:
        raise get_error("length_mismatch", what="matching", got=perfect.n, expected=state.n)
    if not perfect.is_perfect:
        raise get_error("not_perfect", covered=2 * perfect.m, n=perfect.n)
    pairs = np.array(perfect.pairs, dtype=np.int64)
    probs = state.probabilities()
    edge_probs = probs[pairs[:, 0]] + probs[pairs[:, 1]]
    cumulative = np.cumsum(edge_probs)
    # Inverse CDF on the exactly computed outcome probabilities
    ell = int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side="right"))
    ell = min(ell, perfect.m - 1)
    i, j = perfect.pairs[ell]
    amps = np.zeros_like(state.amps)
    amps[[i, j]] = state.amps[[i, j]]
    return ell, _renormalized(state.n, amps)


def measure_pm_basis(state: QuantumState, rng: Optional[SeededRng] = None) -> int:
    """Readout of a state on two indices i < j in the basis (|i> +/- |j>)/sqrt(2).

    Returns 0 for "+" and 1 for "-". A relative phase of +1 or -1 gives a
    deterministic answer; otherwise the outcome is Born-sampled from rng.

    Raises:
        DomainError: If the state is not supported on exactly two indices
    """
    support = state.support()
    if len(support) != 2:
        raise get_error(
            "out_of_range", what="support size", value=len(support), allowed="exactly 2 indices"
        )
    i, j = support
    p_plus = float(np.abs(state.amps[i] + state.amps[j]) ** 2 / 2.0)
    if p_plus >= 1.0 - ZERO_AMPLITUDE:
        return 0
    if p_plus <= ZERO_AMPLITUDE:
        return 1
    if rng is None:
        raise get_error(
            "bad_syntax",
            what="readout",
            text="non-deterministic +/- measurement",
            hint="Pass an rng to sample general two-index states.",
        )
    return 0 if rng.random() < p_plus else 1


def run_quantum_message_protocol(
    x: BitString, matching: Matching, rng: SeededRng
) -> Optional[Tuple[int, int]]:
    """One run of the fingerprint-state protocol.

    Bob completes his matching to a perfect one and measures. If the observed
    edge belongs to his matching he reads out its parity.

    Returns:
        (l, z_l) when the observed edge is edge l of the matching, else None
    """
    if len(x) != matching.n:
        raise get_error("length_mismatch", what="x", got=len(x), expected=matching.n)
    if matching.n % 2:
        raise get_error("odd_n", n=matching.n)
    perfect = complete_matching(matching)
    position = {pair: ell for ell, pair in enumerate(matching.pairs)}
    k, collapsed = measure_matching(make_fingerprint_state(x), perfect, rng)
    ell = position.get(perfect.pairs[k])
    if ell is None:
        return None
    return ell, measure_pm_basis(collapsed)


def learn_distinct_bits(
    x: BitString, matching: Matching, copies: int, rng: SeededRng
) -> Dict[int, int]:
    """Run the protocol on independent copies; collect distinct learned bits.

    Returns:
        Mapping l -> z_l for every edge learned at least once
    """
    if copies < 1:
        raise get_error("out_of_range", what="copies", value=copies, allowed=">= 1")
    learned: Dict[int, int] = {}
    for _ in range(copies):
        outcome = run_quantum_message_protocol(x, matching, rng)
        if outcome is not None:
            learned.setdefault(outcome[0], outcome[1])
    return learned


@dataclass
class ProtocolStats:
    """Aggregated outcomes of repeated protocol runs on one instance."""

    trials: int
    learned: int
    correct: int
    edge_counts: List[int] = field(default_factory=list)

    @property
    def rate(self) -> float:
        return self.learned / self.trials if self.trials else 0.0


def protocol_trials(
    x: BitString,
    matching: Matching,
    trials: int,
    rng: SeededRng,
    threads: Optional[int] = None,
    progress_callback=None,
) -> ProtocolStats:
    """Repeat run_quantum_message_protocol and audit every learned bit."""
    if trials < 1:
        raise get_error("out_of_range", what="trials", value=trials, allowed=">= 1")
    z = extract_z(x, matching)

    def block(index: int, items: range) -> np.ndarray:
        block_rng = rng.child(index)
        # Per-edge hits, then learned bits equal to z_l
        counts = np.zeros(matching.m + 1, dtype=np.int64)
        for _ in items:
            outcome = run_quantum_message_protocol(x, matching, block_rng)
            if outcome is None:
                continue
            ell, bit = outcome
            counts[ell] += 1
            counts[-1] += bit == z[ell]
        return counts

    total = np.sum(run_blocks(block, trials, TRIAL_BLOCK, threads, progress_callback), axis=0)
    edge_counts = total[: matching.m].tolist()
    return ProtocolStats(
        trials=trials,
        learned=int(sum(edge_counts)),
        correct=int(total[-1]),
        edge_counts=edge_counts,
    )


# -- streaming -----------------------------------------------------------

EVENT_KINDS = ("bit", "edge", "promise")


@dataclass(frozen=True)
class StreamEvent:
    """One streamed item: bit (i, x_i), edge (i, j) or promise bit (i, j, w_l)."""

    kind: str
    i: int
    j: int = -1
    value: int = 0

    @classmethod
    def bit(cls, i: int, value: int) -> "StreamEvent":
        return cls("bit", i, -1, value)

    @classmethod
    def edge(cls, i: int, j: int) -> "StreamEvent":
        return cls("edge", i, j, 0)

    @classmethod
    def promise(cls, i: int, j: int, value: int) -> "StreamEvent":
        return cls("promise", i, j, value)

    @property
    def pair(self) -> Tuple[int, int]:
        return (min(self.i, self.j), max(self.i, self.j))

    def to_line(self) -> str:
        if self.kind == "bit":
            return f"b {self.i} {self.value}"
        if self.kind == "edge":
            return f"e {self.i} {self.j}"
        return f"w {self.i} {self.j} {self.value}"


_TAGS = {"b": ("bit", 2), "e": ("edge", 2), "w": ("promise", 3)}


def parse_stream(text: str) -> List[StreamEvent]:
    """Parse one event per line: "b i v", "e i j" or "w i j v"."""
    events = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        tag = _TAGS.get(parts[0])
        if tag is None or len(parts) != tag[1] + 1:
            raise get_error(
                "bad_syntax",
                what="stream event",
                text=line,
                hint='Expected "b i v", "e i j" or "w i j v".',
            )
        try:
            numbers = [int(p) for p in parts[1:]]
        except ValueError:
            raise get_error(
                "bad_syntax", what="stream event", text=line, hint="Fields must be integers."
            ) from None
        if tag[0] == "bit":
            events.append(StreamEvent.bit(*numbers))
        elif tag[0] == "edge":
            events.append(StreamEvent.edge(*numbers))
        else:
            events.append(StreamEvent.promise(*numbers))
    return events


def format_stream(events: Sequence[StreamEvent]) -> str:
    return "".join(f"{event.to_line()}\n" for event in events)


def validate_stream(n: int, events: Sequence[StreamEvent]) -> Matching:
    """Check a stream for consistency with one matching and one promise string.

    Returns:
        The matching formed by the streamed edges

    Raises:
        ValidationError: On any inconsistency
    """

    def fail(reason: str):
        return get_error("invalid_stream", reason=reason)

    seen_bits = set()
    edges = set()
    covered = set()
    promised = set()
    for event in events:
        if event.kind not in EVENT_KINDS:
            raise fail(f"unknown event kind {event.kind!r}")
        indices = (event.i,) if event.kind == "bit" else (event.i, event.j)
        if any(not 0 <= index < n for index in indices):
            raise fail(f"index out of range in {event.to_line()!r} (n = {n})")
        if event.kind != "edge" and event.value not in (0, 1):
            raise fail(f"value must be 0 or 1 in {event.to_line()!r}")
        if event.kind != "bit" and event.i == event.j:
            raise fail(f"degenerate pair in {event.to_line()!r}")
        if event.kind == "bit":
            if event.i in seen_bits:
                raise fail(f"bit {event.i} streamed twice")
            seen_bits.add(event.i)
        elif event.kind == "edge":
            if covered.intersection(event.pair):
                raise fail(f"edge {event.pair} is not disjoint from earlier edges")
            covered.update(event.pair)
            edges.add(event.pair)
        else:
            if event.pair in promised:
                raise fail(f"promise bit for {event.pair} streamed twice")
            promised.add(event.pair)
    unknown = promised - edges
    if unknown:
        raise fail(f"promise bit for {sorted(unknown)[0]} names no streamed edge")
    return Matching.from_pairs(n, edges)


@dataclass
class StreamOutcome:
    """Result of one streaming run; edge and bit are None when no E1 fired."""

    edge: Optional[Tuple[int, int]]
    bit: Optional[int]

    @property
    def present(self) -> bool:
        return self.bit is not None


def simulate_stream(n: int, events: Sequence[StreamEvent], rng: SeededRng) -> StreamOutcome:
    """Run the O(log n)-qubit streaming algorithm over an event sequence."""
    validate_stream(n, events)
    state = uniform_state(n)
    fired_edge = None
    for event in events:
        if event.kind == "bit":
            apply_phase(state, event.i, event.value)
        elif event.kind == "edge":
            fired, state = measure_pair_projector(state, event.i, event.j, rng)
            if fired:
                fired_edge = event.pair
        else:
            apply_phase(state, min(event.i, event.j), event.value)
    if fired_edge is None:
        return StreamOutcome(None, None)
    return StreamOutcome(fired_edge, measure_pm_basis(state))


def run_streaming(n: int, events: Sequence[StreamEvent], rng: SeededRng) -> Optional[int]:
    """The bit x_i xor x_j xor w_l for the edge that fired, or None."""
    return simulate_stream(n, events, rng).bit


@dataclass
class StreamInstance:
    """A random (x, M, w) together with its events in random order."""

    x: BitString
    matching: Matching
    w: BitString
    events: List[StreamEvent]

    def expected_bit(self, edge: Tuple[int, int]) -> int:
        ell = self.matching.pairs.index(edge)
        return extract_z(self.x, self.matching)[ell] ^ self.w[ell]


def shuffle_events(events: Sequence[StreamEvent], rng: SeededRng) -> List[StreamEvent]:
    order = rng.generator.permutation(len(events))
    return [events[k] for k in order]


def random_stream_instance(n: int, m: int, rng: SeededRng) -> StreamInstance:
    x = rng.bits(n)
    matching = sample_matching(n, m, rng)
    w = rng.bits(m)
    events = [StreamEvent.bit(i, x[i]) for i in range(n)]
    events += [StreamEvent.edge(i, j) for i, j in matching.pairs]
    events += [StreamEvent.promise(i, j, w[ell]) for ell, (i, j) in enumerate(matching.pairs)]
    return StreamInstance(x, matching, w, shuffle_events(events, rng))


@dataclass
class StreamStats:
    """Outcome counts of repeated streaming runs over one event sequence.

    outcome_counts maps each streamed edge to [runs read as 0, runs read as 1].
    """

    trials: int
    outcome_counts: Dict[Tuple[int, int], List[int]] = field(default_factory=dict)

    @property
    def present(self) -> int:
        return sum(sum(counts) for counts in self.outcome_counts.values())

    def correct(self, expected: Dict[Tuple[int, int], int]) -> int:
        """Runs whose readout equals the expected bit of the fired edge."""
        return sum(counts[expected[pair]] for pair, counts in self.outcome_counts.items())


def expected_stream_bits(n: int, events: Sequence[StreamEvent]) -> Dict[Tuple[int, int], int]:
    """x_i xor x_j xor w_l for every streamed edge; unstreamed bits count as 0."""
    validate_stream(n, events)
    bits = {event.i: event.value for event in events if event.kind == "bit"}
    promises = {event.pair: event.value for event in events if event.kind == "promise"}
    return {
        event.pair: bits.get(event.i, 0) ^ bits.get(event.j, 0) ^ promises.get(event.pair, 0)
        for event in events
        if event.kind == "edge"
    }


def stream_trials(
    n: int,
    events: Sequence[StreamEvent],
    trials: int,
    rng: SeededRng,
    threads: Optional[int] = None,
    progress_callback=None,
) -> StreamStats:
    """Repeat simulate_stream and tally (edge, bit) outcomes."""
    if trials < 1:
        raise get_error("out_of_range", what="trials", value=trials, allowed=">= 1")
    matching = validate_stream(n, events)
    index = {pair: ell for ell, pair in enumerate(matching.pairs)}

    def block(block_index: int, items: range) -> np.ndarray:
        block_rng = rng.child(block_index)
        counts = np.zeros((matching.m, 2), dtype=np.int64)
        for _ in items:
            outcome = simulate_stream(n, events, block_rng)
            if outcome.present:
                counts[index[outcome.edge], outcome.bit] += 1
        return counts

    parts = run_blocks(block, trials, TRIAL_BLOCK, threads, progress_callback)
    total = np.sum(parts, axis=0) if parts else np.zeros((matching.m, 2), dtype=np.int64)
    return StreamStats(
        trials=trials,
        outcome_counts={pair: total[ell].tolist() for pair, ell in index.items()},
    )
