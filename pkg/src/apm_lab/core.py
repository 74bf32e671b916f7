"""Bitstrings, alpha-matchings and the matching-parity extractor.

Indices are 0-based everywhere, including the text formats. A point of the
cube {0,1}^n is also encoded as an integer whose bit k is coordinate k; the
vectorised helpers use that encoding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from apm_lab.errors import get_error

WORD_BITS = 64
_WORD_MASK = (1 << WORD_BITS) - 1


def _num_words(length: int) -> int:
    return (length + WORD_BITS - 1) // WORD_BITS


@dataclass(frozen=True)
class BitString:
    """Packed bit vector; bit k lives in bit (k % 64) of word k // 64."""

    length: int
    words: Tuple[int, ...]

    def __post_init__(self):
        if self.length < 0:
            raise get_error("out_of_range", what="length", value=self.length, allowed=">= 0")
        if len(self.words) != _num_words(self.length):
            raise get_error(
                "length_mismatch",
                what="word vector",
                got=len(self.words),
                expected=_num_words(self.length),
            )
        spare = self.length % WORD_BITS
        if self.words and spare and self.words[-1] >> spare:
            raise get_error(
                "out_of_range", what="unused high bits", value=hex(self.words[-1]), allowed="zero"
            )

    # -- construction -------------------------------------------------

    @classmethod
    def from_int(cls, value: int, length: int) -> "BitString":
        """Build from an integer whose bit k is bit k of the string."""
        if value < 0 or value >> length:
            raise get_error(
                "out_of_range", what="value", value=value, allowed=f"[0, 2^{length})"
            )
        words = tuple((value >> (WORD_BITS * w)) & _WORD_MASK for w in range(_num_words(length)))
        return cls(length, words)

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BitString":
        bits = [int(b) for b in bits]
        value = 0
        for k, bit in enumerate(bits):
            if bit not in (0, 1):
                raise get_error("out_of_range", what=f"bit {k}", value=bit, allowed="{0, 1}")
            value |= bit << k
        return cls.from_int(value, len(bits))

    @classmethod
    def from_string(cls, text: str) -> "BitString":
        """Parse ASCII '0'/'1' characters; character k is bit k."""
        text = text.strip()
        if any(ch not in "01" for ch in text):
            raise get_error(
                "bad_syntax",
                what="bitstring",
                text=text,
                hint="Use only the characters 0 and 1.",
            )
        return cls.from_bits(int(ch) for ch in text)

    @classmethod
    def zeros(cls, length: int) -> "BitString":
        return cls.from_int(0, length)

    # -- access -------------------------------------------------------

    def to_int(self) -> int:
        value = 0
        for w, word in enumerate(self.words):
            value |= word << (WORD_BITS * w)
        return value

    def to_string(self) -> str:
        return "".join(str(bit) for bit in self)

    def to_array(self) -> np.ndarray:
        """Bits as a uint8 array of shape (length,)."""
        return np.fromiter(iter(self), dtype=np.uint8, count=self.length)

    def __len__(self) -> int:
        return self.length

    def __getitem__(self, index: int) -> int:
        if not 0 <= index < self.length:
            raise IndexError(f"bit index {index} out of range for length {self.length}")
        return (self.words[index // WORD_BITS] >> (index % WORD_BITS)) & 1

    def __iter__(self) -> Iterator[int]:
        value = self.to_int()
        for k in range(self.length):
            yield (value >> k) & 1

    def __str__(self) -> str:
        return self.to_string()

    # -- arithmetic ---------------------------------------------------

    def _check_same_length(self, other: "BitString") -> None:
        if other.length != self.length:
            raise get_error(
                "length_mismatch", what="bitstring", got=other.length, expected=self.length
            )

    def __xor__(self, other: "BitString") -> "BitString":
        self._check_same_length(other)
        return BitString(self.length, tuple(a ^ b for a, b in zip(self.words, other.words)))

    def complement(self) -> "BitString":
        return BitString.from_int(self.to_int() ^ ((1 << self.length) - 1), self.length)

    def weight(self) -> int:
        return sum(bin(word).count("1") for word in self.words)

    def dot(self, other: "BitString") -> int:
        """Inner product over GF(2)."""
        self._check_same_length(other)
        return sum(bin(a & b).count("1") for a, b in zip(self.words, other.words)) & 1


@dataclass(frozen=True)
class Matching:
    """Canonical set of disjoint vertex pairs over [n].

    Every pair has i < j and pairs are sorted by i. The pair order is the
    coordinate order of z.
    """

    n: int
    pairs: Tuple[Tuple[int, int], ...]

    def __post_init__(self):
        if self.n < 0:
            raise get_error("out_of_range", what="n", value=self.n, allowed=">= 0")
        seen = set()
        previous = -1
        for i, j in self.pairs:
            if not (0 <= i < j < self.n):
                raise get_error(
                    "out_of_range", what="pair", value=(i, j), allowed=f"0 <= i < j < {self.n}"
                )
            if i <= previous:
                raise get_error(
                    "bad_syntax",
                    what="matching",
                    text=self.pairs,
                    hint="Pairs must be sorted by first endpoint; use Matching.from_pairs().",
                )
            if i in seen or j in seen:
                raise get_error(
                    "bad_syntax",
                    what="matching",
                    text=self.pairs,
                    hint="Edges of a matching must be vertex-disjoint.",
                )
            seen.update((i, j))
            previous = i

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable[Sequence[int]]) -> "Matching":
        """Canonicalize arbitrary pair order and orientation."""
        canonical = sorted((min(int(a), int(b)), max(int(a), int(b))) for a, b in pairs)
        return cls(n, tuple(canonical))

    @classmethod
    def parse(cls, text: str, n: int) -> "Matching":
        """Parse "i j;i j" or one "i j" pair per line."""
        pairs = []
        for chunk in text.replace("\n", ";").split(";"):
            chunk = chunk.strip()
            if not chunk or chunk.startswith("#"):
                continue
            parts = chunk.split()
            if len(parts) != 2:
                raise get_error(
                    "bad_syntax",
                    what="matching pair",
                    text=chunk,
                    hint='Write pairs as "i j", separated by ";" or newlines.',
                )
            try:
                pairs.append((int(parts[0]), int(parts[1])))
            except ValueError:
                raise get_error(
                    "bad_syntax",
                    what="matching pair",
                    text=chunk,
                    hint="Vertex indices must be integers.",
                ) from None
        return cls.from_pairs(n, pairs)

    def to_text(self, separator: str = "\n") -> str:
        return separator.join(f"{i} {j}" for i, j in self.pairs)

    @property
    def m(self) -> int:
        return len(self.pairs)

    @property
    def alpha(self) -> float:
        return self.m / self.n if self.n else 0.0

    @property
    def is_perfect(self) -> bool:
        return 2 * self.m == self.n

    def covered(self) -> List[int]:
        return sorted(v for pair in self.pairs for v in pair)

    def __str__(self) -> str:
        return self.to_text(";")


def load_matching(path: Union[str, Path], n: int) -> Matching:
    """Read a matching file (one "i j" pair per line)."""
    path = Path(path)
    if not path.exists():
        raise get_error("file_not_found", path=path)
    return Matching.parse(path.read_text(), n)


class SeededRng:
    """Reproducible random stream identified by (seed, stream-id).

    Child streams derived with child() are statistically independent of the
    parent and of each other.
    """

    def __init__(self, seed: int, stream_id: int = 0, path: Tuple[int, ...] = ()):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self.path = tuple(path)
        sequence = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,) + self.path)
        self._generator = np.random.Generator(np.random.PCG64(sequence))

    def __repr__(self) -> str:
        return f"SeededRng(seed={self.seed}, stream_id={self.stream_id}, path={self.path})"

    @property
    def generator(self) -> np.random.Generator:
        return self._generator

    def child(self, index: int) -> "SeededRng":
        return SeededRng(self.seed, self.stream_id, self.path + (int(index),))

    def integers(self, low: int, high: int) -> int:
        """Uniform integer in [low, high)."""
        return int(self._generator.integers(low, high))

    def random(self) -> float:
        """Uniform float in [0, 1)."""
        return float(self._generator.random())

    def bit(self) -> int:
        return int(self._generator.integers(0, 2))

    def bits(self, length: int) -> BitString:
        values = self._generator.integers(0, 2, size=length)
        return BitString.from_bits(values.tolist())


def _check_matching_size(n: int, m: int) -> None:
    if n < 0 or m < 0 or 2 * m > n:
        raise get_error("matching_too_large", n=n, m=m)


def extract_z(x: BitString, matching: Matching) -> BitString:
    """Edge parities z_l = x[i_l] xor x[j_l], in pair order."""
    if len(x) != matching.n:
        raise get_error("length_mismatch", what="x", got=len(x), expected=matching.n)
    value = x.to_int()
    z = 0
    for ell, (i, j) in enumerate(matching.pairs):
        z |= (((value >> i) ^ (value >> j)) & 1) << ell
    return BitString.from_int(z, matching.m)


def extract_z_batch(points: np.ndarray, matching: Matching) -> np.ndarray:
    """Extractor over integer-encoded points; returns integer-encoded z values."""
    points = np.asarray(points, dtype=np.int64)
    z = np.zeros_like(points)
    for ell, (i, j) in enumerate(matching.pairs):
        z |= (((points >> i) ^ (points >> j)) & 1) << ell
    return z


def matT_apply(matching: Matching, s: BitString) -> BitString:  # noqa: N802
    """M^T s over GF(2): sets both endpoints of every edge selected by s."""
    if len(s) != matching.m:
        raise get_error("length_mismatch", what="s", got=len(s), expected=matching.m)
    value = 0
    for ell, (i, j) in enumerate(matching.pairs):
        if s[ell]:
            value |= (1 << i) | (1 << j)
    return BitString.from_int(value, matching.n)


def matT_index_table(matching: Matching) -> np.ndarray:  # noqa: N802
    """Integer encoding of M^T s for every s in [0, 2^m)."""
    table = np.zeros(1 << matching.m, dtype=np.int64)
    for ell, (i, j) in enumerate(matching.pairs):
        block = 1 << ell
        edge_mask = (1 << i) | (1 << j)
        table[block : 2 * block] = table[:block] | edge_mask
    return table


def count_matchings(n: int, m: int) -> int:
    """Number of m-edge matchings on n vertices: n! / (2^m m! (n-2m)!)."""
    _check_matching_size(n, m)
    return math.factorial(n) // (2**m * math.factorial(m) * math.factorial(n - 2 * m))


def enumerate_matchings(n: int, m: int, cap: Optional[int] = None) -> Iterator[Matching]:
    """Yield every m-edge matching on [n] once, in lexicographic pair order.

    Args:
        n: Vertex count
        m: Edge count
        cap: Maximum number of matchings allowed (default: configured cap)

    Raises:
        ResourceError: If count_matchings(n, m) exceeds the cap
    """
    from apm_lab.config import get_enumeration_cap

    total = count_matchings(n, m)
    cap = get_enumeration_cap() if cap is None else cap
    if total > cap:
        raise get_error("enumeration_cap", count=total, cap=cap)
    return _enumerate(n, m)


def _enumerate(n: int, m: int) -> Iterator[Matching]:
    used = [False] * n
    pairs: List[Tuple[int, int]] = []

    def extend(start: int, remaining: int) -> Iterator[Matching]:
        if remaining == 0:
            yield Matching(n, tuple(pairs))
            return
        for i in range(start, n):
            if used[i]:
                continue
            free_from_i = sum(1 for v in range(i, n) if not used[v])
            if free_from_i < 2 * remaining:
                return
            used[i] = True
            for j in range(i + 1, n):
                if used[j]:
                    continue
                used[j] = True
                pairs.append((i, j))
                yield from extend(i + 1, remaining - 1)
                pairs.pop()
                used[j] = False
            used[i] = False

    yield from extend(0, m)


def sample_matching(n: int, m: int, rng: SeededRng) -> Matching:
    """Uniform m-edge matching: partial Fisher-Yates over 2m vertices."""
    _check_matching_size(n, m)
    vertices = list(range(n))
    for k in range(2 * m):
        r = rng.integers(k, n)
        vertices[k], vertices[r] = vertices[r], vertices[k]
    return Matching.from_pairs(n, zip(vertices[0 : 2 * m : 2], vertices[1 : 2 * m : 2]))


def complete_matching(matching: Matching) -> Matching:
    """Extend to a perfect matching by pairing uncovered vertices in ascending order."""
    if matching.n % 2:
        raise get_error("odd_n", n=matching.n)
    covered = set(matching.covered())
    free = [v for v in range(matching.n) if v not in covered]
    extra = zip(free[0::2], free[1::2])
    return Matching.from_pairs(matching.n, list(matching.pairs) + list(extra))
