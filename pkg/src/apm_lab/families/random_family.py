"""Uniformly random sets of a prescribed size."""

from apm_lab.analysis import SubsetA, check_exact_n
from apm_lab.errors import get_error
from apm_lab.families import SetFamily


class RandomSubset(SetFamily):
    """A uniform random subset of size 2^(n - c), drawn from the run's stream."""

    def get_name(self) -> str:
        return "random"

    def describe(self) -> str:
        return "a seeded random subset of size 2^(n - c)"

    def build(self, n: int, c: int, rng) -> SubsetA:
        check_exact_n(n)
        if not 0 <= c <= n:
            raise get_error("out_of_range", what="c", value=c, allowed=f"[0, {n}]")
        members = rng.generator.choice(1 << n, size=1 << (n - c), replace=False)
        return SubsetA(n, members)
