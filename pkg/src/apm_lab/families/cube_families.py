"""Deterministic families defined by linear constraints on x."""

import numpy as np

from apm_lab.analysis import SubsetA, check_exact_n
from apm_lab.errors import get_error
from apm_lab.families import SetFamily


def _check_c(n: int, c: int, limit: int) -> None:
    if not 0 <= c <= limit:
        raise get_error("out_of_range", what="c", value=c, allowed=f"[0, {limit}] for n = {n}")


class FullCube(SetFamily):
    """A = {0,1}^n for every c."""

    def get_name(self) -> str:
        return "full"

    def describe(self) -> str:
        return "the whole cube (z is exactly uniform)"

    def build(self, n: int, c: int, rng) -> SubsetA:
        check_exact_n(n)
        return SubsetA.full(n)


class PrefixParity(SetFamily):
    """A = {x : x_{2k} xor x_{2k+1} = 0 for every k < c}."""

    def get_name(self) -> str:
        return "prefix-parity"

    def describe(self) -> str:
        return "c parity constraints on the leading vertex pairs"

    def build(self, n: int, c: int, rng) -> SubsetA:
        check_exact_n(n)
        _check_c(n, c, n // 2)

        def keep(points: np.ndarray) -> np.ndarray:
            ok = np.ones(points.size, dtype=bool)
            for k in range(c):
                ok &= (((points >> (2 * k)) ^ (points >> (2 * k + 1))) & 1) == 0
            return ok

        return SubsetA.from_predicate(n, keep)


class FirstBitsFixed(SetFamily):
    """A = {x : x_0 = ... = x_{c-1} = 0}; nested in c."""

    def get_name(self) -> str:
        return "first-bits-fixed"

    def describe(self) -> str:
        return "the first c bits fixed to zero"

    def build(self, n: int, c: int, rng) -> SubsetA:
        check_exact_n(n)
        _check_c(n, c, n)
        # Points whose low c bits are zero
        return SubsetA(n, np.arange(1 << (n - c), dtype=np.int64) << c)
