"""A fixed set read from a file."""

from pathlib import Path
from typing import Optional

from apm_lab.analysis import SubsetA, check_exact_n, load_subset
from apm_lab.errors import get_error
from apm_lab.families import SetFamily


class FileSubset(SetFamily):
    """The set listed in a file, one bitstring per line; c is derived from |A|."""

    def __init__(self, path: Optional[str] = None):
        if not path:
            raise get_error(
                "bad_syntax",
                what="set family",
                text="file",
                hint="The file family needs a path (--set-file PATH).",
            )
        self.path = Path(path)
        self._subset: Optional[SubsetA] = None

    def get_name(self) -> str:
        return "file"

    def describe(self) -> str:
        return f"the set listed in {self.path}"

    def ignores_c(self) -> bool:
        return True

    def build(self, n: int, c: int, rng) -> SubsetA:
        check_exact_n(n)
        if self._subset is None:
            self._subset = load_subset(self.path)
        if self._subset.n != n:
            raise get_error(
                "length_mismatch", what="set file points", got=self._subset.n, expected=n
            )
        return self._subset
