"""Named set families for closeness-to-uniform experiments.

A family turns a deficiency parameter c into a flat source: a set A with
|A| = 2^(n - c), x uniform on A. Flat sources are the worst case for
extractors (every min-entropy source is a convex combination of them), so
experiments only ever sample from sets.
"""

from abc import ABC, abstractmethod

__all__ = ["SetFamily"]


class SetFamily(ABC):
    """Abstract base class for set families."""

    @abstractmethod
    def get_name(self) -> str:
        """Get the registry name of this family.

        Returns:
            Family name (e.g., "first-bits-fixed")
        """
        pass

    @abstractmethod
    def describe(self) -> str:
        """Get a one-line human-readable description.

        Returns:
            Description string
        """
        pass

    @abstractmethod
    def build(self, n: int, c: int, rng):
        """Build the member A_c of this family.

        Args:
            n: Dimension of the cube
            c: Deficiency parameter
            rng: SeededRng stream for randomised families

        Returns:
            SubsetA

        Raises:
            DomainError: If c is out of range for this family
        """
        pass

    def ignores_c(self) -> bool:
        """Whether the family yields one fixed set regardless of c."""
        return False
