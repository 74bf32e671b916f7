"""apm-lab - alpha-Partial Matching simulation and verification lab."""

__version__ = "0.1.0"
