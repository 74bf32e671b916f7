"""Custom exceptions and error handling for apm-lab."""

from __future__ import annotations

from typing import Dict, Tuple, Type

from rich.console import Console

console = Console(stderr=True)


class ApmLabError(Exception):
    """Base exception for apm-lab."""

    exit_code = 1

    def __init__(self, message: str, hint: str = ""):
        self.message = message
        self.hint = hint
        super().__init__(message)

    def display(self):
        """Display the error message with formatting."""
        console.print(f"\n[bold red]Error:[/bold red] {self.message}")
        if self.hint:
            console.print(f"[dim]{self.hint}[/dim]")
        console.print()


class ValidationError(ApmLabError):
    """Invalid input or parameter combination."""

    exit_code = 2


class DimensionError(ValidationError):
    """Operands have incompatible lengths."""

    pass


class DomainError(ValidationError):
    """A parameter lies outside the domain of the operation."""

    pass


class ResourceError(ApmLabError):
    """An exact computation would exceed the configured limits."""

    exit_code = 3


class OutputError(ApmLabError):
    """Reading an input file or writing a report failed."""

    exit_code = 4


# Error message templates: kind -> (class, message, hint)
ERROR_MESSAGES: Dict[str, Tuple[Type[ApmLabError], str, str]] = {
    "length_mismatch": (
        DimensionError,
        "Length mismatch: {what} has length {got}, expected {expected}.",
        "",
    ),
    "matching_too_large": (
        DomainError,
        "A matching with {m} edges does not fit on {n} vertices.",
        "The number of edges m must satisfy 0 <= 2m <= n.",
    ),
    "odd_n": (
        DomainError,
        "n = {n} is odd, but this operation needs a perfect matching on [n].",
        "Use an even n; inputs are never padded.",
    ),
    "not_perfect": (
        DomainError,
        "The matching covers {covered} of {n} vertices; a perfect matching is required.",
        "Use complete_matching() to extend a partial matching.",
    ),
    "odd_k": (
        DomainError,
        "k = {k} is odd; g(k) is only defined for even k.",
        "",
    ),
    "out_of_range": (
        DomainError,
        "{what} = {value} is outside {allowed}.",
        "",
    ),
    "enumeration_cap": (
        ResourceError,
        "Exact enumeration needs {count:,} matchings, above the cap of {cap:,}.",
        "Switch to Monte Carlo mode (--mode mc) or raise the cap with "
        "'apm-lab configure --cap N'.",
    ),
    "exact_infeasible": (
        ResourceError,
        "Exact evaluation is infeasible for n = {n} (limit {limit}).",
        "Reduce n or use Monte Carlo mode.",
    ),
    "bad_syntax": (
        ValidationError,
        "Could not parse {what}: {text!r}",
        "{hint}",
    ),
    "invalid_stream": (
        ValidationError,
        "Inconsistent event stream: {reason}",
        "Each bit may appear once; edges must be disjoint; promise bits must name a streamed edge.",
    ),
    "file_not_found": (
        OutputError,
        "File not found: {path}",
        "Please check the path and try again.",
    ),
    "write_failed": (
        OutputError,
        "Could not write report to {path}: {reason}",
        "",
    ),
}


def get_error(error_type: str, **kwargs) -> ApmLabError:
    """Get a formatted error with message and hint.

    Args:
        error_type: Key from ERROR_MESSAGES
        **kwargs: Format arguments for the message and hint

    Returns:
        Instance of the error class registered for the key
    """
    if error_type not in ERROR_MESSAGES:
        return ApmLabError(f"Unknown error: {error_type}")

    error_class, message, hint = ERROR_MESSAGES[error_type]
    kwargs.setdefault("hint", "")
    return error_class(message.format(**kwargs), hint.format(**kwargs))


def handle_error(error: Exception) -> int:
    """Display an error and map it to a process exit code.

    Args:
        error: The exception that occurred

    Returns:
        Exit code (2 validation, 3 resource cap, 4 I/O, 1 anything else)
    """
    if isinstance(error, ApmLabError):
        error.display()
        return error.exit_code

    if isinstance(error, OSError):
        OutputError(str(error)).display()
        return OutputError.exit_code

    console.print(f"\n[bold red]Error:[/bold red] {str(error)}")
    console.print()
    return 1
