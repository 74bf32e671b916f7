"""Fourier analysis on the Boolean cube.

Normalization convention: the forward transform carries the 1/2^n factor,

    F[s] = 2^-n * sum_y f(y) * (-1)^(y.s),      f = sum_s F[s] * chi_s,

and the l2 norm is the normalised one, ||f||^2 = 2^-n * sum_y f(y)^2, so
Parseval reads ||f||^2 = sum_s F[s]^2. Index y of a value vector encodes the
point whose coordinate k is bit k of y.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from apm_lab.core import SeededRng
from apm_lab.errors import get_error

MAX_DIMENSION = 26


def _check_vector(n: int, values: np.ndarray, what: str) -> None:
    if not 0 <= n <= MAX_DIMENSION:
        raise get_error("out_of_range", what="n", value=n, allowed=f"[0, {MAX_DIMENSION}]")
    if values.ndim != 1 or values.shape[0] != 1 << n:
        raise get_error("length_mismatch", what=what, got=values.size, expected=1 << n)


@dataclass(eq=False)
class CubeFunction:
    """Real-valued function on {0,1}^n as a vector of 2^n values."""

    n: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        _check_vector(self.n, self.values, "function values")


@dataclass(eq=False)
class Spectrum:
    """Fourier coefficients of a CubeFunction; coeffs[s] holds F[s]."""

    n: int
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.float64)
        _check_vector(self.n, self.coeffs, "spectrum")


def _butterfly(buffer: np.ndarray, n: int) -> None:
    """Unnormalised Walsh-Hadamard butterfly, in place."""
    for h in range(n):
        view = buffer.reshape(-1, 2, 1 << h)
        low = view[:, 0, :].copy()
        view[:, 0, :] += view[:, 1, :]
        np.subtract(low, view[:, 1, :], out=view[:, 1, :])


def fwht(f: CubeFunction, buffer: Optional[np.ndarray] = None) -> Spectrum:
    """Forward transform in O(n 2^n).

    Args:
        f: Function to transform
        buffer: Optional float64 array of length 2^n to work in; it becomes the
            returned spectrum's storage

    Returns:
        Spectrum of f
    """
    if buffer is None:
        buffer = f.values.copy()
    else:
        _check_vector(f.n, buffer, "buffer")
        np.copyto(buffer, f.values)
    _butterfly(buffer, f.n)
    buffer /= float(1 << f.n)
    return Spectrum(f.n, buffer)


def inverse_fwht(spectrum: Spectrum, buffer: Optional[np.ndarray] = None) -> CubeFunction:
    """Rebuild f = sum_s F[s] chi_s."""
    if buffer is None:
        buffer = spectrum.coeffs.copy()
    else:
        _check_vector(spectrum.n, buffer, "buffer")
        np.copyto(buffer, spectrum.coeffs)
    _butterfly(buffer, spectrum.n)
    return CubeFunction(spectrum.n, buffer)


def popcounts(n: int) -> np.ndarray:
    """Hamming weight of every index in [0, 2^n)."""
    weights = np.zeros(1 << n, dtype=np.int64)
    for bit in range(n):
        weights[1 << bit : 1 << (bit + 1)] = weights[: 1 << bit] + 1
    return weights


def character(n: int, v: int) -> CubeFunction:
    """chi_v(y) = (-1)^(y.v)."""
    parities = popcounts(n)[np.arange(1 << n) & v] & 1
    return CubeFunction(n, 1.0 - 2.0 * parities)


def norm_sq(f: CubeFunction) -> float:
    """Normalised squared l2 norm <f, f>."""
    return float(np.mean(f.values**2))


def parseval_norm(spectrum: Spectrum) -> float:
    return float(np.sum(spectrum.coeffs**2))


def parseval_gap(f: CubeFunction) -> float:
    """| ||f||^2 - sum_s F[s]^2 |; zero up to rounding."""
    return abs(norm_sq(f) - parseval_norm(fwht(f)))


def level_weight(spectrum: Spectrum, k: int) -> float:
    """Sum of F[s]^2 over indices s of Hamming weight exactly k."""
    if not 0 <= k <= spectrum.n:
        raise get_error("out_of_range", what="k", value=k, allowed=f"[0, {spectrum.n}]")
    mask = popcounts(spectrum.n) == k
    return float(np.sum(spectrum.coeffs[mask] ** 2))


def weight_profile(spectrum: Spectrum) -> np.ndarray:
    """All level weights at once; entry k is level_weight(spectrum, k)."""
    return np.bincount(
        popcounts(spectrum.n), weights=spectrum.coeffs**2, minlength=spectrum.n + 1
    )


def kkl_margin(f: CubeFunction, delta: float) -> Tuple[float, float]:
    """Both sides of the KKL inequality for a {-1, 0, 1}-valued f.

    Returns:
        (lhs, rhs) with lhs = sum_s delta^|s| F[s]^2 and
        rhs = (|A| / 2^n)^(2 / (1 + delta)), A the support of f
    """
    if not 0.0 <= delta <= 1.0:
        raise get_error("out_of_range", what="delta", value=delta, allowed="[0, 1]")
    if not np.all(np.isin(f.values, (-1.0, 0.0, 1.0))):
        raise get_error(
            "out_of_range", what="function values", value="non-ternary", allowed="{-1, 0, 1}"
        )
    spectrum = fwht(f)
    profile = weight_profile(spectrum)
    lhs = float(np.sum(profile * np.power(delta, np.arange(f.n + 1, dtype=np.float64))))
    density = np.count_nonzero(f.values) / float(1 << f.n)
    rhs = float(density ** (2.0 / (1.0 + delta)))
    return lhs, rhs


def random_ternary_function(n: int, rng: SeededRng) -> CubeFunction:
    """Uniformly random {-1, 0, 1}-valued function."""
    values = rng.generator.integers(-1, 2, size=1 << n).astype(np.float64)
    return CubeFunction(n, values)
