"""Special functions and quadrature shared by the rest of the package.

Everything here is a pure function; nothing caches or mutates state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError

BESSEL_MAX_ARG = 700.0
# above this argument the Hankel expansion is used for low orders
_ASYMPTOTIC_THRESHOLD = 15.0
DEFAULT_QUAD_POINTS = 512


@dataclass(frozen=True)
class QuadratureSpec:
    """Equispaced nodes on one full period [0, 2*pi)."""

    points: int = DEFAULT_QUAD_POINTS

    def __post_init__(self) -> None:
        if int(self.points) != self.points or self.points < 16:
            raise DomainError(f"quadrature needs an integer >= 16 points, got {self.points}")
        if self.points % 2:
            raise DomainError(f"quadrature point count must be even, got {self.points}")

    def nodes(self) -> np.ndarray:
        return np.arange(self.points) * (2.0 * math.pi / self.points)

    def exact_degree(self) -> int:
        """Largest trigonometric degree integrated exactly."""
        return self.points // 2 - 1


def _bessel_series(order: int, z: float) -> float:
    # all terms are positive, so summation never cancels
    half = 0.5 * z
    log_first = order * math.log(half) - math.lgamma(order + 1)
    term = math.exp(log_first)
    total = term
    q = half * half
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + order))
        total += term
        if term < 1e-17 * total:
            return total


def _bessel_asymptotic(order: int, z: float) -> float:
    mu = 4.0 * order * order
    term = 1.0
    total = 1.0
    k = 0
    while True:
        k += 1
        nxt = -term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * z)
        if abs(nxt) >= abs(term):
            break
        term = nxt
        total += term
        if abs(term) < 1e-17 * abs(total):
            break
    return math.exp(z) / math.sqrt(2.0 * math.pi * z) * total


def bessel_i(order: int, z: float) -> float:
    """Modified Bessel function of the first kind, I_order(z), for real z >= 0.

    Uses the ascending series (exact up to rounding since every term is
    positive) for small arguments and the large-argument Hankel expansion
    for z > 15 when the order is small enough for it to converge to full
    precision.
    """
    if order < 0 or int(order) != order:
        raise DomainError(f"order must be a non-negative integer, got {order}")
    z = float(z)
    if not (0.0 <= z <= BESSEL_MAX_ARG):
        raise DomainError(f"argument must lie in [0, {BESSEL_MAX_ARG}], got {z}")
    order = int(order)
    if z == 0.0:
        return 1.0 if order == 0 else 0.0
    if z > _ASYMPTOTIC_THRESHOLD and 4 * order * order < z:
        return _bessel_asymptotic(order, z)
    return _bessel_series(order, z)


def bessel_i0_minus_one(z: float) -> float:
    """I_0(z) - 1 without the cancellation of forming I_0 first."""
    z = float(z)
    if z < 0.0:
        raise DomainError(f"argument must be non-negative, got {z}")
    if z > 1.0:
        return bessel_i(0, z) - 1.0
    q = 0.25 * z * z
    term = q
    total = q
    k = 1
    while term > 1e-18 * total:
        k += 1
        term *= q / (k * k)
        total += term
    return total


def phase_average(integrand: Callable[[np.ndarray], np.ndarray], spec: QuadratureSpec | None = None):
    """Average a 2*pi-periodic integrand over one period.

    ``integrand`` receives the node array and may return an array whose last
    axis runs over the nodes; the mean is taken over that axis. The
    equispaced trapezoid rule is exact for trigonometric polynomials of
    degree below ``points/2`` and spectrally accurate otherwise.
    """
    spec = spec or QuadratureSpec()
    values = np.asarray(integrand(spec.nodes()), dtype=float)
    if values.ndim == 0:
        return float(values)
    result = values.mean(axis=-1)
    return float(result) if np.ndim(result) == 0 else result


def binary_entropy(x: float) -> float:
    """Binary Shannon entropy in bits, with H(0) = H(1) = 0."""
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"binary entropy needs a probability, got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def poisson_pmf(mean, n: int):
    """Poisson probability of ``n`` events; ``mean`` may be a scalar or an array."""
    if n < 0 or int(n) != n:
        raise DomainError(f"photon number must be a non-negative integer, got {n}")
    arr = np.asarray(mean, dtype=float)
    if np.any(arr < 0):
        raise DomainError("Poisson mean must be non-negative")
    with np.errstate(divide="ignore"):
        log_mean = np.log(arr)
    if n == 0:
        out = np.exp(-arr)
    else:
        out = np.where(arr > 0, np.exp(n * log_mean - arr - math.lgamma(n + 1)), 0.0)
    return float(out) if out.ndim == 0 else out
