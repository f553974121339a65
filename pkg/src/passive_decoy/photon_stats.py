"""Photon-number statistics of two phase-randomized coherent pulses after a beam splitter.

Mode ``a`` is sent to the receiver and mode ``b`` is watched by a threshold
detector. For a fixed relative phase theta the two output modes are
independent Poissonians with intensities

    a(theta) = omega + xi * cos(theta),    b(theta) = upsilon - a(theta),

so every statistic below is a phase average of products of Poisson terms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateBranchError, DomainError, TruncationError
from .numerics import QuadratureSpec, bessel_i, phase_average, poisson_pmf

DEFAULT_N_MAX = 60
DEFAULT_TAIL_TOL = 1e-10
CLAMP_TOL = 1e-14
DETERMINANT_FLOOR = 1e-18
# photon numbers checked for the monotone-ratio conditions of the estimator
RATIO_CHECK_MAX = 12


@dataclass(frozen=True)
class SourceConfig:
    """Two pulse intensities and the beam-splitter transmittance."""

    mu1: float
    mu2: float
    t: float = 0.5

    def __post_init__(self) -> None:
        for name in ("mu1", "mu2", "t"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value}")
        if self.mu1 < 0 or self.mu2 < 0:
            raise DomainError(f"intensities must be non-negative, got mu1={self.mu1}, mu2={self.mu2}")
        if not 0.0 <= self.t <= 1.0:
            raise DomainError(f"transmittance t must lie in [0, 1], got {self.t}")


@dataclass(frozen=True)
class InterferenceParams:
    upsilon: float
    xi: float
    omega: float

    def gamma(self, theta):
        """Fraction of the total intensity leaving in mode a at relative phase theta."""
        if self.upsilon == 0:
            raise DomainError("gamma is undefined for vacuum input")
        return (self.omega + self.xi * np.cos(theta)) / self.upsilon

    def intensity_a(self, theta) -> np.ndarray:
        a = self.omega + self.xi * np.cos(theta)
        return np.clip(a, 0.0, self.upsilon)


def derive(cfg: SourceConfig) -> InterferenceParams:
    upsilon = cfg.mu1 + cfg.mu2
    xi = 2.0 * math.sqrt(cfg.mu1 * cfg.mu2 * (1.0 - cfg.t) * cfg.t)
    omega = cfg.mu1 * cfg.t + cfg.mu2 * (1.0 - cfg.t)
    return InterferenceParams(upsilon=upsilon, xi=xi, omega=omega)


@dataclass(frozen=True)
class PhotonDistribution:
    """Photon-number probabilities for n = 0..n_max plus the mass lost beyond n_max."""

    probs: np.ndarray
    n_max: int
    tail_mass: float
    tail_tol: float = field(default=DEFAULT_TAIL_TOL, repr=False)

    def __post_init__(self) -> None:
        probs = np.array(self.probs, dtype=float)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        if len(probs) != self.n_max + 1:
            raise ValueError("probs must hold n_max + 1 entries")
        if np.any(probs < 0) or np.any(probs > 1 + CLAMP_TOL):
            raise ValueError("distribution entries must lie in [0, 1]")
        if self.tail_mass < -1e-12 or self.tail_mass > self.tail_tol:
            raise TruncationError(
                f"tail mass {self.tail_mass:.3e} outside [-1e-12, {self.tail_tol:.1e}] at n_max={self.n_max}"
            )

    @classmethod
    def from_probs(cls, probs, tail_tol: float = DEFAULT_TAIL_TOL) -> "PhotonDistribution":
        probs = np.asarray(probs, dtype=float)
        return cls(probs=probs, n_max=len(probs) - 1, tail_mass=1.0 - math.fsum(probs), tail_tol=tail_tol)

    def mean(self) -> float:
        return float(np.dot(np.arange(self.n_max + 1), self.probs))

    def __len__(self) -> int:
        return self.n_max + 1


def _poisson_rows(intensity: np.ndarray, n_max: int) -> np.ndarray:
    """Table of Poisson(intensity) probabilities, shape (n_max + 1, nodes)."""
    n = np.arange(n_max + 1)[:, None]
    lgam = np.array([math.lgamma(k + 1) for k in range(n_max + 1)])[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = n * np.log(intensity)[None, :] - intensity[None, :] - lgam
    logs[0] = -intensity
    return np.where(np.isfinite(logs), np.exp(logs), 0.0)


def joint_prob(cfg: SourceConfig, n: int, m: int, quad: QuadratureSpec | None = None) -> float:
    """Probability of n photons in mode a and m photons in mode b."""
    p = derive(cfg)

    def integrand(theta):
        a = p.intensity_a(theta)
        return poisson_pmf(a, n) * poisson_pmf(p.upsilon - a, m)

    return max(phase_average(integrand, quad), 0.0)


def total_prob(cfg: SourceConfig, n: int, quad: QuadratureSpec | None = None) -> float:
    """Marginal probability of n photons in mode a, ignoring the detector."""
    p = derive(cfg)
    return phase_average(lambda theta: poisson_pmf(p.intensity_a(theta), n), quad)


def noclick_prob(cfg: SourceConfig, n: int, quad: QuadratureSpec | None = None) -> float:
    """Joint probability of n photons in mode a and no click on mode b."""
    return joint_prob(cfg, n, 0, quad)


def _clamp_difference(value: float) -> float:
    if value < 0.0:
        if value < -CLAMP_TOL:
            raise ArithmeticError(f"click probability {value:.3e} is negative beyond rounding")
        return 0.0
    return value


def click_prob(cfg: SourceConfig, n: int, quad: QuadratureSpec | None = None) -> float:
    """Joint probability of n photons in mode a and a click on mode b."""
    return _clamp_difference(total_prob(cfg, n, quad) - noclick_prob(cfg, n, quad))


def noclick_total(cfg: SourceConfig) -> float:
    """Probability that the monitoring detector stays silent."""
    p = derive(cfg)
    return math.exp(-(cfg.mu1 * (1.0 - cfg.t) + cfg.mu2 * cfg.t)) * bessel_i(0, p.xi)


@dataclass(frozen=True)
class LowOrderStats:
    """p^noclick_n and p^total_n for n = 0, 1, 2; click values follow by subtraction."""

    noclick: tuple[float, float, float]
    total: tuple[float, float, float]

    @property
    def click(self) -> tuple[float, float, float]:
        return tuple(_clamp_difference(t - c) for t, c in zip(self.total, self.noclick))


def low_order_closed_forms(cfg: SourceConfig) -> LowOrderStats:
    p = derive(cfg)
    w, xi = p.omega, p.xi
    ev = math.exp(-p.upsilon)
    noclick = (ev, w * ev, (2.0 * w * w + xi * xi) * ev / 4.0)
    i0, i1, i2 = (bessel_i(k, xi) for k in range(3))
    ew = math.exp(-w)
    total = (
        i0 * ew,
        (w * i0 - xi * i1) * ew,
        (w * w * i0 + (1.0 - 2.0 * w) * xi * i1 + xi * xi * i2) * ew / 2.0,
    )
    return LowOrderStats(noclick=noclick, total=total)


def branch_vectors(
    cfg: SourceConfig, n_max: int = DEFAULT_N_MAX, quad: QuadratureSpec | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(p_total, p_noclick, p_click) for n = 0..n_max.

    Quadrature supplies every entry; the closed forms overwrite n <= 2.
    """
    quad = quad or QuadratureSpec()
    p = derive(cfg)
    a = p.intensity_a(quad.nodes())
    rows = _poisson_rows(a, n_max)
    total = rows.mean(axis=1)
    noclick = (rows * np.exp(-(p.upsilon - a))[None, :]).mean(axis=1)
    low = low_order_closed_forms(cfg)
    k = min(n_max, 2) + 1
    total[:k] = low.total[:k]
    noclick[:k] = low.noclick[:k]
    diff = total - noclick
    if np.any(diff < -CLAMP_TOL):
        raise ArithmeticError("click probabilities negative beyond rounding")
    return total, noclick, np.maximum(diff, 0.0)


def total_distribution(
    cfg: SourceConfig,
    n_max: int = DEFAULT_N_MAX,
    quad: QuadratureSpec | None = None,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> PhotonDistribution:
    total, _, _ = branch_vectors(cfg, n_max, quad)
    return PhotonDistribution.from_probs(np.minimum(total, 1.0), tail_tol)


def conditional_distributions(
    cfg: SourceConfig,
    n_max: int = DEFAULT_N_MAX,
    quad: QuadratureSpec | None = None,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> tuple[PhotonDistribution, PhotonDistribution]:
    """Mode-a statistics conditioned on a click and on no click, in that order."""
    if n_max < 2:
        raise DomainError(f"n_max must be at least 2, got {n_max}")
    f = noclick_total(cfg)
    if f >= 1.0:
        raise DegenerateBranchError("monitoring detector never clicks (F = 1); click branch undefined")
    if f <= 0.0:
        raise DegenerateBranchError("monitoring detector always clicks (F = 0); no-click branch undefined")
    _, noclick, click = branch_vectors(cfg, n_max, quad)
    r_click = np.minimum(click / (1.0 - f), 1.0)
    r_noclick = np.minimum(noclick / f, 1.0)
    return (
        PhotonDistribution.from_probs(r_click, tail_tol),
        PhotonDistribution.from_probs(r_noclick, tail_tol),
    )


@dataclass(frozen=True)
class CertificateReport:
    """Determinants the decoy estimator divides by, plus the ordering conditions it relies on.

    ``d1`` is the Y1 denominator, ``d0`` the Y0 lower-bound denominator and
    ``de`` the third e1 denominator (algebraically equal to ``d0``).
    ``y0_coeff`` multiplies the Y0 upper bound inside the Y1 bound.
    ``ratios_ok`` records that the no-click statistics are the brighter
    ones: p^noclick_n / p^total_n is non-decreasing in n.
    """

    d1: float
    d0: float
    de: float
    y0_coeff: float
    ratios_ok: bool

    @property
    def y0_coeff_sign(self) -> int:
        return int(np.sign(self.y0_coeff))

    @property
    def valid(self) -> bool:
        return abs(self.d1) > DETERMINANT_FLOOR and abs(self.d0) > DETERMINANT_FLOOR and self.ratios_ok


def determinants(stats: LowOrderStats, degenerate: bool = False) -> tuple[float, float, float, float]:
    """(d1, d0, de, y0_coeff) from the six low-order probabilities."""
    if degenerate:
        # proportional statistics: every determinant vanishes identically
        return 0.0, 0.0, 0.0, 0.0
    n0, n1, n2 = stats.noclick
    t0, t1, t2 = stats.total
    d1 = n2 * t1 - t2 * n1
    d0 = t1 * n0 - n1 * t0
    de = n0 * t1 - t0 * n1
    return d1, d0, de, n2 * t0 - t2 * n0


def estimation_certificate(cfg: SourceConfig, quad: QuadratureSpec | None = None) -> CertificateReport:
    stats = low_order_closed_forms(cfg)
    p = derive(cfg)
    d1, d0, de, y0c = determinants(stats, degenerate=p.xi == 0.0)
    ratios_ok = False
    if p.xi > 0.0:
        total, noclick, _ = branch_vectors(cfg, RATIO_CHECK_MAX, quad)
        # cross-multiplied form of noclick_n/total_n <= noclick_{n+1}/total_{n+1}
        lhs = noclick[:-1] * total[1:]
        rhs = noclick[1:] * total[:-1]
        ratios_ok = bool(np.all(lhs <= rhs * (1 + 1e-12) + 1e-300))
    return CertificateReport(d1=d1, d0=d0, de=de, y0_coeff=y0c, ratios_ok=ratios_ok)
