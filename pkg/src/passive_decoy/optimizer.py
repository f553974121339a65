"""Intensity optimization, cutoff search and distance scans."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .channel import ChannelParams, transmittance
from .errors import CertificateError, DomainError
from .keyrate import KeyRatePoint, ProtocolParams, active_asymptotic_raw, passive_rate
from .photon_stats import SourceConfig

# log10 step equivalent to a relative intensity change of 1e-4
_LOG_XATOL = math.log10(1.0 + 1e-4)
_MAX_BRACKET_KM = 5000.0


class NoKeyError(ValueError):
    """The optimized key rate is already zero at the start of a cutoff search."""


@dataclass(frozen=True)
class SearchDomain:
    mu1_min: float = 1e-6
    mu1_max: float = 1.0
    mu2_min: float = 1e-3
    mu2_max: float = 2.0
    grid: int = 17
    t: float = 0.5
    optimize_t: bool = False
    t_min: float = 0.05
    t_max: float = 0.95
    mu_active_min: float = 1e-4
    mu_active_max: float = 2.0

    def __post_init__(self) -> None:
        if not (0 < self.mu1_min < self.mu1_max and 0 < self.mu2_min < self.mu2_max):
            raise DomainError("search bounds must satisfy 0 < min < max for both intensities")
        if self.grid < 2:
            raise DomainError("grid needs at least two points per axis")


@dataclass(frozen=True)
class OptimizedPoint:
    mu1: float
    mu2: float
    t: float
    rate: float
    point: KeyRatePoint


def _evaluate(mu1: float, mu2: float, t: float, ch, proto, distance_km) -> KeyRatePoint | None:
    try:
        return passive_rate(SourceConfig(mu1, mu2, t), ch, proto, distance_km)
    except (CertificateError, ArithmeticError):
        return None


def optimize_intensities(
    ch: ChannelParams = ChannelParams(),
    proto: ProtocolParams = ProtocolParams(),
    distance_km: float = 0.0,
    domain: SearchDomain = SearchDomain(),
) -> OptimizedPoint:
    """Maximize the passive key rate over (mu1, mu2) and optionally t.

    A logarithmic grid picks the starting point; Nelder-Mead in log-intensity
    space then refines it. Where no positive rate exists the search climbs
    the largest (negative) branch rate instead, so the positivity frontier
    is still located precisely.
    """
    lo = np.log10([domain.mu1_min, domain.mu2_min])
    hi = np.log10([domain.mu1_max, domain.mu2_max])
    # a 50:50 splitter is symmetric under exchanging the pulses, so only mu1 <= mu2 is searched
    ordered = domain.t == 0.5 and not domain.optimize_t
    best_x, best_pt, best_score = None, None, -math.inf
    for x1 in np.linspace(lo[0], hi[0], domain.grid):
        for x2 in np.linspace(lo[1], hi[1], domain.grid):
            if ordered and x1 > x2:
                continue
            pt = _evaluate(10**x1, 10**x2, domain.t, ch, proto, distance_km)
            if pt is not None and pt.score > best_score:
                best_x, best_pt, best_score = (x1, x2), pt, pt.score
    if best_pt is None:
        raise CertificateError("no valid intensity pair in the search domain")

    scale = abs(best_score) or 1.0
    bounds = [(lo[0], hi[0]), (lo[1], hi[1])]
    start = list(best_x)
    if domain.optimize_t:
        bounds.append((domain.t_min, domain.t_max))
        start.append(domain.t)
    cache: dict[tuple, KeyRatePoint | None] = {}

    def objective(x):
        x = tuple(float(v) for v in x)
        if ordered and x[0] > x[1]:
            return math.inf
        t = x[2] if domain.optimize_t else domain.t
        pt = _evaluate(10 ** x[0], 10 ** x[1], t, ch, proto, distance_km)
        cache[x] = pt
        return math.inf if pt is None else -pt.score / scale

    res = minimize(
        objective,
        np.array(start),
        method="Nelder-Mead",
        bounds=bounds,
        options={"xatol": _LOG_XATOL, "fatol": 1e-12, "maxiter": 2000, "maxfev": 4000},
    )
    refined = cache.get(tuple(float(v) for v in res.x))
    if refined is None:
        refined = _evaluate(
            10 ** res.x[0], 10 ** res.x[1], res.x[2] if domain.optimize_t else domain.t, ch, proto, distance_km
        )
    pt = refined if refined is not None and refined.score >= best_score else best_pt
    return OptimizedPoint(mu1=pt.source.mu1, mu2=pt.source.mu2, t=pt.source.t, rate=pt.rate_total, point=pt)


def optimize_active(
    ch: ChannelParams = ChannelParams(),
    proto: ProtocolParams = ProtocolParams(),
    distance_km: float = 0.0,
    domain: SearchDomain = SearchDomain(),
) -> tuple[float, float]:
    """(mu_opt, rate) for the active benchmark; rate is clamped at zero."""
    grid = np.linspace(domain.mu_active_min, domain.mu_active_max, 41)
    raws = [active_asymptotic_raw(m, ch, proto, distance_km) for m in grid]
    i = int(np.argmax(raws))
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(
        lambda m: -active_asymptotic_raw(m, ch, proto, distance_km),
        bounds=(a, b),
        method="bounded",
        options={"xatol": 1e-7},
    )
    mu, raw = (res.x, -res.fun) if -res.fun >= raws[i] else (grid[i], raws[i])
    return float(mu), max(float(raw), 0.0)


def optimized_rate(ch, proto, distance_km, mode: str, domain: SearchDomain = SearchDomain()) -> float:
    if mode == "passive":
        return optimize_intensities(ch, proto, distance_km, domain).rate
    if mode == "active":
        return optimize_active(ch, proto, distance_km, domain)[1]
    raise DomainError(f"mode must be 'passive' or 'active', got {mode!r}")


def cutoff_distance(
    ch: ChannelParams = ChannelParams(),
    proto: ProtocolParams = ProtocolParams(),
    mode: str = "passive",
    domain: SearchDomain = SearchDomain(),
    resolution_km: float = 0.01,
) -> float:
    """Largest distance (to ``resolution_km``) with a positive optimized rate."""

    def positive(distance):
        return optimized_rate(ch, proto, distance, mode, domain) > 0.0

    if not positive(0.0):
        raise NoKeyError(f"{mode} key rate is zero already at 0 km")
    lo, hi = 0.0, 10.0
    while positive(hi):
        lo, hi = hi, hi * 2.0
        if hi > _MAX_BRACKET_KM:
            raise NoKeyError(f"{mode} key rate stays positive beyond {_MAX_BRACKET_KM} km")
    while hi - lo > resolution_km:
        mid = 0.5 * (lo + hi)
        if positive(mid):
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class ScanRow:
    distance_km: float
    eta: float
    passive: OptimizedPoint | None
    mu_active: float | None
    r_active: float | None

    @property
    def r_passive(self) -> float | None:
        return None if self.passive is None else self.passive.rate


def scan_distances(l_min: float, l_max: float, step: float) -> list[float]:
    if not (0 <= l_min < l_max) or not step > 0:
        raise DomainError("scan needs 0 <= l_min < l_max and step > 0")
    count = int(math.floor((l_max - l_min) / step + 1e-9)) + 1
    return [l_min + k * step for k in range(count)]


def scan(
    ch: ChannelParams = ChannelParams(),
    proto: ProtocolParams = ProtocolParams(),
    l_min: float = 0.0,
    l_max: float = 150.0,
    step: float = 5.0,
    mode: str = "both",
    domain: SearchDomain = SearchDomain(),
    fixed: SourceConfig | None = None,
    jobs: int = 1,
) -> list[ScanRow]:
    """One row per distance, ordered by distance whatever ``jobs`` is.

    With ``fixed`` the passive column uses those intensities at every
    distance instead of re-optimizing.
    """
    if mode not in ("both", "passive", "active"):
        raise DomainError(f"mode must be both, passive or active, got {mode!r}")

    args = [(d, ch, proto, mode, domain, fixed) for d in scan_distances(l_min, l_max, step)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_scan_row, args))
    return [_scan_row(a) for a in args]


def _scan_row(args) -> ScanRow:
    distance, ch, proto, mode, domain, fixed = args
    passive = None
    if mode in ("both", "passive"):
        if fixed is None:
            passive = optimize_intensities(ch, proto, distance, domain)
        else:
            pt = passive_rate(fixed, ch, proto, distance)
            passive = OptimizedPoint(fixed.mu1, fixed.mu2, fixed.t, pt.rate_total, pt)
    mu_a = r_a = None
    if mode in ("both", "active"):
        mu_a, r_a = optimize_active(ch, proto, distance, domain)
    return ScanRow(distance, transmittance(ch, distance), passive, mu_a, r_a)
