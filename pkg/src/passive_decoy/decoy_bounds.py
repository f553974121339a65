"""Single-photon yield and error-rate bounds from click / no-click statistics.

The no-click and total statistics act as two decoy settings. Both bounds
use only the n <= 2 probabilities together with the observed gains and
error-weighted gains.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .channel import ObservedRates
from .errors import CertificateError
from .photon_stats import DETERMINANT_FLOOR, LowOrderStats


def _clamp01(x: float) -> float:
    return min(max(x, 0.0), 1.0)


@dataclass(frozen=True)
class DecoyBounds:
    y0_lower: float
    y0_upper: float
    y1_lower: float
    e1_upper: float
    valid: bool = True
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def vacuous(self) -> bool:
        """True when no positive single-photon yield could be certified."""
        return self.y1_lower <= 0.0


def _require(det: float, what: str) -> None:
    if not abs(det) > DETERMINANT_FLOOR:
        raise CertificateError(f"{what} determinant {det:.3e} vanishes; statistics are proportional")


def y0_bounds(stats: LowOrderStats, obs: ObservedRates, raw: dict | None = None) -> tuple[float, float]:
    n0, n1, _ = stats.noclick
    t0, t1, _ = stats.total
    if n0 <= 0 or t0 <= 0:
        raise CertificateError("vacuum probabilities must be positive to bound the background")
    upper = min(2.0 * obs.qe_noclick / n0, 2.0 * obs.qe_total / t0)
    d0 = t1 * n0 - n1 * t0
    _require(d0, "background lower-bound")
    lower = (t1 * obs.q_noclick - n1 * obs.q_total) / d0
    if raw is not None:
        raw.update(y0_lower=lower, y0_upper=upper)
    upper = _clamp01(upper)
    return min(_clamp01(lower), upper), upper


def y1_lower(stats: LowOrderStats, obs: ObservedRates, y0_upper: float, raw: dict | None = None) -> float:
    n0, n1, n2 = stats.noclick
    t0, t1, t2 = stats.total
    d1 = n2 * t1 - t2 * n1
    _require(d1, "single-photon yield")
    value = (n2 * obs.q_total - t2 * obs.q_noclick - (n2 * t0 - t2 * n0) * y0_upper) / d1
    if raw is not None:
        raw["y1_lower"] = value
    return _clamp01(value)


def e1_upper(
    stats: LowOrderStats,
    obs: ObservedRates,
    y0_lower: float,
    y1_lower: float,
    e_0: float = 0.5,
    raw: dict | None = None,
) -> float:
    """Smallest of the three single-photon error-rate bounds; 1 when y1_lower is 0."""
    n0, n1, _ = stats.noclick
    t0, t1, _ = stats.total
    c0, c1, _ = stats.click
    de = n0 * t1 - t0 * n1
    _require(de, "single-photon error")
    if y1_lower <= 0.0:
        if raw is not None:
            raw["e1_upper"] = math.inf
        return 1.0

    def ratio(num: float, den: float) -> float:
        return num / den if den > 0 else math.inf

    candidates = (
        ratio(obs.qe_noclick - n0 * y0_lower * e_0, n1 * y1_lower),
        ratio(obs.qe_click - c0 * y0_lower * e_0, c1 * y1_lower),
        (n0 * obs.qe_total - t0 * obs.qe_noclick) / (de * y1_lower),
    )
    value = min(candidates)
    if raw is not None:
        raw["e1_upper"] = value
        raw["e1_candidates"] = candidates
    return _clamp01(value)


def estimate(stats: LowOrderStats, obs: ObservedRates, e_0: float = 0.5, valid: bool = True) -> DecoyBounds:
    """Run the three bounds in order and collect them, with raw values for diagnostics."""
    raw: dict = {}
    lo, hi = y0_bounds(stats, obs, raw)
    y1 = y1_lower(stats, obs, hi, raw)
    e1 = e1_upper(stats, obs, lo, y1, e_0, raw)
    return DecoyBounds(y0_lower=lo, y0_upper=hi, y1_lower=y1, e1_upper=e1, valid=valid, raw=raw)

