"""Asymptotic secret key rates for the passive scheme and the active benchmark."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .channel import ChannelParams, ObservedRates, observed_active, observed_passive, transmittance
from .decoy_bounds import DecoyBounds, estimate
from .errors import CertificateError, DomainError
from .numerics import binary_entropy
from .photon_stats import DETERMINANT_FLOOR, SourceConfig, derive, determinants, low_order_closed_forms


@dataclass(frozen=True)
class ProtocolParams:
    q_eff: float = 1.0
    f_ec: float = 1.22

    def __post_init__(self) -> None:
        if not 0.0 < self.q_eff <= 1.0:
            raise DomainError(f"q_eff must lie in (0, 1], got {self.q_eff}")
        if not self.f_ec >= 1.0:
            raise DomainError(f"f_ec must be >= 1, got {self.f_ec}")


@dataclass(frozen=True)
class KeyRatePoint:
    """Key rate at one distance. ``rate_click``/``rate_noclick`` are unclamped."""

    distance_km: float
    eta: float
    source: SourceConfig
    rate_total: float
    rate_click: float
    rate_noclick: float
    bounds: DecoyBounds | None
    observed: ObservedRates | None

    @property
    def score(self) -> float:
        """Rate when positive, otherwise the best (negative) branch rate; used as a search objective."""
        if self.rate_total > 0:
            return self.rate_total
        return max(self.rate_click, self.rate_noclick, -1.0)


def _entropy_of_bound(e1: float) -> float:
    # an error-rate bound above 1/2 certifies nothing beyond H = 1
    return binary_entropy(min(e1, 0.5))


def branch_rate(
    gain: float,
    qber: float,
    p0: float,
    p1: float,
    y0: float,
    y1: float,
    e1: float,
    proto: ProtocolParams = ProtocolParams(),
) -> float:
    """q * (-Q f H(E) + p1 Y1 (1 - H(e1)) + p0 Y0); may be negative."""
    if gain <= 0.0:
        return 0.0
    single = p1 * y1 * (1.0 - _entropy_of_bound(e1)) if y1 > 0 else 0.0
    return proto.q_eff * (-gain * proto.f_ec * binary_entropy(qber) + single + p0 * y0)


def passive_rate(
    cfg: SourceConfig,
    ch: ChannelParams = ChannelParams(),
    proto: ProtocolParams = ProtocolParams(),
    distance_km: float = 0.0,
) -> KeyRatePoint:
    """Key rate distilled from both the click and the no-click events.

    The background yield entering the vacuum term of each branch is the
    channel's Y0, which the parties characterise directly; only the
    single-photon yield and error rate are estimated.
    """
    eta = transmittance(ch, distance_km)
    p = derive(cfg)
    if p.upsilon == 0.0:
        return KeyRatePoint(distance_km, eta, cfg, 0.0, 0.0, 0.0, None, None)
    if p.xi == 0.0:
        raise CertificateError("intensities give proportional click/no-click statistics (xi = 0)")
    stats = low_order_closed_forms(cfg)
    d1, d0, _, _ = determinants(stats)
    valid = abs(d1) > DETERMINANT_FLOOR and abs(d0) > DETERMINANT_FLOOR
    obs = observed_passive(cfg, ch, distance_km)
    bounds = estimate(stats, obs, ch.e_0, valid=valid)
    c0, c1, _ = stats.click
    n0, n1, _ = stats.noclick
    r_click = branch_rate(obs.q_click, obs.e_click, c0, c1, ch.y_0, bounds.y1_lower, bounds.e1_upper, proto)
    r_noclick = branch_rate(
        obs.q_noclick, obs.e_noclick, n0, n1, ch.y_0, bounds.y1_lower, bounds.e1_upper, proto
    )
    total = max(r_click, 0.0) + max(r_noclick, 0.0)
    return KeyRatePoint(distance_km, eta, cfg, total, r_click, r_noclick, bounds, obs)


def active_asymptotic_raw(
    mu: float, ch: ChannelParams = ChannelParams(), proto: ProtocolParams = ProtocolParams(), distance_km: float = 0.0
) -> float:
    """Unclamped active-decoy rate with exactly known single-photon yield and error."""
    if mu == 0.0:
        return 0.0
    obs = observed_active(mu, ch, distance_km)
    single = mu * math.exp(-mu) * obs.true_y1 * (1.0 - _entropy_of_bound(obs.true_e1))
    vacuum = math.exp(-mu) * ch.y_0
    return proto.q_eff * (-obs.gain * proto.f_ec * binary_entropy(obs.qber) + single + vacuum)


def active_asymptotic_rate(
    mu: float, ch: ChannelParams = ChannelParams(), proto: ProtocolParams = ProtocolParams(), distance_km: float = 0.0
) -> float:
    return max(active_asymptotic_raw(mu, ch, proto, distance_km), 0.0)
