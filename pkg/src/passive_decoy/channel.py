"""Lossy fiber plus receiver model producing the gains and error rates Alice and Bob observe.

The yield of an n-photon pulse is 1 - (1 - Y0)(1 - eta)^n and its error
contribution is Y0*e0 + (Y_n - Y0)*ed, with eta the end-to-end
transmittance (fiber loss times detector efficiency).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegenerateBranchError, DomainError
from .numerics import bessel_i, bessel_i0_minus_one
from .photon_stats import SourceConfig, derive, noclick_total


@dataclass(frozen=True)
class ChannelParams:
    """Fiber and detector parameters; defaults are the GYS experiment."""

    alpha_db_per_km: float = 0.21
    eta_det: float = 0.045
    e_d: float = 0.033
    e_0: float = 0.5
    y_0: float = 1.7e-6

    def __post_init__(self) -> None:
        if not (self.alpha_db_per_km >= 0 and math.isfinite(self.alpha_db_per_km)):
            raise DomainError(f"alpha_db_per_km must be a finite value >= 0, got {self.alpha_db_per_km}")
        for name in ("eta_det", "e_d", "e_0", "y_0"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise DomainError(f"{name} must be a probability, got {value}")


GYS = ChannelParams()


@dataclass(frozen=True)
class ObservedRates:
    """Gains and QBERs for the no-click branch, the total, and the click branch."""

    q_noclick: float
    e_noclick: float
    q_total: float
    e_total: float
    q_click: float
    e_click: float
    # error-weighted gains Q*E, kept to avoid dividing and re-multiplying
    qe_noclick: float
    qe_total: float

    @property
    def qe_click(self) -> float:
        return self.qe_total - self.qe_noclick


@dataclass(frozen=True)
class ActiveObservation:
    gain: float
    qber: float
    true_y1: float
    true_e1: float


def transmittance(ch: ChannelParams, distance_km: float) -> float:
    if distance_km < 0:
        raise DomainError(f"distance must be non-negative, got {distance_km}")
    return ch.eta_det * 10.0 ** (-ch.alpha_db_per_km * distance_km / 10.0)


def _check_eta(eta: float) -> None:
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"transmittance must lie in [0, 1], got {eta}")


def yield_n(ch: ChannelParams, eta: float, n: int) -> float:
    _check_eta(eta)
    if n < 0:
        raise DomainError(f"photon number must be non-negative, got {n}")
    if n == 0:
        return ch.y_0
    # 1 - (1-Y0)(1-eta)^n written as -expm1 of a small logarithm
    return -math.expm1(math.log1p(-ch.y_0) + n * math.log1p(-eta)) if eta < 1.0 else 1.0


def error_yield_n(ch: ChannelParams, eta: float, n: int) -> float:
    """Y_n * e_n, the probability of an erroneous detection from an n-photon pulse."""
    return ch.y_0 * ch.e_0 + (yield_n(ch, eta, n) - ch.y_0) * ch.e_d


def _log_i0(z: float) -> float:
    return math.log1p(bessel_i0_minus_one(z))


def _i0_drop(xi: float, eta: float) -> float:
    """I0(xi) - I0((1 - eta) * xi), summed term by term so nothing cancels."""
    q = 0.25 * xi * xi
    if q == 0.0 or eta == 0.0:
        return 0.0
    log_keep = math.log1p(-eta) if eta < 1.0 else -math.inf
    term = 1.0
    total = 0.0
    k = 0
    while True:
        k += 1
        term *= q / (k * k)
        total += term * -math.expm1(2 * k * log_keep)
        # piece k relative to piece 1 is at most k * term / q
        if k * term < 1e-17 * q:
            return total


def _gain_and_error(gain: float, error_weighted: float) -> float:
    if gain <= 0.0:
        raise DegenerateBranchError("QBER requested for a branch with zero gain")
    return error_weighted / gain


def observed_passive(cfg: SourceConfig, ch: ChannelParams, distance_km: float) -> ObservedRates:
    eta = transmittance(ch, distance_km)
    _check_eta(eta)
    p = derive(cfg)
    f = noclick_total(cfg)
    i0_lossy = bessel_i(0, (1.0 - eta) * p.xi)
    decay = math.exp(-eta * p.omega)
    # F - (1-Y0) e^{(1-eta)w - u} I0((1-eta)xi), rearranged into non-negative pieces
    bracket = (
        bessel_i(0, p.xi) * -math.expm1(-eta * p.omega)
        + decay * _i0_drop(p.xi, eta)
        + ch.y_0 * decay * i0_lossy
    )
    q_noclick = math.exp(p.omega - p.upsilon) * bracket
    q_total = -math.expm1(math.log1p(-ch.y_0) - eta * p.omega + _log_i0(eta * p.xi))
    qe_noclick = (ch.e_0 - ch.e_d) * ch.y_0 * f + ch.e_d * q_noclick
    qe_total = (ch.e_0 - ch.e_d) * ch.y_0 + ch.e_d * q_total
    q_click = max(q_total - q_noclick, 0.0)
    qe_click = qe_total - qe_noclick
    return ObservedRates(
        q_noclick=q_noclick,
        e_noclick=_gain_and_error(q_noclick, qe_noclick) if q_noclick > 0 else 0.0,
        q_total=q_total,
        e_total=_gain_and_error(q_total, qe_total),
        q_click=q_click,
        e_click=_gain_and_error(q_click, qe_click) if q_click > 0 else 0.0,
        qe_noclick=qe_noclick,
        qe_total=qe_total,
    )


def observed_active(mu: float, ch: ChannelParams, distance_km: float) -> ActiveObservation:
    """Gain, QBER and the exact single-photon yield/error of a Poissonian source."""
    if mu < 0:
        raise DomainError(f"intensity must be non-negative, got {mu}")
    eta = transmittance(ch, distance_km)
    gain = -math.expm1(math.log1p(-ch.y_0) - eta * mu)
    qber = _gain_and_error(gain, (ch.e_0 - ch.e_d) * ch.y_0 + ch.e_d * gain)
    y1 = yield_n(ch, eta, 1)
    e1 = error_yield_n(ch, eta, 1) / y1 if y1 > 0 else ch.e_0
    return ActiveObservation(gain=gain, qber=qber, true_y1=y1, true_e1=e1)
