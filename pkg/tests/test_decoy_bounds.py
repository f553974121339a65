import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from passive_decoy.channel import GYS, ObservedRates, ChannelParams, error_yield_n, observed_passive, transmittance, yield_n
from passive_decoy.decoy_bounds import DecoyBounds, e1_upper, estimate, y0_bounds, y1_lower
from passive_decoy.errors import CertificateError
from passive_decoy.photon_stats import LowOrderStats, SourceConfig, low_order_closed_forms

OPERATING = SourceConfig(0.55, 1e-4, 0.5)
DISTANCES = [float(d) for d in range(0, 121, 10)]
GRID = [(d, mu1, mu2) for d in DISTANCES for mu2 in (0.3, 0.55, 0.8) for mu1 in (1e-4, 1e-2)]


def truth(ch, distance):
    eta = transmittance(ch, distance)
    y1 = yield_n(ch, eta, 1)
    return ch.y_0, y1, error_yield_n(ch, eta, 1) / y1


def bounds_at(cfg, ch, distance):
    stats = low_order_closed_forms(cfg)
    return estimate(stats, observed_passive(cfg, ch, distance), ch.e_0)


def test_noiseless_channel_has_zero_background():
    ch = ChannelParams(e_d=0.0, y_0=0.0)
    b = bounds_at(OPERATING, ch, 20.0)
    assert b.y0_upper == 0.0 and b.y0_lower == 0.0


def test_zero_gains_clamp_to_zero():
    zero = ObservedRates(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    stats = low_order_closed_forms(OPERATING)
    lo, hi = y0_bounds(stats, zero)
    assert lo == 0.0 and hi == 0.0
    assert y1_lower(stats, zero, hi) == 0.0


def test_error_free_channel_gives_zero_e1():
    b = bounds_at(OPERATING, ChannelParams(e_d=0.0, y_0=0.0), 20.0)
    assert b.y1_lower > 0
    assert b.e1_upper == 0.0


def test_vacuous_e1_when_no_yield_certified():
    stats = low_order_closed_forms(OPERATING)
    obs = observed_passive(OPERATING, GYS, 20.0)
    raw = {}
    assert e1_upper(stats, obs, 0.0, 0.0, raw=raw) == 1.0
    assert raw["e1_upper"] == math.inf
    assert DecoyBounds(0.0, 0.0, 0.0, 1.0).vacuous


def test_operating_point_examples():
    y0, y1, e1 = truth(GYS, 20.0)
    b = bounds_at(OPERATING, GYS, 20.0)
    assert b.y0_lower <= y0 <= b.y0_upper
    assert 0 < b.y1_lower <= y1
    assert e1 <= b.e1_upper < 0.5
    far = bounds_at(OPERATING, GYS, 120.0)
    _, y1_far, _ = truth(GYS, 120.0)
    assert 0 <= far.y1_lower <= y1_far
    # relative gap to the truth grows with loss
    assert (y1_far - far.y1_lower) / y1_far > (y1 - b.y1_lower) / y1


def test_raw_values_exposed():
    b = bounds_at(OPERATING, GYS, 20.0)
    assert {"y0_lower", "y0_upper", "y1_lower", "e1_upper", "e1_candidates"} <= set(b.raw)
    assert len(b.raw["e1_candidates"]) == 3
    assert min(b.raw["e1_candidates"]) == pytest.approx(b.e1_upper)
    # the background lower bound is negative before clamping at this point
    assert b.raw["y0_lower"] < 0 and b.y0_lower == 0.0


def test_proportional_statistics_raise():
    flat = LowOrderStats(noclick=(0.2, 0.1, 0.05), total=(0.4, 0.2, 0.1))
    obs = observed_passive(OPERATING, GYS, 20.0)
    with pytest.raises(CertificateError):
        y0_bounds(flat, obs)
    with pytest.raises(CertificateError):
        y1_lower(flat, obs, 1e-6)
    with pytest.raises(CertificateError):
        e1_upper(flat, obs, 0.0, 1e-3)


@pytest.mark.parametrize("distance,mu1,mu2", GRID)
def test_sandwich(distance, mu1, mu2):
    y0, y1, e1 = truth(GYS, distance)
    b = bounds_at(SourceConfig(mu1, mu2, 0.5), GYS, distance)
    assert b.y0_lower <= y0 <= b.y0_upper
    assert b.y1_lower <= y1
    assert b.e1_upper >= e1


@pytest.mark.parametrize("distance", [0.0, 40.0, 100.0])
def test_injected_errors_never_lower_e1_bound(distance):
    # errors injected through the misalignment rate raise E^t and E^{c-bar} together
    prev = -1.0
    for e_d in (0.0, 0.01, 0.02, 0.033, 0.05, 0.08, 0.1, 0.12, 0.15, 0.2):
        value = bounds_at(OPERATING, ChannelParams(e_d=e_d), distance).e1_upper
        assert value >= prev
        prev = value
    assert prev == 1.0


@settings(max_examples=200, deadline=None)
@given(
    mu1=st.floats(1e-4, 2.0),
    mu2=st.floats(1e-4, 2.0),
    distance=st.floats(0.0, 300.0),
    e_d=st.floats(0.0, 0.5),
    y_0=st.floats(0.0, 1e-3),
)
def test_outputs_clamped(mu1, mu2, distance, e_d, y_0):
    cfg = SourceConfig(mu1, mu2, 0.5)
    ch = ChannelParams(e_d=e_d, y_0=y_0)
    try:
        b = bounds_at(cfg, ch, distance)
    except (CertificateError, ArithmeticError):
        return
    assert 0.0 <= b.y0_lower <= b.y0_upper <= 1.0
    assert 0.0 <= b.y1_lower <= 1.0
    assert 0.0 <= b.e1_upper <= 1.0
