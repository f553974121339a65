import math

import pytest

import oracles
from passive_decoy.channel import GYS, ChannelParams, transmittance
from passive_decoy.errors import CertificateError, DomainError
from passive_decoy.keyrate import (
    ProtocolParams,
    active_asymptotic_raw,
    active_asymptotic_rate,
    branch_rate,
    passive_rate,
)
from passive_decoy.optimizer import optimize_active, optimize_intensities
from passive_decoy.photon_stats import SourceConfig

OPERATING = SourceConfig(1e-4, 0.55, 0.5)
# independent high-precision pipeline, frozen
RATE_AT_50KM = 1.624402879504878e-4


def test_protocol_validation():
    with pytest.raises(DomainError):
        ProtocolParams(q_eff=0.0)
    with pytest.raises(DomainError):
        ProtocolParams(f_ec=0.9)


def test_branch_rate_examples():
    assert branch_rate(0.0, 0.3, 0.1, 0.2, 1e-6, 0.1, 0.1) == 0.0
    assert branch_rate(0.1, 0.0, 0.3, 0.4, 0.0, 0.25, 0.0, ProtocolParams(q_eff=0.5)) == pytest.approx(0.05)
    assert branch_rate(0.1, 0.5, 0.0, 1.0, 0.0, 1.0, 0.0) == pytest.approx(0.878, rel=1e-14)


def test_branch_rate_caps_e1_entropy():
    # an e1 bound above 1/2 contributes no single-photon key
    assert branch_rate(0.1, 0.1, 0.0, 1.0, 0.0, 1.0, 0.9) == branch_rate(0.1, 0.1, 0.0, 1.0, 0.0, 1.0, 0.5)
    assert branch_rate(0.1, 0.1, 0.0, 1.0, 0.0, 1.0, 0.5) < 0


def test_vacuum_source_has_no_key():
    pt = passive_rate(SourceConfig(0.0, 0.0, 0.5), GYS, ProtocolParams(), 10.0)
    assert pt.rate_total == 0.0 and pt.bounds is None


def test_equal_intensities_at_extreme_split_raise():
    with pytest.raises(CertificateError):
        passive_rate(SourceConfig(0.0, 0.5, 0.5), GYS, ProtocolParams(), 10.0)


def test_regression_fixture_at_50km():
    pt = passive_rate(OPERATING, GYS, ProtocolParams(), 50.0)
    assert pt.rate_total > 0
    assert pt.rate_total == pytest.approx(RATE_AT_50KM, rel=1e-9)


@pytest.mark.parametrize(
    "mu1,mu2,distance",
    [(1e-4, 0.55, 20.0), (1e-3, 0.45, 90.0), (0.05, 0.6, 10.0), (0.3, 0.8, 20.0), (1e-4, 0.55, 140.0)],
)
def test_matches_independent_pipeline(mu1, mu2, distance):
    expected = float(oracles.passive_rate(mu1, mu2, 0.5, distance))
    got = passive_rate(SourceConfig(mu1, mu2, 0.5), GYS, ProtocolParams(), distance).rate_total
    assert got == pytest.approx(expected, rel=1e-8, abs=1e-15)


def test_rate_is_sum_of_clamped_branches():
    for d in (0.0, 30.0, 60.0, 100.0, 125.0, 140.0):
        pt = passive_rate(OPERATING, GYS, ProtocolParams(), d)
        assert pt.rate_total == max(pt.rate_click, 0.0) + max(pt.rate_noclick, 0.0)
        assert pt.rate_total >= 0


def test_beyond_cutoff_is_zero():
    best = optimize_intensities(GYS, ProtocolParams(), 140.0)
    assert best.rate == 0.0
    assert passive_rate(OPERATING, GYS, ProtocolParams(), 140.0).rate_total == 0.0


def test_active_examples():
    assert active_asymptotic_rate(0.0, GYS, ProtocolParams(), 10.0) == 0.0
    clean = ChannelParams(e_d=0.0, y_0=0.0)
    eta = transmittance(clean, 30.0)
    assert active_asymptotic_raw(0.7, clean, ProtocolParams(), 30.0) == pytest.approx(0.7 * math.exp(-0.7) * eta, rel=1e-12)
    assert active_asymptotic_rate(0.5, GYS, ProtocolParams(), 400.0) == 0.0
    assert active_asymptotic_raw(0.5, GYS, ProtocolParams(), 400.0) < 0


def test_active_clean_channel_linear_in_eta():
    clean = ChannelParams(e_d=0.0, y_0=0.0)
    proto = ProtocolParams(f_ec=1.0)
    ratios = []
    for d in range(0, 101, 10):
        mu, rate = optimize_active(clean, proto, float(d))
        assert mu == pytest.approx(1.0, abs=1e-3)
        ratios.append(rate / transmittance(clean, float(d)))
    assert max(ratios) / min(ratios) - 1 < 0.05
    assert ratios[0] == pytest.approx(math.exp(-1), rel=1e-6)


@pytest.mark.parametrize("distance", [0.0, 40.0, 80.0, 120.0])
def test_active_dominates_passive(distance):
    passive = optimize_intensities(GYS, ProtocolParams(), distance).rate
    _, active = optimize_active(GYS, ProtocolParams(), distance)
    assert active >= passive
