"""Passive decoy-state QKD from two phase-randomized weak coherent pulses."""
from .channel import ChannelParams, ObservedRates, observed_active, observed_passive, transmittance, yield_n
from .decoy_bounds import DecoyBounds, e1_upper, estimate, y0_bounds, y1_lower
from .errors import CertificateError, DegenerateBranchError, DomainError, TruncationError
from .keyrate import KeyRatePoint, ProtocolParams, active_asymptotic_rate, branch_rate, passive_rate
from .numerics import QuadratureSpec, bessel_i, binary_entropy, phase_average, poisson_pmf
from .optimizer import SearchDomain, cutoff_distance, optimize_active, optimize_intensities, scan
from .photon_stats import (
    PhotonDistribution,
    SourceConfig,
    click_prob,
    conditional_distributions,
    derive,
    estimation_certificate,
    joint_prob,
    low_order_closed_forms,
    noclick_prob,
    noclick_total,
    total_prob,
)

__version__ = "0.1.0"
