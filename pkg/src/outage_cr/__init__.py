"""Outage capacity and common-randomness capacity over slow-fading AWGN channels."""

from outage_cr.source import JointSource, SourceSample, dsbs, entropy_x, conditional_entropy_x_given_y, mutual_info_xy, sample
from outage_cr.fading import Constant, Empirical, FadingSpec, Rayleigh, cdf_below, gamma0, outage_capacity, sample_gain
from outage_cr.crcap import AuxChannel, CapacityResult, brute_force_cr_capacity, converse_bound_check, cr_capacity, info_pair

__version__ = "0.1.0"

__all__ = [
    "JointSource",
    "SourceSample",
    "dsbs",
    "entropy_x",
    "conditional_entropy_x_given_y",
    "mutual_info_xy",
    "sample",
    "Constant",
    "Rayleigh",
    "Empirical",
    "FadingSpec",
    "cdf_below",
    "gamma0",
    "outage_capacity",
    "sample_gain",
    "AuxChannel",
    "CapacityResult",
    "info_pair",
    "cr_capacity",
    "brute_force_cr_capacity",
    "converse_bound_check",
]
