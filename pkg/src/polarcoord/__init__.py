"""Polar-coded empirical coordination of signals and actions over a noisy channel."""

from .construction import IndexLayout, build_layout, construct, profile_entropies, rate_report
from .decoder import decode_chain
from .encoder import ChannelCode, CommonRandomness, encode_chain, one_time_pad
from .experiment import Scenario, run_chain, run_experiment
from .metrics import EmpiricalType, coordination_probability, kl_divergence, type_of, variational_distance
from .polarcore import ScModel, polar_transform, sc_prefix_probability
from .presets import preset
from .probmodel import CondDist, CoordinationSpec, FiniteDist, check_region

__version__ = "0.1.0"

__all__ = [
    "ChannelCode", "CommonRandomness", "CondDist", "CoordinationSpec", "EmpiricalType", "FiniteDist",
    "IndexLayout", "Scenario", "ScModel", "build_layout", "check_region", "construct", "coordination_probability",
    "decode_chain", "encode_chain", "kl_divergence", "one_time_pad", "polar_transform", "preset",
    "profile_entropies", "rate_report", "run_chain", "run_experiment", "sc_prefix_probability", "type_of",
    "variational_distance",
]
