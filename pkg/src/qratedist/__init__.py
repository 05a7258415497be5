"""Numerical toolkit for quantum rate-distortion: entropic functionals of
channels, the entanglement information rate-distortion function, block codes
and randomized checks of the entropic inequalities behind the converse bound.
"""
from .channels import (
    KrausChannel,
    apply,
    compose,
    depolarizing_channel,
    identity_channel,
    mix,
    reduced_channel,
    tensor_channels,
    validate,
)
from .entropics import (
    Ensemble,
    block_distortion_e,
    coherent_information,
    entanglement_distortion,
    entanglement_fidelity,
    entropy_exchange,
)
from .estimators import InformationRateDistortion, RateDistortionCode
from .qmath import DensityMatrix, PureState, partial_trace, purify, von_neumann_entropy
from .rdopt import OptimizerConfig, RDCode, min_coherent_info_at_D, rd_curve, search_codes

__all__ = [
    "KrausChannel",
    "apply",
    "compose",
    "depolarizing_channel",
    "identity_channel",
    "mix",
    "reduced_channel",
    "tensor_channels",
    "validate",
    "Ensemble",
    "block_distortion_e",
    "coherent_information",
    "entanglement_distortion",
    "entanglement_fidelity",
    "entropy_exchange",
    "InformationRateDistortion",
    "RateDistortionCode",
    "DensityMatrix",
    "PureState",
    "partial_trace",
    "purify",
    "von_neumann_entropy",
    "OptimizerConfig",
    "RDCode",
    "min_coherent_info_at_D",
    "rd_curve",
    "search_codes",
]

__version__ = "0.1.0"
