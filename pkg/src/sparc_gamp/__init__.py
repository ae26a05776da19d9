"""Sparse superposition codes with a GAMP decoder over AWGN, BSC and Z channels."""

__version__ = "0.1.0"

from .channels import AWGN, BSC, Z, ChannelModel, flip, quantize_sign, transmit
from .core import (CodeParams, encode, hard_decision, make_params, mse, sample_design_matrix,
                   sample_message, ser)
from .gamp import DecodeReport, GampDecoder, NumericalError, decode, g_in, g_out
from .state_evolution import SeConfig, SeTrace, effective_noise_variance, fisher, se_trace
from .potential import potential_awgn, potential_curve, scan_local_maxima

__all__ = [
    "AWGN", "BSC", "Z", "ChannelModel", "flip", "quantize_sign", "transmit",
    "CodeParams", "encode", "hard_decision", "make_params", "mse", "sample_design_matrix",
    "sample_message", "ser",
    "DecodeReport", "GampDecoder", "NumericalError", "decode", "g_in", "g_out",
    "SeConfig", "SeTrace", "effective_noise_variance", "fisher", "se_trace",
    "potential_awgn", "potential_curve", "scan_local_maxima",
]
