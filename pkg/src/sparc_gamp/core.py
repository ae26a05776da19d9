"""Code parameters, message and design-matrix sampling, encoding, and the
section-wise error metrics."""

import math
from dataclasses import dataclass

import numpy as np

from ._validation import as_rng, check_positive, check_same_length, check_section_size
from .channels import ChannelModel


@dataclass(frozen=True)
class CodeParams:
    """Dimensions of a sparse superposition code.

    ``R`` is the realized rate ``log2(B) / (B * alpha)`` after rounding ``M``
    up, so it never exceeds the rate that was asked for.
    """

    B: int
    L: int
    M: int
    channel: ChannelModel

    @property
    def N(self):
        return self.B * self.L

    @property
    def alpha(self):
        return self.M / self.N

    @property
    def K(self):
        """Number of information bits, ``L log2(B)``."""
        return self.L * int(math.log2(self.B))

    @property
    def R(self):
        return math.log2(self.B) / (self.B * self.alpha)


def make_params(B, L, R, channel):
    """Build :class:`CodeParams` with ``M = ceil(L log2(B) / R)``."""
    B = check_section_size(B)
    if int(L) != L or L < 1:
        raise ValueError(f"L must be a positive integer, got {L!r}")
    R = check_positive(R, "R")
    K = int(L) * int(math.log2(B))
    M = math.ceil(K / R)
    # guard against K/R landing a hair above an integer through rounding
    if M > 1 and math.isclose(K / (M - 1), R, rel_tol=1e-12):
        M -= 1
    if M < 1:
        raise ValueError("rate too high: M would be zero")
    return CodeParams(B=B, L=int(L), M=M, channel=channel)


def sections(v, B):
    """View a length-``N`` vector as an ``(L, B)`` array."""
    v = np.asarray(v)
    if v.shape[-1] % B:
        raise ValueError(f"length {v.shape[-1]} is not a multiple of B={B}")
    return v.reshape(v.shape[:-1] + (-1, B))


def sample_message(params, rng=None):
    """Draw a message: one 1 per section, placed uniformly."""
    rng = as_rng(rng)
    idx = rng.integers(params.B, size=params.L)
    return indices_to_message(idx, params.B)


def indices_to_message(idx, B):
    idx = np.asarray(idx)
    x = np.zeros((idx.size, B))
    x[np.arange(idx.size), idx] = 1.0
    return x.ravel()


def message_to_indices(x, B):
    return np.argmax(sections(x, B), axis=-1)


def sample_design_matrix(params, rng=None, dtype=np.float64):
    """i.i.d. ``N(0, 1/L)`` matrix of shape ``(M, N)``.

    No per-matrix renormalization: the codeword power is 1 only on average.
    """
    rng = as_rng(rng)
    A = rng.standard_normal((params.M, params.N), dtype=dtype)
    A *= A.dtype.type(1.0 / math.sqrt(params.L))
    return A


def encode(A, x):
    """Codeword ``z = A x``."""
    A = np.asarray(A)
    x = np.asarray(x)
    if A.ndim != 2 or A.shape[1] != x.shape[-1]:
        raise ValueError(f"dimension mismatch: A is {A.shape}, x has length {x.shape[-1]}")
    return np.asarray(A @ x.astype(A.dtype, copy=False), dtype=float)


def mse(x, xhat, B):
    """Squared error summed over all entries and divided by the number of sections."""
    x, xhat = check_same_length(x, xhat)
    L = x.shape[-1] // B
    return float(np.sum((x - xhat) ** 2) / L)


def hard_decision(xhat, B):
    """Put the 1 of each section at the argmax (lowest index on ties)."""
    return indices_to_message(np.argmax(sections(xhat, B), axis=-1), B)


def ser(x, x_hard, B):
    """Fraction of sections whose indicator differs."""
    x, x_hard = check_same_length(x, x_hard, ("x", "x_hard"))
    wrong = np.any(sections(x, B) != sections(x_hard, B), axis=-1)
    return float(np.mean(wrong))
