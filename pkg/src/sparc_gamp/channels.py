"""Channel models: AWGN on the real codeword, and 1-bit quantization followed
by a binary symmetric or Z channel.

Binary symbols are carried as +/-1 floats. The symbol the Z channel may
corrupt is -1 (the "0" of a {0, 1} alphabet); +1 always arrives intact.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._validation import as_rng, check_epsilon, check_positive

AWGN = "awgn"
BSC = "bsc"
Z = "z"
KINDS = (AWGN, BSC, Z)


@dataclass(frozen=True)
class ChannelModel:
    """A memoryless channel. Build through :meth:`awgn`, :meth:`bsc` or :meth:`z`."""

    kind: str
    snr: Optional[float] = None
    epsilon: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown channel kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == AWGN:
            if self.snr is None:
                raise ValueError("AWGN channel needs an snr")
            object.__setattr__(self, "snr", check_positive(self.snr, "snr"))
        else:
            if self.epsilon is None:
                raise ValueError(f"{self.kind} channel needs an epsilon")
            if self.kind == BSC:
                eps = check_epsilon(self.epsilon, 0.5)
            else:
                eps = check_epsilon(self.epsilon, 1.0, closed=False)
            object.__setattr__(self, "epsilon", eps)

    @classmethod
    def awgn(cls, snr):
        return cls(AWGN, snr=snr)

    @classmethod
    def bsc(cls, epsilon):
        return cls(BSC, epsilon=epsilon)

    @classmethod
    def z(cls, epsilon):
        return cls(Z, epsilon=epsilon)

    @classmethod
    def from_name(cls, kind, epsilon=None, snr=None):
        kind = kind.lower()
        if kind == AWGN:
            return cls.awgn(snr)
        return cls(kind, epsilon=epsilon)

    @property
    def is_binary(self):
        return self.kind != AWGN

    @property
    def noise_var(self):
        """AWGN noise variance 1/snr."""
        if self.kind != AWGN:
            raise AttributeError("noise_var is only defined for the AWGN channel")
        return 1.0 / self.snr

    @property
    def parameter(self):
        return self.snr if self.kind == AWGN else self.epsilon

    def __str__(self):
        if self.kind == AWGN:
            return f"awgn(snr={self.snr:g})"
        return f"{self.kind}(epsilon={self.epsilon:g})"


def quantize_sign(z):
    """Elementwise sign with sign(0) = +1."""
    z = np.asarray(z, dtype=float)
    return np.where(z >= 0, 1.0, -1.0)


def transmit(channel, z, rng=None):
    """Send a codeword through ``channel``.

    For AWGN ``z`` is the real codeword. For BSC and Z the codeword is sign
    quantized first (already-binary input passes through unchanged), then
    symbols are flipped independently.
    """
    rng = as_rng(rng)
    z = np.asarray(z, dtype=float)
    if channel.kind == AWGN:
        return z + rng.standard_normal(z.shape) * np.sqrt(channel.noise_var)
    return flip(quantize_sign(z), channel.kind, channel.epsilon, rng)


def flip(symbols, kind, epsilon, rng=None):
    """Flip +/-1 symbols: both symbols for ``kind='bsc'``, only -1 for ``kind='z'``.

    Unlike :class:`ChannelModel`, any ``epsilon`` in [0, 1] is accepted here so
    degenerate channels (e.g. an always-flipping BSC) can be simulated.
    """
    rng = as_rng(rng)
    epsilon = check_epsilon(epsilon, 1.0)
    symbols = np.asarray(symbols, dtype=float)
    if np.any(np.abs(symbols) != 1.0):
        raise ValueError("binary channels take +/-1 symbols")
    hit = rng.random(symbols.shape) < epsilon
    if kind == BSC:
        return np.where(hit, -symbols, symbols)
    if kind == Z:
        return np.where(hit & (symbols < 0), 1.0, symbols)
    raise ValueError(f"flip() needs a binary channel kind, got {kind!r}")
