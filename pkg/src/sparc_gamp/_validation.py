"""Small argument checks shared across modules."""

import numbers

import numpy as np


def is_power_of_two(n):
    return isinstance(n, numbers.Integral) and n > 0 and (n & (n - 1)) == 0


def check_section_size(B):
    if not is_power_of_two(B) or B < 2:
        raise ValueError(f"section size B must be a power of two >= 2, got {B!r}")
    return int(B)


def check_positive(value, name):
    if not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a finite positive number, got {value!r}")
    return float(value)


def check_epsilon(eps, upper, closed=True):
    """Validate a flip probability against ``[0, upper]`` (or ``[0, upper)``)."""
    eps = float(eps)
    ok = eps >= 0 and (eps <= upper if closed else eps < upper)
    if not ok:
        bracket = "]" if closed else ")"
        raise ValueError(f"epsilon must lie in [0, {upper}{bracket}, got {eps!r}")
    return eps


def check_same_length(a, b, names=("x", "xhat")):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"{names[0]} and {names[1]} differ in shape: {a.shape} vs {b.shape}")
    return a, b


def as_rng(rng):
    """Accept a Generator, a seed, or a SeedSequence."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
