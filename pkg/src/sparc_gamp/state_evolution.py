"""Scalar state evolution for the GAMP decoder.

The binary channels are replaced by an effective AWGN channel whose variance
comes from the Fisher information of the sign observation. Iterating the
section-wise MMSE of that scalar channel predicts the per-iteration MSE and
section error rate of the decoder.
"""

import math
from dataclasses import dataclass, field
from typing import List

import numpy as np
from scipy.special import log_ndtr, softmax

from ._validation import as_rng, check_section_size
from .channels import AWGN, BSC, Z, ChannelModel

E_MIN = 1e-12
MC_SAMPLES = 100_000
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _check_variance(E):
    E = np.asarray(E, dtype=float)
    if np.any(~(E > 0)):
        raise ValueError("the variance E must be positive")
    return E


def _binary_fisher(dlog_f, log_f_pos, log_f_neg):
    # F = (d f+)^2 / (f+ f-) for any binary output since f+ + f- = 1
    return np.exp(dlog_f - log_f_pos - log_f_neg)


def fisher_bsc(p, E, epsilon):
    """Fisher information of ``p`` for ``y = BSC(sign(u))`` with ``u ~ N(p, E)``.

    Evaluated in the log domain, so tails far beyond ``|p| / sqrt(E) = 30``
    stay finite (and correctly tend to zero).
    """
    E = _check_variance(E)
    if not 0 <= epsilon <= 0.5:
        raise ValueError(f"BSC epsilon must lie in [0, 0.5], got {epsilon}")
    p = np.asarray(p, dtype=float)
    if epsilon == 0.5:
        return np.zeros(np.broadcast(p, E).shape)[()]
    u = p / np.sqrt(E)
    log_q = log_ndtr(u)
    log_1mq = log_ndtr(-u)
    log_f_pos = _mix(epsilon, 1.0 - 2.0 * epsilon, log_q)
    log_f_neg = _mix(epsilon, 1.0 - 2.0 * epsilon, log_1mq)
    # (Q' (1 - 2 eps))^2 with Q' = phi(u) / sqrt(E)
    dlog = 2.0 * (math.log1p(-2.0 * epsilon) - 0.5 * u**2 - _LOG_SQRT_2PI) - np.log(E)
    return _binary_fisher(dlog, log_f_pos, log_f_neg)[()]


def _mix(a, b, log_x):
    """log(a + b * exp(log_x)) for a, b >= 0."""
    with np.errstate(divide="ignore"):
        return np.logaddexp(np.log(a) if a > 0 else -np.inf, np.log(b) + log_x)


def fisher_z(p, E, epsilon):
    """Fisher information of ``p`` for the Z channel after sign quantization.

    ``f(+1) = Q + eps (1 - Q)`` and ``f(-1) = (1 - eps)(1 - Q)`` with
    ``Q = Phi(p / sqrt(E))``; the derivative of ``f(+1)`` is ``(1 - eps) Q'``.
    """
    E = _check_variance(E)
    if not 0 <= epsilon < 1:
        raise ValueError(f"Z-channel epsilon must lie in [0, 1), got {epsilon}")
    p = np.asarray(p, dtype=float)
    u = p / np.sqrt(E)
    log_q = log_ndtr(u)
    log_1mq = log_ndtr(-u)
    with np.errstate(divide="ignore"):
        log_eps = math.log(epsilon) if epsilon > 0 else -np.inf
    log_f_pos = np.logaddexp(log_q, log_eps + log_1mq)
    log_f_neg = math.log1p(-epsilon) + log_1mq
    dlog = 2.0 * (math.log1p(-epsilon) - 0.5 * u**2 - _LOG_SQRT_2PI) - np.log(E)
    return _binary_fisher(dlog, log_f_pos, log_f_neg)[()]


def fisher_awgn(p, E, snr):
    """Gaussian output: ``y ~ N(p, E + 1/snr)``, so the information is constant in ``p``."""
    E = _check_variance(E)
    p = np.asarray(p, dtype=float)
    return np.broadcast_to(1.0 / (E + 1.0 / snr), np.broadcast(p, E).shape).copy()[()]


def fisher(channel, p, E):
    if channel.kind == BSC:
        return fisher_bsc(p, E, channel.epsilon)
    if channel.kind == Z:
        return fisher_z(p, E, channel.epsilon)
    return fisher_awgn(p, E, channel.snr)


def _clamp_E(E):
    return min(max(float(E), E_MIN), 1.0)


def expected_fisher(E, channel, mc_samples=MC_SAMPLES, seed=0, normals=None):
    """Monte Carlo estimate of ``E_p[F(p | E)]`` for ``p ~ N(0, 1 - E)``.

    The information is concentrated in ``|p| <~ sqrt(E)``, so for ``E < 1/2``
    the draws come from ``N(0, E)`` and are importance-weighted back to the
    target; drawing from the target itself would leave almost no samples in
    that window as ``E -> 0``. For ``E >= 1/2`` this is plain sampling from
    the target, and at ``E = 1`` it is ``F(0 | 1)`` exactly.
    """
    E = _clamp_E(E)
    if normals is None:
        normals = as_rng(seed).standard_normal(mc_samples)
    target_var = 1.0 - E
    proposal_var = min(E, target_var)
    p = math.sqrt(proposal_var) * normals
    f = fisher(channel, p, E)
    if proposal_var < target_var:
        log_w = (0.5 * math.log(proposal_var / target_var)
                 - 0.5 * p**2 * (1.0 / target_var - 1.0 / proposal_var))
        f = f * np.exp(log_w)
    return float(np.mean(f))


def effective_noise_variance(E, channel, R, mc_samples=MC_SAMPLES, seed=0, normals=None):
    """``Sigma(E)^2 = R / E_p[F(p | E)]``; ``inf`` for an uninformative channel.

    ``normals`` may carry pre-drawn standard normals so that successive calls
    share random numbers. For AWGN the expectation is exact and the result is
    ``R (E + 1/snr)``.
    """
    E = _clamp_E(E)
    if channel.kind == AWGN:
        return R * (E + 1.0 / channel.snr)
    mean_f = expected_fisher(E, channel, mc_samples, seed, normals)
    if mean_f <= 0:
        return math.inf
    return R / mean_f


def awgn_sigma2(E, B, R, snr):
    """``(1/snr + E) R / log2(B)``, the AWGN effective noise variance seen by one component.

    This is the quantity the potential function is written in. It equals
    ``effective_noise_variance(...) / log2(B)`` for the AWGN channel.
    """
    if E < 0:
        raise ValueError("E must be non-negative")
    return (1.0 / snr + E) * R / math.log2(B)


def _section_logits(sigma, B, z):
    """Logits of the posterior over candidate positions; the true position is column 0.

    Pseudo-data ``r = s + sigma_c z`` with ``sigma_c = sigma / sqrt(log2 B)``
    per component; candidate ``i`` has logit ``(2 r_i - 1) / (2 sigma_c^2)``.
    """
    var_c = sigma**2 / math.log2(B)
    r = z * math.sqrt(var_c)
    r[:, 0] += 1.0
    return (2.0 * r - 1.0) / (2.0 * var_c)


def _normals(B, mc_samples, seed, normals):
    if normals is not None:
        return normals
    return as_rng(seed).standard_normal((mc_samples, B))


def se_mse(sigma, B, mc_samples=MC_SAMPLES, seed=0, normals=None):
    """Per-section MMSE ``E[(f_1 - 1)^2 + sum_{i>=2} f_i^2]`` of the effective channel.

    ``sigma`` is the effective standard deviation ``Sigma(E)``; each
    component sees noise of variance ``Sigma^2 / log2(B)``.
    """
    B = check_section_size(B)
    if math.isinf(sigma):
        return 1.0 - 1.0 / B
    z = np.array(_normals(B, mc_samples, seed, normals), dtype=float)
    f = softmax(_section_logits(sigma, B, z), axis=1)
    err = (f[:, 0] - 1.0) ** 2 + np.sum(f[:, 1:] ** 2, axis=1)
    return float(np.mean(err))


def se_ser(sigma, B, mc_samples=MC_SAMPLES, seed=0, normals=None):
    """Probability that some wrong position gets a larger posterior weight than the true one."""
    B = check_section_size(B)
    if math.isinf(sigma):
        return 1.0 - 1.0 / B
    z = np.array(_normals(B, mc_samples, seed, normals), dtype=float)
    f = softmax(_section_logits(sigma, B, z), axis=1)
    wrong = np.any(f[:, 1:] > f[:, :1], axis=1)
    return float(np.mean(wrong))


@dataclass
class SeConfig:
    B: int
    R: float
    channel: ChannelModel
    mc_samples: int = MC_SAMPLES
    E0: float = 1.0
    max_iters: int = 200
    seed: int = 0
    tol: float = 1e-10

    def __post_init__(self):
        check_section_size(self.B)
        if self.mc_samples < 1000:
            raise ValueError("mc_samples must be at least 1000")
        if not 0 < self.E0 <= 1:
            raise ValueError("E0 must lie in (0, 1]")
        if self.R <= 0:
            raise ValueError("R must be positive")


@dataclass
class SeTrace:
    """Row ``t`` holds the predicted MSE and SER after ``t`` decoder iterations.

    ``sigma2[t]`` is the effective variance computed from ``mse[t]``; it drives
    row ``t + 1``.
    """

    mse: List[float] = field(default_factory=list)
    ser: List[float] = field(default_factory=list)
    sigma2: List[float] = field(default_factory=list)

    def __len__(self):
        return len(self.mse)

    @property
    def fixed_point(self):
        return self.mse[-1], self.ser[-1]

    def at(self, t):
        """Values at iteration ``t``; past the end the fixed point is repeated."""
        t = min(t, len(self.mse) - 1)
        return self.mse[t], self.ser[t]


def se_trace(config):
    """Iterate ``E <- T_u(Sigma(E))`` from ``E0``.

    Row 0 is the prior (SER ``1 - 1/B``). The random numbers are drawn once
    and reused by every iteration, so the map is a deterministic function.
    """
    B = config.B
    rng = as_rng(config.seed)
    p_normals = rng.standard_normal(config.mc_samples)
    z_normals = rng.standard_normal((config.mc_samples, B))
    trace = SeTrace(mse=[config.E0], ser=[1.0 - 1.0 / B])
    E = config.E0
    for _ in range(config.max_iters):
        s2 = effective_noise_variance(E, config.channel, config.R, normals=p_normals)
        trace.sigma2.append(s2)
        if math.isinf(s2):
            break
        sigma = math.sqrt(s2)
        E_next = se_mse(sigma, B, normals=z_normals)
        trace.mse.append(E_next)
        trace.ser.append(se_ser(sigma, B, normals=z_normals))
        if abs(E_next - E) < config.tol:
            break
        E = E_next
    if len(trace.sigma2) < len(trace.mse):
        trace.sigma2.append(effective_noise_variance(trace.mse[-1], config.channel, config.R,
                                                     normals=p_normals))
    return trace
