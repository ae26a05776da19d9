"""Sum-product GAMP decoder for sparse superposition codes.

One iteration runs the output linear step, the channel denoiser ``g_out``,
the input linear step and the section-wise posterior mean ``g_in``. The
denoisers are the closed forms for a 1-of-B prior and for AWGN, BSC and Z
channels observed through ``sign(z)``.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.special import erfcx, softmax
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from . import core
from .channels import AWGN, BSC, Z, ChannelModel

TAU_FLOOR = 1e-12
TAU_R_CAP = 1e12
VAR_TOL = 1e-4
_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


class NumericalError(FloatingPointError):
    """A decoder quantity became non-finite."""

    def __init__(self, iteration, quantity):
        self.iteration = iteration
        self.quantity = quantity
        super().__init__(f"non-finite {quantity} at iteration {iteration}")


@dataclass
class GampState:
    t: int
    xhat: np.ndarray
    tau_x: np.ndarray
    shat: np.ndarray
    phat: Optional[np.ndarray] = None
    tau_p: Optional[np.ndarray] = None
    zhat: Optional[np.ndarray] = None
    tau_s: Optional[np.ndarray] = None
    rhat: Optional[np.ndarray] = None
    tau_r: Optional[np.ndarray] = None


@dataclass
class GoutResult:
    shat: np.ndarray
    tau_s: np.ndarray
    # posterior mean and second moment of z
    zhat0: Optional[np.ndarray] = None
    ez2: Optional[np.ndarray] = None


@dataclass
class DecodeReport:
    xhat: np.ndarray
    decoded: np.ndarray
    n_iter: int
    converged: bool
    ser: List[float] = field(default_factory=list)
    mse: Optional[List[float]] = None
    state: Optional[GampState] = None

    @property
    def final_ser(self):
        return self.ser[-1] if self.ser else float("nan")

    @property
    def final_mse(self):
        return self.mse[-1] if self.mse else float("nan")


def init_state(params):
    """Prior moments of a 1-of-B section: mean 1/B, variance 1/B - 1/B^2."""
    B = params.B
    xhat = np.full(params.N, 1.0 / B)
    return GampState(t=0, xhat=xhat, tau_x=xhat - xhat**2, shat=np.zeros(params.M))


# above this size the elementwise square of A is formed block by block instead of stored
SQUARE_CACHE_BYTES = 1 << 30
_ROW_BLOCK = 2048
A_DTYPE_FULL = np.dtype(np.float64)


def _matvec(A, v):
    return np.asarray(A @ v.astype(A.dtype, copy=False), dtype=float)


def _rmatvec(A, v):
    return np.asarray(v.astype(A.dtype, copy=False) @ A, dtype=float)


class SquaredOperator:
    """Products with the elementwise square of ``A``.

    ``A * A`` is kept in memory when it fits in ``SQUARE_CACHE_BYTES``, in
    float32 when only that fits, and is otherwise squared block by block on
    every product. The float32 copy only ever multiplies variances; vectors
    are scaled by their maximum first so the float32 range is never an
    issue, and the relative error stays around 1e-7.
    """

    def __init__(self, A, cache=None):
        self.A = A
        if cache is None:
            if A.nbytes <= SQUARE_CACHE_BYTES:
                cache = True
            elif A.size * 4 <= SQUARE_CACHE_BYTES:
                cache = np.float32
            else:
                cache = False
        if cache is True:
            self.A2 = A * A
        elif cache:
            self.A2 = np.square(A, dtype=cache)
        else:
            self.A2 = None

    def _scaled(self, product, v):
        v = np.asarray(v, dtype=float)
        if self.A2.dtype == A_DTYPE_FULL or v.size == 0:
            return product(self.A2, v)
        scale = float(np.max(np.abs(v)))
        if scale == 0.0 or not np.isfinite(scale):
            return product(self.A2, v)
        return product(self.A2, v / scale) * scale

    def matvec(self, v):
        if self.A2 is not None:
            return self._scaled(_matvec, v)
        out = np.empty(self.A.shape[0])
        for start in range(0, self.A.shape[0], _ROW_BLOCK):
            blk = self.A[start:start + _ROW_BLOCK]
            out[start:start + _ROW_BLOCK] = _matvec(blk * blk, v)
        return out

    def rmatvec(self, v):
        if self.A2 is not None:
            return self._scaled(_rmatvec, v)
        out = np.zeros(self.A.shape[1])
        for start in range(0, self.A.shape[0], _ROW_BLOCK):
            blk = self.A[start:start + _ROW_BLOCK]
            out += _rmatvec(blk * blk, v[start:start + _ROW_BLOCK])
        return out


def _squared(A, A2):
    if A2 is None:
        return SquaredOperator(A)
    if isinstance(A2, SquaredOperator):
        return A2
    op = SquaredOperator(A, cache=False)
    op.A2 = A2
    return op


def output_linear_step(state, A, A2=None):
    A2 = _squared(A, A2)
    state.tau_p = np.maximum(A2.matvec(state.tau_x), TAU_FLOOR)
    state.zhat = _matvec(A, state.xhat)
    state.phat = state.zhat - state.tau_p * state.shat
    return state


def g_out_awgn(phat, y, tau_p, snr):
    denom = np.asarray(tau_p, dtype=float) + 1.0 / snr
    denom = np.maximum(denom, TAU_FLOOR)
    shat = (np.asarray(y) - phat) / denom
    tau_s = 1.0 / denom
    zhat0 = phat + tau_p * shat
    var = tau_p - tau_p**2 * tau_s
    return GoutResult(shat=shat, tau_s=tau_s, zhat0=zhat0, ez2=var + zhat0**2)


def _check_binary(y):
    y = np.asarray(y, dtype=float)
    if np.any(np.abs(y) != 1.0):
        raise ValueError("binary-channel outputs must be +/-1")
    return y


def _half_line_posterior(phat, tau_p, w_pos, w_neg):
    """Moments of z ~ N(phat, tau_p) reweighted by ``w_pos`` on z > 0 and ``w_neg`` on z < 0.

    The Gaussian masses of the half lines are written through the scaled
    complementary error function, which keeps the ratio finite far into the
    tails. Returns (zhat0, ez2, shat, tau_s). The step likelihood is not
    log-concave, so tau_s is negative where y disagrees with sign(phat).
    """
    phat = np.asarray(phat, dtype=float)
    tau_p = np.maximum(np.asarray(tau_p, dtype=float), TAU_FLOOR)
    s = np.sqrt(tau_p)
    u = phat / s
    with np.errstate(over="ignore", invalid="ignore"):
        pos = np.where(w_pos > 0, w_pos * erfcx(-u / math.sqrt(2.0)), 0.0)
        neg = np.where(w_neg > 0, w_neg * erfcx(u / math.sqrt(2.0)), 0.0)
        g = (w_pos - w_neg) * _SQRT_2_OVER_PI / (pos + neg)
    g = np.where(np.isfinite(g), g, 0.0)
    zhat0 = phat + s * g
    var = tau_p * (1.0 - g * (u + g))
    ez2 = var + zhat0**2
    shat = g / s
    tau_s = g * (u + g) / tau_p
    return zhat0, ez2, shat, tau_s


def bsc_weights(y, epsilon):
    """Likelihood of the observed y on the z > 0 and z < 0 half lines."""
    y = _check_binary(y)
    w_pos = np.where(y > 0, 1.0 - epsilon, epsilon)
    return w_pos, 1.0 - w_pos


def z_weights(y, epsilon):
    # z > 0 always emits +1; z < 0 emits -1 w.p. 1 - eps and +1 w.p. eps
    y = _check_binary(y)
    w_pos = np.where(y > 0, 1.0, 0.0)
    w_neg = np.where(y > 0, epsilon, 1.0 - epsilon)
    return w_pos, w_neg


def g_out_bsc(phat, y, tau_p, epsilon):
    if not 0 <= epsilon <= 0.5:
        raise ValueError(f"BSC epsilon must lie in [0, 0.5], got {epsilon}")
    zhat0, ez2, shat, tau_s = _half_line_posterior(phat, tau_p, *bsc_weights(y, epsilon))
    return GoutResult(shat=shat, tau_s=tau_s, zhat0=zhat0, ez2=ez2)


def g_out_z(phat, y, tau_p, epsilon):
    if not 0 <= epsilon < 1:
        raise ValueError(f"Z-channel epsilon must lie in [0, 1), got {epsilon}")
    zhat0, ez2, shat, tau_s = _half_line_posterior(phat, tau_p, *z_weights(y, epsilon))
    return GoutResult(shat=shat, tau_s=tau_s, zhat0=zhat0, ez2=ez2)


def g_out(channel, phat, y, tau_p):
    if channel.kind == AWGN:
        return g_out_awgn(phat, y, tau_p, channel.snr)
    if channel.kind == BSC:
        return g_out_bsc(phat, y, tau_p, channel.epsilon)
    if channel.kind == Z:
        return g_out_z(phat, y, tau_p, channel.epsilon)
    raise ValueError(f"unsupported channel {channel!r}")


def input_linear_step(state, A, A2=None):
    A2 = _squared(A, A2)
    precision = A2.rmatvec(state.tau_s)
    with np.errstate(divide="ignore"):
        tau_r = np.where(precision > 1.0 / TAU_R_CAP, 1.0 / precision, TAU_R_CAP)
    state.tau_r = np.maximum(tau_r, TAU_FLOOR)
    state.rhat = state.xhat + state.tau_r * _rmatvec(A, state.shat)
    return state


def g_in(rhat, tau_r, B):
    """Posterior mean and variance of a 1-of-B section under Gaussian pseudo-data.

    Candidate ``e_i`` gets weight ``exp((2 r_i - 1) / (2 tau_i))``; the
    normalization is a per-section softmax.
    """
    rhat = np.asarray(rhat, dtype=float)
    tau_r = np.asarray(tau_r, dtype=float)
    logits = (2.0 * rhat - 1.0) / (2.0 * tau_r)
    xhat = softmax(core.sections(logits, B), axis=-1).reshape(rhat.shape)
    return xhat, xhat - xhat**2


def _check_finite(t, **arrays):
    for name, arr in arrays.items():
        if not np.all(np.isfinite(arr)):
            raise NumericalError(t, name)


def gamp_iteration(state, A, y, channel, B, A2=None, damping=1.0):
    """Advance ``state`` by one full iteration in place.

    Returns False, leaving ``xhat`` untouched, when the channel outputs carry
    no information about any component (every ``tau_r`` at its cap). That
    happens on the binary channels once the estimate is exactly hard: no
    ``phat`` lies near the sign boundary, all ``tau_s`` vanish, and applying
    ``g_in`` would reset the estimate to the prior.
    """
    A2 = _squared(A, A2)
    output_linear_step(state, A, A2)
    _check_finite(state.t, tau_p=state.tau_p, phat=state.phat)
    out = g_out(channel, state.phat, y, state.tau_p)
    shat = out.shat
    if damping != 1.0:
        shat = damping * shat + (1.0 - damping) * state.shat
    state.shat, state.tau_s = shat, out.tau_s
    _check_finite(state.t, shat=state.shat, tau_s=state.tau_s)
    input_linear_step(state, A, A2)
    _check_finite(state.t, rhat=state.rhat, tau_r=state.tau_r)
    if np.all(state.tau_r >= TAU_R_CAP):
        return False
    state.xhat, state.tau_x = g_in(state.rhat, state.tau_r, B)
    _check_finite(state.t, xhat=state.xhat)
    state.t += 1
    return True


def decode(A, y, params, max_iters=200, stop_tol=1e-8, x_true=None, damping=1.0,
           stop_on_zero_ser=False, var_tol=VAR_TOL):
    """Run GAMP on ``y = channel(A x)``.

    Stops after ``max_iters`` iterations, when the mean absolute change of
    ``xhat`` drops below ``stop_tol``, or when the decoder's own predicted
    MSE per section, ``sum(tau_x) / L``, falls below ``var_tol``. The last
    rule matters on the binary channels: once the estimate is that sharp,
    ``tau_p`` is so small that the one or two rows with ``phat`` inside
    ``+-sqrt(tau_p)`` carry weights of order ``1 / tau_p`` and further
    iterations only amplify round-off. Row ``t`` of the SER/MSE paths is the
    estimate after ``t`` iterations (row 0 is the prior). With
    ``stop_on_zero_ser`` (needs ``x_true``) the run also ends once every
    section is decoded correctly.
    """
    A = np.asarray(A)
    y = np.asarray(y, dtype=float)
    if A.shape != (params.M, params.N):
        raise ValueError(f"A has shape {A.shape}, expected {(params.M, params.N)}")
    if y.shape != (params.M,):
        raise ValueError(f"y has shape {y.shape}, expected {(params.M,)}")
    if not 0 < damping <= 1:
        raise ValueError("damping must lie in (0, 1]")
    if stop_on_zero_ser and x_true is None:
        raise ValueError("stop_on_zero_ser needs x_true")
    B = params.B
    A2 = SquaredOperator(A)
    state = init_state(params)

    ser_path, mse_path = [], None if x_true is None else []

    def record():
        if x_true is not None:
            ser_path.append(core.ser(x_true, core.hard_decision(state.xhat, B), B))
            mse_path.append(core.mse(x_true, state.xhat, B))

    record()
    converged = False
    while state.t < max_iters:
        previous = state.xhat
        if not gamp_iteration(state, A, y, params.channel, B, A2, damping):
            converged = True
            break
        record()
        if np.mean(np.abs(state.xhat - previous)) < stop_tol:
            converged = True
            break
        if np.sum(state.tau_x) / params.L < var_tol:
            converged = True
            break
        if stop_on_zero_ser and ser_path[-1] == 0.0:
            break

    decoded = core.hard_decision(state.xhat, B)
    if x_true is None:
        ser_path = []
    return DecodeReport(xhat=state.xhat, decoded=decoded, n_iter=state.t,
                        converged=converged, ser=ser_path, mse=mse_path, state=state)


class GampDecoder(BaseEstimator):
    """Estimator wrapper around :func:`decode`.

    ``fit(A, y)`` estimates the message behind the channel output ``y``;
    ``predict(A)`` re-encodes the hard decision.

    Parameters
    ----------
    B : int
        Section size.
    channel : {'awgn', 'bsc', 'z'}
    epsilon, snr : float
        Channel parameter for the binary channels / AWGN.
    max_iter : int
    tol : float
        Stop when the mean absolute change of the estimate falls below this.
    var_tol : float
        Stop when the predicted MSE per section falls below this.
    damping : float
        Weight of the new ``shat`` in a convex combination with the old one.
    """

    def __init__(self, B=2, channel="bsc", epsilon=0.1, snr=None, max_iter=200,
                 tol=1e-8, var_tol=VAR_TOL, damping=1.0):
        self.B = B
        self.channel = channel
        self.epsilon = epsilon
        self.snr = snr
        self.max_iter = max_iter
        self.tol = tol
        self.var_tol = var_tol
        self.damping = damping

    def _channel_model(self):
        return ChannelModel.from_name(self.channel, epsilon=self.epsilon, snr=self.snr)

    def fit(self, A, y, x_true=None):
        A = check_array(A, dtype=[np.float64, np.float32])
        y = check_array(y, ensure_2d=False, dtype=np.float64)
        M, N = A.shape
        if N % self.B:
            raise ValueError(f"A has {N} columns, not a multiple of B={self.B}")
        params = core.CodeParams(B=self.B, L=N // self.B, M=M, channel=self._channel_model())
        report = decode(A, y, params, max_iters=self.max_iter, stop_tol=self.tol,
                        x_true=x_true, damping=self.damping, var_tol=self.var_tol)
        self.coef_ = report.xhat
        self.tau_x_ = report.state.tau_x
        self.decoded_ = report.decoded
        self.n_iter_ = report.n_iter
        self.converged_ = report.converged
        self.ser_path_ = report.ser
        self.mse_path_ = report.mse
        self.n_features_in_ = N
        return self

    def predict(self, A):
        check_is_fitted(self, "decoded_")
        A = check_array(A, dtype=[np.float64, np.float32])
        return core.encode(A, self.decoded_)

    def score(self, A, y):
        """Fraction of channel outputs reproduced by the re-encoded decision."""
        z = self.predict(A)
        y = np.asarray(y, dtype=float)
        if self.channel == AWGN:
            return -float(np.mean((y - z) ** 2))
        return float(np.mean(np.where(z >= 0, 1.0, -1.0) == y))
