"""Reference computations that share no code with the package.

Each oracle works from the channel definition (likelihood of y given z) or
from the probabilistic model of a section, never from the closed forms.
"""

import math

import mpmath as mp
import numpy as np
from scipy import integrate


def likelihood(kind, param, y, z):
    """P(y | z) for the binary channels, or the Gaussian density for awgn."""
    if kind == "awgn":
        var = 1.0 / param
        return math.exp(-0.5 * (y - z) ** 2 / var) / math.sqrt(2 * math.pi * var)
    s = 1.0 if z >= 0 else -1.0
    if kind == "bsc":
        return 1.0 - param if y == s else param
    if kind == "z":
        if s > 0:
            return 1.0 if y > 0 else 0.0
        return param if y > 0 else 1.0 - param
    raise ValueError(kind)


def output_moments_quad(kind, param, p, tau, y):
    """E[z], E[z^2] under N(z; p, tau) P(y|z), normalised, by adaptive quadrature.

    Integrates over t = (z - p) / sqrt(tau) with a breakpoint where the
    likelihood jumps (binary channels) or peaks (awgn).
    """
    s = math.sqrt(tau)

    def density(t):
        return math.exp(-0.5 * t * t) * likelihood(kind, param, y, p + s * t)

    if kind == "awgn":
        peak = (y - p) / s
        lo, hi = min(-40.0, peak - 40.0), max(40.0, peak + 40.0)
        pieces = [(lo, hi, [peak])]
    else:
        cut = -p / s
        pieces = [(-np.inf, cut, None), (cut, np.inf, None)]
    m = [0.0, 0.0, 0.0]
    for lo, hi, pts in pieces:
        for k in range(3):
            f = (lambda t, k=k: density(t) * (p + s * t) ** k)
            kwargs = dict(epsabs=0.0, epsrel=1e-12, limit=400)
            if pts is not None:
                kwargs["points"] = pts
            val, _ = integrate.quad(f, lo, hi, **kwargs)
            m[k] += val
    return m[1] / m[0], m[2] / m[0]


def section_posterior_enum(r, tau, dps=40):
    """Posterior mean and variance of a one-hot section by explicit enumeration.

    Candidate i is the unit vector e_i; its weight is prod_j N(r_j; e_ij, tau_j).
    Evaluated in multiprecision.
    """
    B = len(r)
    with mp.workdps(dps):
        logw = []
        for i in range(B):
            acc = mp.mpf(0)
            for j in range(B):
                d = mp.mpf(r[j]) - (1 if i == j else 0)
                acc -= d * d / (2 * mp.mpf(tau[j]))
            logw.append(acc)
        top = max(logw)
        w = [mp.e ** (lw - top) for lw in logw]
        total = mp.fsum(w)
        post = [wi / total for wi in w]
        mean = [float(pi) for pi in post]
        var = [float(mp.fsum(post[i] * ((1 if i == j else 0) - post[j]) ** 2 for i in range(B)))
               for j in range(B)]
    return np.array(mean), np.array(var)


def _p_plus(kind, eps, p, E):
    """P(y = +1 | p) from the Gaussian half-line masses, multiprecision."""
    upper = mp.ncdf(p / mp.sqrt(E))  # mass of N(p, E) on z > 0
    if kind == "bsc":
        neg, pos = eps, 1 - eps
    else:
        neg, pos = eps, mp.mpf(1)
    return neg * (1 - upper) + pos * upper


def fisher_fd(kind, eps, p, E, dps=40, h=None):
    """Fisher information of p for a binary output by central differences of P(y|p)."""
    with mp.workdps(dps):
        p, E, eps = mp.mpf(p), mp.mpf(E), mp.mpf(eps)
        h = mp.mpf(10) ** (-12) if h is None else mp.mpf(h)
        f = _p_plus(kind, eps, p, E)
        df = (_p_plus(kind, eps, p + h, E) - _p_plus(kind, eps, p - h, E)) / (2 * h)
        return float(df * df / (f * (1 - f)))


def se_mse_gh_b2(sigma, n=80):
    """Section MMSE for B=2 by two-dimensional Gauss-Hermite quadrature."""
    x, w = np.polynomial.hermite_e.hermegauss(n)
    w = w / w.sum()
    var_c = sigma**2  # log2(2) = 1
    z1, z2 = np.meshgrid(x, x, indexing="ij")
    r1 = 1.0 + math.sqrt(var_c) * z1
    r2 = math.sqrt(var_c) * z2
    # posterior weight of the true position: logistic in the logit gap
    gap = (r1 - r2) / var_c
    f1 = 0.5 * (1.0 + np.tanh(0.5 * gap))
    err = 2.0 * (1.0 - f1) ** 2
    return float(np.einsum("i,j,ij->", w, w, err))


def potential_gh_b2(E, R, snr, n=80):
    """phi_2(E) for the AWGN channel with Gauss-Hermite in place of Monte Carlo."""
    x, w = np.polynomial.hermite_e.hermegauss(n)
    w = w / w.sum()
    noise = 1.0 / snr + E
    s2 = noise * R
    s = math.sqrt(s2)
    energy = -(1.0 / (2.0 * R)) * (math.log(noise) + (1.0 - E) / noise)
    z1, z2 = np.meshgrid(x, x, indexing="ij")
    a1 = 0.5 / s2 + z1 / s
    a2 = -0.5 / s2 + z2 / s
    lse = np.logaddexp(a1, a2)
    return energy + float(np.einsum("i,j,ij->", w, w, lse))


def fisher_quad_mean(fisher_fn, E):
    """E_p[F(p)] for p ~ N(0, 1 - E) by adaptive quadrature."""
    sd = math.sqrt(1.0 - E)

    def f(p):
        return float(fisher_fn(p)) * math.exp(-0.5 * (p / sd) ** 2) / (sd * math.sqrt(2 * math.pi))

    w = math.sqrt(E)
    val = 0.0
    for lo, hi in [(-np.inf, -40 * w), (-40 * w, 0.0), (0.0, 40 * w), (40 * w, np.inf)]:
        val += integrate.quad(f, lo, hi, epsabs=0.0, epsrel=1e-10, limit=400)[0]
    return val
