"""Potential function of the AWGN decoder and its local maxima.

The maxima of ``phi(E)`` sit at the MSE values the decoder can get stuck
at. One maximum at small E means the rate decodes; a flat stretch followed
by a rise marks the BP threshold; two competing maxima mark the optimal
threshold.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ._validation import as_rng, check_positive, check_section_size
from .state_evolution import MC_SAMPLES, awgn_sigma2


def _normal_block(B, mc_samples, seed, normals):
    if normals is not None:
        return np.asarray(normals, dtype=float)
    return as_rng(seed).standard_normal((mc_samples, B))


def potential_awgn(E, B, R, snr, mc_samples=MC_SAMPLES, seed=0, normals=None, literal_z1=False):
    """Evaluate ``phi_B(E)`` for the AWGN channel by Monte Carlo.

    The integral term averages
    ``log(exp(1/(2 S^2) + z_1/S) + sum_{i>=2} exp(-1/(2 S^2) + z_i/S))`` over
    i.i.d. standard normals. ``literal_z1=True`` puts ``z_1`` in every term of
    the sum instead, which is only useful for comparison.
    """
    B = check_section_size(B)
    check_positive(R, "R")
    check_positive(snr, "snr")
    if not 0 < E <= 1:
        raise ValueError(f"E must lie in (0, 1], got {E}")
    z = _normal_block(B, mc_samples, seed, normals)
    s2 = awgn_sigma2(E, B, R, snr)
    s = math.sqrt(s2)
    noise = 1.0 / snr + E
    energy = -(math.log2(B) / (2.0 * R)) * (math.log(noise) + (1.0 - E) / noise)
    a = np.empty_like(z)
    a[:, 0] = 0.5 / s2 + z[:, 0] / s
    if literal_z1:
        a[:, 1:] = (-0.5 / s2 + z[:, 0] / s)[:, None]
    else:
        a[:, 1:] = -0.5 / s2 + z[:, 1:] / s
    return energy + float(np.mean(logsumexp(a, axis=1)))


def default_grid(n_points=200, E_min=1e-4, E_max=1.0):
    """Geometric grid in descending order."""
    if n_points < 3:
        raise ValueError("a potential scan needs at least 3 grid points")
    return np.geomspace(E_max, E_min, n_points)


@dataclass
class PotentialCurve:
    grid: np.ndarray
    phi: np.ndarray
    B: int
    R: float
    snr: float
    mc_samples: int = MC_SAMPLES
    seed: int = 0


def potential_curve(B, R, snr, grid=None, mc_samples=MC_SAMPLES, seed=0, literal_z1=False):
    """``phi`` over ``grid`` (descending E) with the same normals at every point."""
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    if grid.size < 3:
        raise ValueError("a potential scan needs at least 3 grid points")
    steps = np.diff(grid)
    if not (np.all(steps < 0) or np.all(steps > 0)):
        raise ValueError("grid must be strictly monotone")
    z = _normal_block(B, mc_samples, seed, None)
    phi = np.array([potential_awgn(E, B, R, snr, normals=z, literal_z1=literal_z1) for E in grid])
    return PotentialCurve(grid=grid, phi=phi, B=B, R=R, snr=snr, mc_samples=mc_samples, seed=seed)


@dataclass(frozen=True)
class LocalMaximum:
    E: float
    phi: float
    boundary: bool = False


def _smooth(phi, window):
    if window <= 1:
        return phi
    kernel = np.ones(window) / window
    padded = np.pad(phi, (window // 2, window - 1 - window // 2), mode="edge")
    return np.convolve(padded, kernel, mode="valid")


def scan_local_maxima(curve, window=1):
    """Local maxima of ``curve.phi``, ordered by descending E.

    Interior points must exceed both neighbours. A grid end is reported,
    flagged ``boundary=True``, when it exceeds its only neighbour.
    """
    grid = np.asarray(curve.grid, dtype=float)
    phi = np.asarray(curve.phi, dtype=float)
    if grid.size < 3:
        raise ValueError("need at least 3 grid points")
    smooth = _smooth(phi, window)
    found = []
    for i in range(grid.size):
        left = smooth[i - 1] if i > 0 else -np.inf
        right = smooth[i + 1] if i < grid.size - 1 else -np.inf
        if smooth[i] > left and smooth[i] > right:
            found.append(LocalMaximum(E=float(grid[i]), phi=float(phi[i]),
                                      boundary=i in (0, grid.size - 1)))
    found.sort(key=lambda m: -m.E)
    return found


def interior_maxima(curve, window=1):
    return [m for m in scan_local_maxima(curve, window) if not m.boundary]
