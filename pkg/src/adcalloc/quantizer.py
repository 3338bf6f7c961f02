"""AQNM quantization statistics.

A b-bit ADC pair is modeled as y_q = alpha * y + n_q with gain alpha = 1 - beta,
where beta is the normalized distortion of the scalar MMSE quantizer for a
Gaussian input.  Tabulated beta values cover b in 1..5; beyond that the
analytic law beta = (pi*sqrt(3)/2) * 2^(-2b) applies.  b = 0 deactivates the
chain (alpha = 0, beta = 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Normalized MMSE-quantizer distortion for a unit-variance Gaussian input.
BETA_TABLE = {1: 0.3634, 2: 0.1175, 3: 0.03454, 4: 0.009497, 5: 0.002499}

BETA_COEF = math.pi * math.sqrt(3.0) / 2.0


def beta(b: int) -> float:
    """Normalized quantization distortion for an integer bit count."""
    b = int(b)
    if b < 0:
        raise ValueError("bit count must be non-negative")
    if b == 0:
        return 1.0
    if b <= 5:
        return BETA_TABLE[b]
    return BETA_COEF * 2.0 ** (-2 * b)


def beta_relaxed(b):
    """Analytic distortion law (pi*sqrt(3)/2) * 2^(-2b), valid for real b."""
    return BETA_COEF * np.exp2(-2.0 * np.asarray(b, dtype=float))


def alpha(b: int) -> float:
    return 1.0 - beta(b)


@dataclass(frozen=True)
class ResolutionProfile:
    """Per-chain bit counts with the matching quantizer gains alpha = 1 - beta.

    ``from_real_bits`` builds a profile for a real-valued (relaxed) allocation
    using the analytic distortion law, clipped so beta <= 1; ``bits`` then
    holds the real values.
    """

    bits: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self) -> None:
        if not (self.bits.shape == self.alpha.shape == self.beta.shape):
            raise ValueError("profile fields must have matching shapes")

    @property
    def n_chains(self) -> int:
        return self.bits.size

    @classmethod
    def from_bits(cls, bits) -> "ResolutionProfile":
        arr = np.asarray(bits, dtype=int)
        betas = np.array([beta(b) for b in arr.ravel()]).reshape(arr.shape)
        return cls(bits=arr, alpha=1.0 - betas, beta=betas)

    @classmethod
    def from_real_bits(cls, real_bits) -> "ResolutionProfile":
        arr = np.maximum(np.asarray(real_bits, dtype=float), 0.0)
        betas = np.minimum(beta_relaxed(arr), 1.0)
        return cls(bits=arr, alpha=1.0 - betas, beta=betas)


def msqe(sigma_sq: float, b: int) -> float:
    """Mean square quantization error beta(b) * sigma^2."""
    if sigma_sq < 0:
        raise ValueError("variance must be non-negative")
    return beta(b) * sigma_sq


def quantization_noise_covariance(channel, profile: ResolutionProfile,
                                  p_u: float) -> np.ndarray:
    """Diagonal of R_nqnq: alpha_i * beta_i * (p_u ||row_i||^2 + 1)."""
    from .channel import row_gains

    if profile.n_chains != channel.n_rf:
        raise ValueError("profile length does not match channel N_RF")
    gains = row_gains(channel)
    return profile.alpha * profile.beta * (p_u * gains + 1.0)


def lloyd_max_beta_oracle(b: int, n_points: int = 200_001,
                          max_iter: int = 2000, tol: float = 1e-10) -> float:
    """Normalized distortion of the MMSE scalar quantizer for a unit Gaussian.

    Fixed-point (Lloyd) iteration on a fine grid over [-8, 8]: levels move to
    cell centroids, cell edges to level midpoints, until the levels stop
    moving.  Test oracle only.
    """
    if not 1 <= b <= 5:
        raise ValueError("oracle covers 1..5 bits")
    x = np.linspace(-8.0, 8.0, n_points)
    w = np.exp(-0.5 * x * x)
    w /= w.sum()
    n_levels = 2 ** b

    cdf = np.cumsum(w)
    targets = (np.arange(n_levels) + 0.5) / n_levels
    levels = x[np.searchsorted(cdf, targets)]

    idx = np.zeros(x.size, dtype=int)
    for _ in range(max_iter):
        edges = 0.5 * (levels[:-1] + levels[1:])
        idx = np.searchsorted(edges, x)
        mass = np.bincount(idx, weights=w, minlength=n_levels)
        first = np.bincount(idx, weights=w * x, minlength=n_levels)
        new_levels = np.where(mass > 0, first / np.maximum(mass, 1e-300), levels)
        moved = np.max(np.abs(new_levels - levels))
        levels = new_levels
        if moved < tol:
            break
    else:
        raise RuntimeError("Lloyd-Max iteration did not converge")

    err = x - levels[idx]
    return float(np.sum(w * err * err) / np.sum(w * x * x))
