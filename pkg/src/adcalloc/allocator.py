"""ADC bit-allocation: closed-form relaxed solutions and integer mapping.

The relaxed problem minimizes total quantization distortion under a total ADC
power budget of N_RF fixed b-bar-bit converters.  Its KKT solution allocates
bits logarithmically in the chain SNR raised to the 1/3 power:

    mmsqe:     b_i = b_bar + log2( N_RF (1 + SNR_i)^(1/3) / sum_j (1 + SNR_j)^(1/3) )
    revmmsqe:  b_i = b_bar + log2( N_RF gain_i^(1/3) / sum_j gain_j^(1/3) )

with SNR_i = p_u * gain_i and gain_i = ||row_i of H_b||^2.  The revised form
drops the additive-noise term, which makes it robust at low SNR.  Real-valued
solutions are mapped to non-negative integers by deactivating non-positive
bits, ceiling the rest, and walking back the chains with the smallest
distortion-per-power tradeoff until the budget holds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .channel import ChannelRealization, expected_row_gains, row_gains

STRATEGIES = ("fixed", "mmsqe", "revmmsqe", "mixed")

# Integer bits are capped here; 12 bits doubles as the infinite-resolution
# proxy so switching-power arithmetic stays bounded.
BIT_CAP = 12


@dataclass(frozen=True)
class BitAllocation:
    """Relaxed (real) solution and its non-negative integer mapping."""

    real_bits: np.ndarray
    integer_bits: np.ndarray
    constraint_bits: int

    @property
    def n_rf(self) -> int:
        return self.integer_bits.size

    @property
    def active_count(self) -> int:
        return int(np.count_nonzero(self.integer_bits > 0))

    @property
    def adc_steps(self) -> int:
        """Total conversion steps sum_{b_i > 0} 2^b_i (zero-bit chains are off)."""
        b = self.integer_bits
        return int(np.sum(np.where(b > 0, 2 ** b.astype(np.int64), 0)))

    @property
    def budget_steps(self) -> int:
        return self.n_rf * 2 ** self.constraint_bits

    @property
    def feasible(self) -> bool:
        return self.adc_steps <= self.budget_steps


def mmsqe_real_solution(gains, p_u: float, constraint_bits: int) -> np.ndarray:
    """Relaxed allocation minimizing the distortion of the full received signal."""
    gains = np.asarray(gains, dtype=float)
    if gains.size == 0:
        raise ValueError("row gains must be non-empty")
    if p_u < 0:
        raise ValueError("transmit power must be non-negative")
    weights = np.cbrt(1.0 + p_u * gains)
    return constraint_bits + np.log2(gains.size * weights / weights.sum())


def revmmsqe_real_solution(gains, constraint_bits: int) -> np.ndarray:
    """Relaxed allocation minimizing the distortion of the noise-free signal.

    Zero-gain rows take no share of the budget: they map to -inf (0 bits after
    integer mapping) and are excluded from the normalizing sum.
    """
    gains = np.asarray(gains, dtype=float)
    if gains.size == 0:
        raise ValueError("row gains must be non-empty")
    nonzero = gains > 0
    if not nonzero.any():
        raise ValueError("at least one row gain must be positive")
    weights = np.where(nonzero, np.cbrt(gains), 0.0)
    out = np.full(gains.shape, -np.inf)
    out[nonzero] = constraint_bits + np.log2(
        gains.size * weights[nonzero] / weights.sum())
    return out


def tradeoff(b_hat: float, sigma_sq: float) -> float:
    """Distortion increase per unit power saved by flooring b_hat.

    (2^(-2*floor(b)) - 2^(-2b)) / (2^b - 2^floor(b)) * sigma^2, defined for
    positive non-integer b.
    """
    if sigma_sq < 0:
        raise ValueError("variance must be non-negative")
    if b_hat <= 0 or float(b_hat).is_integer():
        raise ValueError("tradeoff is defined for positive non-integer bits")
    lo = np.floor(b_hat)
    num = 2.0 ** (-2.0 * lo) - 2.0 ** (-2.0 * b_hat)
    den = 2.0 ** b_hat - 2.0 ** lo
    return float(num / den * sigma_sq)


def integer_mapping(real_bits, sigmas, constraint_bits: int,
                    bit_cap: int = BIT_CAP) -> BitAllocation:
    """Map a relaxed solution to feasible non-negative integer bits.

    Non-positive entries deactivate their chain; integers are kept; the rest
    are ceiled.  While the conversion-step budget N_RF * 2^b_bar is exceeded,
    the ceiled chain with the smallest tradeoff value is decremented once
    (ties broken toward the lowest index).
    """
    real = np.asarray(real_bits, dtype=float)
    sig = np.asarray(sigmas, dtype=float)
    if real.shape != sig.shape:
        raise ValueError("real_bits and sigmas must have matching shapes")
    n_rf = real.size
    bits = np.zeros(n_rf, dtype=int)

    positive = real > 0
    is_integer = positive & (np.floor(real) == real)
    bits[is_integer] = np.minimum(real[is_integer].astype(int), bit_cap)
    fractional = positive & ~is_integer
    bits[fractional] = np.minimum(np.ceil(real[fractional]).astype(int), bit_cap)

    budget = n_rf * 2 ** constraint_bits
    total = int(np.sum(np.where(bits > 0, 2 ** bits.astype(np.int64), 0)))
    if total > budget:
        candidates = np.flatnonzero(fractional)
        t_vals = np.array([tradeoff(real[i], sig[i]) for i in candidates])
        for i in candidates[np.argsort(t_vals, kind="stable")]:
            if total <= budget:
                break
            total -= 2 ** int(bits[i])
            bits[i] -= 1
            if bits[i] > 0:
                total += 2 ** int(bits[i])
        if total > budget:
            raise RuntimeError("mapping could not reach the power budget; "
                               "input was not a constraint-tight solution")
    return BitAllocation(real_bits=real, integer_bits=bits,
                         constraint_bits=int(constraint_bits))


def allocate(channel: ChannelRealization, p_u: float, constraint_bits: int,
             strategy: str) -> BitAllocation:
    """Run one allocation strategy on a channel realization."""
    gains = row_gains(channel)
    return allocate_from_gains(gains, p_u, constraint_bits, strategy)


def allocate_from_gains(gains, p_u: float, constraint_bits: int,
                        strategy: str) -> BitAllocation:
    gains = np.asarray(gains, dtype=float)
    if strategy == "fixed":
        bits = np.full(gains.size, int(constraint_bits))
        return BitAllocation(real_bits=bits.astype(float), integer_bits=bits,
                             constraint_bits=int(constraint_bits))
    if strategy == "mmsqe":
        real = mmsqe_real_solution(gains, p_u, constraint_bits)
        return integer_mapping(real, p_u * gains + 1.0, constraint_bits)
    if strategy == "revmmsqe":
        real = revmmsqe_real_solution(gains, constraint_bits)
        return integer_mapping(real, p_u * gains, constraint_bits)
    if strategy == "mixed":
        return mixed_adc_allocation(gains, constraint_bits)
    raise ValueError(f"unknown strategy {strategy!r}")


def mixed_adc_allocation(gains, constraint_bits: int) -> BitAllocation:
    """1-bit/7-bit baseline: strongest chains get 7 bits within the budget.

    All chains start at 1 bit; upgrades proceed in decreasing row-gain order
    (lowest index first on ties) while total conversion steps stay within
    N_RF * 2^b_bar.
    """
    if constraint_bits < 1:
        raise ValueError("mixed allocation needs a budget of at least 1 bit")
    gains = np.asarray(gains, dtype=float)
    n_rf = gains.size
    bits = np.ones(n_rf, dtype=int)
    budget = n_rf * 2 ** constraint_bits
    total = 2 * n_rf
    upgrade_cost = 2 ** 7 - 2
    for i in np.argsort(-gains, kind="stable"):
        if total + upgrade_cost > budget:
            break
        bits[i] = 7
        total += upgrade_cost
    return BitAllocation(real_bits=bits.astype(float), integer_bits=bits,
                         constraint_bits=int(constraint_bits))


def slow_switching_allocation(supports: Sequence[np.ndarray], gamma, n_rf: int,
                              p_u: float, constraint_bits: int, strategy: str,
                              gains: Optional[np.ndarray] = None) -> BitAllocation:
    """Block-level allocation from slowly changing channel structure.

    Uses the expected row gains given supports and gamma (unit-variance
    small-scale fading); pass ``gains`` to allocate from a specific
    realization instead.  Held fixed for a whole block.
    """
    if strategy not in ("mmsqe", "revmmsqe"):
        raise ValueError("slow switching applies to mmsqe/revmmsqe only")
    if gains is None:
        gains = expected_row_gains(supports, gamma, n_rf)
    return allocate_from_gains(gains, p_u, constraint_bits, strategy)
