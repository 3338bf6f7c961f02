"""Capacity, GMI, MRC ergodic rates and their closed-form approximations.

Conventions: noise is unit variance per RF chain, p_u is the linear transmit
power, and rates are in bits/s/Hz.  Deactivated chains (alpha = 0) carry no
signal and are dropped from matrix-valued expressions so covariances stay
positive definite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import quantizer
from .allocator import (BIT_CAP, allocate, allocate_from_gains,
                        slow_switching_allocation)
from .channel import (ChannelRealization, SystemConfig, UserDrop,
                      channel_from_supports, row_gains, sample_supports,
                      sample_user_drop)
from .quantizer import ResolutionProfile

METRIC_KINDS = ("capacity", "capacity_low", "capacity_low_revba", "gmi",
                "mrc_mc", "analytic", "analytic_largepath",
                "analytic_multicell", "asymptotic")

MC_STRATEGIES = ("fixed", "mmsqe", "revmmsqe", "mixed", "mmsqe_slow",
                 "revmmsqe_slow")


@dataclass(frozen=True)
class RateReport:
    """Per-user and sum rates for one configuration point."""

    per_user_rate: np.ndarray
    sum_rate: float
    metric_kind: str

    def __post_init__(self) -> None:
        if self.metric_kind not in METRIC_KINDS:
            raise ValueError(f"unknown metric kind {self.metric_kind!r}")

    @classmethod
    def from_per_user(cls, rates, kind: str) -> "RateReport":
        rates = np.asarray(rates, dtype=float)
        return cls(per_user_rate=rates, sum_rate=float(rates.sum()),
                   metric_kind=kind)


@dataclass(frozen=True)
class MultiCellScene:
    """Own-cell gains plus per-interfering-cell gain vectors."""

    gamma_own: np.ndarray
    gamma_interferers: np.ndarray  # shape (N_c, N_u); N_c = 0 for single cell

    def __post_init__(self) -> None:
        if np.any(self.gamma_own <= 0):
            raise ValueError("own-cell gains must be positive")
        if self.gamma_interferers.size and np.any(self.gamma_interferers <= 0):
            raise ValueError("interferer gains must be positive")

    @property
    def n_cells(self) -> int:
        return self.gamma_interferers.shape[0]


def _active_parts(channel: ChannelRealization, profile: ResolutionProfile):
    if profile.n_chains != channel.n_rf:
        raise ValueError("profile length does not match channel N_RF")
    act = profile.alpha > 0
    hb = channel.beamspace[act]
    return act, hb, profile.alpha[act], profile.beta[act]


def capacity(channel: ChannelRealization, profile: ResolutionProfile,
             p_u: float) -> float:
    """log2 det(I + p_u R_eta^-1 D_a H_b H_b^H D_a) with R_eta = D_a^2 + R_nqnq.

    Evaluated as a Hermitian positive-definite log-determinant on the
    whitened N_u x N_u Gram matrix.
    """
    act, hb, a, b = _active_parts(channel, profile)
    if not act.any():
        return 0.0
    gains = np.sum(np.abs(hb) ** 2, axis=1)
    r_eta = a * a + a * b * (p_u * gains + 1.0)
    if np.any(r_eta <= 0):
        raise RuntimeError("noise covariance is not positive definite")
    w = (a / np.sqrt(r_eta))[:, None] * hb
    gram = np.eye(channel.n_users) + p_u * (w.conj().T @ w)
    chol = np.linalg.cholesky(0.5 * (gram + gram.conj().T))
    return float(2.0 * np.sum(np.log2(np.real(np.diag(chol)))))


def capacity_low_snr(channel: ChannelRealization, profile: ResolutionProfile,
                     p_u: float) -> float:
    """Trace-based low-SNR approximation of ``capacity``."""
    act, hb, a, b = _active_parts(channel, profile)
    if not act.any():
        return 0.0
    gains = np.sum(np.abs(hb) ** 2, axis=1)
    sinr = p_u * a * gains / (1.0 + p_u * (1.0 - a) * gains)
    return float(np.log2(1.0 + sinr.sum()))


def capacity_low_snr_revba(channel: ChannelRealization, p_u: float,
                           constraint_bits: int) -> float:
    """Low-SNR capacity with the revised allocation folded in as a channel
    function.

    Each chain's distortion term is pi*sqrt(3)*2^-(2*b_bar+1) times
    min(N_RF^-2 gain_i^(-2/3) (sum_j gain_j^(1/3))^2, 2^(2*b_bar)), the relaxed
    solution's distortion clipped at the zero-bit level.  The signal factor
    keeps the non-negativity clip (1 - term)^+ so chains driven to zero bits
    contribute nothing instead of going negative.
    """
    gains = row_gains(channel)
    nz = gains > 0
    if not nz.any():
        raise ValueError("channel has no nonzero rows")
    croots = np.cbrt(gains[nz])
    coef = math.pi * math.sqrt(3.0) * 2.0 ** (-(2 * constraint_bits + 1))
    ratio = (croots.sum() ** 2) / (gains.size ** 2 * croots ** 2)
    term = coef * np.minimum(ratio, 4.0 ** constraint_bits)
    g = gains[nz]
    sinr = p_u * np.maximum(1.0 - term, 0.0) * g / (1.0 + p_u * term * g)
    return float(np.log2(1.0 + sinr.sum()))


def gmi_user(channel: ChannelRealization, profile: ResolutionProfile,
             p_u: float, n: int) -> float:
    """Nearest-neighbor-decoding rate of user n with the optimal linear combiner.

    kappa = R_ys^H R_yy^-1 R_ys with R_ys = sqrt(p_u) D_a h_n and
    R_yy = p_u D_a H H^H D_a + D_a^2 + R_nqnq; the rate is
    log2(1 + kappa / (1 - kappa)).
    """
    if not 0 <= n < channel.n_users:
        raise ValueError("user index out of range")
    act, hb, a, b = _active_parts(channel, profile)
    if not act.any():
        return 0.0
    gains = np.sum(np.abs(hb) ** 2, axis=1)
    r_eta = a * a + a * b * (p_u * gains + 1.0)
    w = a[:, None] * hb
    r_yy = p_u * (w @ w.conj().T) + np.diag(r_eta)
    r_ys = math.sqrt(p_u) * a * hb[:, n]
    kappa = float(np.real(r_ys.conj() @ np.linalg.solve(r_yy, r_ys)))
    if kappa >= 1.0:
        raise RuntimeError("kappa reached 1; covariance model violated")
    return float(np.log2(1.0 + kappa / (1.0 - kappa)))


def mrc_rates(channel: ChannelRealization, profile: ResolutionProfile,
              p_u: float) -> np.ndarray:
    """Instantaneous per-user rates under MRC with per-chain quantizer gains.

    Signal power p_u gamma_n |sum_i a_i^2 |g_in|^2|^2 against inter-user
    interference through D_a^2 and quantization-plus-AWGN noise through
    D_a^4 + D_a R_nqnq D_a.
    """
    if profile.n_chains != channel.n_rf:
        raise ValueError("profile length does not match channel N_RF")
    a = profile.alpha
    b = profile.beta
    g = channel.complex_gains
    gamma = channel.gamma
    abs2 = np.abs(g) ** 2

    signal = p_u * gamma * (abs2.T @ (a * a)) ** 2
    cross = (g.conj() * (a * a)[:, None]).T @ g
    interference = p_u * ((np.abs(cross) ** 2) @ gamma
                          - np.abs(np.diag(cross)) ** 2 * gamma)
    rgain = abs2 @ gamma
    q_diag = a ** 4 + a ** 3 * b * (p_u * rgain + 1.0)
    noise = abs2.T @ q_diag

    denom = interference + noise
    rates = np.zeros(channel.n_users)
    live = signal > 0
    rates[live] = np.log2(1.0 + signal[live] / denom[live])
    return rates


def mrc_rate_user(channel: ChannelRealization, profile: ResolutionProfile,
                  p_u: float, n: int) -> float:
    if not 0 <= n < channel.n_users:
        raise ValueError("user index out of range")
    return float(mrc_rates(channel, profile, p_u)[n])


def _path_moments(lambda_p: float):
    """E[L] and E[||g||^4] for L ~ max(Poisson(lambda_p), 1)."""
    e1 = lambda_p + math.exp(-lambda_p)
    e2 = lambda_p ** 2 + 2.0 * lambda_p + 2.0 * math.exp(-lambda_p)
    return e1, e2


def _rate_core(gamma_n: float, interference_sum: float, lambda_p: float,
               p_u: float, alpha_q: float, n_rf: int) -> float:
    e1, e2 = _path_moments(lambda_p)
    eta = e1 * (1.0 + 2.0 * p_u * gamma_n * (1.0 - alpha_q)
                + e1 * p_u / n_rf * interference_sum)
    return math.log2(1.0 + p_u * gamma_n * alpha_q * e2 / eta)


def analytic_rate(gamma, n: int, lambda_p: float, p_u: float, bits: int,
                  n_rf: int) -> float:
    """Closed-form ergodic MRC rate of user n with fixed b-bit ADCs.

    log2(1 + p gamma_n alpha (lp^2 + 2 lp + 2 e^-lp) / eta) with
    eta = (lp + e^-lp)(1 + 2 p gamma_n (1-alpha)
                         + (lp + e^-lp) p / N_RF * sum_{k != n} gamma_k).
    """
    gamma = np.asarray(gamma, dtype=float)
    if bits < 1:
        raise ValueError("analytic rate needs at least 1 quantization bit")
    interference = float(gamma.sum() - gamma[n])
    return _rate_core(float(gamma[n]), interference, lambda_p, p_u,
                      quantizer.alpha(bits), n_rf)


def analytic_rate_largepath(gamma, n: int, lambda_p: float, p_u: float,
                            bits: int, n_rf: int) -> float:
    """Moderate/large-path simplification: lp + e^-lp ~ lp."""
    gamma = np.asarray(gamma, dtype=float)
    if bits < 1:
        raise ValueError("analytic rate needs at least 1 quantization bit")
    a = quantizer.alpha(bits)
    gamma_n = float(gamma[n])
    interference = float(gamma.sum() - gamma_n)
    denom = 1.0 + p_u * (2.0 * gamma_n * (1.0 - a)
                         + lambda_p / n_rf * interference)
    return math.log2(1.0 + p_u * gamma_n * a * (lambda_p + 2.0) / denom)


def analytic_rate_multicell(scene: MultiCellScene, n: int, lambda_p: float,
                            p_u: float, bits: int, n_rf: int) -> float:
    """Closed-form ergodic rate with out-of-cell interference added to eta."""
    if bits < 1:
        raise ValueError("analytic rate needs at least 1 quantization bit")
    gamma_n = float(scene.gamma_own[n])
    interference = float(scene.gamma_own.sum() - gamma_n
                         + scene.gamma_interferers.sum())
    return _rate_core(gamma_n, interference, lambda_p, p_u,
                      quantizer.alpha(bits), n_rf)


def _resolve_alpha(bits: Optional[int], alpha_q: Optional[float]) -> float:
    if (bits is None) == (alpha_q is None):
        raise TypeError("give exactly one of bits= or alpha_q=")
    if bits is not None:
        return quantizer.alpha(bits)
    return float(alpha_q)


def asymptotic_rate(kind: str, **params) -> float:
    """Closed-form limits of the ergodic rate.

    kinds: inf_bits (b -> inf), inf_power (p_u -> inf),
    inf_power_inf_antennas (then N_r -> inf at fixed lambda_p),
    large_array_limit (p_u -> inf at lambda_p = eps N_r), and
    power_scaling (p_u = E_s / (tau N_r), N_r -> inf).
    """
    if kind == "inf_bits":
        return _asym_inf_bits(**params)
    if kind == "inf_power":
        return _asym_inf_power(**params)
    if kind == "inf_power_inf_antennas":
        return _asym_inf_power_inf_antennas(**params)
    if kind == "large_array_limit":
        return _asym_large_array(**params)
    if kind == "power_scaling":
        return _asym_power_scaling(**params)
    raise ValueError(f"unknown asymptotic kind {kind!r}")


def _asym_inf_bits(p_u: float, gamma_n: float, lambda_p: float, n_rf: int,
                   interference_sum: float = 0.0) -> float:
    # Exact b -> inf limit of the closed-form rate (alpha -> 1); the leading
    # (lp + e^-lp) factor of eta survives the limit.
    e1, e2 = _path_moments(lambda_p)
    denom = e1 * (1.0 + e1 * p_u / n_rf * interference_sum)
    return math.log2(1.0 + p_u * gamma_n * e2 / denom)


def _asym_inf_power(gamma_n: float, lambda_p: float, n_rf: int,
                    interference_sum: float = 0.0, bits: Optional[int] = None,
                    alpha_q: Optional[float] = None) -> float:
    a = _resolve_alpha(bits, alpha_q)
    e1, e2 = _path_moments(lambda_p)
    denom = e1 * (2.0 * gamma_n * (1.0 - a) + e1 / n_rf * interference_sum)
    if denom <= 0:
        raise ValueError("limit diverges: zero interference and alpha = 1")
    return math.log2(1.0 + gamma_n * a * e2 / denom)


def _asym_inf_power_inf_antennas(lambda_p: float, bits: Optional[int] = None,
                                 alpha_q: Optional[float] = None) -> float:
    a = _resolve_alpha(bits, alpha_q)
    if a >= 1.0:
        raise ValueError("limit diverges for alpha = 1")
    e1, e2 = _path_moments(lambda_p)
    return math.log2(1.0 + a * e2 / (2.0 * (1.0 - a) * e1))


def _asym_large_array(gamma_n: float, epsilon: float, tau: float, n_r: int,
                      interference_sum: float = 0.0, bits: Optional[int] = None,
                      alpha_q: Optional[float] = None) -> float:
    a = _resolve_alpha(bits, alpha_q)
    denom = 2.0 * gamma_n * (1.0 - a) + epsilon / tau * interference_sum
    if denom <= 0:
        raise ValueError("limit diverges: zero interference and alpha = 1")
    return math.log2(1.0 + gamma_n * a * (epsilon * n_r + 2.0) / denom)


def _asym_power_scaling(es: float, gamma_n: float, epsilon: float, tau: float,
                        bits: Optional[int] = None,
                        alpha_q: Optional[float] = None) -> float:
    a = _resolve_alpha(bits, alpha_q)
    return math.log2(1.0 + es * gamma_n * a * epsilon / tau)


@dataclass
class MCStats:
    """Ergodic Monte-Carlo outputs plus allocation/switching statistics.

    Switching step counts are in conversion steps (powers of two of the bit
    vectors, before and after each switch); the power module converts them to
    watts.
    """

    report: RateReport
    stderr_sum_rate: float
    block_sum_rates: np.ndarray
    n_act_mean: float
    adc_steps_mean: float
    up_steps_mean: float
    down_steps_mean: float
    bits_hist: np.ndarray
    n_blocks: int
    trials_per_block: int
    budget_ok: bool


def ergodic_rate_mc(config: SystemConfig, strategy: str, n_blocks: int,
                    trials_per_block: Optional[int] = None,
                    rng: Optional[np.random.Generator] = None, *,
                    drop: Optional[UserDrop] = None,
                    zero_bit_steps: float = 1.0) -> MCStats:
    """Monte-Carlo ergodic MRC rates for one strategy.

    Slowly changing structure (user drop, path supports) is resampled per
    block; complex gains per realization.  Coherence-time strategies allocate
    every realization, *_slow once per block, fixed/mixed per their rules.
    ``trials_per_block`` defaults to ``config.block_len``.  Reproducible:
    results depend only on the generator state and the block and trial
    indices.
    """
    if strategy not in MC_STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    if trials_per_block is None:
        trials_per_block = config.block_len
    if rng is None:
        raise ValueError("an explicit random generator is required")
    if n_blocks < 1 or trials_per_block < 1:
        raise ValueError("n_blocks and trials_per_block must be positive")
    n_rf = config.n_rf
    n_u = config.n_users
    bbar = config.constraint_bits
    p_u = config.tx_power_mw

    fixed_alloc = None
    if strategy == "fixed":
        fixed_alloc = allocate_from_gains(np.ones(n_rf), p_u, bbar, "fixed")

    rate_acc = np.zeros(n_u)
    block_sums = np.zeros(n_blocks)
    hist = np.zeros(BIT_CAP + 1)
    n_act_acc = 0.0
    steps_acc = 0.0
    up_acc = 0.0
    down_acc = 0.0
    prev_steps = None
    budget_ok = True
    held_drop = drop

    for b_idx, block_rng in enumerate(rng.spawn(n_blocks)):
        if held_drop is None or (config.resample_positions and drop is None):
            held_drop = sample_user_drop(config, block_rng)
        gamma = held_drop.gamma
        supports = sample_supports(config, block_rng)

        slow_alloc = None
        if strategy.endswith("_slow") and config.slow_gain_mode == "expected":
            slow_alloc = slow_switching_allocation(
                supports, gamma, n_rf, p_u, bbar, strategy[:-5])

        block_rate = 0.0
        for t in range(trials_per_block):
            ch = channel_from_supports(supports, gamma, n_rf, block_rng)
            if strategy.endswith("_slow"):
                if slow_alloc is None:  # "first" mode, first trial of block
                    slow_alloc = slow_switching_allocation(
                        supports, gamma, n_rf, p_u, bbar, strategy[:-5],
                        gains=row_gains(ch))
                alloc = slow_alloc
            elif strategy == "fixed":
                alloc = fixed_alloc
            else:
                alloc = allocate(ch, p_u, bbar, strategy)

            bits = alloc.integer_bits
            budget_ok &= alloc.feasible
            profile = ResolutionProfile.from_bits(bits)
            rates = mrc_rates(ch, profile, p_u)
            rate_acc += rates
            block_rate += rates.sum()

            hist += np.bincount(bits, minlength=BIT_CAP + 1)[:BIT_CAP + 1]
            n_act_acc += alloc.active_count
            steps_acc += alloc.adc_steps
            steps = np.where(bits > 0, 2.0 ** bits, zero_bit_steps)
            if prev_steps is not None:
                delta = steps - prev_steps
                up_acc += delta[delta > 0].sum()
                down_acc += -delta[delta < 0].sum()
            prev_steps = steps
        block_sums[b_idx] = block_rate / trials_per_block

    total = n_blocks * trials_per_block
    report = RateReport.from_per_user(rate_acc / total, "mrc_mc")
    stderr = 0.0
    if n_blocks > 1:
        stderr = float(np.std(block_sums, ddof=1) / math.sqrt(n_blocks))
    return MCStats(report=report, stderr_sum_rate=stderr,
                   block_sum_rates=block_sums,
                   n_act_mean=n_act_acc / total,
                   adc_steps_mean=steps_acc / total,
                   up_steps_mean=up_acc / total,
                   down_steps_mean=down_acc / total,
                   bits_hist=hist / hist.sum(),
                   n_blocks=n_blocks, trials_per_block=trials_per_block,
                   budget_ok=budget_ok)
