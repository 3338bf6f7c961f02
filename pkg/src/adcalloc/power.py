"""Receiver power accounting and energy efficiency."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import SystemConfig


@dataclass(frozen=True)
class PowerModel:
    """Component power constants (W) and ADC conversion-step costs."""

    c_conv: float = 494e-15          # J per conversion step
    f_s: float = 1.0e9               # sampling rate, Hz
    p_lna: float = 0.020
    p_ps: float = 0.010
    p_rfchain: float = 0.040
    p_bb: float = 0.200
    c_sw_up: float = 3.47e-3         # W per conv-step gained
    c_sw_down: float = 0.94e-3       # W per conv-step shed
    b_infinity: int = 12
    # Conversion steps attributed to a deactivated (0-bit) ADC in the
    # switching model; 1.0 reads 2^0 literally, 0.0 charges nothing.
    zero_bit_steps: float = 1.0

    def __post_init__(self) -> None:
        for name in ("c_conv", "f_s", "p_lna", "p_ps", "p_rfchain", "p_bb",
                     "c_sw_up", "c_sw_down", "zero_bit_steps"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class PowerReport:
    """Receiver power breakdown (W)."""

    p_lna_w: float
    p_chains_w: float
    p_adc_w: float
    p_switch_w: float
    p_bb_w: float
    p_total_w: float
    n_active: float


def adc_power(b: int, model: PowerModel = PowerModel()) -> float:
    """ADC pair-member power c * f_s * 2^b; zero for deactivated chains."""
    if b <= 0:
        return 0.0
    return model.c_conv * model.f_s * 2.0 ** b


def conversion_steps(bits, model: PowerModel = PowerModel()) -> np.ndarray:
    """Conversion steps used by the switching model (2^b, with the 0-bit case
    set by ``model.zero_bit_steps``)."""
    bits = np.asarray(bits)
    return np.where(bits > 0, 2.0 ** bits, model.zero_bit_steps)


def switching_power(b_new: int, b_prev: int,
                    model: PowerModel = PowerModel()) -> float:
    """Resolution-switch power: asymmetric cost per conversion step changed."""
    s_new = float(conversion_steps(b_new, model))
    s_prev = float(conversion_steps(b_prev, model))
    if s_new > s_prev:
        return model.c_sw_up * (s_new - s_prev)
    if s_new < s_prev:
        return model.c_sw_down * (s_prev - s_new)
    return 0.0


def receiver_power(config: SystemConfig, bits, prev_bits=None,
                   model: PowerModel = PowerModel()) -> PowerReport:
    """Total receiver power for one allocation.

    P_tot = N_r P_LNA + N_act (N_r P_PS + P_RFchain)
          + 2 sum_i (P_ADC(b_i) + P_SW(b_i; b_i_prev)) + P_BB

    The factor 2 covers the real/imaginary ADC pair.  Switching power is
    charged only when ``prev_bits`` is given.
    """
    bits = np.asarray(bits, dtype=int)
    if bits.size != config.n_rf:
        raise ValueError("bits length does not match config.n_rf")
    n_act = int(np.count_nonzero(bits > 0))
    p_lna = config.n_antennas * model.p_lna
    p_chains = n_act * (config.n_antennas * model.p_ps + model.p_rfchain)
    p_adc = 2.0 * sum(adc_power(int(b), model) for b in bits)
    p_switch = 0.0
    if prev_bits is not None:
        prev_bits = np.asarray(prev_bits, dtype=int)
        if prev_bits.shape != bits.shape:
            raise ValueError("prev_bits length does not match bits")
        p_switch = 2.0 * sum(switching_power(int(b), int(bp), model)
                             for b, bp in zip(bits, prev_bits))
    total = p_lna + p_chains + p_adc + p_switch + model.p_bb
    return PowerReport(p_lna_w=p_lna, p_chains_w=p_chains, p_adc_w=p_adc,
                       p_switch_w=p_switch, p_bb_w=model.p_bb,
                       p_total_w=total, n_active=float(n_act))


def receiver_power_from_stats(config: SystemConfig, n_act_mean: float,
                              adc_steps_mean: float, up_steps_mean: float,
                              down_steps_mean: float,
                              model: PowerModel = PowerModel()) -> PowerReport:
    """Mean receiver power from Monte-Carlo allocation statistics.

    All terms are linear in the accumulated statistics, so this equals the
    average of per-realization ``receiver_power`` calls.
    """
    p_lna = config.n_antennas * model.p_lna
    p_chains = n_act_mean * (config.n_antennas * model.p_ps + model.p_rfchain)
    p_adc = 2.0 * model.c_conv * model.f_s * adc_steps_mean
    p_switch = 2.0 * (model.c_sw_up * up_steps_mean
                      + model.c_sw_down * down_steps_mean)
    total = p_lna + p_chains + p_adc + p_switch + model.p_bb
    return PowerReport(p_lna_w=p_lna, p_chains_w=p_chains, p_adc_w=p_adc,
                       p_switch_w=p_switch, p_bb_w=model.p_bb,
                       p_total_w=total, n_active=n_act_mean)


def energy_efficiency(sum_rate_bps_hz: float, bandwidth_hz: float,
                      p_tot_w: float) -> float:
    """Bits per Joule: R * W / P_tot."""
    if p_tot_w <= 0:
        raise ValueError("total power must be positive")
    return sum_rate_bps_hz * bandwidth_hz / p_tot_w
