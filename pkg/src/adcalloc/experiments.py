"""Experiment orchestration: sweeps, seeding, CSV emission.

Each experiment emits one CSV row per (sweep value, strategy).  Seeds for a
sweep point derive deterministically from (master seed, point index), and
blocks within a run from generator spawning, so outputs are byte-identical
across runs regardless of how work is scheduled.
"""

from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import metrics
from .allocator import BIT_CAP, allocate, revmmsqe_real_solution
from .channel import (SystemConfig, UserDrop, channel_from_supports,
                      row_gains, sample_interferer_gammas, sample_supports,
                      sample_user_drop)
from .metrics import MCStats, MultiCellScene, ergodic_rate_mc
from .power import PowerModel, energy_efficiency, receiver_power_from_stats
from .quantizer import ResolutionProfile

EXPERIMENTS = ("table2", "capacity_vs_power", "rate_vs_power",
               "rate_vs_antennas", "rate_ee_vs_bits", "validate_analytic",
               "power_scaling", "multicell")

CSV_COLUMNS = ("sweep_name", "sweep_value", "strategy", "sum_rate",
               "per_user_rates", "p_tot_w", "energy_eff", "n_act_mean",
               "alloc_histogram", "stderr_sum_rate", "seed", "trials")

DEFAULT_AXIS = {
    "table2": "constraint_bits",
    "capacity_vs_power": "pu_dbm",
    "rate_vs_power": "pu_dbm",
    "rate_vs_antennas": "n_r",
    "rate_ee_vs_bits": "constraint_bits",
    "validate_analytic": "pu_dbm",
    "power_scaling": "n_r",
    "multicell": "n_cells",
}

DEFAULT_VALUES = {
    "table2": (1.0, 2.0, 3.0),
    "capacity_vs_power": (-20.0, -10.0, 0.0, 10.0, 20.0),
    "rate_vs_power": (-20.0, -10.0, 0.0, 10.0, 20.0),
    "rate_vs_antennas": (32.0, 64.0, 128.0),
    "rate_ee_vs_bits": (1.0, 2.0, 3.0, 4.0, 5.0, 6.0),
    "validate_analytic": (-10.0, 0.0, 10.0, 20.0),
    "power_scaling": (32.0, 64.0, 128.0, 256.0),
    "multicell": (0.0, 1.0, 2.0, 4.0),
}

DEFAULT_STRATEGIES = {
    "table2": ("revmmsqe",),
    "capacity_vs_power": ("fixed", "mmsqe", "revmmsqe", "infinite",
                          "revba_approx"),
    "rate_vs_power": ("fixed", "mmsqe", "revmmsqe"),
    "rate_vs_antennas": ("fixed", "mmsqe", "revmmsqe"),
    "rate_ee_vs_bits": ("fixed", "revmmsqe", "revmmsqe_slow", "mixed",
                        "infinite"),
    "validate_analytic": ("fixed", "analytic"),
    "power_scaling": ("fixed", "analytic", "fixed_scaled", "analytic_scaled"),
    "multicell": ("fixed", "analytic"),
}

ALLOWED_STRATEGIES = {
    "table2": {"revmmsqe", "mmsqe"},
    "capacity_vs_power": {"fixed", "mmsqe", "revmmsqe", "mixed", "infinite",
                          "revmmsqe_real", "revba_approx"},
    "rate_vs_power": {"fixed", "mmsqe", "revmmsqe", "mixed", "mmsqe_slow",
                      "revmmsqe_slow", "infinite"},
    "rate_vs_antennas": {"fixed", "mmsqe", "revmmsqe", "mixed", "mmsqe_slow",
                         "revmmsqe_slow", "infinite"},
    "rate_ee_vs_bits": {"fixed", "mmsqe", "revmmsqe", "mixed", "mmsqe_slow",
                        "revmmsqe_slow", "infinite"},
    "validate_analytic": {"fixed", "analytic"},
    "power_scaling": {"fixed", "analytic", "fixed_scaled", "analytic_scaled"},
    "multicell": {"fixed", "analytic"},
}

# Strategies that pay resolution-switching power (the adaptive ones).
SWITCHING_STRATEGIES = {"mmsqe", "revmmsqe", "mmsqe_slow", "revmmsqe_slow"}

_DROP_STREAM = 999_999_937  # reserved stream id for fixed-position drops


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment run: id, sweep axis and values, strategies, budgets."""

    experiment: str
    sweep: str = ""
    values: tuple = ()
    strategies: tuple = ()
    trials: int = 100
    blocks: int = 20
    seed: int = 1
    out: Optional[str] = None
    es_dbm: float = 45.0

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.trials * self.blocks < 1 or self.trials < 1 or self.blocks < 1:
            raise ValueError("trials and blocks must be positive")
        object.__setattr__(self, "sweep",
                           self.sweep or DEFAULT_AXIS[self.experiment])
        if self.sweep != DEFAULT_AXIS[self.experiment]:
            raise ValueError(f"experiment {self.experiment} sweeps "
                             f"{DEFAULT_AXIS[self.experiment]!r}")
        values = tuple(float(v) for v in self.values) or \
            DEFAULT_VALUES[self.experiment]
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("sweep values must be strictly increasing")
        object.__setattr__(self, "values", values)
        strategies = tuple(self.strategies) or DEFAULT_STRATEGIES[self.experiment]
        bad = set(strategies) - ALLOWED_STRATEGIES[self.experiment]
        if bad:
            raise ValueError(f"strategies {sorted(bad)} not valid for "
                             f"{self.experiment}")
        object.__setattr__(self, "strategies", strategies)


def _fmt(value) -> str:
    if value is None:
        return "nan"
    if isinstance(value, (float, np.floating)):
        return f"{value:.9g}"
    return str(value)


def _join(values) -> str:
    return ";".join(f"{float(v):.9g}" for v in values)


def rows_to_csv(rows: Sequence[dict]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def _point_config(config: SystemConfig, axis: str, value: float) -> SystemConfig:
    if axis == "pu_dbm":
        return dataclasses.replace(config, tx_power_dbm=float(value))
    if axis == "n_r":
        return dataclasses.replace(config, n_antennas=int(value))
    if axis == "constraint_bits":
        return dataclasses.replace(config, constraint_bits=int(value))
    if axis == "n_cells":
        return config
    raise ValueError(f"unknown sweep axis {axis!r}")


def _row(spec: ExperimentSpec, value: float, strategy: str, *, sum_rate: float,
         per_user=(), p_tot=None, eff=None, n_act=None, hist=None,
         stderr: float = 0.0, trials: int = 0) -> dict:
    return {
        "sweep_name": spec.sweep,
        "sweep_value": float(value),
        "strategy": strategy,
        "sum_rate": float(sum_rate),
        "per_user_rates": _join(per_user),
        "p_tot_w": p_tot,
        "energy_eff": eff,
        "n_act_mean": n_act,
        "alloc_histogram": _join(hist if hist is not None
                                 else np.zeros(BIT_CAP + 1)),
        "stderr_sum_rate": float(stderr),
        "seed": spec.seed,
        "trials": trials,
    }


def _mc_row(spec: ExperimentSpec, config: SystemConfig, model: PowerModel,
            value: float, strategy: str, stats: MCStats) -> dict:
    if not stats.budget_ok:
        raise RuntimeError("allocation exceeded the ADC power budget")
    charge_switching = strategy in SWITCHING_STRATEGIES
    power = receiver_power_from_stats(
        config, stats.n_act_mean, stats.adc_steps_mean,
        stats.up_steps_mean if charge_switching else 0.0,
        stats.down_steps_mean if charge_switching else 0.0, model)
    eff = energy_efficiency(stats.report.sum_rate, config.bandwidth_hz,
                            power.p_total_w)
    return _row(spec, value, strategy, sum_rate=stats.report.sum_rate,
                per_user=stats.report.per_user_rate, p_tot=power.p_total_w,
                eff=eff, n_act=stats.n_act_mean, hist=stats.bits_hist,
                stderr=stats.stderr_sum_rate,
                trials=stats.n_blocks * stats.trials_per_block)


def _mc_strategy(strategy: str, config: SystemConfig,
                 model: PowerModel) -> tuple:
    """Map a row strategy onto (metrics strategy, adjusted config)."""
    if strategy == "infinite":
        cfg = dataclasses.replace(config, constraint_bits=model.b_infinity)
        return "fixed", cfg
    return strategy, config


def capacity_mc(config: SystemConfig, strategy: str, blocks: int, trials: int,
                rng: np.random.Generator, model: PowerModel):
    """Mean capacity over blocks x trials for one strategy label."""
    p_u = config.tx_power_mw
    bbar = config.constraint_bits
    acc = 0.0
    block_means = np.zeros(blocks)
    n_act = 0.0
    steps = 0.0
    has_alloc = strategy not in ("revba_approx", "revmmsqe_real")
    for b_idx, block_rng in enumerate(rng.spawn(blocks)):
        drop = sample_user_drop(config, block_rng)
        supports = sample_supports(config, block_rng)
        block_acc = 0.0
        for _ in range(trials):
            ch = channel_from_supports(supports, drop.gamma, config.n_rf,
                                       block_rng)
            if strategy == "revba_approx":
                value = metrics.capacity_low_snr_revba(ch, p_u, bbar)
            elif strategy == "revmmsqe_real":
                real = revmmsqe_real_solution(row_gains(ch), bbar)
                profile = ResolutionProfile.from_real_bits(
                    np.minimum(np.maximum(real, 0.0), BIT_CAP))
                value = metrics.capacity(ch, profile, p_u)
            else:
                base, cfg = _mc_strategy(strategy, config, model)
                alloc = allocate(ch, p_u, cfg.constraint_bits, base)
                if not alloc.feasible:
                    raise RuntimeError("allocation exceeded the power budget")
                profile = ResolutionProfile.from_bits(alloc.integer_bits)
                value = metrics.capacity(ch, profile, p_u)
                n_act += alloc.active_count
                steps += alloc.adc_steps
            acc += value
            block_acc += value
        block_means[b_idx] = block_acc / trials
    total = blocks * trials
    stderr = float(np.std(block_means, ddof=1) / math.sqrt(blocks)) \
        if blocks > 1 else 0.0
    return (acc / total, stderr,
            (n_act / total, steps / total) if has_alloc else None)


def multicell_rate_mc(config: SystemConfig, drop: UserDrop,
                      interferer_gammas: np.ndarray, blocks: int,
                      trials: int, rng: np.random.Generator) -> tuple:
    """MC ergodic rates of the own-cell users under out-of-cell interference.

    Stacks interfering users into one wide gain matrix; with a uniform
    resolution profile the MRC rate expression then covers the multi-cell
    noise-plus-interference exactly.
    """
    gamma_all = np.concatenate([drop.gamma] + list(interferer_gammas))
    n_u = config.n_users
    n_tot = gamma_all.size
    p_u = config.tx_power_mw
    profile = ResolutionProfile.from_bits(
        np.full(config.n_rf, config.constraint_bits))
    stacked = dataclasses.replace(config, n_users=n_tot)
    rate_acc = np.zeros(n_u)
    block_means = np.zeros(blocks)
    for b_idx, block_rng in enumerate(rng.spawn(blocks)):
        supports = sample_supports(stacked, block_rng)
        block_acc = 0.0
        for _ in range(trials):
            ch = channel_from_supports(supports, gamma_all, config.n_rf,
                                       block_rng)
            rates = metrics.mrc_rates(ch, profile, p_u)[:n_u]
            rate_acc += rates
            block_acc += rates.sum()
        block_means[b_idx] = block_acc / trials
    total = blocks * trials
    stderr = float(np.std(block_means, ddof=1) / math.sqrt(blocks)) \
        if blocks > 1 else 0.0
    return rate_acc / total, stderr


def run_experiment(spec: ExperimentSpec, config: SystemConfig,
                   model: PowerModel = PowerModel()) -> list:
    """Run one experiment and return CSV rows; writes spec.out when set."""
    rows = []
    fixed_drop = None
    if spec.experiment in ("validate_analytic", "power_scaling", "multicell"):
        # Analytic expressions are conditioned on the large-scale gains, so
        # user positions are fixed once per run for these experiments.
        fixed_drop = sample_user_drop(
            config, np.random.default_rng([spec.seed, _DROP_STREAM]))

    for i, value in enumerate(spec.values):
        cfg = _point_config(config, spec.sweep, value)
        for strategy in spec.strategies:
            rng = np.random.default_rng([spec.seed, i])
            rows.append(_run_point(spec, cfg, model, value, strategy, rng,
                                   fixed_drop))
    if spec.out:
        with open(spec.out, "w", encoding="utf-8") as fh:
            fh.write(rows_to_csv(rows))
    return rows


def _run_point(spec: ExperimentSpec, cfg: SystemConfig, model: PowerModel,
               value: float, strategy: str, rng: np.random.Generator,
               fixed_drop: Optional[UserDrop]) -> dict:
    exp = spec.experiment

    if exp in ("table2", "rate_vs_power", "rate_vs_antennas",
               "rate_ee_vs_bits"):
        base, cfg_s = _mc_strategy(strategy, cfg, model)
        stats = ergodic_rate_mc(cfg_s, base, spec.blocks, spec.trials, rng,
                                zero_bit_steps=model.zero_bit_steps)
        return _mc_row(spec, cfg_s, model, value, strategy, stats)

    if exp == "capacity_vs_power":
        mean, stderr, alloc_stats = capacity_mc(cfg, strategy, spec.blocks,
                                                spec.trials, rng, model)
        p_tot = eff = n_act = None
        if alloc_stats is not None:
            n_act_mean, steps_mean = alloc_stats
            power = receiver_power_from_stats(cfg, n_act_mean, steps_mean,
                                              0.0, 0.0, model)
            p_tot = power.p_total_w
            eff = energy_efficiency(mean, cfg.bandwidth_hz, p_tot)
            n_act = n_act_mean
        return _row(spec, value, strategy, sum_rate=mean, p_tot=p_tot,
                    eff=eff, n_act=n_act, stderr=stderr,
                    trials=spec.blocks * spec.trials)

    if exp == "validate_analytic":
        if strategy == "analytic":
            rates = [metrics.analytic_rate(fixed_drop.gamma, n, cfg.lambda_p,
                                           cfg.tx_power_mw,
                                           cfg.constraint_bits, cfg.n_rf)
                     for n in range(cfg.n_users)]
            return _row(spec, value, strategy, sum_rate=sum(rates),
                        per_user=rates, trials=0)
        stats = ergodic_rate_mc(cfg, "fixed", spec.blocks, spec.trials, rng,
                                drop=fixed_drop,
                                zero_bit_steps=model.zero_bit_steps)
        return _mc_row(spec, cfg, model, value, strategy, stats)

    if exp == "power_scaling":
        scaled = strategy.endswith("_scaled")
        if scaled:
            es_mw = 10.0 ** (spec.es_dbm / 10.0)
            pu_dbm = 10.0 * math.log10(es_mw / cfg.n_rf)
            cfg = dataclasses.replace(cfg, tx_power_dbm=pu_dbm)
        if strategy.startswith("analytic"):
            rates = [metrics.analytic_rate(fixed_drop.gamma, n, cfg.lambda_p,
                                           cfg.tx_power_mw,
                                           cfg.constraint_bits, cfg.n_rf)
                     for n in range(cfg.n_users)]
            return _row(spec, value, strategy, sum_rate=sum(rates),
                        per_user=rates, trials=0)
        stats = ergodic_rate_mc(cfg, "fixed", spec.blocks, spec.trials, rng,
                                drop=fixed_drop,
                                zero_bit_steps=model.zero_bit_steps)
        return _mc_row(spec, cfg, model, value, strategy, stats)

    if exp == "multicell":
        n_cells = int(value)
        gammas = sample_interferer_gammas(
            cfg, n_cells, np.random.default_rng([spec.seed, _DROP_STREAM, 1,
                                                 n_cells]))
        if strategy == "analytic":
            scene = MultiCellScene(gamma_own=fixed_drop.gamma,
                                   gamma_interferers=gammas)
            rates = [metrics.analytic_rate_multicell(
                scene, n, cfg.lambda_p, cfg.tx_power_mw, cfg.constraint_bits,
                cfg.n_rf) for n in range(cfg.n_users)]
            return _row(spec, value, strategy, sum_rate=sum(rates),
                        per_user=rates, trials=0)
        per_user, stderr = multicell_rate_mc(cfg, fixed_drop, gammas,
                                             spec.blocks, spec.trials, rng)
        return _row(spec, value, strategy, sum_rate=per_user.sum(),
                    per_user=per_user, stderr=stderr,
                    trials=spec.blocks * spec.trials)

    raise ValueError(f"unknown experiment {exp!r}")


# ---------------------------------------------------------------------------
# Config files: INI sections mirroring SystemConfig / PowerModel /
# ExperimentSpec field names.  Unknown sections or keys are errors.

_SECTION_TYPES = {
    "system": SystemConfig,
    "power": PowerModel,
    "experiment": ExperimentSpec,
}

_TUPLE_KEYS = {"values", "strategies"}


def _coerce(name: str, raw: str, target_cls) -> object:
    fields = {f.name: f for f in dataclasses.fields(target_cls)}
    if name not in fields:
        raise ValueError(f"unknown key {name!r} for [{target_cls.__name__}]")
    if name in _TUPLE_KEYS:
        parts = raw.replace(",", " ").split()
        return tuple(float(p) for p in parts) if name == "values" \
            else tuple(parts)
    text = raw.strip()
    if text.lower() in ("none", ""):
        return None
    ftype = str(fields[name].type)
    if "bool" in ftype:
        if text.lower() in ("true", "yes", "1"):
            return True
        if text.lower() in ("false", "no", "0"):
            return False
        raise ValueError(f"cannot parse boolean {name}={raw!r}")
    if "int" in ftype:
        return int(text)
    if "float" in ftype:
        return float(text)
    return text


def load_config_file(path: str) -> dict:
    """Parse an INI config file into per-section keyword dicts.

    Sections: [system], [power], [experiment]; all optional.  Unknown
    sections or keys fail fast so runs stay reproducible.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    with open(path, "r", encoding="utf-8") as fh:
        parser.read_file(fh)
    out = {"system": {}, "power": {}, "experiment": {}}
    for section in parser.sections():
        if section not in _SECTION_TYPES:
            raise ValueError(f"unknown config section [{section}]")
        cls = _SECTION_TYPES[section]
        for key, raw in parser.items(section):
            out[section][key] = _coerce(key, raw, cls)
    return out
