"""Sparse beamspace mmWave channel generation.

The receiver observes an N_RF x N_u beamspace matrix H_b = G * diag(gamma)^(1/2).
Each user contributes L ~ max(Poisson(lambda_p), 1) propagation paths, placed on
L distinct RF-chain rows chosen uniformly at random, with IID unit-variance
circular complex Gaussian gains on the support.  The large-scale gain gamma
absorbs pathloss, shadowing and noise power, so the per-chain additive noise is
unit variance and p_u * gamma is a direct SNR.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class SystemConfig:
    """Scenario parameters for the uplink receiver.

    Defaults are desk scale (64 BS antennas); ``full_scale()`` gives the
    256-antenna reference scenario.  N_RF and lambda_p derive from
    ``tau * n_antennas`` and ``epsilon * n_antennas`` unless overridden.
    """

    n_antennas: int = 64
    n_users: int = 8
    tau: float = 0.5
    epsilon: float = 0.1
    tx_power_dbm: float = 20.0
    bandwidth_hz: float = 1.0e9
    noise_figure_db: float = 5.0
    carrier_ghz: float = 28.0
    cell_radius_m: float = 200.0
    min_distance_m: float = 30.0
    pathloss_alpha_db: float = 72.0
    pathloss_beta: float = 2.92
    shadow_sigma_db: float = 8.7
    # When True, shadow_sigma_db is read as a variance (sigma^2) instead of a
    # standard deviation.
    shadow_sigma_is_variance: bool = False
    constraint_bits: int = 1
    block_len: int = 100
    n_rf_override: Optional[int] = None
    lambda_p_override: Optional[float] = None
    # Resample user positions at every slow-fading block (True) or keep the
    # first drop for the whole run (False).
    resample_positions: bool = True
    # Slow-switching allocations use expected row gains ("expected") or the
    # first realization of each block ("first").
    slow_gain_mode: str = "expected"
    # "uniform_distance" draws d ~ U[min_distance, radius]; "uniform_area"
    # is uniform over the annulus area.  The distance-uniform reading
    # reproduces the reference allocation fractions more closely.
    user_placement: str = "uniform_distance"

    def __post_init__(self) -> None:
        if self.n_antennas < 1 or self.n_users < 1:
            raise ValueError("n_antennas and n_users must be positive")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError("tau must be in (0, 1]")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must be in (0, 1)")
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth_hz must be positive")
        if self.cell_radius_m <= 0 or self.min_distance_m <= 0:
            raise ValueError("cell geometry must be positive")
        if self.min_distance_m > self.cell_radius_m:
            raise ValueError("min_distance_m must not exceed cell_radius_m")
        if self.shadow_sigma_db < 0:
            raise ValueError("shadow_sigma_db must be non-negative")
        if self.constraint_bits < 0:
            raise ValueError("constraint_bits must be non-negative")
        if self.block_len < 1:
            raise ValueError("block_len must be positive")
        if self.n_rf < 1 or self.n_rf > self.n_antennas:
            raise ValueError("n_rf must lie in [1, n_antennas]")
        if self.lambda_p < 0:
            raise ValueError("lambda_p must be non-negative")
        if self.slow_gain_mode not in ("expected", "first"):
            raise ValueError("slow_gain_mode must be 'expected' or 'first'")
        if self.user_placement not in ("uniform_distance", "uniform_area"):
            raise ValueError("user_placement must be 'uniform_distance' or "
                             "'uniform_area'")

    @property
    def n_rf(self) -> int:
        if self.n_rf_override is not None:
            return self.n_rf_override
        return max(1, _round_half_up(self.tau * self.n_antennas))

    @property
    def lambda_p(self) -> float:
        if self.lambda_p_override is not None:
            return self.lambda_p_override
        return self.epsilon * self.n_antennas

    @property
    def tx_power_mw(self) -> float:
        return 10.0 ** (self.tx_power_dbm / 10.0)

    @property
    def shadow_std_db(self) -> float:
        if self.shadow_sigma_is_variance:
            return math.sqrt(self.shadow_sigma_db)
        return self.shadow_sigma_db

    @property
    def noise_dbm(self) -> float:
        return noise_power_dbm(self.bandwidth_hz, self.noise_figure_db)

    @classmethod
    def full_scale(cls, **overrides) -> "SystemConfig":
        """256-antenna reference scenario (N_RF = 128, lambda_p = 25.6)."""
        params = dict(n_antennas=256)
        params.update(overrides)
        return cls(**params)


@dataclass(frozen=True)
class UserDrop:
    """User placement: distances [m] and normalized large-scale gains (linear)."""

    distances_m: np.ndarray
    gamma: np.ndarray

    @property
    def n_users(self) -> int:
        return self.distances_m.size


@dataclass(frozen=True)
class ChannelRealization:
    """One beamspace realization: sparse complex gain matrix plus the drop's gamma.

    ``complex_gains`` is N_RF x N_u with exactly ``path_counts[n]`` nonzero
    entries in column n, at the rows listed in ``support[n]``.  The effective
    beamspace matrix is ``beamspace = complex_gains * sqrt(gamma)``.
    """

    support: tuple
    path_counts: np.ndarray
    complex_gains: np.ndarray
    gamma: np.ndarray

    @property
    def n_rf(self) -> int:
        return self.complex_gains.shape[0]

    @property
    def n_users(self) -> int:
        return self.complex_gains.shape[1]

    @property
    def beamspace(self) -> np.ndarray:
        return self.complex_gains * np.sqrt(self.gamma)[None, :]


def pathloss_db(d_m: float, shadow_db: float = 0.0, alpha_db: float = 72.0,
                beta: float = 2.92) -> float:
    """Distance pathloss alpha + 10*beta*log10(d) + shadowing, in dB."""
    if d_m <= 0:
        raise ValueError("distance must be positive")
    return alpha_db + 10.0 * beta * math.log10(d_m) + shadow_db


def noise_power_dbm(bandwidth_hz: float, noise_figure_db: float) -> float:
    """Thermal noise power -174 + 10*log10(W) + n_f, in dBm."""
    if bandwidth_hz <= 0:
        raise ValueError("bandwidth must be positive")
    return -174.0 + 10.0 * math.log10(bandwidth_hz) + noise_figure_db


def sample_user_drop(config: SystemConfig, rng: np.random.Generator) -> UserDrop:
    """Drop users randomly over the annulus [min_distance, radius].

    gamma_n [dB] = -(PL(d_n) + P_noise_dBm), so the unit-variance-noise
    convention holds downstream.
    """
    r0 = config.min_distance_m
    r1 = config.cell_radius_m
    u = rng.uniform(size=config.n_users)
    if config.user_placement == "uniform_area":
        distances = np.sqrt(r0 * r0 + u * (r1 * r1 - r0 * r0))
    else:
        distances = r0 + u * (r1 - r0)
    shadow = rng.normal(0.0, 1.0, size=config.n_users) * config.shadow_std_db
    noise_dbm = config.noise_dbm
    gamma_db = np.array([
        -(pathloss_db(d, s, config.pathloss_alpha_db, config.pathloss_beta)
          + noise_dbm)
        for d, s in zip(distances, shadow)
    ])
    return UserDrop(distances_m=distances, gamma=10.0 ** (gamma_db / 10.0))


def sample_path_count(lambda_p: float, rng: np.random.Generator) -> int:
    """Number of propagation paths: max(Poisson(lambda_p), 1)."""
    if lambda_p < 0:
        raise ValueError("lambda_p must be non-negative")
    return max(int(rng.poisson(lambda_p)), 1)


def sample_supports(config: SystemConfig, rng: np.random.Generator) -> tuple:
    """Per-user path supports: L_n distinct rows, uniform over {0..N_RF-1}.

    Path counts are clamped to N_RF (relevant only at tiny scales).
    Supports belong to the slowly changing channel structure and are held
    fixed over a block of fading realizations.
    """
    n_rf = config.n_rf
    supports = []
    for _ in range(config.n_users):
        count = min(sample_path_count(config.lambda_p, rng), n_rf)
        rows = rng.choice(n_rf, size=count, replace=False)
        supports.append(np.sort(rows))
    return tuple(supports)


def realize_gains(supports: Sequence[np.ndarray], n_rf: int,
                  rng: np.random.Generator) -> np.ndarray:
    """Fill supports with IID CN(0, 1) gains; zero elsewhere."""
    n_users = len(supports)
    gains = np.zeros((n_rf, n_users), dtype=complex)
    for n, rows in enumerate(supports):
        k = rows.size
        draws = (rng.standard_normal(k) + 1j * rng.standard_normal(k)) / math.sqrt(2.0)
        gains[rows, n] = draws
    return gains


def channel_from_supports(supports: Sequence[np.ndarray], gamma: np.ndarray,
                          n_rf: int, rng: np.random.Generator) -> ChannelRealization:
    """One fading realization on fixed supports."""
    gains = realize_gains(supports, n_rf, rng)
    counts = np.array([rows.size for rows in supports])
    return ChannelRealization(support=tuple(supports), path_counts=counts,
                              complex_gains=gains, gamma=np.asarray(gamma, float))


def sample_beamspace_channel(config: SystemConfig, drop: UserDrop,
                             rng: np.random.Generator) -> ChannelRealization:
    """Sample supports and complex gains for one channel realization."""
    if drop.n_users != config.n_users:
        raise ValueError("drop size does not match config.n_users")
    supports = sample_supports(config, rng)
    return channel_from_supports(supports, drop.gamma, config.n_rf, rng)


def row_gains(channel: ChannelRealization) -> np.ndarray:
    """Aggregated channel gain per RF chain: sum_k gamma_k |g_{i,k}|^2."""
    return np.abs(channel.complex_gains) ** 2 @ channel.gamma


def expected_row_gains(supports: Sequence[np.ndarray], gamma: np.ndarray,
                       n_rf: int) -> np.ndarray:
    """Row gains averaged over small-scale fading: sum_k gamma_k 1{i in P_k}."""
    gains = np.zeros(n_rf)
    for g, rows in zip(np.asarray(gamma, float), supports):
        gains[rows] += g
    return gains


def sample_interferer_gammas(config: SystemConfig, n_cells: int,
                             rng: np.random.Generator) -> np.ndarray:
    """Large-scale gains of out-of-cell users, one row per interfering cell.

    Interferer distances are drawn uniformly in [radius, 3 * radius]; pathloss,
    shadowing and noise normalization match the in-cell model.
    """
    if n_cells < 0:
        raise ValueError("n_cells must be non-negative")
    gammas = np.zeros((n_cells, config.n_users))
    noise_dbm = config.noise_dbm
    for j in range(n_cells):
        dist = rng.uniform(config.cell_radius_m, 3.0 * config.cell_radius_m,
                           size=config.n_users)
        shadow = rng.normal(0.0, 1.0, size=config.n_users) * config.shadow_std_db
        gamma_db = np.array([
            -(pathloss_db(d, s, config.pathloss_alpha_db, config.pathloss_beta)
              + noise_dbm)
            for d, s in zip(dist, shadow)
        ])
        gammas[j] = 10.0 ** (gamma_db / 10.0)
    return gammas
