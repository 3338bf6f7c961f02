"""Pydantic request/response models for the service API."""

from __future__ import annotations

from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from ..channel import SystemConfig
from ..power import PowerModel

Strategy = Literal["fixed", "mmsqe", "revmmsqe", "mixed"]
RateStrategy = Literal["fixed", "mmsqe", "revmmsqe", "mixed", "mmsqe_slow",
                       "revmmsqe_slow", "infinite"]
Experiment = Literal["table2", "capacity_vs_power", "rate_vs_power",
                     "rate_vs_antennas", "rate_ee_vs_bits",
                     "validate_analytic", "power_scaling", "multicell"]


class SystemConfigModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

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
    shadow_sigma_is_variance: bool = False
    constraint_bits: int = 1
    block_len: int = 100
    n_rf_override: Optional[int] = None
    lambda_p_override: Optional[float] = None
    resample_positions: bool = True
    slow_gain_mode: Literal["expected", "first"] = "expected"
    user_placement: Literal["uniform_distance", "uniform_area"] = \
        "uniform_distance"

    def to_config(self) -> SystemConfig:
        return SystemConfig(**self.model_dump())


class PowerModelModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    c_conv: float = 494e-15
    f_s: float = 1.0e9
    p_lna: float = 0.020
    p_ps: float = 0.010
    p_rfchain: float = 0.040
    p_bb: float = 0.200
    c_sw_up: float = 3.47e-3
    c_sw_down: float = 0.94e-3
    b_infinity: int = 12
    zero_bit_steps: float = 1.0

    def to_model(self) -> PowerModel:
        return PowerModel(**self.model_dump())


class AllocateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: SystemConfigModel = Field(default_factory=SystemConfigModel)
    seed: int = 0
    strategy: Strategy = "revmmsqe"


class AllocateResponse(BaseModel):
    strategy: str
    constraint_bits: int
    # None marks chains whose relaxed solution is -inf (zero-gain rows).
    real_bits: List[Optional[float]]
    integer_bits: List[int]
    active_count: int
    adc_steps: int
    budget_steps: int
    feasible: bool


class CapacityRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: SystemConfigModel = Field(default_factory=SystemConfigModel)
    power: PowerModelModel = Field(default_factory=PowerModelModel)
    seed: int = 0
    strategies: List[str] = ["fixed", "revmmsqe"]
    blocks: int = 4
    trials: int = 10


class CapacityRow(BaseModel):
    strategy: str
    capacity_mean: float
    stderr: float


class CapacityResponse(BaseModel):
    rows: List[CapacityRow]


class RateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: SystemConfigModel = Field(default_factory=SystemConfigModel)
    power: PowerModelModel = Field(default_factory=PowerModelModel)
    seed: int = 0
    strategy: RateStrategy = "revmmsqe"
    blocks: int = 4
    trials: int = 10


class RateReportModel(BaseModel):
    metric_kind: str
    per_user_rate: List[float]
    sum_rate: float
    stderr_sum_rate: float


class PowerReportModel(BaseModel):
    p_lna_w: float
    p_chains_w: float
    p_adc_w: float
    p_switch_w: float
    p_bb_w: float
    p_total_w: float
    energy_eff: float


class RateResponse(BaseModel):
    report: RateReportModel
    power: PowerReportModel
    n_act_mean: float
    alloc_histogram: List[float]


class SweepRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: SystemConfigModel = Field(default_factory=SystemConfigModel)
    power: PowerModelModel = Field(default_factory=PowerModelModel)
    experiment: Experiment
    values: List[float] = []
    strategies: List[str] = []
    trials: int = 100
    blocks: int = 20
    seed: int = 1
    es_dbm: float = 45.0


class SweepResponse(BaseModel):
    columns: List[str]
    csv_text: str
    positions_policy: str


class ValidateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: SystemConfigModel = Field(default_factory=SystemConfigModel)
    power: PowerModelModel = Field(default_factory=PowerModelModel)
    values: List[float] = []
    trials: int = 100
    blocks: int = 20
    seed: int = 1
