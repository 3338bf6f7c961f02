"""FastAPI service wrapping the core package."""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import metrics
from ..allocator import allocate
from ..channel import sample_beamspace_channel, sample_user_drop
from ..experiments import (CSV_COLUMNS, ExperimentSpec, capacity_mc,
                           rows_to_csv, run_experiment)
from ..power import energy_efficiency, receiver_power_from_stats
from .models import (AllocateRequest, AllocateResponse, CapacityRequest,
                     CapacityResponse, CapacityRow, PowerReportModel,
                     RateReportModel, RateRequest, RateResponse, SweepRequest,
                     SweepResponse, ValidateRequest)

app = FastAPI(title="adcalloc",
              description="Resolution-adaptive ADC bit allocation for hybrid "
                          "mmWave MIMO receivers")


def _bad_request(exc: Exception) -> HTTPException:
    return HTTPException(status_code=400, detail=str(exc))


@app.get("/health")
def health() -> dict:
    return {"status": "ok"}


@app.post("/allocate", response_model=AllocateResponse)
def allocate_endpoint(req: AllocateRequest) -> AllocateResponse:
    try:
        config = req.config.to_config()
        rng = np.random.default_rng(req.seed)
        drop = sample_user_drop(config, rng)
        channel = sample_beamspace_channel(config, drop, rng)
        alloc = allocate(channel, config.tx_power_mw, config.constraint_bits,
                         req.strategy)
    except ValueError as exc:
        raise _bad_request(exc) from exc
    real = [None if not math.isfinite(b) else float(b)
            for b in alloc.real_bits]
    return AllocateResponse(strategy=req.strategy,
                            constraint_bits=alloc.constraint_bits,
                            real_bits=real,
                            integer_bits=[int(b) for b in alloc.integer_bits],
                            active_count=alloc.active_count,
                            adc_steps=alloc.adc_steps,
                            budget_steps=alloc.budget_steps,
                            feasible=alloc.feasible)


@app.post("/capacity", response_model=CapacityResponse)
def capacity_endpoint(req: CapacityRequest) -> CapacityResponse:
    try:
        config = req.config.to_config()
        model = req.power.to_model()
        rows = []
        for strategy in req.strategies:
            rng = np.random.default_rng(req.seed)
            mean, stderr, _ = capacity_mc(config, strategy, req.blocks,
                                           req.trials, rng, model)
            rows.append(CapacityRow(strategy=strategy, capacity_mean=mean,
                                    stderr=stderr))
    except ValueError as exc:
        raise _bad_request(exc) from exc
    return CapacityResponse(rows=rows)


@app.post("/rate", response_model=RateResponse)
def rate_endpoint(req: RateRequest) -> RateResponse:
    try:
        config = req.config.to_config()
        model = req.power.to_model()
        strategy = req.strategy
        if strategy == "infinite":
            config = dataclasses.replace(config,
                                         constraint_bits=model.b_infinity)
            strategy = "fixed"
        rng = np.random.default_rng(req.seed)
        stats = metrics.ergodic_rate_mc(config, strategy, req.blocks,
                                        req.trials, rng,
                                        zero_bit_steps=model.zero_bit_steps)
        charge = strategy in ("mmsqe", "revmmsqe", "mmsqe_slow",
                              "revmmsqe_slow")
        power = receiver_power_from_stats(
            config, stats.n_act_mean, stats.adc_steps_mean,
            stats.up_steps_mean if charge else 0.0,
            stats.down_steps_mean if charge else 0.0, model)
        eff = energy_efficiency(stats.report.sum_rate, config.bandwidth_hz,
                                power.p_total_w)
    except ValueError as exc:
        raise _bad_request(exc) from exc
    report = RateReportModel(metric_kind=stats.report.metric_kind,
                             per_user_rate=list(stats.report.per_user_rate),
                             sum_rate=stats.report.sum_rate,
                             stderr_sum_rate=stats.stderr_sum_rate)
    power_model = PowerReportModel(p_lna_w=power.p_lna_w,
                                   p_chains_w=power.p_chains_w,
                                   p_adc_w=power.p_adc_w,
                                   p_switch_w=power.p_switch_w,
                                   p_bb_w=power.p_bb_w,
                                   p_total_w=power.p_total_w,
                                   energy_eff=eff)
    return RateResponse(report=report, power=power_model,
                        n_act_mean=stats.n_act_mean,
                        alloc_histogram=list(stats.bits_hist))


def _run_sweep(config_model, power_model, experiment, values, strategies,
               trials, blocks, seed, es_dbm) -> SweepResponse:
    config = config_model.to_config()
    model = power_model.to_model()
    spec = ExperimentSpec(experiment=experiment, values=tuple(values),
                          strategies=tuple(strategies), trials=trials,
                          blocks=blocks, seed=seed, es_dbm=es_dbm)
    rows = run_experiment(spec, config, model)
    if experiment in ("validate_analytic", "power_scaling", "multicell"):
        policy = "fixed for the whole run"
    elif config.resample_positions:
        policy = "resampled per block"
    else:
        policy = "fixed for the whole run"
    return SweepResponse(columns=list(CSV_COLUMNS), csv_text=rows_to_csv(rows),
                         positions_policy=f"user positions {policy}")


@app.post("/sweep", response_model=SweepResponse)
def sweep_endpoint(req: SweepRequest) -> SweepResponse:
    try:
        return _run_sweep(req.config, req.power, req.experiment, req.values,
                          req.strategies, req.trials, req.blocks, req.seed,
                          req.es_dbm)
    except ValueError as exc:
        raise _bad_request(exc) from exc


@app.post("/validate", response_model=SweepResponse)
def validate_endpoint(req: ValidateRequest) -> SweepResponse:
    try:
        return _run_sweep(req.config, req.power, "validate_analytic",
                          req.values, [], req.trials, req.blocks, req.seed,
                          45.0)
    except ValueError as exc:
        raise _bad_request(exc) from exc
