import dataclasses
import math

import numpy as np
import pytest

from adcalloc.channel import (SystemConfig, expected_row_gains,
                              noise_power_dbm, pathloss_db, row_gains,
                              sample_beamspace_channel, sample_path_count,
                              sample_user_drop)


def test_pathloss_examples():
    assert pathloss_db(30.0) == pytest.approx(72 + 29.2 * math.log10(30.0),
                                              rel=1e-12)
    assert pathloss_db(30.0) == pytest.approx(115.13, abs=5e-3)
    assert pathloss_db(1.0) == 72.0
    assert pathloss_db(200.0, shadow_db=-3.0) == pytest.approx(
        72 + 29.2 * math.log10(200.0) - 3.0, rel=1e-12)
    with pytest.raises(ValueError):
        pathloss_db(0.0)


def test_noise_power_examples():
    assert noise_power_dbm(1e9, 5.0) == pytest.approx(-79.0, abs=1e-12)
    assert noise_power_dbm(1.0, 0.0) == -174.0
    assert noise_power_dbm(1e6, 5.0) == pytest.approx(-109.0, abs=1e-12)
    with pytest.raises(ValueError):
        noise_power_dbm(0.0, 5.0)


def test_config_invariants():
    cfg = SystemConfig()
    assert cfg.n_rf == 32 and cfg.lambda_p == pytest.approx(6.4)
    assert cfg.tx_power_mw == pytest.approx(10 ** (cfg.tx_power_dbm / 10))
    assert SystemConfig.full_scale().n_rf == 128
    with pytest.raises(ValueError):
        SystemConfig(min_distance_m=300.0)
    with pytest.raises(ValueError):
        SystemConfig(tau=0.0)
    with pytest.raises(ValueError):
        SystemConfig(epsilon=1.0)
    with pytest.raises(ValueError):
        SystemConfig(n_rf_override=200)


def test_degenerate_annulus(rng):
    cfg = SystemConfig(cell_radius_m=30.0, min_distance_m=30.0,
                       shadow_sigma_db=0.0)
    drop = sample_user_drop(cfg, rng)
    np.testing.assert_allclose(drop.distances_m, 30.0)
    gamma_db = -(pathloss_db(30.0) + cfg.noise_dbm)
    np.testing.assert_allclose(10 * np.log10(drop.gamma), gamma_db)
    # -(115.13 - 79.0) composition
    assert gamma_db == pytest.approx(-36.13, abs=5e-3)


def test_drop_ranges_and_shadow_mean(rng):
    cfg = SystemConfig()
    shadows = []
    for _ in range(12_500):
        drop = sample_user_drop(cfg, rng)
        assert np.all(drop.distances_m >= cfg.min_distance_m)
        assert np.all(drop.distances_m <= cfg.cell_radius_m)
        # isolate the shadowing factor: gamma_dB + PL(d, 0) + noise
        shadows.append(10 * np.log10(drop.gamma) + cfg.noise_dbm
                       + np.array([pathloss_db(x, 0.0)
                                   for x in drop.distances_m]))
    shadows = np.concatenate(shadows)
    assert shadows.size == 100_000
    assert abs(shadows.mean()) < 0.1
    assert shadows.std() == pytest.approx(cfg.shadow_sigma_db, rel=0.05)


def test_placement_modes(rng):
    area = dataclasses.replace(SystemConfig(), user_placement="uniform_area",
                               n_users=4000)
    duni = sample_user_drop(area, rng).distances_m
    # area-uniform pushes mass outward: mean ~ 2(r1^3-r0^3)/(3(r1^2-r0^2))
    r0, r1 = 30.0, 200.0
    expect = 2 * (r1 ** 3 - r0 ** 3) / (3 * (r1 ** 2 - r0 ** 2))
    assert duni.mean() == pytest.approx(expect, rel=0.03)
    dist = sample_user_drop(dataclasses.replace(SystemConfig(), n_users=4000),
                            rng).distances_m
    assert dist.mean() == pytest.approx((r0 + r1) / 2, rel=0.03)


def test_path_count_examples(rng):
    assert sample_path_count(0.0, rng) == 1
    draws = np.array([sample_path_count(1.0, rng) for _ in range(1_000_000)])
    assert draws.min() >= 1
    assert draws.mean() == pytest.approx(1.0 + math.exp(-1.0), abs=0.01)
    draws2 = np.array([sample_path_count(2.0, rng) for _ in range(400_000)])
    assert np.mean(draws2.astype(float) ** 2) == pytest.approx(
        math.exp(-2.0) + 2.0 + 4.0, abs=0.05)
    with pytest.raises(ValueError):
        sample_path_count(-1.0, rng)


def test_support_cardinality_and_reproducibility():
    cfg = SystemConfig(n_antennas=32, n_users=5)
    drop = sample_user_drop(cfg, np.random.default_rng(3))
    ch1 = sample_beamspace_channel(cfg, drop, np.random.default_rng(17))
    ch2 = sample_beamspace_channel(cfg, drop, np.random.default_rng(17))
    np.testing.assert_array_equal(ch1.complex_gains, ch2.complex_gains)
    for k, rows in enumerate(ch1.support):
        assert rows.size == ch1.path_counts[k]
        assert np.all(np.abs(ch1.complex_gains[rows, k]) > 0)
        off = np.setdiff1d(np.arange(cfg.n_rf), rows)
        assert np.all(ch1.complex_gains[off, k] == 0)
    assert np.all(ch1.path_counts >= 1)


def test_full_support_when_paths_clamped(rng):
    cfg = SystemConfig(n_antennas=8, n_users=2, lambda_p_override=50.0)
    drop = sample_user_drop(cfg, rng)
    ch = sample_beamspace_channel(cfg, drop, rng)
    assert all(rows.size == cfg.n_rf for rows in ch.support)
    # dense columns: E||g||^2 equals the path count
    norms = [np.sum(np.abs(sample_beamspace_channel(cfg, drop, rng)
                           .complex_gains[:, 0]) ** 2)
             for _ in range(3000)]
    assert np.mean(norms) == pytest.approx(cfg.n_rf, rel=0.05)


def test_beamspace_moments_lambda_small(rng):
    # E||g||^2 = lp + exp(-lp) and E||g||^4 = lp^2 + 2 lp + 2 exp(-lp)
    lam = 1.0
    cfg = SystemConfig(n_antennas=16, n_users=2, lambda_p_override=lam)
    drop = sample_user_drop(cfg, rng)
    n = 100_000
    m2 = np.zeros(2)
    m4 = np.zeros(2)
    cross = 0.0
    for _ in range(n):
        g = sample_beamspace_channel(cfg, drop, rng).complex_gains
        norms = np.sum(np.abs(g) ** 2, axis=0)
        m2 += norms
        m4 += norms ** 2
        cross += abs(np.vdot(g[:, 0], g[:, 1])) ** 2
    e1 = lam + math.exp(-lam)
    e2 = lam ** 2 + 2 * lam + 2 * math.exp(-lam)
    assert m2.mean() / n == pytest.approx(e1, rel=0.02)
    assert m4.mean() / n == pytest.approx(e2, rel=0.02)
    assert cross / n == pytest.approx(e1 ** 2 / cfg.n_rf, rel=0.02)


def test_beamspace_moments_lambda_large(rng):
    lam = 12.8
    cfg = SystemConfig(n_antennas=256, n_users=2, lambda_p_override=lam,
                       n_rf_override=128)
    drop = sample_user_drop(cfg, rng)
    n = 100_000
    m2 = np.zeros(2)
    m4 = np.zeros(2)
    cross = 0.0
    for _ in range(n):
        g = sample_beamspace_channel(cfg, drop, rng).complex_gains
        norms = np.sum(np.abs(g) ** 2, axis=0)
        m2 += norms
        m4 += norms ** 2
        cross += abs(np.vdot(g[:, 0], g[:, 1])) ** 2
    e1 = lam + math.exp(-lam)
    e2 = lam ** 2 + 2 * lam + 2 * math.exp(-lam)
    assert m2.mean() / n == pytest.approx(e1, rel=0.02)
    assert m4.mean() / n == pytest.approx(e2, rel=0.02)
    assert cross / n == pytest.approx(e1 ** 2 / 128, rel=0.02)


def test_row_gains(simple_channel):
    zero_row = simple_channel(np.array([[1.0 + 0j], [0.0]]), [2.0])
    assert row_gains(zero_row)[1] == 0.0

    one_term = simple_channel(np.array([[math.sqrt(0.5) + 0j]]), [2.0])
    assert row_gains(one_term)[0] == pytest.approx(1.0)

    two_users = simple_channel(np.array([[1.0 + 0j, 1.0 + 0j]]), [1.0, 4.0])
    assert row_gains(two_users)[0] == pytest.approx(5.0)


def test_row_gains_phase_invariant(rng):
    cfg = SystemConfig(n_antennas=16, n_users=3)
    drop = sample_user_drop(cfg, rng)
    ch = sample_beamspace_channel(cfg, drop, rng)
    phases = np.exp(1j * rng.uniform(0, 2 * np.pi, size=ch.complex_gains.shape))
    rotated = dataclasses.replace(ch, complex_gains=ch.complex_gains * phases)
    np.testing.assert_allclose(row_gains(rotated), row_gains(ch), rtol=1e-12)


def test_expected_row_gains():
    supports = (np.array([0, 2]), np.array([2]))
    gains = expected_row_gains(supports, [1.0, 4.0], n_rf=4)
    np.testing.assert_allclose(gains, [1.0, 0.0, 5.0, 0.0])
