"""Extractor tests: detection, refinement, joint LS, full loop, reconstruction."""

import math

import numpy as np
import pytest

from fflink.channel import (
    PathParams,
    SystemConfig,
    received_pilot,
    sample_scenario,
    steering_u,
    uplink_channel,
)
from fflink.nomp import (
    EstimatedPath,
    EstimateSet,
    NompConfig,
    cfar_threshold,
    coarse_detect,
    gain_ls_single,
    ls_update_all,
    newton_refine,
    nomp_extract,
    reconstruct_downlink,
)


def small_cfg(**kw):
    base = dict(n_ant=4, n_dev=1, n_paths=2, n_sc=8, sigma2_est=0.0)
    base.update(kw)
    return SystemConfig(**base)


def grid_points(cfg, osf):
    gm, gn = osf * cfg.n_sc, osf * cfg.n_ant
    taus = np.arange(gm) / (gm * cfg.delta_f)
    ks = np.arange(-gn // 2, gn // 2)
    sines = ks / (gn * cfg.spacing / cfg.lambda_ul)
    thetas = np.arcsin(sines[np.abs(sines) < 1.0])
    return taus, thetas


class TestCoarseDetect:
    def test_on_grid_path_recovered_exactly(self):
        cfg = small_cfg()
        osf = 2
        taus, thetas = grid_points(cfg, osf)
        tau0, theta0 = taus[3], thetas[5]
        r = steering_u(tau0, theta0, cfg)
        tau, theta, metric = coarse_detect(r, cfg, NompConfig(grid_oversampling=osf))
        assert tau == pytest.approx(tau0, abs=1e-15)
        assert theta == pytest.approx(theta0, abs=1e-12)
        assert metric == pytest.approx(cfg.n_sc * cfg.n_ant, rel=1e-9)

    def test_matches_exhaustive_oracle(self):
        cfg = small_cfg()
        osf = 2
        rng = np.random.default_rng(0)
        r = rng.standard_normal(cfg.n_sc * cfg.n_ant) + 1j * rng.standard_normal(
            cfg.n_sc * cfg.n_ant
        )
        tau, theta, metric = coarse_detect(r, cfg, NompConfig(grid_oversampling=osf))
        taus, thetas = grid_points(cfg, osf)
        best = -1.0
        arg = None
        for t in taus:
            for th in thetas:
                u = steering_u(t, th, cfg)
                val = abs(np.vdot(u, r)) ** 2 / (cfg.n_sc * cfg.n_ant)
                if val > best + 1e-12:
                    best, arg = val, (t, th)
        assert metric == pytest.approx(best, rel=1e-9)
        assert tau == pytest.approx(arg[0], abs=1e-15)
        assert theta == pytest.approx(arg[1], abs=1e-12)

    def test_two_equal_paths_one_found_within_3db(self):
        cfg = small_cfg()
        osf = 4
        taus, thetas = grid_points(cfg, osf)
        r = steering_u(taus[2], thetas[3], cfg) + steering_u(taus[20], thetas[12], cfg)
        _, _, metric = coarse_detect(r, cfg, NompConfig(grid_oversampling=osf))
        mn = cfg.n_sc * cfg.n_ant
        assert metric >= mn / 2.0  # within 3 dB of a lone path's peak


class TestGainLs:
    def test_projection_identity(self):
        cfg = small_cfg()
        c = 0.3 - 1.1j
        r = c * steering_u(1e-7, 0.2, cfg)
        assert gain_ls_single(r, 1e-7, 0.2, cfg) == pytest.approx(c)

    def test_orthogonal_gives_zero(self):
        cfg = small_cfg()
        u = steering_u(0.0, 0.0, cfg)
        rng = np.random.default_rng(1)
        r = rng.standard_normal(len(u)) + 1j * rng.standard_normal(len(u))
        r -= (np.vdot(u, r) / np.vdot(u, u)) * u
        assert abs(gain_ls_single(r, 0.0, 0.0, cfg)) < 1e-12

    def test_minimizes_residual_over_scalar(self):
        cfg = small_cfg()
        rng = np.random.default_rng(2)
        r = rng.standard_normal(32) + 1j * rng.standard_normal(32)
        u = steering_u(2e-7, -0.4, cfg)
        a = gain_ls_single(r, 2e-7, -0.4, cfg)
        base = np.linalg.norm(r - a * u)
        for da in (1e-3, -1e-3, 1e-3j, -1e-3j):
            assert np.linalg.norm(r - (a + da) * u) >= base


class TestNewtonRefine:
    def test_stationary_point_unmoved(self):
        cfg = small_cfg()
        tau0, theta0 = 0.31 * cfg.max_delay, 0.27
        y = steering_u(tau0, theta0, cfg)
        path = EstimatedPath(tau0, theta0, 1.0)
        out = newton_refine(y, path, cfg)
        assert out.tau == pytest.approx(tau0, abs=1e-12 * cfg.max_delay)
        assert out.theta == pytest.approx(theta0, abs=1e-9)

    def test_half_bin_error_shrinks(self):
        cfg = small_cfg()
        osf = 4
        taus, _ = grid_points(cfg, osf)
        tau0, theta0 = taus[6], 0.1
        y = steering_u(tau0, theta0, cfg)
        half_bin = 0.5 / (osf * cfg.n_sc * cfg.delta_f)
        start = EstimatedPath(tau0 + half_bin, theta0, gain_ls_single(y, tau0 + half_bin, theta0, cfg))
        out = newton_refine(y, start, cfg)
        assert abs(out.tau - tau0) < half_bin

    def test_accepted_step_increases_objective(self):
        cfg = small_cfg()
        rng = np.random.default_rng(3)
        y = rng.standard_normal(32) + 1j * rng.standard_normal(32)
        tau, theta = 0.4 * cfg.max_delay, -0.2
        path = EstimatedPath(tau, theta, gain_ls_single(y, tau, theta, cfg))
        out = newton_refine(y, path, cfg)
        j_before = abs(np.vdot(steering_u(tau, theta, cfg), y)) ** 2
        j_after = abs(np.vdot(steering_u(out.tau, out.theta, cfg), y)) ** 2
        assert j_after >= j_before - 1e-9

    def test_bounds_clamped(self):
        cfg = small_cfg()
        y = steering_u(0.0, 0.0, cfg)
        path = EstimatedPath(0.0, 0.0, 1.0)
        out = newton_refine(y, path, cfg)
        assert 0.0 <= out.tau <= cfg.max_delay
        assert abs(out.theta) < math.pi / 2


class TestLsUpdateAll:
    def test_single_path_equals_scalar_ls(self):
        cfg = small_cfg()
        rng = np.random.default_rng(4)
        y = rng.standard_normal(32) + 1j * rng.standard_normal(32)
        paths = [EstimatedPath(1e-7, 0.3, 0.0)]
        gains, residual, dropped = ls_update_all(y, paths, cfg)
        assert not dropped
        assert gains[0] == pytest.approx(gain_ls_single(y, 1e-7, 0.3, cfg))

    def test_exact_span_zero_residual(self):
        cfg = small_cfg()
        p1 = EstimatedPath(0.1 * cfg.max_delay, 0.5, 2.0)
        p2 = EstimatedPath(0.6 * cfg.max_delay, -0.7, 1.0 - 1.0j)
        y = p1.alpha * steering_u(p1.tau, p1.theta, cfg) + p2.alpha * steering_u(
            p2.tau, p2.theta, cfg
        )
        gains, residual, _ = ls_update_all(y, [p1, p2], cfg)
        assert np.allclose(gains, [p1.alpha, p2.alpha])
        assert np.linalg.norm(residual) < 1e-10

    def test_local_perturbation_cannot_improve(self):
        cfg = small_cfg()
        rng = np.random.default_rng(5)
        y = rng.standard_normal(32) + 1j * rng.standard_normal(32)
        paths = [
            EstimatedPath(0.1 * cfg.max_delay, 0.5, 0.0),
            EstimatedPath(0.5 * cfg.max_delay, -0.3, 0.0),
            EstimatedPath(0.8 * cfg.max_delay, 0.9, 0.0),
        ]
        gains, residual, _ = ls_update_all(y, paths, cfg)
        u_mat = np.column_stack([steering_u(p.tau, p.theta, cfg) for p in paths])
        base = np.linalg.norm(residual)
        rng2 = np.random.default_rng(6)
        for _ in range(10):
            noise = 1e-3 * (rng2.standard_normal(3) + 1j * rng2.standard_normal(3))
            assert np.linalg.norm(y - u_mat @ (gains + noise)) >= base - 1e-12

    def test_duplicate_dropped_and_flagged(self):
        cfg = small_cfg()
        rng = np.random.default_rng(7)
        y = rng.standard_normal(32) + 1j * rng.standard_normal(32)
        paths = [EstimatedPath(1e-7, 0.2, 0.0), EstimatedPath(1e-7, 0.2, 0.0)]
        gains, _, dropped = ls_update_all(y, paths, cfg)
        assert dropped
        assert gains[1] == 0


class TestExtract:
    def test_noiseless_single_offgrid_path(self):
        cfg = small_cfg(n_sc=16)
        tau0 = 0.2917 * cfg.max_delay
        theta0 = 0.3731
        alpha0 = 0.8 - 0.4j
        paths = [PathParams(tau0, theta0, alpha0, alpha0)]
        rng = np.random.default_rng(8)
        y = received_pilot(paths, cfg, rng)
        est = nomp_extract(y, cfg, NompConfig(kappa=1e-6))
        assert len(est.paths) == 1
        p = est.paths[0]
        assert abs(p.tau - tau0) * cfg.delta_f < 1e-4
        assert abs(p.theta - theta0) / math.pi < 1e-4
        assert abs(p.alpha - alpha0) / abs(alpha0) < 1e-4

    def test_pure_noise_rarely_detects(self):
        cfg = SystemConfig(n_ant=4, n_sc=16, sigma2_est=0.05)
        ncfg = NompConfig()
        rng = np.random.default_rng(9)
        n = cfg.n_sc * cfg.n_ant
        zero_detections = 0
        trials = 300
        for _ in range(trials):
            w = math.sqrt(cfg.sigma2_est / 2) * (
                rng.standard_normal(n) + 1j * rng.standard_normal(n)
            )
            est = nomp_extract(w, cfg, ncfg)
            zero_detections += len(est.paths) == 0
        assert zero_detections / trials >= 0.97

    def test_well_separated_on_grid_paths_counted(self):
        cfg = small_cfg(n_sc=16)
        osf = 4
        gm, gn = osf * cfg.n_sc, osf * cfg.n_ant
        taus = np.arange(gm) / (gm * cfg.delta_f)
        ks = np.arange(-gn // 2 + 1, gn // 2)
        sines = ks / (gn * cfg.spacing / cfg.lambda_ul)
        thetas = np.arcsin(sines)
        true = [
            PathParams(taus[8], thetas[3], 1.0, 1.0),
            PathParams(taus[24], thetas[9], 0.8j, 0.8j),
            PathParams(taus[48], thetas[13], -0.9, -0.9),
        ]
        rng = np.random.default_rng(10)
        y = received_pilot(true, cfg, rng)
        est = nomp_extract(y, cfg, NompConfig(kappa=1e-5, max_paths=6))
        assert len(est.paths) == 3

    def test_residual_recomputable(self):
        cfg = SystemConfig()
        rng = np.random.default_rng(11)
        sc = sample_scenario(cfg, rng)
        y = received_pilot(sc.devices[0], cfg, rng)
        est = nomp_extract(y, cfg)
        rebuilt = y - sum(
            p.alpha * steering_u(p.tau, p.theta, cfg) for p in est.paths
        )
        assert np.allclose(rebuilt, est.residual, atol=1e-10)

    def test_deterministic(self):
        cfg = SystemConfig()
        rng = np.random.default_rng(12)
        sc = sample_scenario(cfg, rng)
        y = received_pilot(sc.devices[0], cfg, rng)
        a = nomp_extract(y, cfg)
        b = nomp_extract(y, cfg)
        assert a.to_json() == b.to_json()

    def test_max_paths_truncation_flag(self):
        cfg = SystemConfig()
        rng = np.random.default_rng(13)
        sc = sample_scenario(cfg, rng)
        y = received_pilot(sc.devices[0], cfg, rng)
        est = nomp_extract(y, cfg, NompConfig(kappa=1e-9, max_paths=2))
        assert len(est.paths) == 2
        assert est.truncated

    def test_median_uplink_nmse(self):
        # operating-point quality: median reconstruction error over the band
        cfg = SystemConfig()
        rng = np.random.default_rng(14)
        errs = []
        for _ in range(40):
            sc = sample_scenario(cfg, rng)
            dev = sc.devices[0]
            y = received_pilot(dev, cfg, rng)
            est = nomp_extract(y, cfg)
            num = den = 0.0
            m0 = math.floor(-cfg.n_sc / 2)
            for i in range(0, cfg.n_sc, 8):
                f = (m0 + i) * cfg.delta_f
                h = uplink_channel(dev, f, cfg)
                h_est = np.zeros(cfg.n_ant, dtype=complex)
                for p in est.paths:
                    a = np.exp(
                        2j * np.pi * np.arange(cfg.n_ant)
                        * (cfg.spacing / cfg.lambda_ul) * np.sin(p.theta)
                    )
                    h_est += p.alpha * a * np.exp(-2j * np.pi * f * p.tau)
                num += np.linalg.norm(h_est - h) ** 2
                den += np.linalg.norm(h) ** 2
            errs.append(num / den)
        assert 10 * math.log10(np.median(errs)) <= -15.0


class TestReconstruct:
    def test_perfect_estimates_full_reciprocity(self):
        cfg = small_cfg(
            eta=1.0, lambda_dl=SystemConfig().lambda_ul, f_offset=0.0
        )
        rng = np.random.default_rng(15)
        sc = sample_scenario(cfg, rng)
        dev = sc.devices[0]
        est = EstimateSet(
            paths=[EstimatedPath(p.tau, p.theta, p.alpha_ul) for p in dev],
            residual=np.zeros(cfg.n_sc * cfg.n_ant, dtype=complex),
        )
        h = reconstruct_downlink(est, 1.0, 0.0, cfg)
        assert np.allclose(h, uplink_channel(dev, 0.0, cfg))

    def test_eta_zero_gives_zero(self):
        cfg = small_cfg()
        est = EstimateSet(
            paths=[EstimatedPath(1e-7, 0.3, 1.0 + 1.0j)],
            residual=np.zeros(32, dtype=complex),
        )
        assert np.allclose(reconstruct_downlink(est, 0.0, cfg.f_offset, cfg), 0.0)

    def test_matches_direct_sum(self):
        cfg = SystemConfig()
        rng = np.random.default_rng(16)
        est = EstimateSet(
            paths=[
                EstimatedPath(
                    rng.uniform(0, cfg.max_delay), rng.uniform(-1, 1),
                    complex(*rng.standard_normal(2)),
                )
                for _ in range(4)
            ],
            residual=np.zeros(cfg.n_sc * cfg.n_ant, dtype=complex),
        )
        eta = 0.85
        f = cfg.f_offset
        oracle = np.zeros(cfg.n_ant, dtype=complex)
        for p in est.paths:
            for n in range(cfg.n_ant):
                oracle[n] += (
                    eta * p.alpha
                    * np.exp(2j * np.pi * n * (cfg.spacing / cfg.lambda_dl) * np.sin(p.theta))
                    * np.exp(-2j * np.pi * f * p.tau)
                )
        assert np.allclose(reconstruct_downlink(est, eta, f, cfg), oracle)


class TestCfar:
    def test_threshold_formula(self):
        k = cfar_threshold(0.01, 1000, 0.01)
        assert k == pytest.approx(0.01 * math.log(1000 / 0.01))

    def test_json_round_trip(self):
        est = EstimateSet(
            paths=[EstimatedPath(1e-7, -0.2, 0.5 + 0.25j)],
            residual=np.zeros(4, dtype=complex),
            truncated=True,
        )
        back = EstimateSet.from_json(est.to_json())
        assert back.paths[0].alpha == est.paths[0].alpha
        assert back.truncated
