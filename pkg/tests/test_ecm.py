"""Covariance approximation tests: derivative oracles, structure, blending."""

import math

import numpy as np
import pytest

from fflink.channel import (
    SystemConfig,
    array_response,
    received_pilot,
    sample_scenario,
    steering_u,
)
from fflink.ecm import (
    cluster_ambiguity,
    crlb_matrix,
    csi_error_covariance,
    ecm_diag_only,
    ecm_from_json,
    ecm_to_json,
    ecm_with_reciprocity,
    is_hermitian_psd,
    jacobian_dl,
    observed_fim,
    paths_to_psi,
    psi_to_paths,
)
from fflink.nomp import EstimatedPath, EstimateSet, nomp_extract


def small_cfg(**kw):
    base = dict(n_ant=4, n_dev=1, n_paths=2, n_sc=8)
    base.update(kw)
    return SystemConfig(**base)


def dl_channel_of_psi(psi, f, cfg):
    h = np.zeros(cfg.n_ant, dtype=complex)
    for p in psi_to_paths(psi):
        a = array_response(p.theta, cfg.lambda_dl, cfg.n_ant, cfg.spacing)
        h += p.alpha * a * np.exp(-2j * np.pi * f * p.tau)
    return h


def pilot_of_psi(psi, cfg):
    y = np.zeros(cfg.n_sc * cfg.n_ant, dtype=complex)
    for p in psi_to_paths(psi):
        y += p.alpha * steering_u(p.tau, p.theta, cfg)
    return y


def random_psi(rng, cfg, n_paths):
    psi = np.empty(4 * n_paths)
    for i in range(n_paths):
        psi[4 * i : 4 * i + 4] = (
            rng.uniform(0.05, 0.95) * cfg.max_delay,
            rng.uniform(-1.2, 1.2),
            rng.uniform(0.5, 1.5) * math.cos(rng.uniform(0, 2 * math.pi)),
            rng.uniform(0.5, 1.5) * math.sin(rng.uniform(0, 2 * math.pi)),
        )
    return psi


class TestJacobian:
    def test_finite_difference_oracle(self):
        cfg = small_cfg()
        rng = np.random.default_rng(0)
        worst = 0.0
        for _ in range(20):
            n_paths = rng.integers(1, 4)
            psi = random_psi(rng, cfg, n_paths)
            f = rng.uniform(1e7, 2e8)
            jac = jacobian_dl(psi, f, cfg)
            for i in range(len(psi)):
                scale = (1e-3 / (2 * np.pi * f), 1e-5, 1e-5, 1e-5)[i % 4]
                dp = np.zeros_like(psi)
                dp[i] = scale
                fd = (
                    dl_channel_of_psi(psi + dp, f, cfg)
                    - dl_channel_of_psi(psi - dp, f, cfg)
                ) / (2 * scale)
                rel = np.linalg.norm(fd - jac[i]) / np.linalg.norm(jac[i])
                worst = max(worst, rel)
        assert worst < 1e-6

    def test_zero_gain_rows(self):
        cfg = small_cfg()
        psi = np.array([2e-7, 0.4, 0.0, 0.0])
        jac = jacobian_dl(psi, 1e8, cfg)
        assert np.allclose(jac[0], 0) and np.allclose(jac[1], 0)
        a = array_response(0.4, cfg.lambda_dl, cfg.n_ant, cfg.spacing)
        phase = np.exp(-2j * np.pi * 1e8 * 2e-7)
        assert np.allclose(jac[2], a * phase)
        assert np.allclose(jac[3], 1j * a * phase)

    def test_delay_row_vanishes_at_zero_offset(self):
        cfg = small_cfg()
        psi = np.array([3e-7, 0.0, 1.0, 0.0])
        jac = jacobian_dl(psi, 0.0, cfg)
        assert np.allclose(jac[0], 0)


class TestObservedFim:
    def test_bitwise_symmetric(self):
        cfg = small_cfg()
        rng = np.random.default_rng(1)
        psi = random_psi(rng, cfg, 2)
        sc = sample_scenario(cfg, rng)
        y = received_pilot(sc.devices[0], cfg, rng)
        fim = observed_fim(y, psi, cfg.sigma2_est, cfg)
        assert np.array_equal(fim, fim.T)

    def test_zero_residual_reduces_to_gram(self):
        cfg = small_cfg()
        rng = np.random.default_rng(2)
        psi = random_psi(rng, cfg, 2)
        y = pilot_of_psi(psi, cfg)
        fim = observed_fim(y, psi, cfg.sigma2_est, cfg)
        # rebuild the Gram term alone through the first derivatives
        from fflink.nomp import steering_derivatives

        rows = []
        for p in psi_to_paths(psi):
            d = steering_derivatives(p.tau, p.theta, cfg)
            rows += [p.alpha * d["du_tau"], p.alpha * d["du_theta"], d["u"], 1j * d["u"]]
        dmat = np.stack(rows)
        gram = (2.0 / cfg.sigma2_est) * (dmat.conj() @ dmat.T).real
        assert np.allclose(fim, 0.5 * (gram + gram.T), rtol=1e-10, atol=1e-6)

    def test_gain_block_identity(self):
        # for a single path, the (Re, Im) sub-block is (2/sigma^2)||u||^2 I
        cfg = small_cfg()
        rng = np.random.default_rng(3)
        psi = random_psi(rng, cfg, 1)
        y = pilot_of_psi(psi, cfg)
        fim = observed_fim(y, psi, cfg.sigma2_est, cfg)
        mn = cfg.n_sc * cfg.n_ant
        expected = (2.0 / cfg.sigma2_est) * mn * np.eye(2)
        assert np.allclose(fim[2:4, 2:4], expected, rtol=1e-9)

    def test_matches_nll_hessian(self):
        cfg = small_cfg()
        rng = np.random.default_rng(4)
        for trial in range(3):
            n_paths = 1 + trial % 2
            psi = random_psi(rng, cfg, n_paths)
            sc = sample_scenario(cfg, rng)
            y = received_pilot(sc.devices[0], cfg, rng)
            s2 = cfg.sigma2_est
            fim = observed_fim(y, psi, s2, cfg)

            def nll(p):
                r = y - pilot_of_psi(p, cfg)
                return float(np.vdot(r, r).real) / s2

            n = len(psi)
            scales = np.tile([1.0 / (cfg.n_sc * cfg.delta_f), 1.0, 1.0, 1.0], n_paths)
            d = 1e-4
            hess = np.zeros((n, n))
            for i in range(n):
                for j in range(i, n):
                    ei = np.zeros(n)
                    ej = np.zeros(n)
                    ei[i] = d * scales[i]
                    ej[j] = d * scales[j]
                    val = (
                        nll(psi + ei + ej)
                        - nll(psi + ei - ej)
                        - nll(psi - ei + ej)
                        + nll(psi - ei - ej)
                    ) / (4 * d * d * scales[i] * scales[j])
                    hess[i, j] = hess[j, i] = val
            smat = np.diag(scales)
            ref = smat @ hess @ smat
            got = smat @ fim @ smat
            assert np.abs(got - ref).max() / np.abs(got).max() < 1e-4


class TestCrlb:
    def test_identity_fim_collapse(self):
        cfg = small_cfg()
        rng = np.random.default_rng(5)
        psi = random_psi(rng, cfg, 2)
        jac = jacobian_dl(psi, 1e8, cfg)
        c_hat, ridged = crlb_matrix(jac, 2.5 * np.eye(8))
        assert not ridged
        # rows of jac are d(h^T)/d psi, so the error covariance is the
        # conjugate of the raw sandwich
        assert np.allclose(c_hat, np.conj(jac.conj().T @ jac) / 2.5)

    def test_linear_model_gains_only(self):
        # zero the tau/theta rows and restrict the information matrix: the
        # result must match the linear-Gaussian covariance sigma^2/(2||u||^2)
        # spread over the two gain coordinates.
        cfg = small_cfg()
        rng = np.random.default_rng(6)
        psi = random_psi(rng, cfg, 1)
        f = 1.1e8
        jac = jacobian_dl(psi, f, cfg)
        jac[0] = 0.0
        jac[1] = 0.0
        mn = cfg.n_sc * cfg.n_ant
        s2 = cfg.sigma2_est
        fim = np.zeros((4, 4))
        fim[0, 0] = fim[1, 1] = 1.0  # keep invertible; rows are zeroed anyway
        fim[2:4, 2:4] = (2.0 / s2) * mn * np.eye(2)
        c_hat, _ = crlb_matrix(jac, fim)
        p = psi_to_paths(psi)[0]
        a = array_response(p.theta, cfg.lambda_dl, cfg.n_ant, cfg.spacing)
        expected = (s2 / mn) * np.outer(a, a.conj())
        assert np.allclose(c_hat, expected, rtol=1e-9)

    def test_random_instances_hermitian_psd(self):
        cfg = small_cfg()
        rng = np.random.default_rng(7)
        for _ in range(100):
            psi = random_psi(rng, cfg, 2)
            sc = sample_scenario(cfg, rng)
            y = received_pilot(sc.devices[0], cfg, rng)
            fim = observed_fim(y, psi, cfg.sigma2_est, cfg)
            jac = jacobian_dl(psi, cfg.f_offset, cfg)
            c_hat, _ = crlb_matrix(jac, fim)
            assert is_hermitian_psd(c_hat)

    def test_singular_fim_ridged(self):
        cfg = small_cfg()
        rng = np.random.default_rng(8)
        psi = random_psi(rng, cfg, 2)
        psi[4:] = psi[:4]  # duplicate path makes the information singular
        jac = jacobian_dl(psi, 1e8, cfg)
        y = pilot_of_psi(psi, cfg)
        fim = observed_fim(y, psi, cfg.sigma2_est, cfg)
        c_hat, ridged = crlb_matrix(jac, fim)
        assert ridged
        assert is_hermitian_psd(c_hat)


class TestReciprocity:
    def test_eta_one_collapse_exact(self):
        c = np.diag([1.0 + 0j, 2.0, 3.0])
        assert np.array_equal(ecm_with_reciprocity(c, [1.0] * 5, 5), c)

    def test_eta_zero_collapse_exact(self):
        rng = np.random.default_rng(9)
        q = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        c = q @ q.conj().T
        assert np.array_equal(ecm_with_reciprocity(c, [0.0] * 3, 3), np.eye(4))

    def test_point_nine_blend(self):
        c = np.eye(2, dtype=complex) * 4.0
        out = ecm_with_reciprocity(c, [0.9] * 5, 5)
        expected = 0.81 * c + 0.19 * np.eye(2)
        assert np.allclose(out, expected, rtol=0, atol=1e-15)

    def test_identity_scale(self):
        c = np.zeros((3, 3), dtype=complex)
        out = ecm_with_reciprocity(c, [0.0] * 2, 2, identity_scale=1 / 3)
        assert np.allclose(out, np.eye(3) / 3)

    def test_trace_continuity_endpoints(self):
        rng = np.random.default_rng(10)
        q = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        c = q @ q.conj().T
        traces = [
            np.trace(ecm_with_reciprocity(c, [e] * 4, 4)).real
            for e in np.linspace(0, 1, 21)
        ]
        assert traces[-1] == pytest.approx(np.trace(c).real)
        assert traces[0] == pytest.approx(5.0)
        diffs = np.abs(np.diff(traces))
        assert diffs.max() < 0.2 * (abs(np.trace(c).real - 5.0) + 1.0)

    def test_bad_eta_rejected(self):
        with pytest.raises(ValueError):
            ecm_with_reciprocity(np.eye(2), [1.2], 1)


class TestDiagOnly:
    def test_diagonal_unchanged(self):
        d = np.diag([1.0, 2.0, 3.0]).astype(complex)
        assert np.array_equal(ecm_diag_only(d), d)

    def test_trace_preserved(self):
        rng = np.random.default_rng(11)
        q = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        c = q @ q.conj().T
        assert np.trace(ecm_diag_only(c)) == pytest.approx(np.trace(c))


class TestClusterAmbiguity:
    def test_resolved_paths_contribute_nothing(self):
        cfg = small_cfg(n_sc=16)
        est = EstimateSet(
            paths=[
                EstimatedPath(0.1 * cfg.max_delay, 0.8, 1.0),
                EstimatedPath(0.7 * cfg.max_delay, -0.8, 1.0),
            ],
            residual=np.zeros(cfg.n_sc * cfg.n_ant, dtype=complex),
        )
        out = cluster_ambiguity(est, cfg.f_offset, cfg)
        assert np.allclose(out, 0.0)

    def test_coincident_pair_contributes_energy(self):
        cfg = small_cfg(n_sc=16)
        tau = 0.4 * cfg.max_delay
        dt = 0.05 / (cfg.n_sc * cfg.delta_f)
        est = EstimateSet(
            paths=[
                EstimatedPath(tau, 0.3, 1.0),
                EstimatedPath(tau + dt, 0.31, 0.5),
            ],
            residual=np.zeros(cfg.n_sc * cfg.n_ant, dtype=complex),
        )
        out = cluster_ambiguity(est, cfg.f_offset, cfg)
        assert is_hermitian_psd(out)
        assert np.trace(out).real > 0

    def test_zero_offset_no_penalty(self):
        cfg = small_cfg(n_sc=16)
        tau = 0.4 * cfg.max_delay
        dt = 0.05 / (cfg.n_sc * cfg.delta_f)
        est = EstimateSet(
            paths=[EstimatedPath(tau, 0.3, 1.0), EstimatedPath(tau + dt, 0.31, 0.5)],
            residual=np.zeros(cfg.n_sc * cfg.n_ant, dtype=complex),
        )
        out = cluster_ambiguity(est, 0.0, cfg)
        assert np.allclose(out, 0.0)


class TestPipeline:
    def test_pipeline_covariances_structurally_valid(self):
        cfg = SystemConfig()
        rng = np.random.default_rng(12)
        for _ in range(5):
            sc = sample_scenario(cfg, rng)
            for dev in sc.devices:
                y = received_pilot(dev, cfg, rng)
                est = nomp_extract(y, cfg)
                phi, _ = csi_error_covariance(
                    y, est, cfg, etas=[0.9] * max(len(est.paths), 1)
                )
                assert is_hermitian_psd(phi)

    def test_json_round_trip(self):
        rng = np.random.default_rng(13)
        q = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        c = q @ q.conj().T
        back = ecm_from_json(ecm_to_json(c))
        assert np.allclose(back, c)

    def test_psi_round_trip(self):
        paths = [EstimatedPath(1e-7, 0.2, 1.0 - 0.5j), EstimatedPath(2e-7, -0.4, 0.25j)]
        back = psi_to_paths(paths_to_psi(paths))
        assert back[0].alpha == paths[0].alpha
        assert back[1].tau == paths[1].tau
