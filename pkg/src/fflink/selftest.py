"""Fast invariant checks behind the ``selftest`` CLI subcommand.

Each check is cheap (< 1 s); together they catch gross regressions in the
channel algebra, the extractor stopping rule, the precoder feasibility
contract, and the latency/energy arithmetic.
"""

from __future__ import annotations

import math

import numpy as np

from .channel import SystemConfig, array_response, sample_scenario, steering_u
from .ecm import ecm_with_reciprocity
from .evaluate import (
    EnergyConfig,
    LatencyConfig,
    dac_power_w,
    harq_rounds,
    latency_total,
    run_trial,
)
from .precoder import CsiInput, SolverConfig, lse_min, mmf_solve, waterfill_common


def run(cfg: SystemConfig | None = None) -> list[tuple[str, str]]:
    """Run every check; returns (name, message) for each failure."""
    cfg = cfg or SystemConfig()
    failures: list[tuple[str, str]] = []

    def check(name, fn):
        try:
            fn()
        except AssertionError as exc:
            failures.append((name, str(exc) or "assertion failed"))
        except Exception as exc:
            failures.append((name, f"{type(exc).__name__}: {exc}"))

    def norms():
        a = array_response(0.4, cfg.lambda_ul, cfg.n_ant, cfg.spacing)
        assert abs(np.linalg.norm(a) ** 2 - cfg.n_ant) < 1e-9
        u = steering_u(1e-7, -0.3, cfg)
        assert abs(np.linalg.norm(u) ** 2 - cfg.n_sc * cfg.n_ant) < 1e-6

    def scenario_energy():
        rng = np.random.default_rng(7)
        energies = []
        for _ in range(200):
            sc = sample_scenario(cfg, rng)
            from .channel import uplink_channel

            energies.append(np.linalg.norm(uplink_channel(sc.devices[0], 0.0, cfg)) ** 2)
        mean = float(np.mean(energies))
        assert 0.7 < mean < 1.3, f"mean channel energy {mean}"

    def waterfill():
        c = waterfill_common(np.array([1.0, 3.0]), 1.0)
        assert np.allclose(c, [1.0, 0.0])
        rng = np.random.default_rng(3)
        for _ in range(20):
            rp = rng.uniform(0, 5, 4)
            budget = rng.uniform(0, 4)
            c = waterfill_common(rp, budget)
            assert abs(c.sum() - budget) < 1e-12 and (c >= 0).all()

    def lse_sandwich():
        rng = np.random.default_rng(5)
        for _ in range(20):
            x = rng.uniform(0, 6, 4)
            v = lse_min(x, 0.1)
            assert x.min() - 0.1 * math.log(len(x)) <= v <= x.min() + 1e-12

    def reciprocity_endpoints():
        c = np.diag([1.0 + 0j, 2.0, 3.0])
        assert np.array_equal(ecm_with_reciprocity(c, [1, 1, 1]), c)
        assert np.array_equal(ecm_with_reciprocity(c, [0, 0, 0]), np.eye(3))

    def solver_feasible():
        rng = np.random.default_rng(11)
        h = (rng.standard_normal((3, 6)) + 1j * rng.standard_normal((3, 6))) / math.sqrt(12)
        sol = mmf_solve(CsiInput(h, None, 1e-2), SolverConfig(gamma_grid=(0.5, 0.7, 0.9)))
        assert abs(np.linalg.norm(sol.fbar) - 1) < 1e-9
        assert (sol.common_parts >= 0).all()
        assert sol.common_parts.sum() <= sol.rate_common.min() + 1e-9

    def latency_energy_arith():
        t, capped = harq_rounds([4.0], 25_000, 20e6, 0.5e-3)
        assert t == 1 and not capped
        rng = np.random.default_rng(0)
        lat = latency_total("rsma-ecm", 1, LatencyConfig(), rng)
        assert lat.t1_ms == 0.0 and abs(lat.t2_ms - 0.116) < 1e-12
        assert abs(dac_power_w(EnergyConfig()) - 0.99744) < 1e-5

    def determinism():
        small = SystemConfig(n_ant=4, n_dev=2, n_paths=2, n_sc=16)
        lat = LatencyConfig()
        r1 = run_trial(small, lat, ("rzf", "mrt"), 42, 0)
        r2 = run_trial(small, lat, ("rzf", "mrt"), 42, 0)
        for m in ("rzf", "mrt"):
            assert r1.results[m] == r2.results[m]

    check("array_norms", norms)
    check("scenario_energy", scenario_energy)
    check("waterfilling", waterfill)
    check("lse_sandwich", lse_sandwich)
    check("reciprocity_endpoints", reciprocity_endpoints)
    check("solver_feasibility", solver_feasible)
    check("latency_energy", latency_energy_arith)
    check("determinism", determinism)
    return failures
