"""Delay-angle path extraction from stacked pilots via Newtonized OMP.

The extractor alternates greedy grid detection, per-path Newton refinement of
(tau, theta) off the grid, cyclic re-refinement of all paths, and a joint
least-squares re-fit of the gains, until the strongest remaining grid metric
drops below a detection threshold.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import SystemConfig, steering_u

THETA_EDGE = math.pi / 2 - 1e-9


@dataclass
class NompConfig:
    """Extractor knobs.

    grid_oversampling  grid refinement per dimension relative to (n_sc, n_ant)
    kappa              detection threshold on |u^H r|^2 / ||u||^2; when None it
                       is derived from sigma2_est at the given false-alarm rate
    p_false_alarm      per-observation false-alarm target for the derived kappa
    newton_rounds      cyclic refinement passes after each new detection
    max_paths          detection cap; defaults to 2 * cfg.n_paths
    """

    grid_oversampling: int = 4
    kappa: float | None = None
    p_false_alarm: float = 1e-2
    newton_rounds: int = 3
    max_paths: int | None = None

    def __post_init__(self):
        if self.grid_oversampling < 1:
            raise ValueError("grid_oversampling must be >= 1")
        if self.kappa is not None and self.kappa <= 0:
            raise ValueError("kappa must be positive")
        if self.max_paths is not None and self.max_paths < 1:
            raise ValueError("max_paths must be >= 1")


@dataclass
class EstimatedPath:
    tau: float
    theta: float
    alpha: complex


@dataclass
class EstimateSet:
    """Extracted paths plus the residual they leave on the observation."""

    paths: list[EstimatedPath]
    residual: np.ndarray
    truncated: bool = False
    dropped_duplicates: bool = False

    def __len__(self) -> int:
        return len(self.paths)

    def to_json(self) -> str:
        return json.dumps(
            {
                "paths": [
                    {
                        "tau": p.tau,
                        "theta": p.theta,
                        "alpha": [p.alpha.real, p.alpha.imag],
                    }
                    for p in self.paths
                ],
                "truncated": self.truncated,
                "dropped_duplicates": self.dropped_duplicates,
            }
        )

    @classmethod
    def from_json(cls, text: str, residual: np.ndarray | None = None) -> "EstimateSet":
        d = json.loads(text)
        paths = [
            EstimatedPath(p["tau"], p["theta"], complex(*p["alpha"]))
            for p in d["paths"]
        ]
        res = residual if residual is not None else np.zeros(0, dtype=complex)
        return cls(
            paths=paths,
            residual=res,
            truncated=d.get("truncated", False),
            dropped_duplicates=d.get("dropped_duplicates", False),
        )


def cfar_threshold(sigma2_est: float, grid_size: int, p_false_alarm: float) -> float:
    """Threshold on the normalized metric so pure noise rarely triggers.

    Under noise, |u^H w|^2 / ||u||^2 is exponential with mean sigma2_est; a
    union bound over the grid gives the exceedance level below.
    """
    if sigma2_est <= 0:
        return 0.0
    return sigma2_est * math.log(grid_size / p_false_alarm)


def _grid_axes(cfg: SystemConfig, osf: int):
    """Delay and angle grids matching the zero-padded FFT bins."""
    gm = osf * cfg.n_sc
    gn = osf * cfg.n_ant
    taus = np.arange(gm) / (gm * cfg.delta_f)
    k = np.arange(gn)
    k[k >= gn // 2] -= gn  # signed bin index
    k = np.sort(k)
    sin_theta = k / (gn * cfg.spacing / cfg.lambda_ul)
    valid = np.abs(sin_theta) < 1.0
    thetas = np.full(gn, np.nan)
    thetas[valid] = np.arcsin(sin_theta[valid])
    return taus, thetas, valid


def coarse_detect(
    residual: np.ndarray, cfg: SystemConfig, ncfg: NompConfig | None = None
) -> tuple[float, float, float]:
    """Strongest (tau, theta) on the oversampled grid.

    Returns the grid point maximizing |u^H r|^2 / ||u||^2 together with the
    metric value.  Ties resolve to the lowest delay index, then the lowest
    angle index (angles sorted ascending).
    """
    ncfg = ncfg or NompConfig()
    osf = ncfg.grid_oversampling
    m, n = cfg.n_sc, cfg.n_ant
    r = residual.reshape(m, n)
    # u^H r factorizes into an angle DFT over antennas and an inverse delay
    # DFT over tones; the tone-offset prefactor has unit modulus.
    spec = np.fft.fft(r, osf * n, axis=1)
    spec = osf * m * np.fft.ifft(spec, osf * m, axis=0)
    metric = np.abs(spec) ** 2 / (m * n)

    taus, thetas, valid = _grid_axes(cfg, osf)
    # Column j of `spec` is angle bin j mod gn; reorder ascending by angle.
    gn = osf * n
    k_sorted = np.sort(np.where(np.arange(gn) >= gn // 2, np.arange(gn) - gn, np.arange(gn)))
    col_of_k = np.mod(k_sorted, gn)
    metric = metric[:, col_of_k]
    metric[:, ~valid] = -np.inf

    flat = int(np.argmax(metric))
    qi, ki = divmod(flat, gn)
    return float(taus[qi]), float(thetas[ki]), float(metric[qi, ki])


def gain_ls_single(
    residual: np.ndarray, tau: float, theta: float, cfg: SystemConfig
) -> complex:
    """Least-squares gain of a single steering vector against the residual."""
    u = steering_u(tau, theta, cfg)
    return complex(np.vdot(u, residual) / (cfg.n_sc * cfg.n_ant))


def _steering_factors(tau: float, theta: float, cfg: SystemConfig):
    """Per-axis phase factors of u and their first/second derivatives."""
    m = math.floor(-cfg.n_sc / 2) + np.arange(cfg.n_sc)
    wm = -2j * np.pi * m * cfg.delta_f
    d0 = np.exp(wm * tau)
    beta = 2.0 * np.pi * cfg.spacing / cfg.lambda_ul * np.arange(cfg.n_ant)
    a0 = np.exp(1j * beta * np.sin(theta))
    da = 1j * beta * np.cos(theta) * a0
    d2a = (-1j * beta * np.sin(theta) + (1j * beta * np.cos(theta)) ** 2) * a0
    return d0, wm * d0, wm**2 * d0, a0, da, d2a


def steering_derivatives(tau: float, theta: float, cfg: SystemConfig) -> dict:
    """Stacked steering vector and its partials in (tau, theta).

    Keys: u, du_tau, du_theta, d2_tau, d2_theta, d2_mixed.  All vectors have
    length n_sc * n_ant with the tone-major stacking of ``steering_u``.
    """
    d0, d1, d2, a0, da, d2a = _steering_factors(tau, theta, cfg)

    def stack(dv, av):
        return (dv[:, None] * av[None, :]).ravel()

    return {
        "u": stack(d0, a0),
        "du_tau": stack(d1, a0),
        "du_theta": stack(d0, da),
        "d2_tau": stack(d2, a0),
        "d2_theta": stack(d0, d2a),
        "d2_mixed": stack(d1, da),
    }


def newton_refine(
    y_loc: np.ndarray, path: EstimatedPath, cfg: SystemConfig
) -> EstimatedPath:
    """One guarded Newton step on (tau, theta) against the local objective.

    The fit objective J(alpha, tau, theta) = 2 Re{conj(alpha) u^H y} -
    |alpha|^2 ||u||^2 (y is the residual plus this path's contribution) has
    the closed-form optimal gain u^H y / ||u||^2; eliminating alpha leaves
    J*(tau, theta) = |u^H y|^2 / ||u||^2, and the step is Newton on J*.  It
    is taken only where the Hessian is negative definite and J* improves;
    otherwise the location is kept.  The gain is re-fitted either way and
    coordinates are clamped to their physical intervals.
    """
    mn = cfg.n_sc * cfg.n_ant
    d = steering_derivatives(path.tau, path.theta, cfg)
    c0 = np.vdot(d["u"], y_loc)
    c_tau = np.vdot(d["du_tau"], y_loc)
    c_theta = np.vdot(d["du_theta"], y_loc)

    # J* = |c|^2 / ||u||^2 up to the constant:  grad_p = 2 Re{conj(c) c_p},
    # hess_pq = 2 Re{conj(c_q) c_p + conj(c) c_pq}.
    g = np.array([(c0.conj() * c_tau).real, (c0.conj() * c_theta).real])
    h11 = (abs(c_tau) ** 2 + (c0.conj() * np.vdot(d["d2_tau"], y_loc)).real)
    h22 = (abs(c_theta) ** 2 + (c0.conj() * np.vdot(d["d2_theta"], y_loc)).real)
    h12 = (
        (c_theta.conj() * c_tau).real
        + (c0.conj() * np.vdot(d["d2_mixed"], y_loc)).real
    )
    det = h11 * h22 - h12 * h12

    tau_new, theta_new = path.tau, path.theta
    if h11 < 0.0 and det > 0.0:
        step_tau = -(h22 * g[0] - h12 * g[1]) / det
        step_theta = -(-h12 * g[0] + h11 * g[1]) / det
        cand_tau = float(np.clip(path.tau + step_tau, 0.0, cfg.max_delay))
        cand_theta = float(np.clip(path.theta + step_theta, -THETA_EDGE, THETA_EDGE))
        c1 = np.vdot(steering_u(cand_tau, cand_theta, cfg), y_loc)
        if abs(c1) ** 2 > abs(c0) ** 2:
            tau_new, theta_new = cand_tau, cand_theta
            c0 = c1

    return EstimatedPath(tau=tau_new, theta=theta_new, alpha=complex(c0 / mn))


def ls_update_all(
    observation: np.ndarray, paths: list[EstimatedPath], cfg: SystemConfig
) -> tuple[np.ndarray, np.ndarray, bool]:
    """Joint least-squares gain re-fit over all detected locations.

    Exact duplicate (tau, theta) pairs would make the dictionary rank
    deficient; later duplicates get a zero gain and are reported through the
    returned flag.  Returns (gains, residual, dropped_duplicates).
    """
    if not paths:
        return np.zeros(0, dtype=complex), observation.copy(), False
    seen: dict[tuple[float, float], int] = {}
    keep = []
    dropped = False
    for idx, p in enumerate(paths):
        key = (p.tau, p.theta)
        if key in seen:
            dropped = True
            continue
        seen[key] = idx
        keep.append(idx)
    u_mat = np.column_stack([steering_u(paths[i].tau, paths[i].theta, cfg) for i in keep])
    sol, *_ = np.linalg.lstsq(u_mat, observation, rcond=None)
    gains = np.zeros(len(paths), dtype=complex)
    gains[keep] = sol
    residual = observation - u_mat @ sol
    return gains, residual, dropped


def nomp_extract(
    observation: np.ndarray, cfg: SystemConfig, ncfg: NompConfig | None = None
) -> EstimateSet:
    """Full extraction loop on one pilot observation.

    Repeats detect / refine / cyclic-refine / joint-LS until the strongest
    remaining grid metric falls below kappa or the path cap is reached.
    """
    ncfg = ncfg or NompConfig()
    osf = ncfg.grid_oversampling
    grid_size = (osf * cfg.n_sc) * (osf * cfg.n_ant)
    kappa = ncfg.kappa
    if kappa is None:
        kappa = cfar_threshold(cfg.sigma2_est, grid_size, ncfg.p_false_alarm)
    max_paths = ncfg.max_paths or 2 * cfg.n_paths

    paths: list[EstimatedPath] = []
    residual = observation.astype(complex).copy()
    truncated = False
    any_dropped = False

    while True:
        if len(paths) >= max_paths:
            tau, theta, metric = coarse_detect(residual, cfg, ncfg)
            truncated = metric >= kappa
            break
        tau, theta, metric = coarse_detect(residual, cfg, ncfg)
        if metric < kappa:
            break
        alpha = gain_ls_single(residual, tau, theta, cfg)
        new_path = newton_refine(residual, EstimatedPath(tau, theta, alpha), cfg)
        paths.append(new_path)
        residual = residual - new_path.alpha * steering_u(
            new_path.tau, new_path.theta, cfg
        )

        for _ in range(ncfg.newton_rounds):
            for i, p in enumerate(paths):
                y_loc = residual + p.alpha * steering_u(p.tau, p.theta, cfg)
                refined = newton_refine(y_loc, p, cfg)
                paths[i] = refined
                residual = y_loc - refined.alpha * steering_u(
                    refined.tau, refined.theta, cfg
                )

        gains, residual, dropped = ls_update_all(observation, paths, cfg)
        any_dropped = any_dropped or dropped
        paths = [
            EstimatedPath(p.tau, p.theta, complex(g))
            for p, g in zip(paths, gains)
            if g != 0
        ]

    return EstimateSet(
        paths=paths,
        residual=residual,
        truncated=truncated,
        dropped_duplicates=any_dropped,
    )


def reconstruct_downlink(
    est: EstimateSet, eta: float | np.ndarray, f: float, cfg: SystemConfig
) -> np.ndarray:
    """Downlink channel rebuilt from uplink path estimates.

    Delay and angle carry over unchanged; each gain is scaled by its
    correlation factor (scalar eta broadcasts over paths).
    """
    from .channel import array_response

    etas = np.broadcast_to(np.asarray(eta, dtype=float), (len(est.paths),))
    h = np.zeros(cfg.n_ant, dtype=complex)
    for p, e in zip(est.paths, etas):
        a = array_response(p.theta, cfg.lambda_dl, cfg.n_ant, cfg.spacing)
        h += e * p.alpha * a * np.exp(-2j * np.pi * f * p.tau)
    return h
