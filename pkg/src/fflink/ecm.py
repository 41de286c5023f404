"""Error covariance of the rebuilt downlink channel from sampled Fisher information.

The extractor's delay/angle/gain estimates carry correlated errors; their
covariance propagates to the downlink channel through the reconstruction
Jacobian.  The information matrix is the data-dependent (observed) one,
evaluated at the estimates, so no ground truth is needed.  Parameter blocks
are ordered [tau, theta, Re(alpha), Im(alpha)] per path.
"""

from __future__ import annotations

import json

import numpy as np

from .channel import SystemConfig, array_response, steering_u
from .nomp import EstimatedPath, EstimateSet, steering_derivatives

RIDGE_EPS = 1e-8
COND_MAX = 1e12


def paths_to_psi(paths: list[EstimatedPath]) -> np.ndarray:
    """Flatten paths into the real parameter vector of length 4L."""
    psi = np.empty(4 * len(paths))
    for i, p in enumerate(paths):
        psi[4 * i : 4 * i + 4] = (p.tau, p.theta, p.alpha.real, p.alpha.imag)
    return psi


def psi_to_paths(psi: np.ndarray) -> list[EstimatedPath]:
    if len(psi) % 4 != 0:
        raise ValueError("parameter vector length must be a multiple of 4")
    return [
        EstimatedPath(tau=float(psi[i]), theta=float(psi[i + 1]),
                      alpha=complex(psi[i + 2], psi[i + 3]))
        for i in range(0, len(psi), 4)
    ]


def jacobian_dl(psi_hat: np.ndarray, f: float, cfg: SystemConfig) -> np.ndarray:
    """Partials of the rebuilt downlink channel w.r.t. the path parameters.

    Row ordering follows the parameter vector; the channel is
    sum_l alpha_l a(theta_l; lambda_dl) exp(-j 2 pi f tau_l), so

      d/dtau      = -j 2 pi f * alpha * a * phase
      d/dtheta    = alpha * phase * (j 2 pi n d/lambda_dl cos(theta)) .* a
      d/dRe alpha = a * phase,   d/dIm alpha = j * a * phase
    """
    paths = psi_to_paths(psi_hat)
    n = cfg.n_ant
    jac = np.zeros((4 * len(paths), n), dtype=complex)
    beta = 2.0 * np.pi * cfg.spacing / cfg.lambda_dl * np.arange(n)
    for i, p in enumerate(paths):
        a = array_response(p.theta, cfg.lambda_dl, n, cfg.spacing)
        phase = np.exp(-2j * np.pi * f * p.tau)
        base = a * phase
        jac[4 * i + 0] = -2j * np.pi * f * p.alpha * base
        jac[4 * i + 1] = p.alpha * phase * (1j * beta * np.cos(p.theta)) * a
        jac[4 * i + 2] = base
        jac[4 * i + 3] = 1j * base
    return jac


def _pilot_derivatives(p: EstimatedPath, cfg: SystemConfig):
    """First and second partials of alpha * u(tau, theta) for one path."""
    d = steering_derivatives(p.tau, p.theta, cfg)
    first = np.stack(
        [
            p.alpha * d["du_tau"],
            p.alpha * d["du_theta"],
            d["u"],
            1j * d["u"],
        ]
    )
    # Second partials; (Re alpha, Im alpha) pairs vanish for a linear gain.
    second = {
        (0, 0): p.alpha * d["d2_tau"],
        (0, 1): p.alpha * d["d2_mixed"],
        (1, 1): p.alpha * d["d2_theta"],
        (0, 2): d["du_tau"],
        (0, 3): 1j * d["du_tau"],
        (1, 2): d["du_theta"],
        (1, 3): 1j * d["du_theta"],
    }
    return first, second, d["u"]


def observed_fim(
    observation: np.ndarray,
    psi_hat: np.ndarray,
    sigma2_est: float,
    cfg: SystemConfig,
) -> np.ndarray:
    """Observed Fisher information of the pilot model at the estimates.

    Equals the Hessian of the negative log-likelihood ||y - y_hat(psi)||^2 /
    sigma2 at psi_hat: a Gauss-Newton Gram term minus a residual-curvature
    term.  Cross-path second partials vanish because the model is a sum of
    per-path terms.  The result is exactly symmetric.
    """
    paths = psi_to_paths(psi_hat)
    n_par = 4 * len(paths)
    if n_par == 0:
        return np.zeros((0, 0))

    firsts = []
    seconds = []
    y_hat = np.zeros_like(observation, dtype=complex)
    for p in paths:
        first, second, u = _pilot_derivatives(p, cfg)
        firsts.append(first)
        seconds.append(second)
        y_hat += p.alpha * u
    d_mat = np.concatenate(firsts, axis=0)  # (4L, MN)

    gram = (d_mat.conj() @ d_mat.T).real
    gram = 0.5 * (gram + gram.T)

    curv = np.zeros((n_par, n_par))
    res = observation - y_hat
    for ell, second in enumerate(seconds):
        off = 4 * ell
        for (i, j), vec in second.items():
            val = float(np.vdot(res, vec).real)  # Re{(y - y_hat)^H d2 y_hat}
            curv[off + i, off + j] = val
            curv[off + j, off + i] = val

    return (2.0 / sigma2_est) * (gram - curv)


def crlb_matrix(
    j_dl: np.ndarray, ofim: np.ndarray, ridge_eps: float = RIDGE_EPS,
    cond_max: float = COND_MAX,
) -> tuple[np.ndarray, bool]:
    """Downlink error covariance from the information-matrix sandwich.

    With Jacobian rows holding the partials of the transposed channel, the
    covariance of h - h_hat is the conjugate of J^H I^{-1} J; for a
    gains-only single path this reduces to the linear-Gaussian value
    (sigma^2 / ||u||^2) a a^H.  Hermitian PSD by construction.

    Near-coincident path detections make the information matrix ill
    conditioned or indefinite; in that case a small diagonal ridge restores a
    usable positive definite matrix and the second return value flags it.
    """
    n_par = ofim.shape[0]
    if n_par == 0:
        n = j_dl.shape[1] if j_dl.ndim == 2 else 0
        return np.zeros((n, n), dtype=complex), False
    sym = 0.5 * (ofim + ofim.T)
    eigvals = np.linalg.eigvalsh(sym)
    scale = max(float(np.abs(eigvals).max()), np.finfo(float).tiny)
    floor = ridge_eps * scale / n_par
    ridged = False
    if eigvals[0] <= floor or eigvals[-1] > cond_max * eigvals[0]:
        shift = floor + max(0.0, -eigvals[0])
        sym = sym + shift * np.eye(n_par)
        ridged = True
    c_hat = np.conj(j_dl.conj().T @ np.linalg.solve(sym, j_dl))
    c_hat = 0.5 * (c_hat + c_hat.conj().T)
    return c_hat, ridged


def ecm_with_reciprocity(
    c_hat: np.ndarray,
    etas,
    n_paths: int | None = None,
    identity_scale: float = 1.0,
) -> np.ndarray:
    """Blend the covariance with identity to absorb gain decorrelation.

    With per-path correlation factors eta_l over L paths the covariance
    becomes (sum eta^2 / L) C + (sum (1 - eta^2) / L) identity_scale I,
    collapsing to C when every eta is 1 and to identity_scale * I when every
    eta is 0.  The default identity_scale of 1 matches a channel normalized
    to unit energy per antenna; under the unit total-energy normalization
    used by the trial pipeline the decorrelated energy per antenna is 1/N,
    which callers select through identity_scale.
    """
    etas = np.asarray(etas, dtype=float).ravel()
    if n_paths is None:
        n_paths = len(etas)
    if len(etas) != n_paths:
        raise ValueError("eta list length must equal the path count")
    if np.any(etas < 0.0) or np.any(etas > 1.0):
        raise ValueError("eta entries must lie in [0, 1]")
    n = c_hat.shape[0]
    w_c = float(np.sum(etas**2)) / n_paths
    w_i = float(np.sum(1.0 - etas**2)) / n_paths
    return w_c * c_hat + w_i * identity_scale * np.eye(n)


def ecm_diag_only(c_hat: np.ndarray) -> np.ndarray:
    """Keep only the per-antenna error variances."""
    return np.diag(np.diag(c_hat).copy())


# Pilot-domain coherence above which two detected components count as one
# unresolved cluster whose internal structure the pilot cannot pin down.
CLUSTER_COHERENCE = 0.5


def cluster_ambiguity(
    est: EstimateSet,
    f: float,
    cfg: SystemConfig,
    coherence: float = CLUSTER_COHERENCE,
) -> np.ndarray:
    """Downlink covariance of unresolved-cluster extrapolation error.

    The curvature-based covariance assumes every detected component is
    resolved; components closer than a resolution cell (pilot-domain
    steering coherence above the threshold) carry an internal split the
    pilot cannot observe, and at a carrier offset f that split scrambles the
    cluster's downlink phase.  The cluster's coherent sum is observed, so
    the ambiguous part is the redistribution between members: the minority
    members contribute their own energy on their downlink response
    directions, and the same minority energy loads the dominant member's
    direction (its phase is anchored only up to the minority amplitude).
    Everything is scaled by the phase decoherence min(1, (2 pi f dtau)^2/2)
    over the cluster delay spread; resolved path sets contribute nothing.
    """
    paths = est.paths
    n_est = len(paths)
    out = np.zeros((cfg.n_ant, cfg.n_ant), dtype=complex)
    if n_est < 2:
        return out
    mn = cfg.n_sc * cfg.n_ant
    u_mat = np.column_stack([steering_u(p.tau, p.theta, cfg) for p in paths])
    coh = np.abs(u_mat.conj().T @ u_mat) / mn

    # Union-find over the coherence graph.
    parent = list(range(n_est))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n_est):
        for j in range(i + 1, n_est):
            if coh[i, j] >= coherence:
                parent[find(i)] = find(j)

    clusters: dict[int, list[int]] = {}
    for i in range(n_est):
        clusters.setdefault(find(i), []).append(i)

    for members in clusters.values():
        if len(members) < 2:
            continue
        taus = [paths[i].tau for i in members]
        spread = max(taus) - min(taus)
        weight = min(1.0, 0.5 * (2.0 * np.pi * f * spread) ** 2)
        if weight <= 0.0:
            continue
        dominant = max(members, key=lambda i: abs(paths[i].alpha))
        minority = 0.0
        for i in members:
            if i == dominant:
                continue
            p = paths[i]
            minority += abs(p.alpha) ** 2
            a = array_response(p.theta, cfg.lambda_dl, cfg.n_ant, cfg.spacing)
            out += weight * abs(p.alpha) ** 2 * np.outer(a, a.conj())
        p_dom = paths[dominant]
        a_dom = array_response(p_dom.theta, cfg.lambda_dl, cfg.n_ant, cfg.spacing)
        out += weight * minority * np.outer(a_dom, a_dom.conj())
    return out


def is_hermitian_psd(
    mat: np.ndarray, herm_rtol: float = 1e-10, psd_rtol: float = 1e-8
) -> bool:
    """Check the structural covariance invariants within tolerance."""
    norm = np.linalg.norm(mat)
    if norm == 0:
        return True
    if np.linalg.norm(mat - mat.conj().T) / norm >= herm_rtol:
        return False
    eigvals = np.linalg.eigvalsh(0.5 * (mat + mat.conj().T))
    return eigvals[0] >= -psd_rtol * np.trace(mat).real / mat.shape[0]


def csi_error_covariance(
    observation: np.ndarray,
    est: EstimateSet,
    cfg: SystemConfig,
    f: float | None = None,
    etas=None,
    diag_only: bool = False,
) -> tuple[np.ndarray, bool]:
    """Pipeline helper: estimates -> downlink error covariance.

    The covariance is the curvature-based term plus the unresolved-cluster
    ambiguity term.  When ``etas`` is None the result assumes full gain
    reciprocity; otherwise the reciprocity blend is applied with one factor
    per estimated path and the identity term calibrated to the configured
    channel normalization (decorrelated gain energy 1/N per antenna).
    Returns (covariance, ridge_flag).
    """
    if f is None:
        f = cfg.f_offset
    if len(est.paths) == 0:
        c_hat = np.zeros((cfg.n_ant, cfg.n_ant), dtype=complex)
        ridged = False
    else:
        psi = paths_to_psi(est.paths)
        fim = observed_fim(observation, psi, cfg.sigma2_est, cfg)
        jac = jacobian_dl(psi, f, cfg)
        c_hat, ridged = crlb_matrix(jac, fim)
        c_hat = c_hat + cluster_ambiguity(est, f, cfg)
    if diag_only:
        c_hat = ecm_diag_only(c_hat)
    if etas is not None:
        etas = np.broadcast_to(np.asarray(etas, dtype=float), (max(len(est.paths), 1),))
        c_hat = ecm_with_reciprocity(
            c_hat, etas, identity_scale=cfg.n_paths * cfg.sigma2_path
        )
    return c_hat, ridged


def ecm_to_json(mat: np.ndarray) -> str:
    """Serialize the Hermitian lower triangle as re/im pairs."""
    n = mat.shape[0]
    tril = [
        [i, j, float(mat[i, j].real), float(mat[i, j].imag)]
        for i in range(n)
        for j in range(i + 1)
    ]
    return json.dumps({"n": n, "tril": tril})


def ecm_from_json(text: str) -> np.ndarray:
    d = json.loads(text)
    n = d["n"]
    mat = np.zeros((n, n), dtype=complex)
    for i, j, re, im in d["tril"]:
        mat[i, j] = complex(re, im)
        if i != j:
            mat[j, i] = complex(re, -im)
    return mat
