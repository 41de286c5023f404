"""Max-min-fair rate-splitting precoding via generalized power iteration.

Rates are written as Rayleigh quotients of block-diagonal quadratic forms
over the stacked beam vector [f_common; f_1; ...; f_K].  A smoothed-min
Lagrangian turns first-order optimality into a self-consistent eigenvalue
relation Y(f)^-1 X(f) f = lam f, solved by normalized fixed-point iteration,
alternating with exact waterfilling of the common-rate shares.  Linear
baselines (matched filtering, regularized channel inversion) and a
private-streams-only variant of the iteration are included for comparison.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np


class SolverError(RuntimeError):
    """Raised when the iteration produces non-finite quantities."""


# Limit-cycle annealing: iterations without a residual improvement before the
# relaxation factors are halved, and the step relaxation below which the
# iterate is treated as stationary.
_ANNEAL_PATIENCE = 25
_MIN_STEP_RELAX = 1e-3


@dataclass
class CsiInput:
    """Transmit-side channel knowledge for one precoder solve.

    h_hat            estimated downlink channels, shape (n_dev, n_ant)
    ecm              per-device error covariance (n_dev, n_ant, n_ant); None
                     means error-free channel knowledge is assumed
    noise_over_power sigma^2 / P
    """

    h_hat: np.ndarray
    ecm: np.ndarray | None
    noise_over_power: float

    def __post_init__(self):
        self.h_hat = np.asarray(self.h_hat, dtype=complex)
        if self.h_hat.ndim != 2 or self.h_hat.shape[0] < 1:
            raise ValueError("h_hat must be (n_dev, n_ant) with n_dev >= 1")
        if self.ecm is not None:
            self.ecm = np.asarray(self.ecm, dtype=complex)
            if self.ecm.shape != (*self.h_hat.shape, self.h_hat.shape[1]):
                raise ValueError("ecm must be (n_dev, n_ant, n_ant)")
        if self.noise_over_power <= 0:
            raise ValueError("noise_over_power must be positive")

    @property
    def n_dev(self) -> int:
        return self.h_hat.shape[0]

    @property
    def n_ant(self) -> int:
        return self.h_hat.shape[1]


@dataclass
class SolverConfig:
    """Iteration controls; defaults follow the reference operating point.

    weight_relax and step_relax mix the softmax weights and the iterate with
    their previous values.  At the operating smoothing (alpha = 0.1) the
    plain simultaneous update ping-pongs between worst devices, since a
    fraction-of-a-bit rate change reorders the weights by orders of
    magnitude; relaxing both leaves the fixed-point set untouched (at a fixed
    point the averaged quantities equal the instantaneous ones) but makes the
    iteration contract.  Convergence is still judged on the unrelaxed update
    residual against epsilon.
    """

    alpha: float = 0.1
    epsilon: float = 0.01
    gamma_grid: tuple = (0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9)
    max_gpi_iters: int = 500
    outer_alternations: int = 10
    min_objective_gain: float = 1e-4
    weight_relax: float = 0.2
    step_relax: float = 0.3

    def __post_init__(self):
        if self.alpha <= 0 or self.epsilon <= 0:
            raise ValueError("alpha and epsilon must be positive")
        if len(self.gamma_grid) == 0 or list(self.gamma_grid) != sorted(self.gamma_grid):
            raise ValueError("gamma_grid must be nonempty and ascending")
        if not (0 < self.weight_relax <= 1 and 0 < self.step_relax <= 1):
            raise ValueError("relaxation factors must lie in (0, 1]")


@dataclass
class QuadraticForms:
    """Block-diagonal numerator/denominator matrices, one set per device.

    Arrays have shape (n_dev, n_blocks, n_ant, n_ant) with n_blocks =
    n_dev + 1; block 0 acts on the common beam.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    @property
    def n_blocks(self) -> int:
        return self.a.shape[1]


@dataclass
class PrecoderSolution:
    """Stacked unit-norm beams plus the common-rate split and bound rates."""

    fbar: np.ndarray
    common_parts: np.ndarray
    rate_private: np.ndarray
    rate_common: np.ndarray
    objective: float
    gamma: float | None
    gpi_iterations: int
    method: str = ""

    def to_json(self) -> str:
        return json.dumps(
            {
                "fbar": [[v.real, v.imag] for v in self.fbar],
                "common_parts": self.common_parts.tolist(),
                "rate_private": self.rate_private.tolist(),
                "rate_common": self.rate_common.tolist(),
                "objective": self.objective,
                "gamma": self.gamma,
                "gpi_iterations": self.gpi_iterations,
                "method": self.method,
            }
        )


def lse_min(values: np.ndarray, alpha: float) -> float:
    """Smoothed minimum -alpha log sum exp(-x/alpha), computed stably."""
    values = np.asarray(values, dtype=float)
    m = values.min()
    return float(m - alpha * math.log(np.exp(-(values - m) / alpha).sum()))


def _softmax_neg(values: np.ndarray, alpha: float) -> np.ndarray:
    """Weights proportional to exp(-x/alpha), concentrated on the smallest."""
    values = np.asarray(values, dtype=float)
    w = np.exp(-(values - values.min()) / alpha)
    return w / w.sum()


def build_forms(csi: CsiInput) -> QuadraticForms:
    """Assemble the four block-diagonal matrices per device.

    For device k, with Z_k = h_k h_k^H + Phi_k:
      A_k: Z_k on every private block, zero on the common block
      B_k: A_k minus the own-signal outer product on private block k
      C_k: Z_k on every block
      D_k: C_k minus the own-signal outer product on the common block
    all plus (sigma^2/P) I on the full stack.
    """
    k_dev, n = csi.n_dev, csi.n_ant
    blocks = k_dev + 1
    hh = csi.h_hat[:, :, None] * csi.h_hat.conj()[:, None, :]
    z = hh + (csi.ecm if csi.ecm is not None else 0.0)
    eye = np.eye(n)

    a = np.zeros((k_dev, blocks, n, n), dtype=complex)
    c = np.zeros_like(a)
    for k in range(k_dev):
        a[k, 1:] = z[k]
        c[k, :] = z[k]
        a[k] += csi.noise_over_power * eye
        c[k] += csi.noise_over_power * eye
    b = a.copy()
    d = c.copy()
    for k in range(k_dev):
        b[k, k + 1] -= hh[k]
        d[k, 0] -= hh[k]
    return QuadraticForms(a=a, b=b, c=c, d=d)


def _quad_one(fbar: np.ndarray, blocks: np.ndarray) -> float:
    """f^H M f for one block-diagonal M given as a (B, N, N) stack."""
    f = fbar.reshape(blocks.shape[0], blocks.shape[1])
    return float(np.einsum("bi,bij,bj->", f.conj(), blocks, f).real)


def rate_private_bar(fbar: np.ndarray, forms: QuadraticForms, k: int) -> float:
    """Private-stream spectral efficiency bound of device k, bits/s/Hz."""
    return math.log2(_quad_one(fbar, forms.a[k]) / _quad_one(fbar, forms.b[k]))


def rate_common_bar(fbar: np.ndarray, forms: QuadraticForms, k: int) -> float:
    """Common-stream spectral efficiency bound at device k, bits/s/Hz."""
    return math.log2(_quad_one(fbar, forms.c[k]) / _quad_one(fbar, forms.d[k]))


def kkt_matrices(
    fbar: np.ndarray,
    c: np.ndarray,
    forms: QuadraticForms,
    gamma: float,
    alpha: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Stationarity operator pair (X, Y) at the current beam stack.

    Softmax weights (most weight on the worst device) combine the normalized
    numerator matrices into X and denominator matrices into Y; gamma scales
    the common-rate terms.  Both are returned as (B, N, N) block stacks.
    """
    k_dev, blocks, n = forms.a.shape[:3]
    f = fbar.reshape(blocks, n)
    qa = np.einsum("bi,kbij,bj->k", f.conj(), forms.a, f).real
    qb = np.einsum("bi,kbij,bj->k", f.conj(), forms.b, f).real
    qc = np.einsum("bi,kbij,bj->k", f.conj(), forms.c, f).real
    qd = np.einsum("bi,kbij,bj->k", f.conj(), forms.d, f).real
    rp = np.log2(qa / qb)
    rc = np.log2(qc / qd)
    wp = _softmax_neg(np.asarray(c) + rp, alpha)
    wc = _softmax_neg(rc, alpha)

    x = np.einsum("k,kbij->bij", wp / qa, forms.a)
    x += gamma * np.einsum("k,kbij->bij", wc / qc, forms.c)
    y = np.einsum("k,kbij->bij", wp / qb, forms.b)
    y += gamma * np.einsum("k,kbij->bij", wc / qd, forms.d)
    return x, y


def gpi_step(
    fbar: np.ndarray, x_blocks: np.ndarray, y_blocks: np.ndarray
) -> np.ndarray:
    """One normalized fixed-point update f <- Y^-1 X f / ||Y^-1 X f||.

    The block-diagonal structure keeps the solve at one small system per
    block.  A singular Y is ridged by 1e-10 tr(Y) / (B N) on the diagonal.
    """
    blocks, n = y_blocks.shape[0], y_blocks.shape[1]
    f = fbar.reshape(blocks, n)
    v = (x_blocks @ f[..., None])[..., 0]
    try:
        w = np.linalg.solve(y_blocks, v[..., None])[..., 0]
    except np.linalg.LinAlgError:
        ridge = 1e-10 * np.einsum("bii->", y_blocks).real / (blocks * n)
        w = np.linalg.solve(
            y_blocks + ridge * np.eye(n), v[..., None]
        )[..., 0]
    out = w.ravel()
    nrm = np.linalg.norm(out)
    if not np.isfinite(nrm) or nrm == 0.0:
        raise SolverError("power-iteration update produced a non-finite vector")
    return out / nrm


def waterfill_common(rp_hat: np.ndarray, rc_min: float) -> np.ndarray:
    """Split a common-rate budget to equalize the per-device totals.

    Returns C with C_k = (mu - rp_k)^+ where the level mu solves
    sum_k (mu - rp_k)^+ = rc_min exactly on the sorted piecewise-linear
    curve.  A zero budget yields the zero allocation.
    """
    rp = np.asarray(rp_hat, dtype=float)
    if rc_min < 0:
        raise ValueError("common-rate budget must be nonnegative")
    if rc_min == 0.0:
        return np.zeros_like(rp)
    order = np.argsort(rp, kind="stable")
    sorted_rp = rp[order]
    k_dev = len(rp)
    prefix = 0.0
    mu = None
    for i in range(1, k_dev + 1):
        prefix += sorted_rp[i - 1]
        candidate = (rc_min + prefix) / i
        if i == k_dev or candidate <= sorted_rp[i]:
            mu = candidate
            break
    alloc = np.maximum(mu - rp, 0.0)
    return alloc


class _GpiCore:
    """Structured per-iteration math shared by the RSMA and private solvers.

    Keeps only the distinct N x N blocks (Z_k = h h^H + Phi_k and the
    own-signal outer products); assembling the full stacks per iteration would
    repeat identical private blocks.
    """

    def __init__(self, csi: CsiInput):
        self.h = csi.h_hat
        self.k_dev, self.n = csi.h_hat.shape
        self.hh = csi.h_hat[:, :, None] * csi.h_hat.conj()[:, None, :]
        self.phi = (
            csi.ecm.astype(complex)
            if csi.ecm is not None
            else np.zeros_like(self.hh)
        )
        self.z = self.hh + self.phi
        self.nop = csi.noise_over_power
        self.eye = np.eye(self.n)

    def quads(self, f: np.ndarray):
        """Quadratic forms (qa, qb, qc, qd) for the full RSMA stack."""
        norm2 = float(np.vdot(f, f).real)
        zf = self.z @ f.T
        q = np.einsum("bi,kib->kb", f.conj(), zf).real
        g = np.abs(self.h.conj() @ f.T) ** 2
        k_idx = np.arange(self.k_dev)
        qa = self.nop * norm2 + q[:, 1:].sum(axis=1)
        qb = qa - g[k_idx, k_idx + 1]
        qc = self.nop * norm2 + q.sum(axis=1)
        qd = qc - g[:, 0]
        return qa, qb, qc, qd

    def rates(self, f: np.ndarray):
        qa, qb, qc, qd = self.quads(f)
        return np.log2(qa / qb), np.log2(qc / qd)

    def _apply_rsma(self, f, wp, wc, qa, qb, qc, qd, gamma):
        """Unnormalized update Y^-1 X f for given weights and quadratics."""
        ux, vx = wp / qa, gamma * wc / qc
        uy, vy = wp / qb, gamma * wc / qd
        sx = (ux.sum() + vx.sum()) * self.nop
        sy = (uy.sum() + vy.sum()) * self.nop

        mx0 = np.tensordot(vx, self.z, axes=1)
        mxp = np.tensordot(ux + vx, self.z, axes=1)
        xf = np.empty_like(f)
        xf[0] = mx0 @ f[0] + sx * f[0]
        xf[1:] = f[1:] @ mxp.T + sx * f[1:]

        y_stack = np.empty((self.k_dev + 1, self.n, self.n), dtype=complex)
        y_stack[0] = np.tensordot(vy, self.phi, axes=1) + sy * self.eye
        myp = np.tensordot(uy + vy, self.z, axes=1) + sy * self.eye
        y_stack[1:] = myp[None] - uy[:, None, None] * self.hh
        return np.linalg.solve(y_stack, xf[..., None])[..., 0]

    def step_rsma(self, f: np.ndarray, c: np.ndarray, gamma: float, alpha: float):
        """One plain normalized update with instantaneous weights."""
        qa, qb, qc, qd = self.quads(f)
        wp = _softmax_neg(np.asarray(c) + np.log2(qa / qb), alpha)
        wc = _softmax_neg(np.log2(qc / qd), alpha)
        w = self._apply_rsma(f, wp, wc, qa, qb, qc, qd, gamma)
        nrm = np.linalg.norm(w)
        if not np.isfinite(nrm) or nrm == 0.0:
            raise SolverError("RSMA iteration diverged")
        return w / nrm

    def run_rsma(self, f, c, gamma, scfg: SolverConfig):
        """Relaxed iteration to a fixed point; returns (f, iterations).

        If the unrelaxed residual stops improving (a small limit cycle of the
        weight dynamics, seen at the top of the multiplier grid), both
        relaxation factors are halved, which collapses the cycle onto its
        mean; once the step relaxation underflows the iterate is stationary
        and the loop exits.
        """
        wp_bar = wc_bar = None
        w_relax, s_relax = scfg.weight_relax, scfg.step_relax
        best_delta, since_best = np.inf, 0
        for it in range(1, scfg.max_gpi_iters + 1):
            qa, qb, qc, qd = self.quads(f)
            wp = _softmax_neg(c + np.log2(qa / qb), scfg.alpha)
            wc = _softmax_neg(np.log2(qc / qd), scfg.alpha)
            if wp_bar is None:
                wp_bar, wc_bar = wp, wc
            else:
                wp_bar = (1 - w_relax) * wp_bar + w_relax * wp
                wc_bar = (1 - w_relax) * wc_bar + w_relax * wc
                wp_bar = wp_bar / wp_bar.sum()
                wc_bar = wc_bar / wc_bar.sum()
            w = self._apply_rsma(f, wp_bar, wc_bar, qa, qb, qc, qd, gamma)
            nrm = np.linalg.norm(w)
            if not np.isfinite(nrm) or nrm == 0.0:
                raise SolverError("RSMA iteration diverged")
            f_raw = w / nrm
            raw_delta = np.linalg.norm(f_raw - f)
            f = (1 - s_relax) * f + s_relax * f_raw
            f = f / np.linalg.norm(f)
            if raw_delta < scfg.epsilon:
                break
            if raw_delta < best_delta * 0.995:
                best_delta, since_best = raw_delta, 0
            else:
                since_best += 1
                if since_best >= _ANNEAL_PATIENCE:
                    w_relax, s_relax = 0.5 * w_relax, 0.5 * s_relax
                    since_best = 0
                    if s_relax < _MIN_STEP_RELAX:
                        break
        return f, it

    def quads_private(self, f: np.ndarray):
        """Forms for the private-only stack (no common block)."""
        norm2 = float(np.vdot(f, f).real)
        zf = self.z @ f.T
        q = np.einsum("bi,kib->kb", f.conj(), zf).real
        g = np.abs(self.h.conj() @ f.T) ** 2
        k_idx = np.arange(self.k_dev)
        qa = self.nop * norm2 + q.sum(axis=1)
        qb = qa - g[k_idx, k_idx]
        return qa, qb

    def _apply_private(self, f, wp, qa, qb):
        ux, uy = wp / qa, wp / qb
        sx, sy = ux.sum() * self.nop, uy.sum() * self.nop
        mx = np.tensordot(ux, self.z, axes=1)
        xf = f @ mx.T + sx * f
        my = np.tensordot(uy, self.z, axes=1) + sy * self.eye
        y_stack = my[None] - uy[:, None, None] * self.hh
        return np.linalg.solve(y_stack, xf[..., None])[..., 0]

    def step_private(self, f: np.ndarray, alpha: float):
        qa, qb = self.quads_private(f)
        wp = _softmax_neg(np.log2(qa / qb), alpha)
        w = self._apply_private(f, wp, qa, qb)
        nrm = np.linalg.norm(w)
        if not np.isfinite(nrm) or nrm == 0.0:
            raise SolverError("private-only iteration diverged")
        return w / nrm

    def run_private(self, f, scfg: SolverConfig):
        wp_bar = None
        w_relax, s_relax = scfg.weight_relax, scfg.step_relax
        best_delta, since_best = np.inf, 0
        for it in range(1, scfg.max_gpi_iters + 1):
            qa, qb = self.quads_private(f)
            wp = _softmax_neg(np.log2(qa / qb), scfg.alpha)
            if wp_bar is None:
                wp_bar = wp
            else:
                wp_bar = (1 - w_relax) * wp_bar + w_relax * wp
                wp_bar = wp_bar / wp_bar.sum()
            w = self._apply_private(f, wp_bar, qa, qb)
            nrm = np.linalg.norm(w)
            if not np.isfinite(nrm) or nrm == 0.0:
                raise SolverError("private-only iteration diverged")
            f_raw = w / nrm
            raw_delta = np.linalg.norm(f_raw - f)
            f = (1 - s_relax) * f + s_relax * f_raw
            f = f / np.linalg.norm(f)
            if raw_delta < scfg.epsilon:
                break
            if raw_delta < best_delta * 0.995:
                best_delta, since_best = raw_delta, 0
            else:
                since_best += 1
                if since_best >= _ANNEAL_PATIENCE:
                    w_relax, s_relax = 0.5 * w_relax, 0.5 * s_relax
                    since_best = 0
                    if s_relax < _MIN_STEP_RELAX:
                        break
        return f, it


def _mrt_stack_init(core: _GpiCore) -> np.ndarray:
    """Matched-filter initialization: common beam on the dominant direction."""
    cov = core.hh.sum(axis=0)
    _, vecs = np.linalg.eigh(cov)
    f = np.empty((core.k_dev + 1, core.n), dtype=complex)
    f[0] = vecs[:, -1]
    f[1:] = core.h
    return f / np.linalg.norm(f)


# Stacks up to this total complex dimension get a direct local polish of the
# returned candidate: with few antennas and near-collinear channels the
# waterfilled objective forms a narrow ridge in the power split, and the
# multiplier grid (step 0.05) plus the smoothing displacement leave a few
# percent on the table that the fixed point cannot recover.
_POLISH_MAX_DIM = 8


def _waterfilled_objective(core: _GpiCore, f: np.ndarray):
    rp, rc = core.rates(f)
    c = waterfill_common(rp, max(float(rc.min()), 0.0))
    return float((c + rp).min()), c, rp, rc


def _polish_tiny(core: _GpiCore, f: np.ndarray, obj: float):
    """Compass search over the stack coordinates on the true objective.

    Deterministic, derivative-free, and local: probes +-step along every
    real/imag coordinate (renormalizing each probe), halving the step when no
    probe improves.  Used only for tiny stacks where the cost is negligible.
    """
    f = f.copy()
    step = 0.05
    dims = f.shape
    while step > 1e-4:
        improved = False
        for idx in np.ndindex(dims):
            for delta in (step, -step, 1j * step, -1j * step):
                cand = f.copy()
                cand[idx] += delta
                cand /= np.linalg.norm(cand)
                cand_obj = _waterfilled_objective(core, cand)[0]
                if cand_obj > obj + 1e-12:
                    f, obj = cand, cand_obj
                    improved = True
        if not improved:
            step *= 0.5
    return f, obj


def mmf_solve(
    csi: CsiInput, scfg: SolverConfig | None = None
) -> PrecoderSolution:
    """Two-stage max-min solve over the multiplier grid.

    For each gamma: beams are iterated to a fixed point with the common
    shares held fixed, then the shares are re-waterfilled from the worst
    common rate at the new beams; the pair is alternated with early exit on
    stagnation.  The best (beams, shares) over everything visited is
    returned, judged by min_k(C_k + private rate bound).
    """
    scfg = scfg or SolverConfig()
    core = _GpiCore(csi)
    f_init = _mrt_stack_init(core)

    best = None
    total_iters = 0
    for gamma in scfg.gamma_grid:
        f = f_init.copy()
        _, rc0 = core.rates(f)
        c = np.full(core.k_dev, max(float(rc0.min()), 0.0) / core.k_dev)
        prev_obj = -np.inf
        for _ in range(scfg.outer_alternations):
            f, iters = core.run_rsma(f, c, gamma, scfg)
            total_iters += iters
            rp, rc = core.rates(f)
            c = waterfill_common(rp, max(float(rc.min()), 0.0))
            obj = float((c + rp).min())
            if not np.isfinite(obj):
                raise SolverError("non-finite objective in max-min solve")
            if best is None or obj > best[0]:
                best = (obj, f.copy(), c.copy(), rp.copy(), rc.copy(), gamma)
            if obj - prev_obj < scfg.min_objective_gain:
                break
            prev_obj = obj

    obj, f, c, rp, rc, gamma = best
    if core.n * (core.k_dev + 1) <= _POLISH_MAX_DIM:
        f2, obj2 = _polish_tiny(core, f, obj)
        if obj2 > obj:
            obj, f = obj2, f2
            rp, rc = core.rates(f)
            c = waterfill_common(rp, max(float(rc.min()), 0.0))
    return PrecoderSolution(
        fbar=f.ravel(),
        common_parts=c,
        rate_private=rp,
        rate_common=rc,
        objective=obj,
        gamma=gamma,
        gpi_iterations=total_iters,
        method="rsma-gpi",
    )


def gpi_private_only(
    csi: CsiInput, scfg: SolverConfig | None = None
) -> PrecoderSolution:
    """Same iteration restricted to private streams (no rate splitting)."""
    scfg = scfg or SolverConfig()
    core = _GpiCore(csi)
    f = core.h / np.linalg.norm(core.h)
    f, iters = core.run_private(f, scfg)
    full = np.zeros((core.k_dev + 1, core.n), dtype=complex)
    full[1:] = f
    qa, qb = core.quads_private(f)
    rp = np.log2(qa / qb)
    rc = np.zeros(core.k_dev)
    return PrecoderSolution(
        fbar=full.ravel(),
        common_parts=np.zeros(core.k_dev),
        rate_private=rp,
        rate_common=rc,
        objective=float(rp.min()),
        gamma=None,
        gpi_iterations=iters,
        method="gpi-private",
    )


def _linear_solution(csi: CsiInput, beams: np.ndarray, method: str) -> PrecoderSolution:
    """Package per-user beams (equal power, no common stream)."""
    k_dev, n = csi.n_dev, csi.n_ant
    full = np.zeros((k_dev + 1, n), dtype=complex)
    full[1:] = beams
    fbar = full.ravel()
    core = _GpiCore(csi)
    rp, rc = core.rates(full)
    return PrecoderSolution(
        fbar=fbar,
        common_parts=np.zeros(k_dev),
        rate_private=rp,
        rate_common=rc,
        objective=float(rp.min()),
        gamma=None,
        gpi_iterations=0,
        method=method,
    )


def mrt_precoder(csi: CsiInput) -> PrecoderSolution:
    """Beams aligned with the estimated channels, equal per-user power."""
    norms = np.linalg.norm(csi.h_hat, axis=1, keepdims=True)
    beams = csi.h_hat / norms / math.sqrt(csi.n_dev)
    return _linear_solution(csi, beams, "mrt")


def rzf_precoder(csi: CsiInput) -> PrecoderSolution:
    """Regularized channel inversion, equal per-user power."""
    h_mat = csi.h_hat.T  # (N, K)
    gram = h_mat @ h_mat.conj().T + csi.noise_over_power * np.eye(csi.n_ant)
    beams = np.linalg.solve(gram, h_mat).T  # row k = inv(gram) h_k
    beams = beams / np.linalg.norm(beams, axis=1, keepdims=True)
    beams = beams / math.sqrt(csi.n_dev)
    return _linear_solution(csi, beams, "rzf")
