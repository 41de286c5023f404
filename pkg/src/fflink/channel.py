"""Ground-truth multipath geometry, uplink/downlink channels, and noisy pilots.

The propagation model is a sparse set of plane-wave paths per device, each
described by a delay, an angle seen from a uniform linear array, and complex
gains on the uplink and downlink carriers.  Path geometry (delay, angle) is
shared between the two carriers; only the gains decorrelate, controlled by a
per-path correlation factor eta in [0, 1].
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0

# Duplex gaps beyond this fraction of the carrier invalidate the assumption
# that path geometry is shared between the uplink and downlink bands.
MAX_RELATIVE_DUPLEX_GAP = 0.10


@dataclass
class SystemConfig:
    """Static system parameters shared by every stage of the pipeline.

    n_ant          number of base-station antennas (uniform linear array)
    n_dev          number of single-antenna devices served simultaneously
    n_paths        propagation paths per device
    n_sc           sounded uplink pilot tones
    delta_f        pilot tone spacing in Hz (wideband sounding comb)
    lambda_ul/dl   carrier wavelengths in m
    spacing        antenna spacing in m, fixed at lambda_ul / 2
    f_offset       downlink minus uplink carrier frequency in Hz
    sigma2         downlink noise variance
    p_tx           total downlink transmit power (SNR = p_tx / sigma2)
    eta            uplink/downlink gain correlation, scalar or (n_dev, n_paths)
    angular_spread width of each device's angle cluster in rad
    ul_snr_db      uplink pilot SNR used to derive sigma2_est when unset
    sigma2_est     uplink pilot noise variance per sample
    """

    n_ant: int = 12
    n_dev: int = 4
    n_paths: int = 5
    n_sc: int = 64
    delta_f: float = 2.88e6
    lambda_ul: float = SPEED_OF_LIGHT / 2.00e9
    lambda_dl: float = SPEED_OF_LIGHT / 2.08e9
    spacing: float | None = None
    f_offset: float = 80e6
    sigma2: float = 1.0
    p_tx: float = 1.0
    eta: float | np.ndarray = 0.9
    angular_spread: float = math.pi / 10
    min_angle_separation: float | None = None
    ul_snr_db: float = 10.0
    sigma2_est: float | None = None

    def __post_init__(self):
        if min(self.n_ant, self.n_dev, self.n_paths, self.n_sc) < 1:
            raise ValueError("n_ant, n_dev, n_paths, n_sc must all be >= 1")
        if self.delta_f <= 0 or self.lambda_ul <= 0 or self.lambda_dl <= 0:
            raise ValueError("delta_f and wavelengths must be positive")
        if self.spacing is None:
            self.spacing = self.lambda_ul / 2.0
        if self.min_angle_separation is None:
            # schedulers do not co-schedule co-located devices on the same
            # spatial resource; keep the angle clusters from overlapping
            self.min_angle_separation = self.angular_spread
        eta = np.asarray(self.eta, dtype=float)
        if np.any(eta < 0.0) or np.any(eta > 1.0):
            raise ValueError("eta entries must lie in [0, 1]")
        if self.sigma2_est is None:
            # Mean pilot signal power per sample is 1/n_ant under the gain
            # normalization var(alpha) = 1/(n_ant*n_paths).
            self.sigma2_est = 1.0 / (self.n_ant * 10.0 ** (self.ul_snr_db / 10.0))
        f_carrier_ul = SPEED_OF_LIGHT / self.lambda_ul
        if self.f_offset / f_carrier_ul > MAX_RELATIVE_DUPLEX_GAP:
            warnings.warn(
                "duplex gap exceeds 10% of the uplink carrier; shared path "
                "geometry between bands is no longer a safe assumption",
                UserWarning,
                stacklevel=2,
            )

    @property
    def max_delay(self) -> float:
        """Upper edge of the unambiguous delay interval, 1/delta_f."""
        return 1.0 / self.delta_f

    @property
    def sigma2_path(self) -> float:
        """Per-path gain variance; makes E||h||^2 = 1."""
        return 1.0 / (self.n_ant * self.n_paths)

    def eta_matrix(self) -> np.ndarray:
        """Correlation factors broadcast to shape (n_dev, n_paths)."""
        return np.broadcast_to(
            np.asarray(self.eta, dtype=float), (self.n_dev, self.n_paths)
        ).copy()

    def with_snr_db(self, snr_db: float) -> "SystemConfig":
        """Copy with the downlink transmit power set from an SNR in dB."""
        return replace(self, p_tx=self.sigma2 * 10.0 ** (snr_db / 10.0))

    def to_dict(self) -> dict:
        d = {
            k: (v.tolist() if isinstance(v, np.ndarray) else v)
            for k, v in self.__dict__.items()
        }
        return d

    @classmethod
    def from_file(cls, path: str | Path) -> "SystemConfig":
        """Load from a flat ``key = value`` text file.

        Unknown keys raise ValueError.  Counts are parsed as int, everything
        else as float.  ``#`` starts a comment.
        """
        int_keys = {"n_ant", "n_dev", "n_paths", "n_sc"}
        valid = set(cls.__dataclass_fields__)
        kwargs: dict = {}
        text = Path(path).read_text()
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key not in valid:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                kwargs[key] = int(value) if key in int_keys else float(value)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad value for {key!r}") from exc
        return cls(**kwargs)


@dataclass
class PathParams:
    """One propagation path: delay (s), angle (rad), and complex gains."""

    tau: float
    theta: float
    alpha_ul: complex
    alpha_dl: complex

    def validate(self, cfg: SystemConfig) -> None:
        if not 0.0 <= self.tau <= cfg.max_delay:
            raise ValueError(f"delay {self.tau} outside [0, {cfg.max_delay}]")
        if not abs(self.theta) < math.pi / 2:
            raise ValueError(f"angle {self.theta} outside (-pi/2, pi/2)")


@dataclass
class Scenario:
    """Ground-truth geometry for every device in one drop."""

    devices: list[list[PathParams]]
    mean_angles: list[float]

    def validate(self, cfg: SystemConfig) -> None:
        for paths in self.devices:
            for p in paths:
                p.validate(cfg)

    def to_json(self) -> str:
        payload = {
            "mean_angles": list(self.mean_angles),
            "devices": [
                [
                    {
                        "tau": p.tau,
                        "theta": p.theta,
                        "alpha_ul": [p.alpha_ul.real, p.alpha_ul.imag],
                        "alpha_dl": [p.alpha_dl.real, p.alpha_dl.imag],
                    }
                    for p in paths
                ]
                for paths in self.devices
            ],
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        payload = json.loads(text)
        devices = [
            [
                PathParams(
                    tau=d["tau"],
                    theta=d["theta"],
                    alpha_ul=complex(*d["alpha_ul"]),
                    alpha_dl=complex(*d["alpha_dl"]),
                )
                for d in paths
            ]
            for paths in payload["devices"]
        ]
        return cls(devices=devices, mean_angles=list(payload["mean_angles"]))


def array_response(theta: float, lam: float, n_ant: int, spacing: float) -> np.ndarray:
    """Uniform-linear-array response; entry n is exp(j*2pi*n*(d/lam)*sin(theta))."""
    n = np.arange(n_ant)
    return np.exp(2j * np.pi * n * (spacing / lam) * np.sin(theta))


def steering_u(tau: float, theta: float, cfg: SystemConfig) -> np.ndarray:
    """Pilot-domain steering vector stacked over tones then antennas.

    Sub-block i carries the array response scaled by the delay phase of tone
    floor(-M/2) + i, so ||u||^2 = n_sc * n_ant for every (tau, theta).
    """
    m = math.floor(-cfg.n_sc / 2) + np.arange(cfg.n_sc)
    delay = np.exp(-2j * np.pi * m * cfg.delta_f * tau)
    a = array_response(theta, cfg.lambda_ul, cfg.n_ant, cfg.spacing)
    return (delay[:, None] * a[None, :]).ravel()


def downlink_gain(
    alpha_ul: complex | np.ndarray,
    eta: float | np.ndarray,
    sigma2_path: float,
    rng: np.random.Generator,
) -> complex | np.ndarray:
    """Downlink gain correlated with the uplink gain by factor eta."""
    eta = np.asarray(eta, dtype=float)
    if np.any(eta < 0.0) or np.any(eta > 1.0):
        raise ValueError("eta must lie in [0, 1]")
    shape = np.broadcast_shapes(np.shape(alpha_ul), eta.shape)
    g = math.sqrt(sigma2_path / 2.0) * (
        rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    )
    out = eta * np.asarray(alpha_ul) + np.sqrt(1.0 - eta**2) * g
    return out if out.shape else complex(out)


def sample_scenario(cfg: SystemConfig, rng: np.random.Generator) -> Scenario:
    """Draw one random drop of per-device path geometry and gains.

    Mean angles are uniform inside the interval that keeps every path angle
    strictly inside (-pi/2, pi/2), redrawn until every pair of devices is at
    least ``min_angle_separation`` apart (co-scheduled devices are spatially
    distinct); path angles sit inside a cluster of width ``angular_spread``
    around the mean; delays are uniform over the full unambiguous interval.
    """
    spread = cfg.angular_spread
    lo, hi = -math.pi / 2 + spread, math.pi / 2 - spread
    etas = cfg.eta_matrix()
    devices = []
    means = []
    for k in range(cfg.n_dev):
        for _ in range(10_000):
            mean = rng.uniform(lo, hi)
            if all(abs(mean - m) >= cfg.min_angle_separation for m in means):
                break
        else:
            raise RuntimeError(
                "cannot place devices with the requested angle separation"
            )
        thetas = mean + rng.uniform(-spread / 2, spread / 2, cfg.n_paths)
        taus = rng.uniform(0.0, cfg.max_delay, cfg.n_paths)
        alpha_ul = math.sqrt(cfg.sigma2_path / 2.0) * (
            rng.standard_normal(cfg.n_paths) + 1j * rng.standard_normal(cfg.n_paths)
        )
        alpha_dl = downlink_gain(alpha_ul, etas[k], cfg.sigma2_path, rng)
        alpha_dl = np.atleast_1d(alpha_dl)
        devices.append(
            [
                PathParams(
                    tau=float(taus[i]),
                    theta=float(thetas[i]),
                    alpha_ul=complex(alpha_ul[i]),
                    alpha_dl=complex(alpha_dl[i]),
                )
                for i in range(cfg.n_paths)
            ]
        )
        means.append(mean)
    return Scenario(devices=devices, mean_angles=means)


def uplink_channel(
    paths: Sequence[PathParams], f_ul: float, cfg: SystemConfig
) -> np.ndarray:
    """Uplink channel vector at baseband frequency f_ul."""
    h = np.zeros(cfg.n_ant, dtype=complex)
    for p in paths:
        a = array_response(p.theta, cfg.lambda_ul, cfg.n_ant, cfg.spacing)
        h += p.alpha_ul * a * np.exp(-2j * np.pi * f_ul * p.tau)
    return h


def downlink_channel(
    paths: Sequence[PathParams], f: float, cfg: SystemConfig
) -> np.ndarray:
    """Downlink channel vector at carrier offset f from the uplink band."""
    h = np.zeros(cfg.n_ant, dtype=complex)
    for p in paths:
        a = array_response(p.theta, cfg.lambda_dl, cfg.n_ant, cfg.spacing)
        h += p.alpha_dl * a * np.exp(-2j * np.pi * f * p.tau)
    return h


def received_pilot(
    paths: Sequence[PathParams], cfg: SystemConfig, rng: np.random.Generator
) -> np.ndarray:
    """Noisy stacked pilot observation for one device (length n_sc * n_ant)."""
    y = np.zeros(cfg.n_sc * cfg.n_ant, dtype=complex)
    for p in paths:
        y += p.alpha_ul * steering_u(p.tau, p.theta, cfg)
    if cfg.sigma2_est > 0:
        n = cfg.n_sc * cfg.n_ant
        y += math.sqrt(cfg.sigma2_est / 2.0) * (
            rng.standard_normal(n) + 1j * rng.standard_normal(n)
        )
    return y
