"""Command-line batch experiments with reproducible outputs.

Exit codes: 0 success, 2 usage error, 3 malformed config, 4 unusable output
directory, 1 anything else.  Errors print one machine-parsable line on
stderr: ``fflink: error[<code>]: <message>``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_OUTDIR = 4

OUTDIR_ENV = "FFLINK_OUTDIR"


def _parse_range(spec: str) -> list[float]:
    """start:step:stop (inclusive stop) or a comma-separated list."""
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError(f"range must be start:step:stop, got {spec!r}")
        start, step, stop = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("range step must be positive")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [start + i * step for i in range(n)]
    return [float(p) for p in spec.split(",") if p.strip()]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fflink",
        description="Feedback-free FDD downlink MIMO link simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, help="flat key=value config file")
        p.add_argument("--seed", type=int, default=0, help="master seed")
        p.add_argument("--trials", type=int, default=100)
        p.add_argument("--out", type=Path, default=None,
                       help=f"output directory (default $"
                            f"{OUTDIR_ENV} or ./runs/<command>)")
        p.add_argument("--methods", type=str, default=None,
                       help="comma-separated method names")
        p.add_argument("--threads", type=int, default=1,
                       help="trial worker processes")

    p_se = sub.add_parser("sweep-se", help="min spectral efficiency vs SNR")
    common(p_se)
    p_se.add_argument("--snr", type=str, default="0:10:40",
                      help="SNR grid in dB, start:step:stop or list")

    p_eta = sub.add_parser("sweep-eta", help="min spectral efficiency vs eta")
    common(p_eta)
    p_eta.add_argument("--eta-list", type=str, default="1.0,0.9,0.7,0.5")
    p_eta.add_argument("--snr", type=float, default=30.0)

    p_lat = sub.add_parser("latency", help="HARQ latency at fixed SNR")
    common(p_lat)
    p_lat.add_argument("--snr", type=float, default=30.0)
    p_lat.add_argument("--payload", type=float, default=25_000.0)

    p_en = sub.add_parser("energy", help="energy efficiency vs SNR")
    common(p_en)
    p_en.add_argument("--snr", type=str, default="-10:5:30")

    p_est = sub.add_parser("estimate", help="one-shot path extraction demo")
    p_est.add_argument("--config", type=Path)
    p_est.add_argument("--seed", type=int, default=0)
    p_est.add_argument("--out", type=Path, default=None)

    p_self = sub.add_parser("selftest", help="fast invariant checks")
    p_self.add_argument("--config", type=Path)

    return parser


def _load_config(path: Path | None):
    from .channel import SystemConfig

    if path is None:
        return SystemConfig()
    return SystemConfig.from_file(path)


def _resolve_outdir(arg: Path | None, command: str) -> Path:
    if arg is not None:
        return arg
    env = os.environ.get(OUTDIR_ENV)
    if env:
        return Path(env) / command
    return Path("runs") / command


def _check_outdir(path: Path) -> None:
    try:
        path.mkdir(parents=True, exist_ok=True)
        probe = path / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise PermissionError(f"output directory {path} is not writable: {exc}")


def _methods_arg(arg: str | None, default) -> tuple[str, ...]:
    from .evaluate import METHODS

    if arg is None:
        return tuple(default)
    names = tuple(m.strip() for m in arg.split(",") if m.strip())
    for m in names:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r} (choose from {sorted(METHODS)})")
    return names


def _cmd_sweep_se(args) -> int:
    from .evaluate import FEEDBACK_FREE_METHODS, emit_report, se_sweep

    cfg = _load_config(args.config)
    methods = _methods_arg(args.methods, FEEDBACK_FREE_METHODS)
    snrs = _parse_range(args.snr)
    outdir = _resolve_outdir(args.out, "sweep-se")
    _check_outdir(outdir)
    records = se_sweep(
        cfg, snrs, args.trials, methods=methods,
        master_seed=args.seed, workers=args.threads,
    )
    paths = emit_report(records, outdir, manifest=_manifest(args, cfg, snr_db=snrs))
    print(paths["csv"])
    return EXIT_OK


def _cmd_sweep_eta(args) -> int:
    from .evaluate import emit_report, eta_sweep

    cfg = _load_config(args.config)
    methods = _methods_arg(args.methods, ("rsma-ecm", "rsma-plain"))
    etas = [float(e) for e in args.eta_list.split(",") if e.strip()]
    outdir = _resolve_outdir(args.out, "sweep-eta")
    _check_outdir(outdir)
    records = eta_sweep(
        cfg, etas, args.snr, args.trials, methods=methods,
        master_seed=args.seed, workers=args.threads,
    )
    paths = emit_report(
        records, outdir, manifest=_manifest(args, cfg, eta_list=etas, snr_db=args.snr)
    )
    print(paths["csv"])
    return EXIT_OK


def _cmd_latency(args) -> int:
    from .evaluate import LatencyConfig, emit_report, se_sweep

    cfg = _load_config(args.config)
    methods = _methods_arg(args.methods, ("rsma-ecm", "rzf", "mrt", "fb-rsma"))
    lat_cfg = LatencyConfig(payload_bits=args.payload, snr_db=args.snr)
    outdir = _resolve_outdir(args.out, "latency")
    _check_outdir(outdir)
    records = se_sweep(
        cfg, [args.snr], args.trials, methods=methods, lat_cfg=lat_cfg,
        master_seed=args.seed, workers=args.threads,
    )
    paths = emit_report(
        records, outdir,
        manifest=_manifest(args, cfg, payload_bits=args.payload, snr_db=args.snr),
    )
    print(paths["csv"])
    return EXIT_OK


def _cmd_energy(args) -> int:
    from .evaluate import emit_report, se_sweep

    cfg = _load_config(args.config)
    methods = _methods_arg(args.methods, ("rsma-ecm", "rsma-plain", "fb-rsma"))
    snrs = _parse_range(args.snr)
    outdir = _resolve_outdir(args.out, "energy")
    _check_outdir(outdir)
    records = se_sweep(
        cfg, snrs, args.trials, methods=methods,
        master_seed=args.seed, workers=args.threads,
    )
    paths = emit_report(records, outdir, manifest=_manifest(args, cfg, snr_db=snrs))
    print(paths["csv"])
    return EXIT_OK


def _cmd_estimate(args) -> int:
    from .channel import received_pilot, sample_scenario, uplink_channel
    from .ecm import csi_error_covariance, ecm_to_json
    from .nomp import nomp_extract

    cfg = _load_config(args.config)
    rng = np.random.default_rng(np.random.SeedSequence((args.seed, 0)))
    scenario = sample_scenario(cfg, rng)
    device = scenario.devices[0]
    pilot = received_pilot(device, cfg, rng)
    est = nomp_extract(pilot, cfg)

    truth = sorted(device, key=lambda p: -abs(p.alpha_ul))
    found = sorted(est.paths, key=lambda p: -abs(p.alpha))
    print(f"true paths: {len(truth)}  detected: {len(found)}")
    print(f"{'':>10} {'delay_ns':>12} {'angle_deg':>10} {'|gain|':>8}")
    for tag, paths in (("true", truth), ("est", found)):
        for p in paths:
            tau = p.tau * 1e9
            theta = math.degrees(p.theta)
            mag = abs(p.alpha_ul if tag == "true" else p.alpha)
            print(f"{tag:>10} {tau:12.2f} {theta:10.3f} {mag:8.4f}")

    h_ref = uplink_channel(device, 0.0, cfg)
    h_est = sum(
        p.alpha
        * np.exp(
            2j * np.pi * np.arange(cfg.n_ant) * (cfg.spacing / cfg.lambda_ul)
            * np.sin(p.theta)
        )
        for p in est.paths
    )
    err = np.linalg.norm(h_est - h_ref) ** 2 / np.linalg.norm(h_ref) ** 2
    print(f"uplink channel NMSE: {10 * math.log10(max(err, 1e-300)):.2f} dB")

    if args.out is not None:
        _check_outdir(args.out)
        phi, _ = csi_error_covariance(pilot, est, cfg)
        record = {
            "scenario": json.loads(scenario.to_json()),
            "estimates": json.loads(est.to_json()),
            "ecm": json.loads(ecm_to_json(phi)),
        }
        path = args.out / "estimate.json"
        path.write_text(json.dumps(record, indent=2))
        print(path)
    return EXIT_OK


def _cmd_selftest(args) -> int:
    from . import selftest

    cfg = _load_config(args.config)
    failures = selftest.run(cfg)
    if failures:
        for name, msg in failures:
            print(f"FAIL {name}: {msg}")
        return 1
    print("selftest: all checks passed")
    return EXIT_OK


def _manifest(args, cfg, **extra) -> dict:
    info = {
        "argv": sys.argv[1:],
        "command": args.command,
        "master_seed": args.seed,
        "trials": getattr(args, "trials", None),
        "config": cfg.to_dict(),
    }
    info.update(extra)
    return info


_DISPATCH = {
    "sweep-se": _cmd_sweep_se,
    "sweep-eta": _cmd_sweep_eta,
    "latency": _cmd_latency,
    "energy": _cmd_energy,
    "estimate": _cmd_estimate,
    "selftest": _cmd_selftest,
}


def parse_and_dispatch(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else EXIT_OK
    try:
        return _DISPATCH[args.command](args)
    except ValueError as exc:
        print(f"fflink: error[{EXIT_CONFIG}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PermissionError as exc:
        print(f"fflink: error[{EXIT_OUTDIR}]: {exc}", file=sys.stderr)
        return EXIT_OUTDIR
    except Exception as exc:  # surfaced as a single parsable line
        print(f"fflink: error[1]: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(parse_and_dispatch())


if __name__ == "__main__":
    main()
