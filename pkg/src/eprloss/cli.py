"""Command-line front end.

Exit codes: 0 success, 2 usage or config error, 3 unsupported
configuration, 4 numerical guard or validation failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .configfile import ConfigError, RunConfig, dump_config, load_config
from .experiment import (
    ExperimentConfig,
    InputKind,
    ScanResult,
    UnsupportedConfiguration,
    build_number_difference,
    classical_fringes,
    closed_form_variance,
    noise_result,
    noise_spectrum,
    phase_scan,
)
from .fluctuation import linear_combine, quadrature
from .montecarlo import SamplerConfig, sample_iterated_bounce, sample_operator
from .reservoir import (
    BounceChannel,
    ReservoirSystem,
    VACUUM_VARIANCE,
    analytic_propagator,
    integrate_propagator,
    orthogonality_defect,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_UNSUPPORTED = 3
EXIT_GUARD = 4

SCAN_COLUMNS = ("n1", "n2", "variance", "shot_noise", "ratio", "db")
DEFAULT_SEED = 20100615
DEFAULT_STEP = 0.005  # g*dt for the reservoir check


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _fmt(x: float | None) -> str:
    if x is None:
        return "undefined"
    return repr(round(x, 12) + 0.0)


def _num(x: float) -> str:
    return format(x, ".17g")


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


# --------------------------------------------------------------------------
# output


def manifest_lines(command: str, out: str | None, config: RunConfig | None = None,
                   seed: int | None = None, extra: dict | None = None) -> list[str]:
    lines = [f"command: {command}", f"tool: eprloss {__version__}", f"output: {out or '-'}"]
    if seed is not None:
        lines.append(f"seed: {seed}")
    for key, value in (extra or {}).items():
        lines.append(f"{key}: {value}")
    if config is not None:
        lines += ["config." + line.replace(" = ", ": ") for line in dump_config(config).splitlines()]
    return ["# " + line for line in lines]


def scan_to_csv(scan: ScanResult, manifest: list[str]) -> str:
    buf = io.StringIO()
    for line in manifest:
        buf.write(line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow((scan.scan_name,) + SCAN_COLUMNS)
    for row in scan.rows():
        writer.writerow([_num(v) for v in row])
    return buf.getvalue()


def read_scan_csv(path: str | Path) -> ScanResult:
    """Load a CSV written by ``scan`` or ``spectrum`` (manifest kept in ``meta``)."""
    meta = {}
    data_lines = []
    with open(path, encoding="utf-8", newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition(": ")
                meta[key] = value
            elif line.strip():
                data_lines.append(line)
    reader = csv.reader(data_lines)
    header = next(reader)
    if tuple(header[1:]) != SCAN_COLUMNS:
        raise ValueError(f"unexpected CSV columns {header}")
    table = np.array([[float(v) for v in row] for row in reader], dtype=float).reshape(-1, len(header))
    cols = {name: table[:, i] for i, name in enumerate(header)}
    return ScanResult(header[0], cols[header[0]], cols["n1"], cols["n2"], cols["variance"],
                      cols["shot_noise"], cols["ratio"], meta)


def _emit(text: str, out: str | None):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8", newline="\n")


def _say(args, message: str):
    if not args.quiet:
        print(message)


def _load(args) -> RunConfig:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None
    except UnsupportedConfiguration as exc:
        raise CliError(str(exc), EXIT_UNSUPPORTED) from None
    if args.dump_config:
        Path(args.dump_config).write_text(dump_config(cfg), encoding="utf-8", newline="\n")
    return cfg


# --------------------------------------------------------------------------
# commands


def cmd_variance(args) -> int:
    run = _load(args)
    cfg = run.experiment
    res = noise_result(cfg)
    closed = None
    if args.closed_form:
        try:
            closed = closed_form_variance(cfg)
        except UnsupportedConfiguration as exc:
            raise CliError(str(exc), EXIT_UNSUPPORTED) from None
    parts = [f"V={_fmt(res.variance)}", f"V_SN={_fmt(res.shot_noise)}",
             f"ratio={_fmt(res.ratio)}", f"dB={_fmt(res.db)}"]
    if closed is not None:
        parts.append(f"V_closed={_fmt(closed)}")
    _say(args, ", ".join(parts))
    if args.out:
        n1, n2 = classical_fringes(cfg)
        nan = math.nan
        buf = io.StringIO()
        for line in manifest_lines("variance", args.out, run):
            buf.write(line + "\n")
        buf.write("n1,n2,variance,shot_noise,ratio,db\n")
        values = (n1, n2, res.variance, res.shot_noise,
                  nan if res.ratio is None else res.ratio, nan if res.db is None else res.db)
        buf.write(",".join(_num(v) for v in values) + "\n")
        _emit(buf.getvalue(), args.out)
    if args.require_ratio and res.ratio is None:
        print("error: shot noise below dark-fringe guard, ratio undefined", file=sys.stderr)
        return EXIT_GUARD
    return EXIT_OK


def cmd_scan(args) -> int:
    run = _load(args)
    try:
        scan = phase_scan(run.experiment, args.phi_min, args.phi_max, args.steps)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None
    extra = {"phi_min": _num(args.phi_min), "phi_max": _num(args.phi_max), "steps": args.steps}
    _emit(scan_to_csv(scan, manifest_lines("scan", args.out, run, extra=extra)), args.out)
    if args.out:
        _say(args, f"wrote {len(scan)} rows to {args.out}")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    run = _load(args)
    gamma = args.gamma if args.gamma is not None else run.gamma_cavity
    if gamma is None:
        raise CliError("no cavity bandwidth: pass --gamma or set gamma_cavity", EXIT_USAGE)
    if not gamma > 0:
        raise CliError(f"cavity bandwidth must be positive, got {gamma}", EXIT_USAGE)
    f_max = args.f_max if args.f_max is not None else 10 * gamma
    if args.points < 2 or f_max <= args.f_min:
        raise CliError("need --points >= 2 and --f-max > --f-min", EXIT_USAGE)
    freqs = np.linspace(args.f_min, f_max, args.points)
    scan = noise_spectrum(run.experiment, gamma, freqs)
    extra = {"gamma_cavity": _num(gamma), "f_min": _num(args.f_min), "f_max": _num(f_max),
             "points": args.points}
    _emit(scan_to_csv(scan, manifest_lines("spectrum", args.out, run, extra=extra)), args.out)
    if args.out:
        _say(args, f"wrote {len(scan)} rows to {args.out}")
    return EXIT_OK


def cmd_reservoir(args) -> int:
    if args.n < 1:
        raise CliError("--n must be at least 1", EXIT_USAGE)
    system = ReservoirSystem.uniform(args.kappa, args.n)
    g = system.g
    dt = args.dt if args.dt is not None else DEFAULT_STEP / g
    t = args.gt / g
    try:
        integrated = integrate_propagator(system, t, dt)
        analytic = analytic_propagator(system, t)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None
    ortho = orthogonality_defect(integrated)
    mismatch = float(np.max(np.abs(integrated - analytic)))
    identity = float(np.max(np.abs(integrated - np.eye(args.n + 1))))
    _say(args, f"N={args.n} kappa={_fmt(args.kappa)} g={_fmt(g)} gt={_fmt(args.gt)} dt*g={_fmt(dt * g)}")
    _say(args, f"orthogonality_defect={ortho:.3e}")
    _say(args, f"analytic_vs_integrated={mismatch:.3e}")
    _say(args, f"identity_distance={identity:.3e}")
    if max(ortho, mismatch) > args.tol:
        print(f"error: defect exceeds tolerance {args.tol:g}", file=sys.stderr)
        return EXIT_GUARD
    return EXIT_OK


def validation_suite(n_samples: int, seed: int, workers: int = 1):
    """Named Monte Carlo checks as ``(name, EstimateReport)`` pairs."""
    seeds = np.random.SeedSequence(seed).generate_state(16, dtype=np.uint64)
    pick = iter(int(s) for s in seeds)

    def cfg():
        return SamplerConfig(n_samples, seed=next(pick), workers=workers)

    checks = [
        ("quadrature", quadrature(1, 0.0)),
        ("quadrature_difference", linear_combine([(1, quadrature(1, 0.0)), (-1, quadrature(2, 0.0))])),
    ]
    experiments = [
        ("restored_phi0.7", ExperimentConfig(r=0.5, s=0.5, phi1=0.7, phi3=-0.7)),
        ("restored_unequal", ExperimentConfig(r=0.8, s=0.3, beta1=2.0, beta3=0.5, phi1=1.1, phi3=-1.1)),
        ("off_condition", ExperimentConfig(r=0.5, s=0.5, phi1=0.0, phi2=math.pi)),
        ("vacuum_loss", ExperimentConfig(r=1.0, kind_34=InputKind.VACUUM)),
        ("single_mode_opposed", ExperimentConfig(
            r=0.5, s=0.5, phi1=math.pi / 2, phi3=math.pi / 2,
            kind_12=InputKind.SINGLE_MODE_AMPLITUDE_SQUEEZED,
            kind_34=InputKind.SINGLE_MODE_AMPLITUDE_SQUEEZED)),
    ]
    checks += [(name, build_number_difference(c)) for name, c in experiments]
    reports = [(name, sample_operator(x, cfg())) for name, x in checks]
    squeezed_std = math.sqrt(VACUUM_VARIANCE) * math.exp(-1.0)
    reports.append(("bounce_theta0.1_m200",
                    sample_iterated_bounce(BounceChannel(0.1, 1.0), 200, squeezed_std,
                                           SamplerConfig(max(1, n_samples // 10), seed=next(pick)))))
    reports.append(("bounce_full_swap",
                    sample_iterated_bounce(math.pi / 2, 1, squeezed_std, cfg())))
    return reports


def cmd_validate(args) -> int:
    if args.samples < 1:
        raise CliError("--samples must be at least 1", EXIT_USAGE)
    seed = args.seed if args.seed is not None else DEFAULT_SEED
    reports = validation_suite(args.samples, seed, args.workers)
    worst = 0.0
    for name, rep in reports:
        worst = max(worst, abs(rep.z_score))
        _say(args, f"{name:24s} sampled={rep.sample_variance:.6g} analytic={rep.analytic_variance:.6g} "
                   f"z={rep.z_score:+.3f}")
    verdict = "PASS" if worst < args.z_max else "FAIL"
    if args.out:
        buf = io.StringIO()
        extra = {"samples": args.samples, "worst_abs_z": _num(worst)}
        for line in manifest_lines("validate", args.out, seed=seed, extra=extra):
            buf.write(line + "\n")
        buf.write("check,sample_variance,analytic_variance,standard_error,z_score\n")
        for name, rep in reports:
            values = (rep.sample_variance, rep.analytic_variance, rep.standard_error, rep.z_score)
            buf.write(name + "," + ",".join(_num(v) for v in values) + "\n")
        _emit(buf.getvalue(), args.out)
    print(f"worst |z| = {worst:.3f} ({verdict}, seed={seed}, samples={args.samples})")
    return EXIT_OK if verdict == "PASS" else EXIT_GUARD


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file (CSV); '-' for stdout")
    common.add_argument("--seed", type=_seed, help="seed for stochastic commands")
    common.add_argument("--quiet", action="store_true", help="suppress summaries")
    common.add_argument("--dump-config", metavar="PATH", help="write the resolved config to PATH")

    parser = argparse.ArgumentParser(
        prog="eprloss",
        description="Linearized noise of EPR beams under 50%% beamsplitter loss.",
    )
    parser.add_argument("--version", action="version", version=f"eprloss {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("variance", parents=[common], help="noise, shot noise and squeezing ratio")
    p.add_argument("config")
    p.add_argument("--closed-form", action="store_true", help="also print the EPR closed form")
    p.add_argument("--require-ratio", action="store_true",
                   help="exit 4 if the ratio is undefined (dark fringe)")
    p.set_defaults(func=cmd_variance)

    p = sub.add_parser("scan", parents=[common], help="scan phi14 = -phi23")
    p.add_argument("config")
    p.add_argument("--phi-min", type=float, default=0.0)
    p.add_argument("--phi-max", type=float, default=2 * math.pi)
    p.add_argument("--steps", type=int, default=181)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("spectrum", parents=[common], help="squeezing ratio versus frequency")
    p.add_argument("config")
    p.add_argument("--gamma", type=float, help="cavity bandwidth in Hz (overrides gamma_cavity)")
    p.add_argument("--f-min", type=float, default=0.0)
    p.add_argument("--f-max", type=float, help="default: 10 * gamma")
    p.add_argument("--points", type=int, default=201)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("reservoir", parents=[common], help="integrated vs analytic reservoir propagator")
    p.add_argument("--n", type=int, default=64, help="number of reservoir modes")
    p.add_argument("--gt", type=float, default=math.pi / 2)
    p.add_argument("--dt", type=float, help=f"time step (default {DEFAULT_STEP}/g)")
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_reservoir)

    p = sub.add_parser("validate", parents=[common], help="Monte Carlo cross-check suite")
    p.add_argument("--samples", type=int, default=200_000)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--z-max", type=float, default=5.0)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except UnsupportedConfiguration as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED


if __name__ == "__main__":
    sys.exit(main())
