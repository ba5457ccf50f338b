"""Command-line front end.

Subcommands: simulate, derive, verify, critical, spectrum, loja, sweep.
The environment variable HYPERFLOW_BACKEND (spectral|fd4) overrides the
backend from configs and flags.  Failures print a machine-readable error
JSON on stderr; exit codes: 2 config error, 3 step failure, 4 not converged
under --strict, 1 anything else.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import io as hio
from .convergence import (
    cauchy_tracker,
    check_H_decay,
    compact_set_tracker,
    estimate_limit_energy,
    fit_exponent,
)
from .curves import ClosedCurve, measure, random_curve
from .errors import ConfigError, HyperflowError, InsufficientDecay, StepFailure
from .flow import FlowConfig, default_initial_curve, run
from .gradient import discrete_gradient, euler_lagrange, gradient_norm
from .jets import euler_lagrange_poly, integrand
from .stability import assemble, refine_critical, spectrum

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_STEP_FAILURE = 3
EXIT_NOT_CONVERGED = 4


def _resolve_backend(candidate: str | None) -> str:
    env = os.environ.get("HYPERFLOW_BACKEND")
    backend = env or candidate or "spectral"
    if backend not in ("spectral", "fd4"):
        raise ConfigError(f"backend must be 'spectral' or 'fd4', got {backend!r}")
    return backend


def _fail(exc: Exception, code: int) -> int:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    print(json.dumps(payload), file=sys.stderr)
    return code


def _load_or_seed_curve(args, n_default=128):
    if getattr(args, "curve", None):
        return hio.read_curve_json(args.curve)
    n = getattr(args, "n", None) or n_default
    return random_curve(n, seed=getattr(args, "seed", 0))


# ----------------------------------------------------------------------
# simulate / sweep
# ----------------------------------------------------------------------

def _simulate_config(cfg: FlowConfig, out_dir: Path) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    initial = default_initial_curve(cfg)
    result = run(initial, cfg)
    wall = time.perf_counter() - start

    hio.write_trace_csv(out_dir / "trace.csv", result.trace)
    hio.write_curve_json(out_dir / "final_curve.json", result.state.curve)
    for index, snap in enumerate(result.snapshots):
        hio.write_curve_json(out_dir / f"snap_{index:05d}.json", snap)
    hio.write_run_meta(
        out_dir / "run_meta.json",
        cfg,
        cfg.backend,
        wall,
        extra={
            "converged": result.converged,
            "n_accepted": result.n_accepted,
            "n_rejected": result.n_rejected,
            "final_energy": result.state.energy,
            "final_grad_norm": result.state.grad_norm,
            "final_t": result.state.t,
        },
    )
    return {
        "out": str(out_dir),
        "converged": result.converged,
        "final_grad_norm": result.state.grad_norm,
        "final_energy": result.state.energy,
    }


def cmd_simulate(args) -> int:
    try:
        cfg = hio.parse_config(args.config)
        cfg = dataclasses.replace(cfg, backend=_resolve_backend(cfg.backend))
        cfg.validate()
    except (ConfigError, OSError) as exc:
        return _fail(exc, EXIT_CONFIG)
    try:
        summary = _simulate_config(cfg, Path(args.out))
    except StepFailure as exc:
        return _fail(exc, EXIT_STEP_FAILURE)
    print(json.dumps(summary))
    if args.strict and not summary["converged"]:
        return _fail(HyperflowError("t_max reached before tol_grad"), EXIT_NOT_CONVERGED)
    return EXIT_OK


def _sweep_worker(payload):
    cfg_path, out_dir = payload
    cfg = hio.parse_config(cfg_path)
    cfg = dataclasses.replace(cfg, backend=_resolve_backend(cfg.backend))
    return _simulate_config(cfg, Path(out_dir))


def cmd_sweep(args) -> int:
    jobs = []
    try:
        for cfg_path in args.configs:
            stem = Path(cfg_path).stem
            hio.parse_config(cfg_path)  # fail fast on bad configs
            jobs.append((cfg_path, str(Path(args.out) / stem)))
    except (ConfigError, OSError) as exc:
        return _fail(exc, EXIT_CONFIG)
    try:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            summaries = list(pool.map(_sweep_worker, jobs))
    except StepFailure as exc:
        return _fail(exc, EXIT_STEP_FAILURE)
    print(json.dumps(summaries))
    return EXIT_OK


# ----------------------------------------------------------------------
# derive / verify / critical / spectrum / loja
# ----------------------------------------------------------------------

def cmd_derive(args) -> int:
    if args.m < 1:
        return _fail(ConfigError("m must satisfy m >= 1"), EXIT_CONFIG)
    p_poly = integrand(args.m)
    e_poly = euler_lagrange_poly(args.m)
    if args.json:
        print(
            json.dumps(
                {"m": args.m, "P": p_poly.to_json_obj(), "E": e_poly.to_json_obj()}
            )
        )
    else:
        print(f"P_{args.m} = {p_poly.to_text()}")
        print(f"E_{args.m} = {e_poly.to_text()}")
    return EXIT_OK


def cmd_verify(args) -> int:
    backend = _resolve_backend(args.backend)
    curve = _load_or_seed_curve(args, n_default=256)
    symbolic = euler_lagrange(curve, args.m, backend)
    oracle = discrete_gradient(curve, args.m, backend=backend)
    rel = float(
        np.linalg.norm(symbolic - oracle) / max(np.linalg.norm(oracle), 1e-300)
    )
    print(
        json.dumps(
            {"m": args.m, "n": curve.n, "backend": backend, "rel_l2_error": rel}
        )
    )
    return EXIT_OK


def cmd_critical(args) -> int:
    backend = _resolve_backend(args.backend)
    curve = _load_or_seed_curve(args, n_default=96)
    cfg = FlowConfig(
        m=args.m,
        n_vertices=curve.n,
        dt_max=args.dt_max,
        tol_grad=args.flow_tol,
        t_max=args.t_max,
        sample_every=1000,
        backend=backend,
    )
    result = run(curve, cfg)
    polished, gnorm, iters = refine_critical(result.state.curve, args.m, backend)
    center = polished.vertices.mean(axis=0)
    radii = np.linalg.norm(polished.vertices - center, axis=1)
    summary = {
        "m": args.m,
        "grad_norm": gnorm,
        "radius_mean": float(radii.mean()),
        "radius_dev": float(radii.max() - radii.min()),
        "flow_steps": result.state.step_index,
        "newton_iters": iters,
    }
    if args.out:
        hio.write_curve_json(args.out, polished)
    print(json.dumps(summary))
    return EXIT_OK


def cmd_spectrum(args) -> int:
    backend = _resolve_backend(args.backend)
    curve = hio.read_curve_json(args.curve)
    matrix = assemble(curve, args.m, backend)
    result = spectrum(matrix)
    q = curve.n // 4
    theta = 2.0 * np.pi * np.arange(curve.n) / curve.n
    mode = np.cos(q * theta)
    gd = measure(curve, backend)
    omega = 2.0 * np.pi * q / gd.length
    ratio = matrix.rayleigh(mode) / (2.0 * omega ** (2 * args.m + 2))
    payload = {
        "eigenvalues": [float(x) for x in result.eigenvalues],
        "kernel_dim": result.kernel_dim,
        "leading_symbol_ratio": float(ratio),
    }
    text = json.dumps(payload)
    if args.out:
        Path(args.out).write_text(text)
    print(text)
    return EXIT_OK


def cmd_loja(args) -> int:
    run_dir = Path(args.run_dir)
    trace = hio.read_trace_csv(run_dir / "trace.csv")
    base = hio.read_curve_json(run_dir / "final_curve.json")
    snap_paths = sorted(run_dir.glob("snap_*.json"))
    snapshots = [hio.read_curve_json(p) for p in snap_paths]
    if args.center:
        snapshots = [
            ClosedCurve(s.vertices - s.vertices.mean(axis=0)) for s in snapshots
        ]
        base = ClosedCurve(base.vertices - base.vertices.mean(axis=0))

    f_inf = args.f_inf if args.f_inf is not None else estimate_limit_energy(trace)
    report = fit_exponent(trace, f_inf)
    alpha = args.alpha if args.alpha is not None else report.alpha
    worst = check_H_decay(trace, f_inf, alpha)

    sensitivity = None
    final_gap = abs(trace.energy[-1] - f_inf)
    if args.f_inf is None and final_gap > 0:
        bracket = []
        for sign in (-1.0, 1.0):
            try:
                shifted = fit_exponent(trace, f_inf + sign * 10.0 * final_gap)
                bracket.append(shifted.alpha)
            except InsufficientDecay:
                bracket.append(None)
        sensitivity = bracket

    payload = {
        "alpha": report.alpha,
        "C": report.C,
        "window": list(report.window),
        "r2": report.r2,
        "violations": report.violations,
        "n_samples": report.n_samples,
        "decades": report.decades,
        "f_inf": f_inf,
        "h_decay_worst_ratio": worst,
        "alpha_sensitivity": sensitivity,
    }
    if len(snapshots) >= 2:
        cauchy = cauchy_tracker(snapshots, base)
        payload["cauchy_consecutive"] = [float(x) for x in cauchy.consecutive]
        payload["cauchy_tail_sup"] = [float(x) for x in cauchy.tail_sup]
    text = json.dumps(payload, indent=2)
    (run_dir / "loja_report.json").write_text(text)
    print(text)
    return EXIT_OK


# ----------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyperflow",
        description="Gradient flows of higher-order normal-derivative curve energies",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a relaxation flow from a config file")
    p.add_argument("config")
    p.add_argument("--out", default="out")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("derive", help="print the integrand and EL operator")
    p.add_argument("-m", type=int, default=1)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("verify", help="symbolic vs finite-difference gradient")
    p.add_argument("-m", type=int, default=1)
    p.add_argument("--curve")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--backend", default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("critical", help="flow plus Newton polish to a critical point")
    p.add_argument("-m", type=int, default=1)
    p.add_argument("--curve")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=96)
    p.add_argument("--backend", default=None)
    p.add_argument("--flow-tol", type=float, default=1e-4)
    p.add_argument("--dt-max", type=float, default=5e-4)
    p.add_argument("--t-max", type=float, default=40.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_critical)

    p = sub.add_parser("spectrum", help="second-variation spectrum at a critical curve")
    p.add_argument("-m", type=int, default=1)
    p.add_argument("--curve", required=True)
    p.add_argument("--backend", default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("loja", help="convergence monitor over a finished run directory")
    p.add_argument("run_dir")
    p.add_argument("--f-inf", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--center", action="store_true")
    p.set_defaults(func=cmd_loja)

    p = sub.add_parser("sweep", help="run several configs in parallel")
    p.add_argument("configs", nargs="+")
    p.add_argument("--out", default="sweep_out")
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail(exc, EXIT_CONFIG)
    except StepFailure as exc:
        return _fail(exc, EXIT_STEP_FAILURE)
    except HyperflowError as exc:
        return _fail(exc, EXIT_ERROR)
    except OSError as exc:
        return _fail(exc, EXIT_ERROR)


if __name__ == "__main__":
    sys.exit(main())
