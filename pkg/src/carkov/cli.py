"""Command-line front end.

Three subcommands: analyze (closed-form pipeline to JSON + covariance
curve CSV), simulate (sample path CSV + metadata), verify (consistency
suite, table + JSON report). Exit codes: 0 success, 1 verification
failures, 2 configuration or model errors. All outputs are deterministic
for a fixed config and seed; no timestamps are written anywhere.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import covariance, markov, model, simulate, validate
from .errors import CarkovError

_SEED_ENV = "CARKOV_SEED"


def _resolve_seed(value: int | None) -> int:
    if value is not None:
        return int(value)
    env = os.environ.get(_SEED_ENV, "")
    return int(env) if env else 0


def _error_json(exc: Exception) -> int:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return 2


def _dump_json(payload: dict | list, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# analyze

def cmd_analyze(args) -> int:
    spec = model.load_model(args.model)
    cov = covariance.residue_expansion(spec)
    mom = covariance.moments(cov)
    system, law = markov.assemble(spec)
    chi = model.ode_char_poly(spec)

    eig = np.sort_complex(np.linalg.eigvals(system.companion))
    expected = np.sort_complex(np.array([1j * z for z in spec.roots]))
    eig_err = float(np.abs(eig - expected).max())
    a_from_chi = [-float(c) for c in chi.coefficients[: spec.k + 1]]
    drift_gap = float(
        np.abs(system.drift - np.asarray(a_from_chi)).max()
    )

    payload = {
        "model": model.to_config(spec),
        "k": spec.k,
        "covariance": covariance.cov_to_config(cov),
        "moments": {
            "even": [float(v) for v in mom.even_moments],
            "top_plus": float(mom.top_plus),
        },
        "ito": markov.ito_to_config(system, law)
        | {"b_squared": float(system.diffusion**2)},
        "eigen_check": {
            "companion_eigenvalues": [[z.real, z.imag] for z in eig],
            "expected_i_times_roots": [[z.real, z.imag] for z in expected],
            "max_abs_error": eig_err,
        },
        "drift_vs_char_poly": {
            "a_from_char_poly": a_from_chi,
            "max_abs_difference": drift_gap,
        },
    }

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _dump_json(payload, out_dir / "analysis.json")

    tau = 1.0 / min(z.imag for z in spec.roots)
    tmax = args.tmax if args.tmax is not None else 5.0 * tau
    grid = np.linspace(0.0, tmax, args.points)
    curve = np.column_stack([grid, covariance.eval_r(cov, 0, grid)])
    np.savetxt(
        out_dir / "covariance_curve.csv",
        curve,
        delimiter=",",
        header="t,r",
        comments="",
        fmt="%.17g",
    )

    print(
        f"k = {spec.k}: a = {[round(float(x), 10) for x in system.drift]}, "
        f"b^2 = {system.diffusion**2:.10g}, wrote {out_dir / 'analysis.json'}"
    )
    return 0


# ---------------------------------------------------------------------------
# simulate

def cmd_simulate(args) -> int:
    spec = model.load_model(args.model)
    seed = _resolve_seed(args.seed)
    if args.dt <= 0 or args.steps <= 0:
        raise CarkovError("dt and steps must be positive")

    if args.method in ("exact", "euler"):
        system, law = markov.assemble(spec)
        if args.method == "exact":
            path = simulate.sample_exact(system, law, args.dt, args.steps, seed)
        else:
            path = simulate.sample_euler(system, law, args.dt, args.steps, seed)
    else:
        times = args.dt * np.arange(args.steps + 1)
        path = simulate.sample_spectral(
            spec, times, seed, z_max=args.z_max, n_panels=args.panels
        )

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    simulate.write_csv(path, out_dir / "path.csv")
    simulate.write_metadata(path, model.to_config(spec), out_dir / "path_meta.json")
    print(
        f"{args.method}: {path.n_points} points x {path.k + 1} rows at "
        f"dt = {path.dt}, seed = {seed}, wrote {out_dir / 'path.csv'}"
    )
    return 0


# ---------------------------------------------------------------------------
# verify

def cmd_verify(args) -> int:
    spec = model.load_model(args.model)
    seed = _resolve_seed(args.seed)
    reports = validate.run_suite(
        spec, budget=args.budget, seed=seed, perturb_coef=args.perturb
    )

    width = max(len(r.name) for r in reports)
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  {status}  statistic {r.statistic: .3e}  "
              f"threshold {r.threshold: .3e}")
    n_fail = sum(not r.passed for r in reports)
    print(f"{len(reports) - n_fail}/{len(reports)} checks passed")

    if args.out is not None:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        _dump_json(
            [
                {
                    "name": r.name,
                    "passed": r.passed,
                    "statistic": r.statistic,
                    "threshold": r.threshold,
                    "detail": r.detail,
                }
                for r in reports
            ],
            out_dir / "verify_report.json",
        )
    return 1 if n_fail else 0


# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="carkov",
        description=(
            "Construct, analyze, simulate and cross-verify stationary "
            "Gaussian processes whose derivative stack is a vector Markov "
            "diffusion."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="closed-form pipeline to JSON + CSV")
    p.add_argument("--model", required=True, help="model config JSON path")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--tmax", type=float, default=None,
                   help="covariance curve horizon (default 5 correlation times)")
    p.add_argument("--points", type=int, default=501,
                   help="covariance curve sample count")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="write a sample path CSV + metadata")
    p.add_argument("--model", required=True, help="model config JSON path")
    p.add_argument("--method", required=True,
                   choices=("exact", "euler", "spectral"))
    p.add_argument("--dt", type=float, default=0.01, help="grid spacing")
    p.add_argument("--steps", type=int, default=1000, help="number of steps")
    p.add_argument("--seed", type=int, default=None,
                   help=f"RNG seed (default ${_SEED_ENV} or 0)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--z-max", dest="z_max", type=float, default=None,
                   help="spectral truncation radius (spectral method)")
    p.add_argument("--panels", type=int, default=simulate.SPECTRAL_PANELS,
                   help="spectral midpoint panel count")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run the cross-verification suite")
    p.add_argument("--model", required=True, help="model config JSON path")
    p.add_argument("--budget", default="fast", choices=("fast", "full"))
    p.add_argument("--seed", type=int, default=None,
                   help=f"RNG seed (default ${_SEED_ENV} or 0)")
    p.add_argument("--out", default=None, help="directory for the JSON report")
    p.add_argument("--perturb", type=float, default=0.0,
                   help="negative control: scale one covariance coefficient "
                        "by (1 + eps); nonzero values must make the suite fail")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CarkovError as exc:
        return _error_json(exc)
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        return _error_json(exc)


if __name__ == "__main__":
    sys.exit(main())
