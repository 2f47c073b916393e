"""Command-line front end: one subcommand per experiment, CSV/JSON emission.

Exit codes: 0 success, 2 argument error, 3 numerical error, 4 acceptance
threshold violated under --assert.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ArgumentError, NumericalError
from .harness import (
    DECAY_HEADER,
    PERTURBATION_HEADER,
    ExperimentSpec,
    emit_rates,
    emit_table,
    run_contraction_scan,
    run_hellinger_experiment,
    run_moments_experiment,
    run_perturbation_experiment,
    run_population_decay,
    run_rate_experiment,
    run_recursion_experiment,
    run_surface_experiment,
)

SUBCOMMANDS = {
    "rates": "rates",
    "pop-decay": "population_decay",
    "contraction": "contraction_scan",
    "perturbation": "perturbation_scan",
    "surface": "likelihood_surface",
    "hellinger": "hellinger_exponent",
    "recursion": "recursion",
    "moments": "moment_concentration",
}

# slope windows asserted under --assert, keyed per experiment
RATE_WINDOWS = {("isotropic", 1): (-0.165, -0.09),
                ("isotropic", 2): (-0.30, -0.20),
                ("tied_diagonal", 2): (-0.17, -0.08)}
SCALE_WINDOWS = {("isotropic", 2): (-0.6, -0.4)}
PERTURBATION_WINDOWS = {"pseudo": (0.75, 1.25), "corrected": (2.6, 3.4)}
SURFACE_WINDOWS = {"location_only": (3.5, 4.5), "location_scale_coupled": (7.5, 8.5)}
HELLINGER_WINDOW = (7.5, 8.5)
MOMENT_WINDOW = (-0.6, -0.4)


def _ints(text: str) -> tuple:
    return tuple(int(x) for x in text.split(",") if x)


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.split(",") if x)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="singular-em",
                                     description="EM experiments for over-specified "
                                                 "two-component Gaussian mixtures")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file with ExperimentSpec fields")
        p.add_argument("--out", help="output path (CSV by default)")
        p.add_argument("--format", choices=["csv", "json"], dest="fmt")
        p.add_argument("--seed", type=int, dest="master_seed")
        p.add_argument("--trials", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--assert", action="store_true", dest="check",
                       help="exit 4 when a fitted value leaves its acceptance window")

    p = sub.add_parser("rates", help="statistical-rate sweep over n")
    common(p)
    p.add_argument("--dim", type=_ints, dest="dims")
    p.add_argument("--fit", choices=["isotropic", "tied_diagonal", "free"])
    p.add_argument("--ns", type=_ints)
    p.add_argument("--init-radius", type=float, dest="init_radius")
    p.add_argument("--tol", type=float, dest="tol_theta")
    p.add_argument("--max-iters", type=int, dest="max_iters")
    p.add_argument("--budget", choices=["auto", "slow", "fast"])

    p = sub.add_parser("pop-decay", help="population operator iterate decay")
    common(p)
    p.add_argument("--dim", type=_ints, dest="dims")
    p.add_argument("--n", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--theta0", type=float)
    p.add_argument("--surrogate-c", type=float, dest="surrogate_c")
    p.add_argument("--surrogate-k", type=int, dest="surrogate_k")

    p = sub.add_parser("contraction", help="contraction-interval grid test")
    common(p)
    p.add_argument("--dim", type=_ints, dest="dims")
    p.add_argument("--n", type=int)
    p.add_argument("--beta", type=float)
    p.add_argument("--grid-points", type=int, dest="grid_points")

    p = sub.add_parser("perturbation", help="sample-vs-population deviation over balls")
    common(p)
    p.add_argument("--dim", type=_ints, dest="dims")
    p.add_argument("--n", type=int)
    p.add_argument("--operators", type=lambda s: tuple(s.split(",")))
    p.add_argument("--n-radii", type=int, dest="n_radii")
    p.add_argument("--grid-points", type=int, dest="grid_points")

    p = sub.add_parser("surface", help="population likelihood-surface exponents")
    common(p)
    p.add_argument("--theta-grid", type=_floats, dest="theta_grid")

    p = sub.add_parser("hellinger", help="squared-Hellinger exponent of the hard pair")
    common(p)
    p.add_argument("--theta-grid", type=_floats, dest="theta_grid")
    p.add_argument("--base-v2", type=float, dest="base_v2")

    p = sub.add_parser("recursion", help="localization exponent recursion")
    common(p)
    p.add_argument("--kind", choices=["multivariate_alpha", "univariate_a",
                                      "univariate_corollary"])
    p.add_argument("--steps", type=int)
    p.add_argument("--a0", type=float)

    p = sub.add_parser("moments", help="even-moment concentration exponent")
    common(p)
    p.add_argument("--ks", type=_ints)
    p.add_argument("--n-grid", type=_ints, dest="n_grid")
    return parser


SPEC_FIELDS = ("fit", "dims", "ns", "trials", "master_seed", "init_radius",
               "tol_theta", "max_iters", "out", "fmt", "workers")
OPTION_FIELDS = ("steps", "theta0", "surrogate_c", "surrogate_k", "beta", "grid_points",
                 "operators", "n_radii", "theta_grid", "base_v2", "kind", "a0", "ks",
                 "n_grid", "budget")


def spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    experiment = SUBCOMMANDS[args.command]
    payload = {"experiment": experiment, "options": {}}
    if getattr(args, "config", None):
        with open(args.config) as f:
            cfg = json.load(f)
        if "format" in cfg:
            cfg["fmt"] = cfg.pop("format")
        for k, v in cfg.items():
            if k == "options":
                payload["options"].update(v)
            elif k in SPEC_FIELDS or k == "experiment":
                payload[k] = tuple(v) if isinstance(v, list) else v
            elif k in OPTION_FIELDS:
                payload["options"][k] = tuple(v) if isinstance(v, list) else v
            else:
                raise ArgumentError(f"unknown config key {k!r}")
    for k in SPEC_FIELDS:
        v = getattr(args, k, None)
        if v is not None:
            payload[k] = v
    for k in OPTION_FIELDS:
        v = getattr(args, k, None)
        if v is not None:
            payload["options"][k] = v
    n = getattr(args, "n", None)
    if n is not None:
        payload["ns"] = (n,)
    if experiment != "rates" and "ns" not in payload:
        default_n = {"contraction_scan": 1_000_000, "population_decay": 1_000_000,
                     "perturbation_scan": 1000}.get(experiment, 10_000)
        payload["ns"] = (default_n,)
    trial_defaults = {"perturbation_scan": 100, "moment_concentration": 200}
    if experiment in trial_defaults and "trials" not in payload:
        payload["trials"] = trial_defaults[experiment]
    return ExperimentSpec(**payload)


def _window_violations(spec, fits_by_key, windows, label) -> list:
    out = []
    for key, fit in fits_by_key.items():
        window = windows.get(key)
        if window is None:
            continue
        if not (window[0] <= fit.slope <= window[1]):
            out.append(f"{label} slope for {key}: {fit.slope:.4f} outside {window}")
    return out


def run(spec: ExperimentSpec, check: bool) -> int:
    violations = []
    if spec.experiment == "rates":
        result = run_rate_experiment(spec)
        if spec.out:
            for path in emit_rates(result, spec.out, spec.fmt):
                print(f"wrote {path}")
        for d, fit in sorted(result.loc_fits.items()):
            print(f"loc slope d={d}: {fit.slope:.4f} (stderr {fit.stderr_slope:.4f})")
        for d, fit in sorted(result.scale_fits.items()):
            print(f"scale slope d={d}: {fit.slope:.4f}")
        if check:
            violations += _window_violations(
                spec, {(spec.fit, d): f for d, f in result.loc_fits.items()},
                RATE_WINDOWS, "loc")
            violations += _window_violations(
                spec, {(spec.fit, d): f for d, f in result.scale_fits.items()},
                SCALE_WINDOWS, "scale")
    elif spec.experiment == "population_decay":
        result = run_population_decay(spec)
        if spec.out:
            for path in emit_table(result.rows, DECAY_HEADER, {}, spec.out, spec.fmt,
                                   "population_decay"):
                print(f"wrote {path}")
        last = {d: [r for r in result.rows if r["d"] == d][-1] for d in spec.dims}
        for d, row in sorted(last.items()):
            print(f"d={d}: theta_norm after {row['t']} steps = {row['theta_norm']:.6g}")
    elif spec.experiment == "contraction_scan":
        result = run_contraction_scan(spec)
        if spec.out:
            header = ["operator", "d", "n", "norm_theta", "ratio", "lower", "upper",
                      "inside"]
            for path in emit_table(result.rows, header, {}, spec.out, spec.fmt,
                                   "contraction_scan"):
                print(f"wrote {path}")
        inside = sum(r["inside"] for r in result.rows)
        print(f"{inside}/{len(result.rows)} grid ratios inside their intervals")
        for e in result.empty_grids:
            print(f"empty grid for {e['operator']} d={e['d']}: "
                  f"[{e['lo']:.4g}, {e['hi']:.4g}]")
        if check and not result.all_inside:
            violations.append("contraction ratios left their intervals")
    elif spec.experiment == "perturbation_scan":
        result = run_perturbation_experiment(spec)
        if spec.out:
            for path in emit_table(result.rows, PERTURBATION_HEADER,
                                   result.fits, spec.out, spec.fmt, "perturbation_scan"):
                print(f"wrote {path}")
        for op, fit in result.fits.items():
            print(f"{op} exponent: {fit.slope:.4f}")
        if check:
            violations += _window_violations(spec, result.fits, PERTURBATION_WINDOWS,
                                             "perturbation")
    elif spec.experiment == "likelihood_surface":
        result = run_surface_experiment(spec)
        if spec.out:
            for path in emit_table(result.rows, ["mode", "theta", "gap"], result.fits,
                                   spec.out, spec.fmt, "likelihood_surface"):
                print(f"wrote {path}")
        for mode, fit in result.fits.items():
            print(f"{mode} exponent: {fit.slope:.4f}")
        if check:
            violations += _window_violations(spec, result.fits, SURFACE_WINDOWS,
                                             "surface")
    elif spec.experiment == "hellinger_exponent":
        result = run_hellinger_experiment(spec)
        if spec.out:
            for path in emit_table(result.rows, ["theta1", "sq_hellinger"], result.fits,
                                   spec.out, spec.fmt, "hellinger_exponent"):
                print(f"wrote {path}")
        fit = result.fits["sq_hellinger"]
        print(f"squared-Hellinger exponent: {fit.slope:.4f}")
        if check and not (HELLINGER_WINDOW[0] <= fit.slope <= HELLINGER_WINDOW[1]):
            violations.append(f"hellinger exponent {fit.slope:.4f} outside "
                              f"{HELLINGER_WINDOW}")
    elif spec.experiment == "recursion":
        result = run_recursion_experiment(spec)
        if spec.out:
            for path in emit_table(result.rows, ["kind", "step", "value"], result.fits,
                                   spec.out, spec.fmt, "recursion"):
                print(f"wrote {path}")
        fixed = result.fits["fixed_point"]
        final = result.rows[-1]["value"]
        print(f"fixed point {fixed} (final iterate {final})")
        if check and abs(final - fixed) > 1e-9:
            violations.append(f"recursion iterate {final} not within 1e-9 of {fixed}")
    elif spec.experiment == "moment_concentration":
        result = run_moments_experiment(spec)
        if spec.out:
            for path in emit_table(result.rows, ["k", "n", "mean_abs_dev"], result.fits,
                                   spec.out, spec.fmt, "moment_concentration"):
                print(f"wrote {path}")
        for k, fit in result.fits.items():
            print(f"k={k} exponent: {fit.slope:.4f}")
            if check and not (MOMENT_WINDOW[0] <= fit.slope <= MOMENT_WINDOW[1]):
                violations.append(f"moment exponent k={k}: {fit.slope:.4f} outside "
                                  f"{MOMENT_WINDOW}")
    if violations:
        for v in violations:
            print(f"ASSERT FAILED: {v}", file=sys.stderr)
        return 4
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        spec = spec_from_args(args)
        return run(spec, check=getattr(args, "check", False))
    except (ArgumentError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
