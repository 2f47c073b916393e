"""Seeded experiment runners with CSV/JSON emission.

Every trial's stream is keyed by (master_seed, experiment, fit, d, n, trial),
so a trial reproduces bit-identically whether run alone, in a sweep, serially,
or under a worker pool. Output rows are ordered by (d, n, trial) regardless of
completion order.

The rates experiment accepts a `budget` option for the iteration-cap regime:
"auto" keys on the dimension (the library default), "slow" forces the
n^(3/4) log n budget the weakly identifiable fits need in any dimension, and
"fast" forces sqrt(n/d) log n.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .em import StopRule, default_init, default_stop_rule, run_em
from .errors import ArgumentError, EmIterationError, NumericalError
from .model import RngSpec, sample_standard_normal
from .population import (
    corrected_pop_operator,
    hash_parts,
    perturbation_scan,
    pseudo_pop_operator,
    surrogate_sequence,
)
from .quadrature import DEFAULT_QUAD
from .stats import RateFit, hellinger_exponent_fit, likelihood_surface_scan, location_error, rate_fit
from .theory import RecursionKind, localization_recursion, moment_concentration_check

EXPERIMENTS = ("rates", "population_decay", "contraction_scan", "perturbation_scan",
               "likelihood_surface", "hellinger_exponent", "recursion",
               "moment_concentration")

DEFAULT_NS = tuple(2 ** k for k in range(10, 18))

RATES_HEADER = ["experiment", "fit", "d", "n", "trial", "loc_error", "scale_error",
                "iters", "clamped", "seed"]
AGGREGATE_HEADER = ["fit", "d", "n", "mean_loc_error", "stderr", "median_loc_error",
                    "mean_scale_error"]
DECAY_HEADER = ["d", "t", "theta_norm", "surrogate"]
PERTURBATION_HEADER = ["operator", "d", "n", "r", "mean_sup_dev", "stderr"]


@dataclass(frozen=True)
class TrialResult:
    """One EM trial's outcome; errors are NaN when the trial hard-failed."""

    experiment: str
    fit: str
    d: int
    n: int
    trial: int
    loc_error: float
    scale_error: float
    iters: int
    clamped: int
    seed: int
    wall_time: float

    def as_row(self) -> dict:
        return {k: getattr(self, k) for k in RATES_HEADER}


@dataclass(frozen=True)
class ExperimentSpec:
    experiment: str
    fit: str = "isotropic"
    dims: tuple = (1,)
    ns: tuple = DEFAULT_NS
    trials: int = 200
    master_seed: int = 2024
    init_radius: float = 0.1
    tol_theta: float = 1e-9
    max_iters: int | None = None  # per-(n, d) theory budget when None
    out: str | None = None
    fmt: str = "csv"
    workers: int | None = None
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ArgumentError(f"unknown experiment {self.experiment!r}")
        ns = tuple(int(n) for n in self.ns)
        if list(ns) != sorted(ns):
            raise ArgumentError("ns must be sorted ascending")
        object.__setattr__(self, "ns", ns)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if self.trials < 1:
            raise ArgumentError("trials must be >= 1")
        if self.fmt not in ("csv", "json"):
            raise ArgumentError(f"format must be csv or json, got {self.fmt!r}")


def worker_count(spec_workers: int | None) -> int:
    if spec_workers is not None:
        return max(1, spec_workers)
    env = os.environ.get("SINGULAR_EM_THREADS")
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


def trial_stream(master_seed: int, experiment: str, fit: str, d: int, n: int,
                 trial: int) -> RngSpec:
    return RngSpec(master_seed).derive(hash_parts(experiment, fit, d, n, trial))


def _scale_error(fit: str, params) -> float:
    """|sigma_hat^2 - 1| with the per-family reading of sigma_hat^2."""
    if fit == "isotropic":
        return abs(params.sigma2 - 1.0)
    if fit == "tied_diagonal":
        return abs(float(np.mean(params.diag_vars)) - 1.0)
    traces = np.einsum("kii->k", params.covariances) / params.d
    return abs(float(params.weights @ traces) - 1.0)


def _rate_trial(args) -> TrialResult:
    master_seed, fit, d, n, trial, init_radius, tol_theta, max_iters, budget = args
    stream = trial_stream(master_seed, "rates", fit, d, n, trial)
    t0 = time.perf_counter()
    loc, scale, iters, clamped = math.nan, math.nan, 0, 0
    try:
        data = sample_standard_normal(n, d, stream.derive(0))
        init = default_init(fit, data, init_radius, stream.derive(1))
        if max_iters:
            stop = StopRule(tol_theta=tol_theta, max_iters=max_iters)
        elif budget == "slow":
            stop = default_stop_rule(n, 1, tol_theta)   # the n^(3/4) log n budget
        elif budget == "fast":
            stop = default_stop_rule(n, max(d, 2), tol_theta)
        else:
            stop = default_stop_rule(n, d, tol_theta)
        traj = run_em(fit, init, data, stop, record_loglik=False, record_iterates=False)
        final = traj.final
        loc = location_error(fit, final)
        scale = _scale_error(fit, final)
        iters = traj.iterations
        clamped = int(traj.clamped)
    except EmIterationError:
        pass  # failure stays visible as NaN errors in the row
    return TrialResult(experiment="rates", fit=fit, d=d, n=n, trial=trial,
                       loc_error=loc, scale_error=scale, iters=iters,
                       clamped=clamped, seed=stream.stream_id,
                       wall_time=time.perf_counter() - t0)


@dataclass(frozen=True)
class RatesResult:
    spec: ExperimentSpec
    rows: list
    aggregates: list
    loc_fits: dict
    scale_fits: dict


def run_rate_experiment(spec: ExperimentSpec) -> RatesResult:
    """Independent EM trials per (d, n); aggregates and log-log fits per dimension."""
    if spec.experiment != "rates":
        raise ArgumentError("spec.experiment must be 'rates'")
    budget = spec.options.get("budget", "auto")
    if budget not in ("auto", "slow", "fast"):
        raise ArgumentError(f"budget must be auto, slow, or fast, got {budget!r}")
    tasks = [(spec.master_seed, spec.fit, d, n, t, spec.init_radius, spec.tol_theta,
              spec.max_iters, budget)
             for d in spec.dims for n in spec.ns for t in range(spec.trials)]
    nworkers = worker_count(spec.workers)
    if nworkers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=nworkers) as pool:
            results = list(pool.map(_rate_trial, tasks, chunksize=1))
    else:
        results = [_rate_trial(t) for t in tasks]
    results.sort(key=lambda t: (t.d, t.n, t.trial))
    rows = [{**t.as_row(), "wall_time": t.wall_time} for t in results]

    failed = sum(1 for r in rows if math.isnan(r["loc_error"]))
    if failed > 0.1 * len(rows):
        raise NumericalError(f"{failed}/{len(rows)} trials failed")

    aggregates = []
    loc_fits, scale_fits = {}, {}
    for d in spec.dims:
        means, smeans, ns_ok = [], [], []
        for n in spec.ns:
            loc = np.array([r["loc_error"] for r in rows
                            if r["d"] == d and r["n"] == n and not math.isnan(r["loc_error"])])
            sc = np.array([r["scale_error"] for r in rows
                           if r["d"] == d and r["n"] == n and not math.isnan(r["scale_error"])])
            if loc.size == 0:
                continue
            stderr = float(loc.std(ddof=1) / math.sqrt(loc.size)) if loc.size > 1 else 0.0
            aggregates.append({"fit": spec.fit, "d": d, "n": n,
                               "mean_loc_error": float(loc.mean()), "stderr": stderr,
                               "median_loc_error": float(np.median(loc)),
                               "mean_scale_error": float(sc.mean())})
            means.append(float(loc.mean()))
            smeans.append(float(sc.mean()))
            ns_ok.append(n)
        if len(ns_ok) >= 3:
            loc_fits[d] = rate_fit(ns_ok, means)
            if min(smeans) > 0:
                scale_fits[d] = rate_fit(ns_ok, smeans)
    return RatesResult(spec=spec, rows=rows, aggregates=aggregates,
                       loc_fits=loc_fits, scale_fits=scale_fits)


@dataclass(frozen=True)
class DecayResult:
    spec: ExperimentSpec
    rows: list


def run_population_decay(spec: ExperimentSpec) -> DecayResult:
    """Iterate a population operator from theta0, next to the scalar surrogate.

    The default pseudo operator keeps one fixed dataset's z_nd in its
    denominator; over t steps that scale offset compounds like
    exp(-t (z_nd - 1)), so the surrogate recursion tracks it only while
    t |z_nd - 1| stays small. Passing operator='corrected' anchors the scale
    at 1 and the tracking holds for arbitrarily long horizons.
    """
    if spec.experiment != "population_decay":
        raise ArgumentError("spec.experiment must be 'population_decay'")
    steps = int(spec.options.get("steps", 200))
    theta0 = float(spec.options.get("theta0", 0.5))
    operator = spec.options.get("operator", "pseudo")
    if operator not in ("pseudo", "corrected"):
        raise ArgumentError(f"operator must be 'pseudo' or 'corrected', got {operator!r}")
    n = spec.ns[-1]
    rows = []
    for d in spec.dims:
        stream = trial_stream(spec.master_seed, "population_decay", spec.fit, d, n, 0)
        data = sample_standard_normal(n, d, stream)
        c, k = (1.0, 6) if d == 1 else (0.5, 2)
        c = float(spec.options.get("surrogate_c", c))
        k = int(spec.options.get("surrogate_k", k))
        sur = surrogate_sequence(c, k, theta0, steps) if theta0 > 0 else np.zeros(steps + 1)
        theta = np.zeros(d)
        theta[0] = theta0
        norm = theta0
        rows.append({"d": d, "t": 0, "theta_norm": norm, "surrogate": float(sur[0])})
        for t in range(1, steps + 1):
            if norm > 0:
                if operator == "pseudo":
                    out = pseudo_pop_operator(theta, data.z_nd, d, DEFAULT_QUAD,
                                              strict_guard=False)
                else:
                    out = corrected_pop_operator(theta, d, DEFAULT_QUAD)
                theta = out.value
                norm = out.norm
            rows.append({"d": d, "t": t, "theta_norm": norm, "surrogate": float(sur[t])})
    return DecayResult(spec=spec, rows=rows)


@dataclass(frozen=True)
class ContractionResult:
    spec: ExperimentSpec
    rows: list
    all_inside: bool
    empty_grids: list


def run_contraction_scan(spec: ExperimentSpec) -> ContractionResult:
    """Grid-test the contraction intervals for both operators.

    Pseudo-operator grids follow the theorem intervals, whose lower endpoints
    exceed the upper ones at desk-scale n for d = 1; such grids are empty and
    reported as vacuous.
    """
    if spec.experiment != "contraction_scan":
        raise ArgumentError("spec.experiment must be 'contraction_scan'")
    n = spec.ns[-1]
    beta = float(spec.options.get("beta", 0.05))
    points = int(spec.options.get("grid_points", 20))
    rows, empty = [], []
    for d in spec.dims:
        stream = trial_stream(spec.master_seed, "contraction_scan", spec.fit, d, n, 0)
        data = sample_standard_normal(n, d, stream)
        if d >= 2:
            lo, hi = 5.0 * (d / n) ** (0.25 + beta), 0.125
        else:
            lo, hi = 3.0 * n ** (-1.0 / 12.0 + beta), 0.1
        if lo > hi:
            empty.append({"operator": "pseudo", "d": d, "lo": lo, "hi": hi})
            grid = []
        else:
            grid = np.geomspace(lo, hi, points)
        for t in grid:
            theta = np.zeros(d)
            theta[0] = t
            ratio = pseudo_pop_operator(theta, data.z_nd, d, DEFAULT_QUAD).norm / t
            if d >= 2:
                lower, upper = 1.0 - 0.75 * t * t, 1.0 - (1.0 - 1.0 / d) * t * t / 4.0
            else:
                lower, upper = 1.0 - 1.5 * t ** 6, 1.0 - 0.2 * t ** 6
            rows.append({"operator": "pseudo", "d": d, "n": n, "norm_theta": float(t),
                         "ratio": ratio, "lower": lower, "upper": upper,
                         "inside": int(lower <= ratio <= upper)})
    for t in np.geomspace(0.02, 0.15, points):
        ratio = corrected_pop_operator(np.array([t]), 1, DEFAULT_QUAD).norm / t
        lower, upper = 1.0 - 0.5 * t ** 6, 1.0 - 0.2 * t ** 6
        rows.append({"operator": "corrected", "d": 1, "n": 0, "norm_theta": float(t),
                     "ratio": ratio, "lower": lower, "upper": upper,
                     "inside": int(lower <= ratio <= upper)})
    all_inside = all(r["inside"] for r in rows)
    return ContractionResult(spec=spec, rows=rows, all_inside=all_inside,
                             empty_grids=empty)


@dataclass(frozen=True)
class PerturbationResult:
    spec: ExperimentSpec
    rows: list
    fits: dict  # operator -> RateFit


def run_perturbation_experiment(spec: ExperimentSpec) -> PerturbationResult:
    if spec.experiment != "perturbation_scan":
        raise ArgumentError("spec.experiment must be 'perturbation_scan'")
    n = spec.ns[-1]
    d = spec.dims[0]
    operators = spec.options.get("operators", ("pseudo", "corrected"))
    n_radii = int(spec.options.get("n_radii", 12))
    grid_points = int(spec.options.get("grid_points", 64))
    rows, fits = [], {}
    for op in operators:
        if op == "pseudo":
            radii = spec.options.get("radii_pseudo") or np.geomspace(0.02, 0.3, n_radii)
        else:
            hi = 2.0 * n ** (-1.0 / 16.0)
            radii = spec.options.get("radii_corrected") or np.geomspace(0.02, hi, n_radii)
        table = perturbation_scan(op, radii, n, d, spec.trials,
                                  RngSpec(spec.master_seed).derive(hash_parts(
                                      "perturbation_scan", op)),
                                  grid_points=grid_points)
        for r, m, s in zip(table.radii, table.mean_sup_dev, table.stderr):
            rows.append({"operator": op, "d": d, "n": n, "r": float(r),
                         "mean_sup_dev": float(m), "stderr": float(s)})
        fits[op] = rate_fit(table.radii, table.mean_sup_dev)
    return PerturbationResult(spec=spec, rows=rows, fits=fits)


@dataclass(frozen=True)
class TableResult:
    spec: ExperimentSpec
    rows: list
    fits: dict


def run_surface_experiment(spec: ExperimentSpec) -> TableResult:
    grid = spec.options.get("theta_grid") or np.geomspace(0.05, 0.3, 9)
    rows, fits = [], {}
    for mode in ("location_only", "location_scale_coupled"):
        scan = likelihood_surface_scan(mode, grid)
        fits[mode] = scan.fit
        rows.extend({"mode": mode, "theta": float(t), "gap": float(g)}
                    for t, g in zip(scan.theta, scan.gap))
    return TableResult(spec=spec, rows=rows, fits=fits)


def run_hellinger_experiment(spec: ExperimentSpec) -> TableResult:
    from .stats import minimax_pair, squared_hellinger

    grid = spec.options.get("theta_grid") or np.geomspace(0.02, 0.1, 7)
    base_v2 = float(spec.options.get("base_v2", 1.0))
    rows = []
    h2s = []
    for t in grid:
        pair = minimax_pair(float(t), base_v2)
        h2 = squared_hellinger(pair.eta1, pair.eta2)
        h2s.append(h2)
        rows.append({"theta1": float(t), "sq_hellinger": h2})
    fits = {"sq_hellinger": rate_fit(grid, h2s)}
    return TableResult(spec=spec, rows=rows, fits=fits)


def run_recursion_experiment(spec: ExperimentSpec) -> TableResult:
    kind = RecursionKind.from_label(spec.options.get("kind", "multivariate_alpha"))
    steps = int(spec.options.get("steps", 200))
    a0 = spec.options.get("a0", kind.offset)  # any start converges; offset is a neutral default
    res = localization_recursion(kind, a0, steps)
    rows = [{"kind": kind.label, "step": i, "value": float(v)}
            for i, v in enumerate(res.sequence)]
    fits = {"fixed_point": float(res.fixed_point)}
    return TableResult(spec=spec, rows=rows, fits=fits)


def run_moments_experiment(spec: ExperimentSpec) -> TableResult:
    ks = spec.options.get("ks", (2, 3))
    n_grid = spec.options.get("n_grid") or (1000, 3162, 10000, 31623, 100000)
    rows, fits = [], {}
    for k in ks:
        table = moment_concentration_check(
            int(k), n_grid, spec.trials,
            RngSpec(spec.master_seed).derive(hash_parts("moment_concentration", int(k))))
        fits[int(k)] = table.fit
        rows.extend({"k": int(k), "n": n, "mean_abs_dev": float(m)}
                    for n, m in zip(table.ns, table.mean_abs_dev))
    return TableResult(spec=spec, rows=rows, fits=fits)


# ---------------------------------------------------------------------------
# emission

def format_value(v) -> str:
    """Floats as shortest round-trip strings; everything else as str."""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: str, header: list, rows: list) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(row[k]) for k in header])


def fit_to_dict(fit: RateFit) -> dict:
    return {"slope": fit.slope, "intercept": fit.intercept,
            "stderr_slope": fit.stderr_slope, "r_squared": fit.r_squared}


def _sidecar(path: str, suffix: str) -> str:
    stem, ext = os.path.splitext(path)
    return f"{stem}_{suffix}{ext or '.csv'}"


def emit_rates(result: RatesResult, out: str, fmt: str) -> list[str]:
    """Trial rows to `out`; aggregates and fits to sidecar files (CSV mode)."""
    written = []
    if fmt == "json":
        payload = {
            "experiment": "rates",
            "rows": [{k: r[k] for k in RATES_HEADER} for r in result.rows],
            "aggregates": result.aggregates,
            "loc_fits": {str(d): fit_to_dict(f) for d, f in result.loc_fits.items()},
            "scale_fits": {str(d): fit_to_dict(f) for d, f in result.scale_fits.items()},
        }
        with open(out, "w") as f:
            json.dump(payload, f, indent=1)
        return [out]
    write_csv(out, RATES_HEADER, result.rows)
    written.append(out)
    agg_path = _sidecar(out, "aggregates")
    write_csv(agg_path, AGGREGATE_HEADER, result.aggregates)
    written.append(agg_path)
    fits_path = os.path.splitext(out)[0] + "_fits.json"
    with open(fits_path, "w") as f:
        json.dump({"loc_fits": {str(d): fit_to_dict(x) for d, x in result.loc_fits.items()},
                   "scale_fits": {str(d): fit_to_dict(x) for d, x in result.scale_fits.items()}},
                  f, indent=1)
    written.append(fits_path)
    return written


def emit_table(rows: list, header: list, fits: dict, out: str, fmt: str,
               experiment: str) -> list[str]:
    if fmt == "json":
        payload = {"experiment": experiment, "rows": rows,
                   "fits": {str(k): (fit_to_dict(v) if isinstance(v, RateFit) else v)
                            for k, v in fits.items()}}
        with open(out, "w") as f:
            json.dump(payload, f, indent=1)
        return [out]
    write_csv(out, header, rows)
    written = [out]
    if fits:
        fits_path = os.path.splitext(out)[0] + "_fits.json"
        with open(fits_path, "w") as f:
            json.dump({str(k): (fit_to_dict(v) if isinstance(v, RateFit) else v)
                       for k, v in fits.items()}, f, indent=1)
        written.append(fits_path)
    return written
