"""Population-level EM operators, contraction ratios, and perturbation scans.

Every d-dimensional expectation reduces to one dimension: rotate theta onto
the first axis and only the first Gaussian coordinate survives, so a single
Gauss-Hermite pass evaluates the operator for any d. A Monte-Carlo evaluator
of the unreduced d-dimensional expectation is kept alongside as a cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ArgumentError, DomainError
from .model import DataSet, RngSpec, sample_standard_normal
from .quadrature import DEFAULT_QUAD, QuadratureSpec, gauss_hermite_rule

DOMAIN_GUARD = 0.9  # evaluation requires ||theta||^2/d <= DOMAIN_GUARD * z_nd


@dataclass(frozen=True)
class OperatorEval:
    """Operator value with the evaluation method and an estimated numerical error."""

    value: np.ndarray
    method: str
    num_error: float

    def __post_init__(self):
        if not np.isfinite(self.num_error):
            raise ArgumentError("num_error must be finite")

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.value))


def _radial_value(t: float, denominator: float, quad: QuadratureSpec) -> tuple[float, float]:
    """E[V tanh(t V / denominator)] for scalar t > 0, with a doubling error estimate."""
    x, w = gauss_hermite_rule(quad.nodes)
    arg = t / denominator
    v1 = float(np.dot(w, x * np.tanh(x * arg)))
    x2, w2 = gauss_hermite_rule(2 * quad.nodes + 1)
    v2 = float(np.dot(w2, x2 * np.tanh(x2 * arg)))
    return v2, abs(v1 - v2)


def pseudo_pop_operator(theta, z_nd: float, d: int, quad: QuadratureSpec = DEFAULT_QUAD,
                        strict_guard: bool = True) -> OperatorEval:
    """Expectation over a fresh Gaussian with the empirical z_nd in the denominator.

    strict_guard enforces the conservative ||theta||^2/d <= 0.9 z_nd margin used
    by scans; pass False to allow evaluation right up to the singularity, as the
    one-step bound check requires.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    if z_nd <= 0:
        raise ArgumentError(f"z_nd must be positive, got {z_nd}")
    t = float(np.linalg.norm(theta))
    if t == 0.0:
        return OperatorEval(value=np.zeros_like(theta), method="quadrature", num_error=0.0)
    ratio = t * t / d
    if ratio >= z_nd or (strict_guard and ratio > DOMAIN_GUARD * z_nd):
        raise DomainError(
            f"||theta||^2/d = {ratio} outside the operator domain (z_nd = {z_nd})")
    rho, err = _radial_value(t, z_nd - ratio, quad)
    return OperatorEval(value=rho * theta / t, method="quadrature", num_error=err)


def corrected_pop_operator(theta, d: int,
                           quad: QuadratureSpec = DEFAULT_QUAD) -> OperatorEval:
    """Same reduction with the empirical z_nd replaced by its mean, 1."""
    theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    t = float(np.linalg.norm(theta))
    if t == 0.0:
        return OperatorEval(value=np.zeros_like(theta), method="quadrature", num_error=0.0)
    if t >= 1.0:
        raise DomainError(f"corrected operator needs ||theta|| < 1, got {t}")
    rho, err = _radial_value(t, 1.0 - t * t, quad)
    return OperatorEval(value=rho * theta / t, method="quadrature", num_error=err)


def pseudo_pop_operator_mc(theta, z_nd: float, d: int, n_draws: int = 1_000_000,
                           rng: RngSpec = RngSpec(0)) -> OperatorEval:
    """Monte-Carlo evaluation of the unreduced d-dimensional expectation.

    num_error is the standard error of the component along theta, which
    carries the entire signal.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    t = float(np.linalg.norm(theta))
    if t == 0.0:
        return OperatorEval(value=np.zeros_like(theta), method="monte_carlo", num_error=0.0)
    ratio = t * t / d
    if ratio >= z_nd:
        raise DomainError(f"||theta||^2/d = {ratio} >= z_nd = {z_nd}")
    gen = rng.generator()
    den = z_nd - ratio
    total = np.zeros(theta.shape[0])
    proj_sum = 0.0
    proj_sq = 0.0
    unit = theta / t
    done = 0
    chunk = min(n_draws, 1 << 18)
    while done < n_draws:
        m = min(chunk, n_draws - done)
        Y = gen.standard_normal((m, theta.shape[0]))
        w = np.tanh((Y @ theta) / den)
        total += w @ Y
        proj = (Y @ unit) * w
        proj_sum += float(proj.sum())
        proj_sq += float(proj @ proj)
        done += m
    mean_vec = total / n_draws
    proj_mean = proj_sum / n_draws
    proj_var = max(proj_sq / n_draws - proj_mean ** 2, 0.0)
    se = float(np.sqrt(proj_var / n_draws))
    return OperatorEval(value=mean_vec, method="monte_carlo", num_error=se)


def sample_em_location(theta, data: DataSet) -> np.ndarray:
    """The one-step sample location update M_{n,d}(theta)."""
    theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    X = data.samples
    n, d = X.shape
    den = data.z_nd - float(theta @ theta) / d
    if den <= 0:
        raise DomainError(f"sample operator needs ||theta||^2/d < z_nd, got denominator {den}")
    w = np.tanh(X @ (theta / den))
    return (w @ X) / n


def contraction_ratio(operator: Callable[[np.ndarray], OperatorEval], theta) -> float:
    """||M(theta)|| / ||theta|| for an operator handle returning OperatorEval."""
    theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    t = float(np.linalg.norm(theta))
    if t == 0.0:
        raise ArgumentError("contraction ratio is undefined at theta = 0")
    return operator(theta).norm / t


def surrogate_sequence(c: float, k: int, theta0: float, steps: int) -> np.ndarray:
    """The scalar recursion theta <- theta / (1 + c * theta^k), including theta0."""
    if theta0 < 0:
        raise ArgumentError(f"theta0 must be nonnegative, got {theta0}")
    if steps < 1:
        raise ArgumentError(f"steps must be >= 1, got {steps}")
    out = np.empty(steps + 1)
    out[0] = theta0
    t = theta0
    for i in range(1, steps + 1):
        t = t / (1.0 + c * t ** k)
        out[i] = t
    return out


@dataclass(frozen=True)
class PerturbationTable:
    """Per-radius mean sup-deviations across trials, with standard errors."""

    operator: str
    n: int
    d: int
    radii: np.ndarray
    mean_sup_dev: np.ndarray
    stderr: np.ndarray
    per_trial: np.ndarray  # (trials, radii)
    skipped: int


def _sup_grid(r: float, grid_points: int) -> np.ndarray:
    """Log-spaced norms in (0, r]; the deviation profile is near-monotone in the norm."""
    return np.geomspace(r * 1e-3, r, grid_points)


def perturbation_scan(operator_kind: str, radii: Sequence[float], n: int, d: int,
                      trials: int, rng: RngSpec, grid_points: int = 64,
                      directions: int = 8,
                      quad: QuadratureSpec = DEFAULT_QUAD) -> PerturbationTable:
    """Mean sup-norm deviation between the sample operator and a population operator.

    For each trial a fresh DataSet is drawn; the sup over the ball of radius r
    is approximated on a log-spaced grid of norms (times random directions for
    d >= 2). Grid points outside an operator's domain are skipped and counted.
    """
    if operator_kind not in ("pseudo", "corrected"):
        raise ArgumentError(f"operator_kind must be 'pseudo' or 'corrected', got {operator_kind!r}")
    radii = np.asarray(list(radii), dtype=np.float64)
    if np.any(radii <= 0):
        raise ArgumentError("radii must be positive")
    if grid_points < 8:
        raise ArgumentError(f"grid_points must be >= 8, got {grid_points}")

    qx, qw = gauss_hermite_rule(quad.nodes)
    per_trial = np.zeros((trials, radii.size))
    skipped = 0

    for trial in range(trials):
        data = sample_standard_normal(n, d, rng.derive(hash_parts(operator_kind, d, n, trial)))
        X, z = data.samples, data.z_nd
        dir_gen = rng.derive(hash_parts(operator_kind, d, n, trial, 1)).generator()
        for j, r in enumerate(radii):
            norms = _sup_grid(r, grid_points)
            if d == 1:
                thetas = norms[:, None]
            else:
                U = dir_gen.standard_normal((directions, d))
                U /= np.linalg.norm(U, axis=1, keepdims=True)
                thetas = (norms[:, None, None] * U[None, :, :]).reshape(-1, d)
            t2 = np.einsum("ij,ij->i", thetas, thetas)
            den_samp = z - t2 / d                  # the sample operator's scale
            if operator_kind == "pseudo":
                den_pop = den_samp
                ok = t2 / d <= DOMAIN_GUARD * z
            else:
                den_pop = 1.0 - t2
                ok = (t2 < 1.0) & (t2 / d <= DOMAIN_GUARD * z)
            skipped += int(np.sum(~ok))
            if not np.any(ok):
                per_trial[trial, j] = np.nan
                continue
            th_ok = thetas[ok]
            scaled = th_ok / den_samp[ok, None]
            samp = (np.tanh(X @ scaled.T).T @ X) / n           # (m, d)
            tn = np.sqrt(t2[ok])
            rho = qw @ (qx[:, None] * np.tanh(np.outer(qx, tn / den_pop[ok])))
            pop = th_ok * (rho / tn)[:, None]
            dev = np.linalg.norm(samp - pop, axis=1)
            per_trial[trial, j] = float(dev.max())

    mean = np.nanmean(per_trial, axis=0)
    counts = np.sum(~np.isnan(per_trial), axis=0)
    if trials > 1:
        std = np.nanstd(per_trial, axis=0, ddof=1)
        stderr = std / np.sqrt(np.maximum(counts, 1))
    else:
        stderr = np.zeros(radii.size)
    return PerturbationTable(operator=operator_kind, n=n, d=d, radii=radii,
                             mean_sup_dev=mean, stderr=stderr, per_trial=per_trial,
                             skipped=skipped)


def hash_parts(*parts) -> int:
    """Stable 63-bit mix of labels and integers for stream derivation."""
    acc = 0x243F6A8885A308D3
    for p in parts:
        if isinstance(p, str):
            data = p.encode()
            for b in data:
                acc = ((acc ^ b) * 0x100000001B3) & ((1 << 64) - 1)
        else:
            acc = ((acc ^ (int(p) & ((1 << 64) - 1))) * 0x100000001B3) & ((1 << 64) - 1)
    return acc & ((1 << 63) - 1)
