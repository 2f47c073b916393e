"""E-step objective, closed-form M-steps for the three fits, and the iteration driver.

The isotropic location update is the tanh form with the scale slaved to
sigma^2 = z_nd - ||theta||^2 / d, so a trajectory that starts from a slaved
initialization is exactly the classical EM sequence for the pair (theta, sigma).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from ._faststep import SeriesStepper
from .errors import ArgumentError, ComponentCollapseError, DomainError, EmIterationError
from .model import (
    SIGMA2_FLOOR,
    DataSet,
    FreeCovParams,
    IsoParams,
    MixtureParams,
    RngSpec,
    TiedDiagParams,
    sample_log_likelihood,
)

FIT_FAMILIES = ("isotropic", "tied_diagonal", "free")


@dataclass(frozen=True)
class StopRule:
    """Stop when the location step is below tol_theta or at max_iters."""

    tol_theta: float = 1e-9
    max_iters: int = 1000

    def __post_init__(self):
        if not self.tol_theta > 0:
            raise ArgumentError(f"tol_theta must be positive, got {self.tol_theta}")
        if self.max_iters < 1:
            raise ArgumentError(f"max_iters must be >= 1, got {self.max_iters}")


def default_stop_rule(n: int, d: int, tol_theta: float = 1e-9) -> StopRule:
    """Iteration budget matching the slow-regime theory, with slack.

    d = 1 needs ~ n^(3/4) steps, d >= 2 needs ~ sqrt(n/d); both get a factor
    20 log n on top.
    """
    if d >= 2:
        cap = math.ceil(20.0 * math.sqrt(n / d) * math.log(max(n, 2)))
    else:
        cap = math.ceil(20.0 * n ** 0.75 * math.log(max(n, 2)))
    return StopRule(tol_theta=tol_theta, max_iters=cap)


@dataclass(frozen=True)
class EmTrajectory:
    iterates: tuple
    loglik: np.ndarray | None
    step_norms: np.ndarray
    stopped_reason: str
    clamped: bool

    @property
    def iterations(self) -> int:
        return len(self.step_norms)

    @property
    def final(self):
        return self.iterates[-1]


def location(params: MixtureParams) -> np.ndarray:
    """The location iterate used for step norms: theta, or stacked means."""
    if isinstance(params, (IsoParams, TiedDiagParams)):
        return params.theta
    return params.means.ravel()


def q_function(candidate: IsoParams, current: IsoParams, data: DataSet) -> float:
    """The E-step objective: expected complete-data log-density under current weights."""
    X = data.samples
    n, d = X.shape
    w = expit(2.0 * (X @ current.theta) / current.sigma2)
    s2 = candidate.sigma2
    th = candidate.theta
    base = -0.5 * d * math.log(2.0 * math.pi * s2)
    sq_plus = data.sq_norms - 2.0 * (X @ th) + th @ th   # ||x - theta||^2
    sq_minus = data.sq_norms + 2.0 * (X @ th) + th @ th  # ||x + theta||^2
    vals = w * (base - sq_plus / (2.0 * s2)) + (1.0 - w) * (base - sq_minus / (2.0 * s2))
    return float(np.mean(vals))


def _isotropic_denominator(theta: np.ndarray, z_nd: float, d: int) -> float:
    den = z_nd - float(theta @ theta) / d
    if den <= 0.0:
        raise DomainError(
            f"tanh denominator {den} <= 0: need ||theta||^2/d < z_nd "
            f"(got {float(theta @ theta) / d} vs {z_nd})")
    return den


def _em_step_isotropic_raw(theta: np.ndarray, data: DataSet) -> tuple[np.ndarray, float, bool]:
    """One location/scale update; returns (theta', sigma'^2, clamped)."""
    X = data.samples
    n, d = X.shape
    den = _isotropic_denominator(theta, data.z_nd, d)
    t = np.tanh(X @ (theta / den))
    theta_new = (t @ X) / n
    sigma2_new = data.z_nd - float(theta_new @ theta_new) / d
    clamped = sigma2_new <= 0.0
    if clamped:
        sigma2_new = SIGMA2_FLOOR
    return theta_new, sigma2_new, clamped


def em_step_isotropic(current: IsoParams, data: DataSet) -> IsoParams:
    theta_new, sigma2_new, _ = _em_step_isotropic_raw(current.theta, data)
    return IsoParams(theta=theta_new, sigma2=sigma2_new)


def _em_step_tied_raw(theta: np.ndarray, diag_vars: np.ndarray,
                      data: DataSet) -> tuple[np.ndarray, np.ndarray, bool]:
    if np.any(diag_vars <= 0.0):
        raise DomainError("tied-diagonal variances must stay positive")
    X = data.samples
    n = X.shape[0]
    w = expit(2.0 * (X @ (theta / diag_vars)))
    theta_new = ((2.0 * w - 1.0) @ X) / n
    second_moments = np.mean(X * X, axis=0)
    v_new = second_moments - theta_new ** 2
    clamped = bool(np.any(v_new <= 0.0))
    v_new = np.maximum(v_new, SIGMA2_FLOOR)
    return theta_new, v_new, clamped


def em_step_tied_diagonal(current: TiedDiagParams, data: DataSet) -> TiedDiagParams:
    theta_new, v_new, _ = _em_step_tied_raw(current.theta, current.diag_vars, data)
    return TiedDiagParams(theta=theta_new, diag_vars=v_new)


def _em_step_free_raw(params: FreeCovParams, data: DataSet) -> tuple[FreeCovParams, bool]:
    from .model import _free_component_log_pdfs

    X = data.samples
    n, d = X.shape
    lp = _free_component_log_pdfs(params, X)
    lp += np.log(np.maximum(params.weights, 1e-300))
    norm = np.logaddexp(lp[:, 0], lp[:, 1])
    resp = np.exp(lp - norm[:, None])  # rows sum to 1
    col = resp.sum(axis=0)
    if np.any(col <= n * 1e-12):
        raise ComponentCollapseError(
            f"a component lost its responsibility mass (column sums {col})")
    weights_new = col / n
    means_new = (resp.T @ X) / col[:, None]
    covs_new = np.empty((2, d, d))
    clamped = False
    for k in range(2):
        diff = X - means_new[k]
        cov = (diff * resp[:, k:k + 1]).T @ diff / col[k]
        vals, vecs = np.linalg.eigh(cov)
        if vals.min() < SIGMA2_FLOOR:
            clamped = True
            vals = np.maximum(vals, SIGMA2_FLOOR)
            cov = (vecs * vals) @ vecs.T
        covs_new[k] = 0.5 * (cov + cov.T)
    out = FreeCovParams(weights=weights_new, means=means_new, covariances=covs_new)
    return out, clamped


def em_step_free(current: FreeCovParams, data: DataSet) -> FreeCovParams:
    out, _ = _em_step_free_raw(current, data)
    return out


def _family_of(params: MixtureParams) -> str:
    if isinstance(params, IsoParams):
        return "isotropic"
    if isinstance(params, TiedDiagParams):
        return "tied_diagonal"
    return "free"


def run_em(family: str, init: MixtureParams, data: DataSet, stop: StopRule,
           record_loglik: bool = True, record_iterates: bool = True) -> EmTrajectory:
    """Iterate the family's step from init until the location step stabilizes.

    Step errors are re-raised as EmIterationError carrying the iteration index.
    Symmetric-fit location updates go through a per-dataset evaluator that may
    use a moment-series form of the same map (agreement with the direct pass
    is at double-precision level), which keeps multi-million-step slow
    trajectories affordable.
    """
    if family not in FIT_FAMILIES:
        raise ArgumentError(f"unknown fit family {family!r}; expected one of {FIT_FAMILIES}")
    if _family_of(init) != family:
        raise ArgumentError(f"init of type {type(init).__name__} does not match family {family!r}")
    if data.d != init.d:
        raise ArgumentError(f"dimension mismatch: data d={data.d}, init d={init.d}")

    d = data.d
    z = data.z_nd
    stepper = SeriesStepper(data.samples) if family in ("isotropic", "tied_diagonal") else None
    m2 = np.mean(data.samples ** 2, axis=0) if family == "tied_diagonal" else None

    current = init
    iterates = [init]
    step_norms = []
    logliks = [sample_log_likelihood(init, data)] if record_loglik else None
    clamped_any = False
    reason = "max_iters"

    # raw state avoids per-step parameter-object construction on long runs
    if family == "isotropic":
        theta, s2 = np.array(init.theta), init.sigma2
    elif family == "tied_diagonal":
        theta, dvars = np.array(init.theta), np.array(init.diag_vars)

    for t in range(stop.max_iters):
        try:
            if family == "isotropic":
                den = z - float(theta @ theta) / d
                if den <= 0.0:
                    raise DomainError(
                        f"tanh denominator {den} <= 0: need ||theta||^2/d < z_nd")
                theta_new = stepper.location_update(theta / den)
                s2_new = z - float(theta_new @ theta_new) / d
                clamped = s2_new <= 0.0
                if clamped:
                    s2_new = SIGMA2_FLOOR
                diff = theta_new - theta
                step = math.sqrt(float(diff @ diff))
                theta, s2 = theta_new, s2_new
                new = IsoParams(theta=theta, sigma2=s2) \
                    if (record_iterates or record_loglik) else None
            elif family == "tied_diagonal":
                if np.any(dvars <= 0.0):
                    raise DomainError("tied-diagonal variances must stay positive")
                theta_new = stepper.location_update(theta / dvars)
                v_new = m2 - theta_new ** 2
                clamped = bool(np.any(v_new <= 0.0))
                v_new = np.maximum(v_new, SIGMA2_FLOOR)
                diff = theta_new - theta
                step = math.sqrt(float(diff @ diff))
                theta, dvars = theta_new, v_new
                new = TiedDiagParams(theta=theta, diag_vars=dvars) \
                    if (record_iterates or record_loglik) else None
            else:
                new, clamped = _em_step_free_raw(current, data)
                step = float(np.linalg.norm(location(new) - location(current)))
                current = new
        except (DomainError, ComponentCollapseError, ArgumentError) as exc:
            raise EmIterationError(t, exc) from exc
        clamped_any = clamped_any or clamped
        step_norms.append(step)
        if record_iterates and new is not None:
            iterates.append(new)
        if record_loglik and new is not None:
            logliks.append(sample_log_likelihood(new, data))
        if step <= stop.tol_theta:
            reason = "converged"
            break

    if family == "isotropic":
        final = IsoParams(theta=theta, sigma2=s2)
    elif family == "tied_diagonal":
        final = TiedDiagParams(theta=theta, diag_vars=dvars)
    else:
        final = current
    if not record_iterates:
        iterates = [init, final]
    return EmTrajectory(
        iterates=tuple(iterates),
        loglik=None if logliks is None else np.asarray(logliks),
        step_norms=np.asarray(step_norms),
        stopped_reason=reason,
        clamped=clamped_any,
    )


def default_init(family: str, data: DataSet, radius: float, rng: RngSpec) -> MixtureParams:
    """Random direction of the given norm; scale parameters slaved to the data.

    Used by every experiment so theorem-style initial conditions hold without
    per-n tuning.
    """
    if radius <= 0:
        raise ArgumentError(f"radius must be positive, got {radius}")
    d = data.d
    gen = rng.generator()
    u = gen.standard_normal(d)
    u /= np.linalg.norm(u)
    theta0 = radius * u
    if family == "isotropic":
        sigma2 = data.z_nd - radius ** 2 / d
        if sigma2 < SIGMA2_FLOOR:
            sigma2 = SIGMA2_FLOOR
        return IsoParams(theta=theta0, sigma2=sigma2)
    if family == "tied_diagonal":
        v0 = np.maximum(np.mean(data.samples ** 2, axis=0) - theta0 ** 2, SIGMA2_FLOOR)
        return TiedDiagParams(theta=theta0, diag_vars=v0)
    if family == "free":
        sigma2 = max(data.z_nd - radius ** 2 / d, SIGMA2_FLOOR)
        covs = np.stack([np.eye(d) * sigma2, np.eye(d) * sigma2])
        return FreeCovParams(weights=np.array([0.5, 0.5]),
                             means=np.stack([theta0, -theta0]),
                             covariances=covs)
    raise ArgumentError(f"unknown fit family {family!r}")
