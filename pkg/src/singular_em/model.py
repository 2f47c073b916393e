"""Mixture families, data generation, and log-likelihood objectives.

The symmetric two-component fit places components at +/- theta with a shared
isotropic variance; data always comes from a standard normal, so the true
parameters are theta* = 0, sigma*^2 = 1. Tied-diagonal and free-covariance
variants widen the fitted family without changing the data-generating model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import ArgumentError
from .quadrature import DEFAULT_QUAD, QuadratureSpec, gauss_expect

SIGMA2_FLOOR = 1e-8
SIGMA2_CAP = 100.0
THETA_BOX = 10.0

LOG_2PI = math.log(2.0 * math.pi)


def _as_readonly_vector(v, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(v, dtype=np.float64)).copy()
    if arr.ndim != 1:
        raise ArgumentError(f"{name} must be a vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ArgumentError(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class IsoParams:
    """Location theta in R^d and a shared isotropic variance sigma2."""

    theta: np.ndarray
    sigma2: float

    def __post_init__(self):
        object.__setattr__(self, "theta", _as_readonly_vector(self.theta, "theta"))
        if np.any(np.abs(self.theta) > THETA_BOX):
            raise ArgumentError(f"theta outside the parameter box [-{THETA_BOX}, {THETA_BOX}]^d")
        if not (SIGMA2_FLOOR <= self.sigma2 <= SIGMA2_CAP):
            raise ArgumentError(
                f"sigma2 must lie in [{SIGMA2_FLOOR}, {SIGMA2_CAP}], got {self.sigma2}")

    @property
    def d(self) -> int:
        return self.theta.shape[0]


@dataclass(frozen=True)
class TiedDiagParams:
    """Location theta with one variance per coordinate, shared by both components."""

    theta: np.ndarray
    diag_vars: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "theta", _as_readonly_vector(self.theta, "theta"))
        object.__setattr__(self, "diag_vars", _as_readonly_vector(self.diag_vars, "diag_vars"))
        if self.theta.shape != self.diag_vars.shape:
            raise ArgumentError("theta and diag_vars must have matching length")
        if np.any(self.diag_vars < SIGMA2_FLOOR):
            raise ArgumentError(f"all diag_vars must be >= {SIGMA2_FLOOR}")

    @property
    def d(self) -> int:
        return self.theta.shape[0]


@dataclass(frozen=True)
class FreeCovParams:
    """Two-component mixture with free weights, means, and full covariances."""

    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64).copy()
        mu = np.asarray(self.means, dtype=np.float64).copy()
        cov = np.asarray(self.covariances, dtype=np.float64).copy()
        if w.shape != (2,):
            raise ArgumentError(f"weights must have shape (2,), got {w.shape}")
        if abs(w.sum() - 1.0) > 1e-12 or np.any(w < 0):
            raise ArgumentError("weights must be nonnegative and sum to 1 within 1e-12")
        if mu.ndim != 2 or mu.shape[0] != 2:
            raise ArgumentError(f"means must have shape (2, d), got {mu.shape}")
        d = mu.shape[1]
        if cov.shape != (2, d, d):
            raise ArgumentError(f"covariances must have shape (2, {d}, {d}), got {cov.shape}")
        for k in range(2):
            if not np.allclose(cov[k], cov[k].T, atol=1e-10):
                raise ArgumentError(f"covariance {k} is not symmetric")
            eigvals = np.linalg.eigvalsh(cov[k])
            if eigvals.min() < SIGMA2_FLOOR * (1.0 - 1e-9):
                raise ArgumentError(
                    f"covariance {k} has eigenvalue {eigvals.min()} below the floor")
        for arr in (w, mu, cov):
            arr.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "covariances", cov)

    @property
    def d(self) -> int:
        return self.means.shape[1]


MixtureParams = IsoParams | TiedDiagParams | FreeCovParams


@dataclass(frozen=True)
class DataSet:
    """An n x d sample matrix with cached squared norms and their d-normalized mean."""

    samples: np.ndarray
    sq_norms: np.ndarray
    z_nd: float

    def __post_init__(self):
        if self.samples.ndim != 2 or self.samples.shape[0] < 1 or self.samples.shape[1] < 1:
            raise ArgumentError(f"samples must be (n, d) with n, d >= 1, got {self.samples.shape}")
        n, d = self.samples.shape
        recomputed = np.einsum("ij,ij->i", self.samples, self.samples)
        if not np.allclose(recomputed, self.sq_norms, rtol=0, atol=1e-12 * max(1.0, d)):
            raise ArgumentError("cached sq_norms disagree with samples")
        if abs(self.z_nd - self.sq_norms.sum() / (n * d)) > 1e-12 * max(1.0, self.z_nd):
            raise ArgumentError("cached z_nd disagrees with sq_norms")
        self.samples.setflags(write=False)
        self.sq_norms.setflags(write=False)

    @classmethod
    def from_samples(cls, samples: np.ndarray) -> "DataSet":
        samples = np.ascontiguousarray(samples, dtype=np.float64)
        if samples.ndim == 1:
            samples = samples[:, None]
        sq = np.einsum("ij,ij->i", samples, samples)
        n, d = samples.shape
        return cls(samples=samples, sq_norms=sq, z_nd=float(sq.sum() / (n * d)))

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def d(self) -> int:
        return self.samples.shape[1]


_MIX64_MULT = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


def _splitmix64(state: int) -> int:
    state = (state + _MIX64_MULT) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class RngSpec:
    """Counter-based stream identity: (master_seed, stream_id) keys a Philox generator."""

    master_seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        key = np.array([self.master_seed & _MASK64, self.stream_id & _MASK64],
                       dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def derive(self, *parts: int) -> "RngSpec":
        """A child stream keyed by mixing integer parts into the stream id."""
        sid = self.stream_id & _MASK64
        for p in parts:
            sid = _splitmix64(sid ^ (int(p) & _MASK64))
        return RngSpec(master_seed=self.master_seed, stream_id=sid)


def sample_standard_normal(n: int, d: int, rng: RngSpec) -> DataSet:
    """n i.i.d. draws from N(0, I_d), with norms and z_nd cached."""
    if n < 1 or d < 1:
        raise ArgumentError(f"n and d must be >= 1, got n={n}, d={d}")
    samples = rng.generator().standard_normal((n, d))
    return DataSet.from_samples(samples)


def _check_point(x, d: int) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if x.shape != (d,):
        raise ArgumentError(f"x must be a length-{d} vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ArgumentError("x must be finite")
    return x


def mixture_log_density(params: MixtureParams, x) -> float:
    """log of the two-component mixture density at a single point x."""
    x = _check_point(x, params.d)
    return float(_log_density_batch(params, x[None, :])[0])


def _log_density_batch(params: MixtureParams, X: np.ndarray) -> np.ndarray:
    """Vectorized log-density over the rows of X, stabilized with log-sum-exp."""
    if isinstance(params, IsoParams):
        s2 = params.sigma2
        d = params.d
        a = X @ params.theta / s2
        quad = -(np.einsum("ij,ij->i", X, X) + params.theta @ params.theta) / (2.0 * s2)
        return quad - 0.5 * d * math.log(2.0 * math.pi * s2) - math.log(2.0) \
            + np.logaddexp(a, -a)
    if isinstance(params, TiedDiagParams):
        v = params.diag_vars
        a = X @ (params.theta / v)
        quad = -0.5 * ((X * X) @ (1.0 / v) + np.sum(params.theta ** 2 / v))
        return quad - 0.5 * np.sum(np.log(2.0 * math.pi * v)) - math.log(2.0) \
            + np.logaddexp(a, -a)
    if isinstance(params, FreeCovParams):
        lp = _free_component_log_pdfs(params, X)  # (n, 2)
        lw = np.log(np.maximum(params.weights, 1e-300))
        return np.logaddexp(lp[:, 0] + lw[0], lp[:, 1] + lw[1])
    raise ArgumentError(f"unsupported parameter type {type(params)!r}")


def _free_component_log_pdfs(params: FreeCovParams, X: np.ndarray) -> np.ndarray:
    """Per-component Gaussian log-pdfs, shape (n, 2), via Cholesky solves."""
    n, d = X.shape
    out = np.empty((n, 2))
    for k in range(2):
        chol = np.linalg.cholesky(params.covariances[k])
        diff = X - params.means[k]
        sol = np.linalg.solve(chol, diff.T)
        maha = np.einsum("ij,ij->j", sol, sol)
        logdet = 2.0 * np.sum(np.log(np.diag(chol)))
        out[:, k] = -0.5 * (maha + logdet + d * LOG_2PI)
    return out


def weight(params: IsoParams, x) -> float:
    """Posterior weight of the +theta component at x, evaluated as a sigmoid."""
    x = _check_point(x, params.d)
    return float(expit(2.0 * (x @ params.theta) / params.sigma2))


def weights_batch(theta: np.ndarray, sigma2: float, X: np.ndarray) -> np.ndarray:
    return expit(2.0 * (X @ theta) / sigma2)


def sample_log_likelihood(params: MixtureParams, data: DataSet) -> float:
    """Average log-density over the sample (the finite-n objective)."""
    if data.d != params.d:
        raise ArgumentError(f"dimension mismatch: data d={data.d}, params d={params.d}")
    return float(np.mean(_log_density_batch(params, data.samples)))


def population_log_likelihood_1d(theta: float, sigma2: float,
                                 quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """E[log f_{theta,sigma}(X)] for X ~ N(0,1), by Gauss-Hermite quadrature.

    The expectation of the log-density (not the density) is taken; the truth
    (0, 1) is its global maximizer.
    """
    if sigma2 <= 0:
        raise ArgumentError(f"sigma2 must be positive, got {sigma2}")
    theta = float(theta)
    const = -0.5 * math.log(2.0 * math.pi * sigma2) - math.log(2.0)

    def integrand(y: np.ndarray) -> np.ndarray:
        a = y * theta / sigma2
        return -(y * y + theta * theta) / (2.0 * sigma2) + const + np.logaddexp(a, -a)

    value, _ = gauss_expect(integrand, quad)
    return value
