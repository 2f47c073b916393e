"""Analytic side: tanh polynomial envelopes, operator series coefficients,
localization recursions, epoch schedules, and small numerical checks.

The polynomial envelopes and series coefficients are hard-coded as exact
rationals; a Cauchy-integral extractor recovers the same coefficients from
quadrature values of the corrected operator, guarding against transcription
slips in the tenth-order terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ArgumentError
from .model import RngSpec, sample_standard_normal
from .population import pseudo_pop_operator
from .quadrature import DEFAULT_QUAD, QuadratureSpec, gauss_hermite_rule
from .stats import RateFit, rate_fit


@dataclass(frozen=True)
class TanhPolyBounds:
    """Polynomial envelopes for x*tanh(x): degree 4/6 and degree 8/10 pairs."""

    lower4: np.ndarray | float
    upper6: np.ndarray | float
    lower8: np.ndarray | float
    upper10: np.ndarray | float


def tanh_poly_bounds(x) -> TanhPolyBounds:
    """Evaluate both envelope pairs at x; the caller compares against x*tanh(x)."""
    x = np.asarray(x, dtype=np.float64)
    x2 = x * x
    lower4 = x2 - x2 ** 2 / 3.0
    upper6 = lower4 + 2.0 * x2 ** 3 / 15.0
    lower8 = upper6 - 17.0 * x2 ** 4 / 315.0
    upper10 = lower8 + 62.0 * x2 ** 5 / 2835.0
    if x.ndim == 0:
        return TanhPolyBounds(float(lower4), float(upper6), float(lower8), float(upper10))
    return TanhPolyBounds(lower4, upper6, lower8, upper10)


# Numerators c_{j,k} of the theta^j term: sum_k c_{j,k} mu_{2k} / denom^((j-1)/2 + k).
SERIES_COEFFS: dict[int, dict[int, Fraction]] = {
    3: {1: Fraction(1), 2: Fraction(-1, 3)},
    5: {1: Fraction(1), 2: Fraction(-1), 3: Fraction(2, 15)},
    7: {1: Fraction(1), 2: Fraction(-2), 3: Fraction(2, 3), 4: Fraction(-17, 315)},
    9: {1: Fraction(1), 2: Fraction(-10, 3), 3: Fraction(2),
        4: Fraction(-17, 45), 5: Fraction(62, 2835)},
}


def gaussian_even_moments(k_max: int) -> list[float]:
    """[mu_2, mu_4, ...]: double factorials (2k-1)!!."""
    out, acc = [], 1.0
    for k in range(1, k_max + 1):
        acc *= 2 * k - 1
        out.append(acc)
    return out


def operator_series_coeffs(order: int, denom: float, moments: Sequence[float]) -> float:
    """The theta^order Taylor coefficient of the one-step location map.

    With denom = 1 and Gaussian moments this gives the population beta_j;
    with denom = sample second moment and sample moments, the hatted version.
    """
    if order not in SERIES_COEFFS:
        raise ArgumentError(f"order must be one of {sorted(SERIES_COEFFS)}, got {order}")
    if denom <= 0:
        raise ArgumentError(f"denom must be positive, got {denom}")
    coeffs = SERIES_COEFFS[order]
    k_needed = (order + 1) // 2
    if len(moments) < k_needed:
        raise ArgumentError(f"need moments mu_2..mu_{2 * k_needed}, got {len(moments)} entries")
    half = (order - 1) // 2
    return float(sum(float(c) * moments[k - 1] / denom ** (half + k)
                     for k, c in coeffs.items()))


class RecursionKind(Enum):
    """Affine exponent recursions from the localization arguments."""

    MULTIVARIATE_ALPHA = ("multivariate_alpha", Fraction(1, 3), Fraction(1, 6))
    UNIVARIATE_A = ("univariate_a", Fraction(3, 7), Fraction(1, 14))
    UNIVARIATE_COROLLARY = ("univariate_corollary", Fraction(1, 7), Fraction(1, 14))

    def __init__(self, label: str, slope: Fraction, offset: Fraction):
        self.label = label
        self.slope = slope
        self.offset = offset

    @classmethod
    def from_label(cls, label: str) -> "RecursionKind":
        for kind in cls:
            if kind.label == label:
                return kind
        raise ArgumentError(f"unknown recursion kind {label!r}")


@dataclass(frozen=True)
class RecursionResult:
    kind: RecursionKind
    sequence: tuple
    fixed_point: Fraction


def localization_recursion(kind: RecursionKind, a0, steps: int) -> RecursionResult:
    """Iterate a_{l+1} = slope * a_l + offset and report the analytic fixed point.

    Exact rational arithmetic when a0 is a Fraction or integer-like.
    """
    if steps < 1:
        raise ArgumentError(f"steps must be >= 1, got {steps}")
    exact = isinstance(a0, (Fraction, int))
    a = Fraction(a0) if exact else float(a0)
    slope = kind.slope if exact else float(kind.slope)
    offset = kind.offset if exact else float(kind.offset)
    seq = [a]
    for _ in range(steps):
        a = slope * a + offset
        seq.append(a)
    fixed_point = kind.offset / (1 - kind.slope)
    return RecursionResult(kind=kind, sequence=tuple(seq), fixed_point=fixed_point)


@dataclass(frozen=True)
class EpochSchedule:
    """Two-stage iteration schedule: epoch lengths t_l and their running totals."""

    n: int
    delta: float
    beta: float
    ell_star: int
    c_n_delta: float
    omega: float
    a_ell: tuple
    t_ell: tuple
    T_ell: tuple
    budget_bound: int


def epoch_schedule(n: int, delta: float, beta: float) -> EpochSchedule:
    """Epoch counts for the univariate two-stage argument.

    At desk-scale n the polylog factor exceeds n, making omega < 1 and the
    nominal epoch lengths nonpositive; they are clamped to 1 so the schedule
    stays a valid strictly-increasing sequence of counts.
    """
    if not (0 < delta < 1):
        raise ArgumentError(f"delta must be in (0, 1), got {delta}")
    if not (0 < beta <= 0.125):
        raise ArgumentError(f"beta must be in (0, 1/8], got {beta}")
    ell_star = math.ceil(math.log(8.0 / beta) / math.log(7.0 / 3.0))
    c_n_delta = math.log(10.0 * n * (ell_star + 1) / delta) ** 10
    omega = n / c_n_delta
    rec = localization_recursion(RecursionKind.UNIVARIATE_A, Fraction(1, 16), ell_star)
    a_ell = tuple(float(a) for a in rec.sequence)
    t_ell = [math.ceil(math.sqrt(n))]
    for ell in range(1, ell_star + 1):
        nominal = 10.0 * omega ** (6.0 * a_ell[ell]) * math.log(omega) if omega > 1 else 0.0
        t_ell.append(max(1, math.ceil(nominal)))
    T_ell = tuple(np.cumsum(t_ell).tolist())
    budget_bound = math.ceil(math.sqrt(n)) + ell_star * max(t_ell[1:], default=1)
    return EpochSchedule(n=n, delta=delta, beta=beta, ell_star=ell_star,
                         c_n_delta=c_n_delta, omega=omega, a_ell=a_ell,
                         t_ell=tuple(t_ell), T_ell=T_ell, budget_bound=budget_bound)


@dataclass(frozen=True)
class MomentTable:
    k: int
    ns: tuple
    mean_abs_dev: np.ndarray
    fit: RateFit


def moment_concentration_check(k: int, n_grid: Sequence[int], trials: int,
                               rng: RngSpec) -> MomentTable:
    """Mean |sample 2k-th moment - (2k-1)!!| per n, with a log-log exponent fit."""
    if not 1 <= k <= 5:
        raise ArgumentError(f"k must be in 1..5, got {k}")
    if trials < 1:
        raise ArgumentError("trials must be >= 1")
    target = gaussian_even_moments(k)[-1]
    ns = tuple(int(n) for n in n_grid)
    means = []
    for n in ns:
        devs = np.empty(trials)
        for t in range(trials):
            gen = rng.derive(k, n, t).generator()
            x = gen.standard_normal(n)
            devs[t] = abs(float(np.mean(x ** (2 * k))) - target)
        means.append(float(np.mean(devs)))
    means = np.asarray(means)
    fit = rate_fit(ns, means) if len(ns) >= 3 else RateFit(float("nan"), float("nan"),
                                                           float("nan"), float("nan"))
    return MomentTable(k=k, ns=ns, mean_abs_dev=means, fit=fit)


def one_step_bound_check(theta0, n: int, d: int, rng: RngSpec,
                         quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """||pseudo-population update|| at theta0 for a fresh dataset.

    The caller asserts the sqrt(2/pi) ceiling; tanh saturation makes the value
    approach E|V| as the denominator shrinks.
    """
    theta0 = np.atleast_1d(np.asarray(theta0, dtype=np.float64))
    if float(np.linalg.norm(theta0)) > math.sqrt(d) * (1 + 1e-12):
        raise ArgumentError("one-step check requires ||theta0|| <= sqrt(d)")
    data = sample_standard_normal(n, d, rng)
    return pseudo_pop_operator(theta0, data.z_nd, d, quad, strict_guard=False).norm


def gaussian_pdf(x: float, theta: float, sigma2: float) -> float:
    """Univariate component density phi(x; theta, sigma^2)."""
    return math.exp(-(x - theta) ** 2 / (2.0 * sigma2)) / math.sqrt(2.0 * math.pi * sigma2)


def pde_residual(x: float, theta: float, sigma2: float, h: float) -> float:
    """Central-difference residual of d^2 phi / d theta^2 = 2 d phi / d sigma^2.

    The identity is exact, so the residual is pure discretization error, O(h^2).
    """
    if h <= 0:
        raise ArgumentError(f"h must be positive, got {h}")
    d2_theta = (gaussian_pdf(x, theta + h, sigma2) - 2.0 * gaussian_pdf(x, theta, sigma2)
                + gaussian_pdf(x, theta - h, sigma2)) / (h * h)
    d_sigma2 = (gaussian_pdf(x, theta, sigma2 + h)
                - gaussian_pdf(x, theta, sigma2 - h)) / (2.0 * h)
    return d2_theta - 2.0 * d_sigma2


def corrected_operator_taylor_coeffs(orders: Sequence[int] = (3, 5, 7, 9),
                                     radius: float = 0.05, points: int = 64,
                                     quad: QuadratureSpec = DEFAULT_QUAD) -> dict[int, float]:
    """Odd Taylor coefficients of the corrected operator at 0 via a Cauchy circle integral.

    The integrand is analytic on |theta| = radius (the nearest tanh poles sit
    far outside for radius <= 0.1), so the trapezoid rule on the circle is
    spectrally accurate and the k-th coefficient comes out with error about
    quadrature_noise / radius^k. A difference stencil on the real line cannot
    reach the 1e-8 level for the fifth coefficient in double precision, which
    is why the contour form is used.
    """
    if not 0 < radius < 0.5:
        raise ArgumentError(f"radius must be in (0, 0.5), got {radius}")
    qx, qw = gauss_hermite_rule(quad.nodes)
    phis = 2.0 * np.pi * np.arange(points) / points
    zs = radius * np.exp(1j * phis)
    vals = np.empty(points, dtype=np.complex128)
    for i, z in enumerate(zs):
        vals[i] = np.sum(qw * qx * np.tanh(qx * z / (1.0 - z * z)))
    out = {}
    for j in orders:
        coeff = np.sum(vals * np.exp(-1j * j * phis)) / points / radius ** j
        out[j] = float(np.real(coeff))
    return out
