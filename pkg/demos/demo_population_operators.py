"""The population-level one-step maps and their contraction envelopes.

In one dimension the map contracts like 1 - c theta^6 (painfully slow near
the truth); for d >= 2 like 1 - c ||theta||^2. The surrogate recursions
theta / (1 + c theta^k) reproduce exactly these decays.
"""

import numpy as np

from singular_em import (
    RngSpec,
    contraction_ratio,
    corrected_operator_taylor_coeffs,
    corrected_pop_operator,
    pseudo_pop_operator,
    pseudo_pop_operator_mc,
    sample_standard_normal,
    surrogate_sequence,
)

print("contraction ratios at unit scale anchor")
print(f"{'|theta|':>8} {'d=1 ratio':>12} {'1-(2/3)t^6':>12} {'d=2 ratio':>12} {'1-t^2/2':>10}")
for t in (0.05, 0.1, 0.15):
    r1 = contraction_ratio(lambda th: pseudo_pop_operator(th, 1.0, 1), [t])
    r2 = contraction_ratio(lambda th: pseudo_pop_operator(th, 1.0, 2), [t, 0.0])
    print(f"{t:8.2f} {r1:12.9f} {1 - (2/3) * t**6:12.9f} {r2:12.7f} {1 - t*t/2:10.7f}")

print("\nodd Taylor coefficients of the corrected map, extracted by quadrature:")
coeffs = corrected_operator_taylor_coeffs()
for order, value in coeffs.items():
    print(f"  theta^{order}: {value:+.3e}")
print("the cubic and quintic terms vanish; theta^7 carries the first decay")

# the rotation reduction agrees with brute-force Monte Carlo in any dimension
theta = np.array([0.07, -0.04, 0.02, 0.05])
quad = pseudo_pop_operator(theta, 1.0, 4)
mc = pseudo_pop_operator_mc(theta, 1.0, 4, 2_000_000, RngSpec(7))
print(f"\nd=4 reduction check: quadrature {quad.norm:.6f} vs "
      f"Monte Carlo {mc.norm:.6f} +/- {mc.num_error:.6f}")

# iterate the operator and overlay the scalar surrogate
data = sample_standard_normal(1_000_000, 1, RngSpec(8))
theta_t = np.array([0.5])
sur = surrogate_sequence(1.0, 6, 0.5, 2000)
print("\noperator iterates vs theta/(1+theta^6):")
print(f"{'t':>6} {'corrected iterate':>18} {'surrogate':>12}")
for t in range(1, 2001):
    theta_t = corrected_pop_operator(theta_t, 1).value
    if t in (1, 10, 100, 1000, 2000):
        print(f"{t:6d} {float(np.abs(theta_t[0])):18.6f} {sur[t]:12.6f}")
