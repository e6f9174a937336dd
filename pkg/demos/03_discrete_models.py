"""Discrete spin models: the general Z_N solution, Kashiwara-Miwa and chiral Potts."""
from __future__ import annotations

from master_str.chiral_potts import cp_from_angles, cp_to_angles, verify_str_cp
from master_str.discrete import KMParams, verify_km, verify_str_discrete, weight_table

N, tp = 3, 1.3j
print("W(n_i, n_j) at theta = 0.7, phi = (0.15, -0.1):")
print(weight_table(0.7, 0.15, -0.1, N, tp).round(6))

r = verify_str_discrete(0.7, 0.8, 0.1, -0.2, 0.15, N, tp)
print(f"discrete star-triangle: residual {r.max_residual:.1e}, R = {r.R_formula:.10f}")

km = verify_km(KMParams(N, 1, 0.5, tp), 0.6, 0.8)
print(f"Kashiwara-Miwa: residual {km.max_residual:.1e}, reduction error {km.reduction_error:.1e}")

p, q, rr, curve, _ = cp_from_angles(0.7, 0.9, 0.1, -0.2, 0.25, N)
print(f"chiral Potts modulus k = {curve.k:.10f}")
print(f"chiral Potts star-triangle residual {verify_str_cp(p, q, rr, N).max_residual:.1e}")
print("recovered angles:", {k: round(v.real, 10) for k, v in cp_to_angles(p, q, rr, N).items()})
