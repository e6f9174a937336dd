"""Low-temperature limit: the classical Lagrangian, Q4 and the classical star-triangle relation."""
from __future__ import annotations

from master_str.classical import (
    ClassicalParams,
    Q4Quad,
    action_star,
    action_triangle,
    intercept_check,
    q4_canonical_residual,
    solve_q4_threeleg,
    threeleg_residual,
)

t1, t3, phi = 0.8, 0.9, (0.1, -0.15, 0.2)
tp = 0.1 + 1.3j
cp = ClassicalParams(tp)
phi0 = solve_q4_threeleg(t1, t3, *phi, cp)
print(f"saddle point phi0 = {phi0:.12f}")
print(f"three-leg residual {threeleg_residual(phi0, t1, t3, *phi, cp):.1e}")
print(f"canonical Q4 residual {abs(q4_canonical_residual(Q4Quad(t1, t3, (phi0, *phi), tp))):.1e}")
star, tri = action_star(phi0, *phi, t1, t3, cp), action_triangle(*phi, t1, t3, cp)
print(f"classical star-triangle: |A_star - A_triangle| = {abs(star - tri):.1e}")

# -eps log W tends to the Lagrangian; the O(1) remainder is the discrete weight
r = intercept_check(0.4, 0.9, 1, 0, 0.4, 2, 0.3j)
print(f"N = 2: slope relative error {r.slope_rel_err:.1e}, intercept gap {r.weight_gap:.1e}")
