"""Master weights on the circle and the continuous star-triangle relation.

Evaluates W_alpha(x, y) and S(x) for a square-lattice-like nome choice,
then checks the star-triangle relation by periodic quadrature.
"""
from __future__ import annotations

import math

from master_str import EllipticParams, QuadratureControl, WeightSpec, verify_str_master, weight_S, weight_W

P = EllipticParams(1j, 1j)
eta = P.eta.real
print(f"crossing parameter eta = {eta:.6f}")

spec = WeightSpec(P, eta / 3)
for x, y in [(0.0, 0.5), (1.0, 2.0), (0.3, 4.0)]:
    print(f"W(eta/3; {x}, {y}) = {weight_W(spec, x, y).real:.12f}")
print(f"S(pi/2) = {weight_S(P, math.pi / 2).real:.12f}")

rep = verify_str_master(WeightSpec(P, 0.2 * eta), WeightSpec(P, 0.35 * eta), 0.4, 2.1, 4.3,
                        QuadratureControl(points=64, rel_tol=1e-11))
print(f"star-triangle: star {rep.lhs:.12g}, triangle {rep.rhs:.12g}, "
      f"|ratio - 1| = {rep.ratio_minus_one:.1e} at {rep.points} points")
