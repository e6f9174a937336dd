"""Chiral Potts weights and the trigonometric-limit dictionary.

In the limit ``tau' -> i infinity`` the discrete weights depend on the
fields only through differences and coincide with the chiral Potts weights
once the angles are traded for three rapidities on the curve

    x^N + y^N = k (1 + x^N y^N),  k x^N = 1 - k' mu^-N,  k y^N = 1 - k' mu^N.

Conventions: ``omega = exp(2 pi i / N)``, ``omega^(1/2) = exp(i pi / N)``,
``t_p = x_p y_p``.  Edge orientation follows the first star-triangle
relation with the centre ``d = n0`` and the outer spins ``a, b, c = n1, n2, n3``::

    W_{theta1}(phi2, phi3; n2, n3)            = W_qr(n2 - n3)
    W_{pi - theta1}(phi1, phi0; n1, n0)       = Wbar_qr(n1 - n0)
    W_{theta1 + theta3}(phi2, phi0; n2, n0)   = W_pr(n2 - n0)
    W_{pi - theta1 - theta3}(phi1, phi3; n1, n3) = Wbar_pr(n1 - n3)
    W_{theta3}(phi2, phi1; n2, n1)            = W_pq(n2 - n1)
    W_{pi - theta3}(phi0, phi3; n0, n3)       = Wbar_pq(n0 - n3)
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import BadInput, CurveViolation, DegenerateDenominator, PoleHit

PI = math.pi
CURVE_TOL = 1e-9


def omega(N: int) -> complex:
    return cmath.exp(2j * PI / N)


def omega_half(N: int) -> complex:
    return cmath.exp(1j * PI / N)


def _e(z) -> complex:
    return cmath.exp(1j * complex(z))


@dataclass(frozen=True)
class CPRapidity:
    x: complex
    y: complex
    mu: complex


@dataclass(frozen=True)
class CPCurve:
    N: int
    k: complex
    kp: complex

    @property
    def omega(self) -> complex:
        return omega(self.N)


def curve_residuals(p: CPRapidity, c: CPCurve) -> tuple[float, float, float]:
    """Absolute residuals of the three curve equations."""
    N, k, kp = c.N, c.k, c.kp
    xN, yN, mN = p.x ** N, p.y ** N, p.mu ** N
    return (abs(xN + yN - k * (1 + xN * yN)),
            abs(k * xN - 1 + kp / mN),
            abs(k * yN - 1 + kp * mN))


def check_curve(p: CPRapidity, c: CPCurve, tol: float = CURVE_TOL) -> None:
    res = max(curve_residuals(p, c))
    if not res <= tol:
        raise CurveViolation(f"rapidity off the curve (residual {res:.2e})")


# ---------------------------------------------------------------------------
# Weights


def cp_W(p: CPRapidity, q: CPRapidity, n: int, N: int) -> complex:
    """``W_pq(n) = (mu_p/mu_q)^n prod_{j=1}^n (y_q - w^j x_p)/(y_p - w^j x_q)``, ``n`` taken mod ``N``."""
    w, n = omega(N), int(n) % N
    out = (p.mu / q.mu) ** n
    for j in range(1, n + 1):
        den = p.y - w ** j * q.x
        if den == 0:
            raise PoleHit("vanishing chiral Potts denominator")
        out *= (q.y - w ** j * p.x) / den
    return out


def cp_Wbar(p: CPRapidity, q: CPRapidity, n: int, N: int) -> complex:
    """``Wbar_pq(n) = (mu_p mu_q)^n prod_{j=1}^n (w x_p - w^j x_q)/(y_q - w^j y_p)``."""
    w, n = omega(N), int(n) % N
    out = (p.mu * q.mu) ** n
    for j in range(1, n + 1):
        den = q.y - w ** j * p.y
        if den == 0:
            raise PoleHit("vanishing chiral Potts denominator")
        out *= (w * p.x - w ** j * q.x) / den
    return out


def cp_weights(p: CPRapidity, q: CPRapidity, n: int, N: int) -> tuple[complex, complex]:
    return cp_W(p, q, n, N), cp_Wbar(p, q, n, N)


def cp_f(p: CPRapidity, q: CPRapidity, N: int) -> complex:
    """``f_pq``: product over ``j = 1..N-1`` of a rational expression to the power ``j/N`` (principal branch)."""
    w = omega(N)
    tp, tq = p.x * p.y, q.x * q.y
    out = 1 + 0j
    for j in range(1, N):
        wj = w ** j
        num = q.mu * (1 - wj) * (tp - wj * tq) * (q.x - wj * p.y)
        den = p.mu * (p.x - wj * q.x) * (p.y - wj * q.y) * (p.x - wj * q.y)
        out *= cmath.exp(j / N * cmath.log(num / den))
    return out


def cp_R(p: CPRapidity, q: CPRapidity, r: CPRapidity, N: int) -> complex:
    """``R_pqr = f_qr f_pq / f_pr``."""
    return cp_f(q, r, N) * cp_f(p, q, N) / cp_f(p, r, N)


def cp_str_sides(p, q, r, N: int):
    """First star-triangle relation with ``S = 1``; returns ``(lhs, rhs)`` indexed ``[a, b, c]``."""
    def tab(fn, u, v):
        return np.array([[fn(u, v, i - j, N) for j in range(N)] for i in range(N)])

    Wb_pq, W_pr, Wb_qr = tab(cp_Wbar, p, q), tab(cp_W, p, r), tab(cp_Wbar, q, r)
    W_pq, Wb_pr, W_qr = tab(cp_W, p, q), tab(cp_Wbar, p, r), tab(cp_W, q, r)
    # Wbar_pq(d, c) W_pr(b, d) Wbar_qr(a, d)  vs  W_pq(b, a) Wbar_pr(a, c) W_qr(b, c)
    lhs = np.einsum("dc,bd,ad->abc", Wb_pq, W_pr, Wb_qr)
    rhs = np.einsum("ba,ac,bc->abc", W_pq, Wb_pr, W_qr)
    return lhs, rhs


@dataclass
class CPSTRReport:
    max_residual: float
    R_formula: complex
    R_ratio: complex
    ratio_spread: float
    N: int


def verify_str_cp(p, q, r, N: int) -> CPSTRReport:
    lhs, rhs = cp_str_sides(p, q, r, N)
    R = cp_R(p, q, r, N)
    res = np.abs(lhs - R * rhs) / np.abs(R * rhs)
    ratio = lhs / rhs
    return CPSTRReport(float(res.max()), R, complex(ratio.flat[0]),
                       float(np.max(np.abs(ratio / ratio.flat[0] - 1))), N)


# ---------------------------------------------------------------------------
# Trigonometric limit of the general weights


def trig_W(theta_, phi_i, phi_j, n_i: int, n_j: int, N: int) -> complex:
    """Discrete weight at ``tau' = i infinity``: theta3, theta4 -> 1, theta1 -> sin, theta2 -> cos."""
    th, ph, n = complex(theta_), complex(phi_i) - complex(phi_j), int(n_i) - int(n_j)
    base = cmath.cos((ph + th) / 2) / cmath.cos((ph - th) / 2)
    out = cmath.exp(n / N * cmath.log(base))

    def term(k):
        a = PI / N * (k - 0.5)
        return cmath.sin(a + (ph - th) / (2 * N)) / cmath.sin(a + (ph + th) / (2 * N))

    if n >= 0:
        for k in range(1, n + 1):
            out *= term(k)
    else:
        for k in range(n + 1, 1):
            out /= term(k)
    return out


def cp_phi0(theta1, theta3, phi1, phi2, phi3) -> complex:
    """Closed-form centre field of the trigonometric three-leg equation (principal log)."""
    from .classical import cp_phi0_trig

    return cp_phi0_trig(theta1, theta3, phi1, phi2, phi3)


# ---------------------------------------------------------------------------
# Dictionary


@dataclass(frozen=True)
class CPDictionary:
    lambdas: tuple[complex, complex, complex, complex]
    phis: tuple[complex, complex, complex, complex]
    ell: tuple[complex, complex, complex]
    f: tuple[complex, complex, complex]
    U: tuple[complex, complex]
    V: tuple[complex, complex]


def _nearest_root(value: complex, power_N: complex, N: int) -> complex:
    """The ``N``-th root of ``power_N`` closest to ``value``."""
    base = cmath.exp(cmath.log(power_N) / N)
    w = omega(N)
    return min((base * w ** j for j in range(N)), key=lambda z: abs(z - value))


def cp_from_angles(theta1, theta3, phi1, phi2, phi3, N: int, lambda2: float = 0.0,
                   kp_sign: int | None = None):
    """Rapidities ``(p, q, r)`` and the curve for the given angles.

    ``lambda2`` fixes the free overall shift of the ``lambda`` variables.
    The sign of ``k`` is the one that puts ``x, y`` on the curve; the
    ``N``-th roots ``mu`` are fixed so that ``W_pq`` and ``W_pr`` at ``n = 1``
    equal the trigonometric weights, and ``kp_sign`` (default: both tried)
    selects ``k'`` so that the barred weights match as well.
    """
    t1, t3 = complex(theta1), complex(theta3)
    p1, p2, p3 = complex(phi1), complex(phi2), complex(phi3)
    l2 = complex(lambda2)
    l3, l1 = l2 + t1, l2 - t3
    Up = _e(p1) * cmath.sin(l2 - l3) + _e(p2) * cmath.sin(l1 - l3) + _e(p3) * cmath.sin(l1 - l2)
    Um = _e(-p1) * cmath.sin(l2 - l3) + _e(-p2) * cmath.sin(l1 - l3) + _e(-p3) * cmath.sin(l1 - l2)
    Vp = _e(l1) * cmath.sin(p2 - p3) + _e(l2) * cmath.sin(p1 - p3) + _e(l3) * cmath.sin(p1 - p2)
    Vm = _e(-l1) * cmath.sin(p2 - p3) + _e(-l2) * cmath.sin(p1 - p3) + _e(-l3) * cmath.sin(p1 - p2)
    if abs(Up) < 1e-14 or abs(Vp) < 1e-14:
        raise DegenerateDenominator("vanishing U or V in the chiral Potts dictionary")
    p0 = -1j * cmath.log(_e(p1 + p2 + p3) * Um / Up)
    l0 = -1j * cmath.log(_e(l1 + l2 + l3) * Vm / Vp)
    ell = ((l0 + l1 - l2 - l3) / (2 * N), (l0 + l2 - l1 - l3) / (2 * N), (l0 + l3 - l1 - l2) / (2 * N))
    ff = ((p0 + p1 - p2 - p3) / (2 * N), (p0 + p2 - p1 - p3) / (2 * N), (p0 + p3 - p1 - p2) / (2 * N))
    wh = omega_half(N)
    xs = (_e(ell[0] - ff[0]), _e(ell[1] + ff[1]), _e(ell[2] - ff[2]))
    ys = (wh * _e(ell[0] + ff[0]), wh * _e(ell[1] - ff[1]), wh * _e(ell[2] + ff[2]))
    k2 = Vp * Vm / (Up * Um)
    s = cmath.sin(N * ell[0])
    if abs(s) < 1e-12:
        raise DegenerateDenominator("sign of k undetermined")
    k = cmath.sin(N * ff[0]) / s
    if abs(k * k - k2) > 1e-9 * max(1.0, abs(k2)):
        raise CurveViolation("modulus from the curve disagrees with V+V-/(U+U-)")
    dic = CPDictionary((l0, l1, l2, l3), (p0, p1, p2, p3), ell, ff, (Up, Um), (Vp, Vm))
    signs = (1, -1) if kp_sign is None else (kp_sign,)
    best = None
    for sg in signs:
        kp = sg * cmath.sqrt(1 - k * k)
        curve = CPCurve(N, k, kp)
        p, q, r = _fix_mu(xs, ys, curve, t1, t3, (p0, p1, p2, p3))
        err = abs(cp_Wbar(q, r, 1, N) - trig_W(PI - t1, p1, p0, 1, 0, N))
        if best is None or err < best[0]:
            best = (err, p, q, r, curve)
    _, p, q, r, curve = best
    for v in (p, q, r):
        check_curve(v, curve)
    return p, q, r, curve, dic


def _fix_mu(xs, ys, curve: CPCurve, t1, t3, phis):
    N, k, kp = curve.N, curve.k, curve.kp
    p0, p1, p2, _ = phis
    muN = [(1 - k * y ** N) / kp for y in ys]
    mu_p = cmath.exp(cmath.log(muN[0]) / N)
    p = CPRapidity(xs[0], ys[0], mu_p)
    q0 = CPRapidity(xs[1], ys[1], 1.0)
    r0 = CPRapidity(xs[2], ys[2], 1.0)
    # W_pq(1) = (mu_p/mu_q) * rational part, with mu_q = 1 in the placeholder
    ratio_pq = trig_W(t3, p2, p1, 1, 0, N) / cp_W(p, q0, 1, N)
    ratio_pr = trig_W(t1 + t3, p2, p0, 1, 0, N) / cp_W(p, r0, 1, N)
    q = CPRapidity(xs[1], ys[1], _nearest_root(1 / ratio_pq, muN[1], N))
    r = CPRapidity(xs[2], ys[2], _nearest_root(1 / ratio_pr, muN[2], N))
    return p, q, r


def cp_to_angles(p: CPRapidity, q: CPRapidity, r: CPRapidity, N: int,
                 flips: tuple[bool, ...] = (False,) * 6) -> dict:
    """Invert the parameterization: ``theta1``, ``theta3`` and ``phi_j - phi0``.

    Every square root of a product is taken as the product of the roots of
    ``x_p, y_p, x_q, y_q, x_r, y_r`` (principal branch); ``flips`` toggles
    the sign of each of those six roots.  A flip moves some angles by
    ``N pi``, so round trips close modulo ``N pi``.
    """
    if len(flips) != 6:
        raise BadInput("flips must have six entries")
    h = [cmath.log(z) / 2 + (1j * PI if f else 0) for z, f in
         zip((p.x, p.y, q.x, q.y, r.x, r.y), flips)]
    xp, yp, xq, yq, xr, yr = h
    return {
        "theta1": -1j * N * ((xr + yr) - (xq + yq)),
        "theta3": -1j * N * ((xq + yq) - (xp + yp)),
        "phi1_minus_phi0": -1j * N * ((yq + xr) - (xq + yr)),
        "phi2_minus_phi0": PI - 1j * N * ((xp + xr) - (yp + yr)),
        "phi3_minus_phi0": -1j * N * ((xp + yq) - (yp + xq)),
    }


def wrap(x: complex, period: float) -> complex:
    """Real part reduced to ``(-period/2, period/2]``."""
    x = complex(x)
    re = x.real - period * math.floor(x.real / period + 0.5)
    return complex(re, x.imag)


def cp_qr_weights_from_angles(theta1, phi, mu_q: complex, mu_r: complex, n: int, N: int) -> tuple[complex, complex]:
    """``(W_qr(n), Wbar_qr(n))`` written through the exponentials of the angles only.

    Uses ``x_q/y_r``, ``x_r/y_q``, ``y_r/y_q`` and ``x_q/x_r``, which the
    angles determine without any square root.
    """
    p0, p1, p2, p3 = (complex(v) for v in phi)
    t1, w, wh = complex(theta1), omega(N), omega_half(N)
    xq_yr = _e((p2 - p3 - t1) / N) / wh
    xr_yq = _e((p2 - p3 + t1) / N) / wh
    yr_yq = _e((p0 - p1 + t1) / N)
    xq_xr = _e((p0 - p1 - t1) / N)
    n = int(n) % N
    W = (mu_q / mu_r) ** n
    Wb = (mu_q * mu_r) ** n
    for j in range(1, n + 1):
        wj = w ** j
        W *= yr_yq * (1 - wj * xq_yr) / (1 - wj * xr_yq)
        Wb *= xr_yq * (w * xq_xr - wj) / (yr_yq - wj)
    return W, Wb


def angle_relations(p, q, r, theta1, phi, N: int) -> float:
    """Max residual of the four exponential relations tying ``theta1`` and the fields to ``x, y``."""
    p0, p1, p2, p3 = (complex(v) for v in phi)
    t1, wh = complex(theta1), omega_half(N)
    res = (_e((p2 - p3 - t1) / N) - wh * q.x / r.y,
           _e((p2 - p3 + t1) / N) - wh * r.x / q.y,
           _e((p0 - p1 + t1) / N) - r.y / q.y,
           _e((p0 - p1 - t1) / N) - q.x / r.x)
    return max(abs(v) for v in res)


def dictionary_edges(theta1, theta3, phi, N: int):
    """The six ``(theta, phi_i, phi_j, kind, pair, sign)`` edge identifications.

    ``sign`` is the orientation: the general weight ``W(phi_i, phi_j; n_i, n_j)``
    equals the chiral Potts weight at ``n_i - n_j``.
    """
    t1, t3 = complex(theta1), complex(theta3)
    p0, p1, p2, p3 = phi
    return (
        (t1, p2, p3, "W", "qr"),
        (PI - t1, p1, p0, "Wbar", "qr"),
        (t1 + t3, p2, p0, "W", "pr"),
        (PI - t1 - t3, p1, p3, "Wbar", "pr"),
        (t3, p2, p1, "W", "pq"),
        (PI - t3, p0, p3, "Wbar", "pq"),
    )


def dictionary_weight_error(theta1, theta3, phi1, phi2, phi3, N: int,
                            weight_fn=None, **kw) -> float:
    """Max relative gap between the general weights and the chiral Potts weights under the dictionary.

    ``weight_fn(theta, phi_i, phi_j, n_i, n_j, N)`` defaults to :func:`trig_W`.
    """
    weight_fn = weight_fn or trig_W
    p, q, r, curve, dic = cp_from_angles(theta1, theta3, phi1, phi2, phi3, N, **kw)
    rap = {"p": p, "q": q, "r": r}
    worst = 0.0
    for th, a, b, kind, pair in dictionary_edges(theta1, theta3, dic.phis, N):
        fn = cp_W if kind == "W" else cp_Wbar
        for n in range(N):
            ref = fn(rap[pair[0]], rap[pair[1]], n, N)
            worst = max(worst, abs(weight_fn(th, a, b, n, 0, N) - ref) / abs(ref))
    return worst
