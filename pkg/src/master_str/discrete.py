"""Discrete-spin weights arising at order ``eps^0`` of the low-temperature expansion.

Spins are ``n in Z_N``; the classical fields ``phi`` and the spectral
variables ``theta`` enter as parameters.  Theta functions with the short
period ``tau'/N`` appear throughout; the ``[.]^{n/N}`` powers use the
principal branch of the base, and the period-``N`` symmetry of ``r`` and
``t`` is what certifies that choice.

Weights are normalized by ``W(phi_i, phi_j; 0, 0) = 1``.
"""
from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadInput, BranchAmbiguity, PoleHit
from .special_fn import theta, theta1_prime

PI = math.pi


def _th(j, z, tp):
    return complex(theta(j, complex(z), tp))


def _ppow(base: complex, expo: float) -> complex:
    """Principal-branch power; refuses bases sitting on the negative real axis."""
    if base == 0:
        raise PoleHit("zero base in a fractional power")
    if abs(base.imag) <= 1e-14 * abs(base) and base.real < 0 and expo != int(expo):
        raise BranchAmbiguity("fractional power of a negative real base")
    return cmath.exp(expo * cmath.log(base))


def _shifted_product(term, n: int) -> complex:
    """``prod_{k=1}^n term(k)``, extended to ``n < 0`` by ``prod_{k=n+1}^0 1/term(k)``."""
    out = 1 + 0j
    if n >= 0:
        for k in range(1, n + 1):
            out *= term(k)
    else:
        for k in range(n + 1, 1):
            out /= term(k)
    return out


def _rt(j_outer, j_inner, theta_, phi, n, N, tp):
    th, ph = complex(theta_), complex(phi)
    base = _th(j_outer, (ph + th) / 2, tp) / _th(j_outer, (ph - th) / 2, tp)
    tpN = complex(tp) / N

    def term(k):
        a = PI / N * (k - 0.5)
        return _th(j_inner, a + (ph - th) / (2 * N), tpN) / _th(j_inner, a + (ph + th) / (2 * N), tpN)

    return _ppow(base, n / N) * _shifted_product(term, n)


def r_func(theta_, phi, n: int, N: int, tau_prime) -> complex:
    """``r_theta(phi; n)``: theta2 ratio to the power ``n/N`` times a theta1 product at ``tau'/N``."""
    return _rt(2, 1, theta_, phi, int(n), N, tau_prime)


def t_func(theta_, phi, n: int, N: int, tau_prime) -> complex:
    """``t_theta(phi; n)``: theta3 ratio to the power ``n/N`` times a theta4 product at ``tau'/N``."""
    return _rt(3, 4, theta_, phi, int(n), N, tau_prime)


def discrete_W(theta_, phi_i, phi_j, n_i: int, n_j: int, N: int, tau_prime) -> complex:
    """``r_theta(phi_i - phi_j; n_i - n_j) t_theta(phi_i + phi_j; n_i + n_j)``."""
    return (r_func(theta_, complex(phi_i) - complex(phi_j), n_i - n_j, N, tau_prime)
            * t_func(theta_, complex(phi_i) + complex(phi_j), n_i + n_j, N, tau_prime))


def discrete_S(phi0, n0: int, N: int, tau_prime) -> complex:
    """``N^{-1/2} theta4(2 pi n0/N + phi0/N | tau'/N) / theta4(phi0 | tau')``."""
    tp = complex(tau_prime)
    return _th(4, 2 * PI * n0 / N + complex(phi0) / N, tp / N) / (math.sqrt(N) * _th(4, phi0, tp))


def weight_table(theta_, phi_i, phi_j, N: int, tau_prime) -> np.ndarray:
    """``W[n_i, n_j]`` for ``n_i, n_j`` in ``0..N-1``."""
    out = np.empty((N, N), dtype=complex)
    for a in range(N):
        for b in range(N):
            out[a, b] = discrete_W(theta_, phi_i, phi_j, a, b, N, tau_prime)
    return out


# ---------------------------------------------------------------------------
# The star-triangle factor


def K_factor(theta_, N: int, tau_prime) -> complex:
    tpN = complex(tau_prime) / N
    c = theta1_prime(tpN) / 2
    out = 1 + 0j
    for n in range(1, N):
        out *= _ppow(c * _th(1, PI * n / N + complex(theta_) / N, tpN), n / N)
    return out


def P_factor(theta_, phi_i, phi_j, N: int, tau_prime) -> complex:
    tpN = complex(tau_prime) / N
    th, a, b = complex(theta_), complex(phi_i), complex(phi_j)
    out = 1 + 0j
    for n in range(N):
        c = PI / N * (n + 0.5)
        num = _th(1, c + (a - b + th) / (2 * N), tpN) * _th(4, c + (a + b + th) / (2 * N), tpN)
        den = _th(1, c + (a - b - th) / (2 * N), tpN) * _th(4, c + (a + b - th) / (2 * N), tpN)
        out *= _ppow(num / den, (N - 1 - 2 * n) / (2 * N))
    return out


def Q_factor(theta_, phi0, phik, N: int, tau_prime) -> complex:
    """Product over ``n = 1..N-1`` of four short-period thetas raised to ``n/N``."""
    tpN = complex(tau_prime) / N
    th, a, b = complex(theta_), complex(phi0), complex(phik)
    out = 1 + 0j
    for n in range(1, N):
        c = PI * n / N
        v = (_th(1, c + (th - a + b) / (2 * N), tpN) * _th(1, c + (th + a - b) / (2 * N), tpN)
             * _th(4, c + (th + a + b) / (2 * N), tpN) * _th(4, c + (th - a - b) / (2 * N), tpN))
        out *= _ppow(v, n / N)
    return out


def F_factors(theta1, theta3, phi, N: int, tau_prime) -> tuple[complex, complex, complex]:
    """``(F_{theta1}, F_{theta3}, F_{theta1+theta3})`` for ``phi = (phi0, phi1, phi2, phi3)``."""
    p0, p1, p2, p3 = (complex(v) for v in phi)
    t1, t3 = complex(theta1), complex(theta3)
    f1 = K_factor(t1, N, tau_prime) * P_factor(t1, p2, p3, N, tau_prime) / Q_factor(t1, p0, p1, N, tau_prime)
    f3 = K_factor(t3, N, tau_prime) * P_factor(t3, p1, p2, N, tau_prime) / Q_factor(t3, p0, p3, N, tau_prime)
    f13 = (K_factor(t1 + t3, N, tau_prime) * P_factor(t1 + t3, p0, p2, N, tau_prime)
           / Q_factor(t1 + t3, p1, p3, N, tau_prime))
    return f1, f3, f13


def factor_R_discrete(theta1, theta3, phi, N: int, tau_prime, check_tol: float | None = 1e-8) -> complex:
    """``R = F_{theta1} F_{theta3} / F_{theta1+theta3}``.

    ``phi = (phi0, phi1, phi2, phi3)`` must solve the three-leg equation;
    with ``check_tol`` set, a residual above it raises :class:`BadInput`.
    """
    if check_tol is not None:
        from .classical import ClassicalParams, threeleg_residual

        res = threeleg_residual(phi[0], theta1, theta3, phi[1], phi[2], phi[3], ClassicalParams(tau_prime))
        if res > check_tol:
            raise BadInput(f"phi0 does not solve the three-leg equation (residual {res:.2e})")
    f1, f3, f13 = F_factors(theta1, theta3, phi, N, tau_prime)
    return f1 * f3 / f13


# ---------------------------------------------------------------------------
# Exact Z_N star-triangle check


@dataclass
class DiscreteSTRReport:
    max_residual: float
    R_formula: complex
    R_ratio: complex
    ratio_spread: float
    N: int
    phi: tuple
    worst: tuple = field(default=())


def star_triangle_sides(theta1, theta3, phi, N: int, tau_prime):
    """Arrays ``lhs[n1,n2,n3]`` (sum over ``n0``) and ``rhs`` without the factor ``R``."""
    p0, p1, p2, p3 = (complex(v) for v in phi)
    t1, t3 = complex(theta1), complex(theta3)
    tp = tau_prime
    Wa = weight_table(PI - t1, p1, p0, N, tp)     # W_{pi-t1}(n1, n0)
    Wb = weight_table(t1 + t3, p2, p0, N, tp)     # W_{t1+t3}(n2, n0)
    Wc = weight_table(PI - t3, p3, p0, N, tp)     # W_{pi-t3}(n3, n0)
    S = np.array([discrete_S(p0, n, N, tp) for n in range(N)])
    lhs = np.einsum("d,ad,bd,cd->abc", S, Wa, Wb, Wc)
    T1 = weight_table(t1, p2, p3, N, tp)          # W_{t1}(n2, n3)
    T2 = weight_table(PI - t1 - t3, p1, p3, N, tp)  # W_{pi-t1-t3}(n1, n3)
    T3 = weight_table(t3, p1, p2, N, tp)          # W_{t3}(n1, n2)
    rhs = np.einsum("bc,ac,ab->abc", T1, T2, T3)
    return lhs, rhs


def verify_str_discrete(theta1, theta3, phi1, phi2, phi3, N: int, tau_prime,
                        phi0: complex | None = None) -> DiscreteSTRReport:
    """Exact finite-sum check of the discrete star-triangle relation.

    ``phi0`` defaults to the solution of the three-leg equation.  The
    residual for each ``(n1, n2, n3)`` is ``|lhs - R rhs| / |R rhs|`` with
    ``R`` from :func:`factor_R_discrete`; the brute-force ratio ``lhs/rhs``
    is reported alongside (its spread over sectors should vanish).
    """
    from .classical import ClassicalParams, solve_q4_threeleg

    if phi0 is None:
        phi0 = solve_q4_threeleg(theta1, theta3, phi1, phi2, phi3, ClassicalParams(tau_prime, N))
    phi = (complex(phi0), complex(phi1), complex(phi2), complex(phi3))
    lhs, rhs = star_triangle_sides(theta1, theta3, phi, N, tau_prime)
    R = factor_R_discrete(theta1, theta3, phi, N, tau_prime)
    res = np.abs(lhs - R * rhs) / np.abs(R * rhs)
    ratio = lhs / rhs
    worst = tuple(int(i) for i in np.unravel_index(int(np.argmax(res)), res.shape))
    return DiscreteSTRReport(
        max_residual=float(res.max()), R_formula=R, R_ratio=complex(ratio.flat[0]),
        ratio_spread=float(np.max(np.abs(ratio / ratio.flat[0] - 1))), N=N, phi=phi, worst=worst)


# ---------------------------------------------------------------------------
# Kashiwara-Miwa specialization: every phi equal to pi (zeta + nu)


@dataclass(frozen=True)
class KMParams:
    N: int
    zeta: int
    nu: float
    tau_prime: complex

    def __post_init__(self):
        if self.nu not in (0, 0.5):
            raise BadInput(f"nu must be 0 or 1/2, got {self.nu}")
        if self.N < 1:
            raise BadInput("N must be positive")

    @property
    def phi(self) -> float:
        return PI * (self.zeta + self.nu)


def _km_product(j, shift, theta_, n, kp: KMParams):
    N, tpN, th = kp.N, complex(kp.tau_prime) / kp.N, complex(theta_)

    def term(k):
        a = PI / N * (k - 0.5 + shift)
        return _th(j, a - th / (2 * N), tpN) / _th(j, a + th / (2 * N), tpN)

    return _shifted_product(term, n)


def km_r(kp: KMParams, theta_, n: int) -> complex:
    return _km_product(1, 0.0, theta_, int(n), kp)


def km_t(kp: KMParams, theta_, n: int) -> complex:
    return _km_product(4, kp.nu, theta_, int(n), kp)


def km_weights(kp: KMParams, theta_, n_i: int, n_j: int) -> complex:
    """``r(n_i - n_j) t(n_i + n_j + zeta)``, normalized by ``W(0, 0) = t(zeta)``."""
    return km_r(kp, theta_, n_i - n_j) * km_t(kp, theta_, n_i + n_j + kp.zeta)


def km_S(kp: KMParams, n: int) -> complex:
    N, tp = kp.N, complex(kp.tau_prime)
    return _th(4, PI / N * (2 * n + kp.zeta + kp.nu), tp / N) / (math.sqrt(N) * _th(4, PI * kp.nu, tp))


def km_table(kp: KMParams, theta_) -> np.ndarray:
    return np.array([[km_weights(kp, theta_, a, b) for b in range(kp.N)] for a in range(kp.N)])


def km_F(kp: KMParams, theta_) -> complex:
    N, tpN, th, nu = kp.N, complex(kp.tau_prime) / kp.N, complex(theta_), kp.nu
    out = 1 + 0j
    for k in range(1, N // 2 + 1):
        out *= _th(1, PI / N * (k - 0.5) + th / (2 * N), tpN) / _th(1, PI / N * k - th / (2 * N), tpN)
    for k in range(1, int((N - 2 * nu) // 2) + 1):
        out *= _th(4, PI / N * (k - 0.5 + nu) + th / (2 * N), tpN) / _th(4, PI / N * (k + nu) - th / (2 * N), tpN)
    return out


def km_R(kp: KMParams, theta1, theta3) -> complex:
    return km_F(kp, theta1) * km_F(kp, theta3) / km_F(kp, complex(theta1) + complex(theta3))


def km_normalization(kp: KMParams, theta_) -> complex:
    """Constant ``c`` with ``km_weights = c * discrete_W`` at ``phi = pi (zeta + nu)``; it equals ``t(zeta)``."""
    return km_t(kp, theta_, kp.zeta)


@dataclass
class KMReport:
    max_residual: float
    R: complex
    ratio_spread: float
    reduction_error: float
    normalization: dict
    N: int
    zeta: int
    nu: float


def verify_km(kp: KMParams, theta1, theta3) -> KMReport:
    """Exact ``Z_N`` sum check of the KM star-triangle relation plus the reduction of the general weights."""
    t1, t3 = complex(theta1), complex(theta3)
    S = np.array([km_S(kp, n) for n in range(kp.N)])
    lhs = np.einsum("d,ad,bd,cd->abc", S, km_table(kp, PI - t1), km_table(kp, t1 + t3), km_table(kp, PI - t3))
    rhs = np.einsum("bc,ac,ab->abc", km_table(kp, t1), km_table(kp, PI - t1 - t3), km_table(kp, t3))
    R = km_R(kp, t1, t3)
    res = np.abs(lhs - R * rhs) / np.abs(R * rhs)
    ratio = lhs / rhs
    red, norms = 0.0, {}
    c = kp.phi
    for th in (t1, t3, PI - t1, PI - t3, t1 + t3, PI - t1 - t3):
        const = km_normalization(kp, th)
        gen = weight_table(th, c, c, kp.N, kp.tau_prime)
        red = max(red, float(np.max(np.abs(const * gen - km_table(kp, th)) / np.abs(km_table(kp, th)))))
        norms[f"{th.real:.12g}"] = const
    sg = np.array([discrete_S(c, n, kp.N, kp.tau_prime) for n in range(kp.N)])
    red = max(red, float(np.max(np.abs(sg - S) / np.abs(S))))
    return KMReport(float(res.max()), R, float(np.max(np.abs(ratio / ratio.flat[0] - 1))), red, norms,
                    kp.N, kp.zeta, kp.nu)


def table_to_json(theta_, phi_i, phi_j, N: int, tau_prime) -> str:
    """JSON export of a weight table and the site weights (complex as ``[re, im]``)."""
    W = weight_table(theta_, phi_i, phi_j, N, tau_prime)
    S = [discrete_S(phi_i, n, N, tau_prime) for n in range(N)]

    def c(z):
        z = complex(z)
        return [z.real, z.imag]

    return json.dumps({
        "N": N, "theta": c(theta_), "phi_i": c(phi_i), "phi_j": c(phi_j), "tau_prime": c(tau_prime),
        "W": [[c(v) for v in row] for row in W], "S": [c(v) for v in S],
        "branch": "principal base, exponent n/N applied once",
    }, indent=2)
