"""Low-temperature (classical) layer of the master solution.

When the second nome approaches a root of unity, ``q -> e^{i pi / N}``, the
logarithms of the edge and site weights grow like ``1/eps``.  The leading
coefficients are the Lagrangian ``L(theta | phi1, phi2)`` and the quadratic
``C(phi)``, written in the rescaled variables::

    theta = i N alpha / (1 + N tau)     phi = N (xi + pi tau / 2) / (1 + N tau)
    tau'  = N tau / (1 + N tau)         eta' = pi

Stationarity of the star action gives the three-leg form of Q4,
``Psi Psi Psi = 1``, which is solved here by damped Newton iteration
continued from the trigonometric closed form.

The small parameter is fixed by ``q = exp(i pi / N - eps / (2 N^2))``.
With this choice ``eta_eps = eta + eps / (2 N^2)`` holds exactly and
``-eps log W -> L`` holds with unit coefficient.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import (
    BadDomain,
    DegenerateSaddle,
    FitUnstable,
    LogBranchCross,
    NoConvergence,
    PoleHit,
    QuadratureNotConverged,
)
from .lattice import LatticeGraph
from .master_weights import WeightSpec, log_weight_S, log_weight_W
from .special_fn import EllipticParams, SeriesControl, dtheta, theta

PI = math.pi
# the near-root-of-unity nome needs long triple products
LIMIT_CONTROL = SeriesControl(max_terms=20_000_000)


# ---------------------------------------------------------------------------
# Parameter containers


@dataclass(frozen=True)
class LimitParams:
    """Approach to the root of unity: ``p = e^{i pi tau}``, ``q = e^{i pi/N - eps/(2N^2)}``."""

    N: int
    eps: float
    tau: complex

    def __post_init__(self):
        object.__setattr__(self, "tau", complex(self.tau))
        if int(self.N) != self.N or self.N < 1:
            raise BadDomain("N must be a positive integer")
        if not self.eps > 0:
            raise BadDomain("eps must be positive")
        if self.tau.imag <= 0:
            raise BadDomain("need Im tau > 0")
        if abs(1 + self.N * self.tau) < 1e-12:
            raise BadDomain("1 + N tau vanishes")

    @property
    def p(self) -> complex:
        return cmath.exp(1j * PI * self.tau)

    @property
    def q(self) -> complex:
        return cmath.exp(1j * PI / self.N - self.eps / (2 * self.N ** 2))

    @property
    def params(self) -> EllipticParams:
        return EllipticParams(self.tau, 1 / self.N + 1j * self.eps / (2 * PI * self.N ** 2))

    @property
    def eta_eps(self) -> complex:
        return self.params.eta

    @property
    def eta_limit(self) -> complex:
        return -1j * (PI / self.N + PI * self.tau)

    @property
    def tau_prime(self) -> complex:
        return self.N * self.tau / (1 + self.N * self.tau)

    def theta_of(self, alpha) -> complex:
        return 1j * self.N * complex(alpha) / (1 + self.N * self.tau)

    def phi_of(self, xi) -> complex:
        return self.N * (complex(xi) + PI * self.tau / 2) / (1 + self.N * self.tau)

    def classical(self) -> "ClassicalParams":
        return ClassicalParams(self.tau_prime, self.N)


@dataclass(frozen=True)
class ClassicalParams:
    """Rescaled period ``tau'`` (and ``N``, needed only to recover ``tau``)."""

    tau_prime: complex
    N: int = 1

    def __post_init__(self):
        object.__setattr__(self, "tau_prime", complex(self.tau_prime))
        if self.tau_prime.imag <= 0:
            raise BadDomain("need Im tau' > 0")

    @property
    def eta_prime(self) -> float:
        return PI

    @property
    def tau(self) -> complex:
        """Original period: ``tau = tau' / (N (1 - tau'))``."""
        return self.tau_prime / (self.N * (1 - self.tau_prime))

    @property
    def prefactor(self) -> complex:
        """``i N tau / tau' = i / (1 - tau')``."""
        return 1j / (1 - self.tau_prime)

    def with_tau_prime(self, tp) -> "ClassicalParams":
        return ClassicalParams(tp, self.N)


@dataclass(frozen=True)
class SpinDecomposition:
    xi: float
    n: int
    N: int

    @classmethod
    def of(cls, x: float, N: int) -> "SpinDecomposition":
        """Split ``x = xi + 2 pi n / N`` with ``-pi/N < xi <= pi/N``."""
        step = 2 * PI / N
        n = int(math.floor(x / step + 0.5))
        xi = x - n * step
        if xi <= -PI / N:
            xi += step
            n -= 1
        return cls(xi, n % N, N)

    @property
    def x(self) -> float:
        return self.xi + 2 * PI * self.n / self.N


@dataclass(frozen=True)
class SegmentControl:
    """Composite Gauss-Legendre rule on a straight segment, refined by panel doubling."""

    order: int = 16
    panels: int = 4
    rel_tol: float = 1e-13
    max_panels: int = 1024


# ---------------------------------------------------------------------------
# Quadratic terms


def c_term(phi, tau_prime) -> complex:
    """``C(phi) = (1/2) ((2 phi - pi) / (1 - tau'))^2``."""
    tp = complex(tau_prime)
    return 0.5 * ((2 * np.asarray(phi) - PI) / (1 - tp)) ** 2


def c_term_original(xi, N: int) -> float:
    """Period-``pi/N`` extension of ``2 (N xi - pi/2)^2`` from ``(0, pi/N)``."""
    r = np.mod(np.asarray(xi, dtype=float), PI / N)
    out = 2 * (N * r - PI / 2) ** 2
    return out if np.ndim(out) else float(out)


# ---------------------------------------------------------------------------
# Lagrangians


def _log_ratio(j, z, th, tp):
    """Principal ``log theta_j((z-th)/2) - log theta_j((z+th)/2)`` at period ``tp``."""
    num = theta(j, (z - th) / 2, tp)
    den = theta(j, (z + th) / 2, tp)
    if np.any(np.abs(num) < 1e-300) or np.any(np.abs(den) < 1e-300):
        raise LogBranchCross("integration path hits a theta zero")
    return np.log(num / den)


def segment_integral(f, a, b, ctl: SegmentControl = SegmentControl()) -> complex:
    """``int_a^b f(z) dz`` along the straight segment, with ``Im f`` unwrapped.

    ``f`` is a logarithm known only modulo ``2 pi i``; the branch is fixed
    by continuity from its principal value at ``a``.
    """
    a, b = complex(a), complex(b)
    if a == b:
        return 0j
    x, w = leggauss(ctl.order)
    panels = ctl.panels
    start = complex(np.asarray(f(np.array([a])))[0])
    prev = None
    while True:
        e = np.linspace(0.0, 1.0, panels + 1)
        h = np.diff(e)
        t = (e[:-1, None] + (x[None, :] + 1) / 2 * h[:, None]).ravel()
        wt = (w[None, :] / 2 * h[:, None]).ravel()
        vals = np.asarray(f(a + (b - a) * t), dtype=complex)
        im = np.unwrap(np.concatenate([[start.imag], vals.imag]))
        # consecutive unwrapped values must stay close, else the winding is ambiguous
        resolved = float(np.max(np.abs(np.diff(im)))) < 1.0
        im = im[1:]
        val = complex(np.dot(vals.real + 1j * im, wt) * (b - a))
        if prev is not None and resolved and abs(val - prev) <= ctl.rel_tol * max(abs(val), 1.0):
            return val
        if 2 * panels > ctl.max_panels:
            if not resolved:
                raise LogBranchCross("log argument winds too fast to follow along the segment")
            raise QuadratureNotConverged(f"segment integral not converged at {panels} panels")
        prev = val
        panels *= 2


def lagrangian(theta_, phi1, phi2, cp: ClassicalParams,
               ctl: SegmentControl = SegmentControl()) -> complex:
    """Leading coefficient ``L(theta | phi1, phi2)`` of ``-eps log W``.

    ``-(theta/2pi)(C(phi1) + C(phi2)) + i/(1-tau') [I2 + I3]`` where ``I2``
    runs from ``0`` to ``phi1 - phi2`` over the theta2 log-ratio and ``I3``
    from ``pi`` to ``phi1 + phi2`` over the theta3 log-ratio.
    """
    th = complex(theta_)
    tp = cp.tau_prime
    quad = -th / (2 * PI) * (c_term(phi1, tp) + c_term(phi2, tp))
    if th == 0:
        return complex(quad)
    i2 = segment_integral(lambda z: _log_ratio(2, z, th, tp), 0.0, complex(phi1) - complex(phi2), ctl)
    i3 = segment_integral(lambda z: _log_ratio(3, z, th, tp), PI, complex(phi1) + complex(phi2), ctl)
    return complex(quad + cp.prefactor * (i2 + i3))


def c_term_derivative(phi, tau_prime) -> complex:
    tp = complex(tau_prime)
    return 2 * (2 * np.asarray(phi) - PI) / (1 - tp) ** 2


def lagrangian_gradient(theta_, phi1, phi2, cp: ClassicalParams) -> tuple[complex, complex]:
    """``(dL/dphi1, dL/dphi2)``: ``-(theta/2pi) C'(phi_i) - i/(1-tau') log Psi_theta(phi_i, phi_j)``.

    ``log Psi`` is the principal branch, which agrees with the continuously
    followed integrand as long as the segments do not wind (the regime in
    which :func:`lagrangian` itself succeeds without a branch shift).
    """
    th, tp = complex(theta_), cp.tau_prime
    out = []
    for a, b in ((phi1, phi2), (phi2, phi1)):
        g = -th / (2 * PI) * c_term_derivative(a, tp) - cp.prefactor * cmath.log(psi(th, a, b, tp))
        out.append(complex(g))
    return out[0], out[1]


def lagrangian_original(alpha, xi1, xi2, lp: LimitParams, crossed: bool = False,
                        ctl: SegmentControl = SegmentControl()) -> complex:
    """The same Lagrangian in the original variables ``(alpha, xi, tau)``.

    With ``crossed=False`` this is ``L~(alpha | xi1, xi2)``, two integrals of
    theta3 log-ratios at period ``N tau``.  With ``crossed=True`` it is
    ``L~(eta - alpha | xi1, xi2)``: theta1 log-ratios plus
    ``pi^2/2 - (N xi1)^2 - (N xi2)^2``.
    """
    N, tau = lp.N, lp.tau
    a = complex(alpha)
    T = N * tau
    if crossed:
        def f(z):
            num = theta(1, N / 2 * (1j * a + z), T)
            den = theta(1, N / 2 * (1j * a - z), T)
            return np.log(num / den)
        head = PI ** 2 / 2 - (N * xi1) ** 2 - (N * xi2) ** 2
        # at z = 0 the ratio is 1; along the path it is followed continuously
    else:
        if a == 0:
            return 0j

        def f(z):
            num = theta(3, N / 2 * (z - 1j * a), T)
            den = theta(3, N / 2 * (z + 1j * a), T)
            return np.log(num / den)
        head = 0.0
    i1 = segment_integral(f, 0.0, xi1 - xi2, ctl)
    i2 = segment_integral(f, PI / N, xi1 + xi2, ctl)
    return complex(head + 1j * N * (i1 + i2))


# ---------------------------------------------------------------------------
# Psi functions


def psi(theta_, phi_i, phi_j, tau_prime) -> complex:
    """The theta2-theta3 cross-ratio ``Psi_theta(phi_i, phi_j)`` at period ``tau'``."""
    th, a, b = complex(theta_), np.asarray(phi_i), np.asarray(phi_j)
    tp = complex(tau_prime)
    args = np.stack(np.broadcast_arrays((a - b + th) / 2, (a - b - th) / 2,
                                        (a + b + th) / 2, (a + b - th) / 2)).astype(complex)
    t2 = theta(2, args[:2], tp)
    t3 = theta(3, args[2:], tp)
    if np.any(np.abs(t2[1]) < 1e-300) or np.any(np.abs(t3[1]) < 1e-300):
        raise PoleHit("Psi denominator vanishes")
    out = t2[0] / t2[1] * t3[0] / t3[1]
    return out if np.ndim(out) else complex(out)


def dlog_psi(theta_, phi_i, phi_j, tau_prime, wrt: int = 0) -> complex:
    """Derivative of ``log Psi_theta(phi_i, phi_j)`` in ``phi_i`` (``wrt=0``) or ``phi_j`` (``wrt=1``)."""
    th, a, b = complex(theta_), complex(phi_i), complex(phi_j)
    tp = complex(tau_prime)

    def lg(j, z):
        return dtheta(j, z, tp) / theta(j, z, tp)

    s = 1.0 if wrt == 0 else -1.0
    d2 = lg(2, (a - b + th) / 2) - lg(2, (a - b - th) / 2)
    d3 = lg(3, (a + b + th) / 2) - lg(3, (a + b - th) / 2)
    return complex(0.5 * (s * d2 + d3))


def psi_tilde(j: int, x, y, alpha, tau, N: int) -> complex:
    """The theta_j cross-ratio in the original variables, at period ``N tau``."""
    a = complex(alpha)
    T = N * complex(tau)
    x, y = complex(x), complex(y)
    num = theta(j, np.array([N / 2 * (x - y + 1j * a), N / 2 * (x + y + 1j * a)]), T)
    den = theta(j, np.array([N / 2 * (x - y - 1j * a), N / 2 * (x + y - 1j * a)]), T)
    if np.any(np.abs(den) < 1e-300):
        raise PoleHit("Psi~ denominator vanishes")
    return complex(num[0] / den[0] * num[1] / den[1])


# ---------------------------------------------------------------------------
# Three-leg Q4 and its canonical form


def cp_phi0_trig(theta1, theta3, phi1, phi2, phi3) -> complex:
    """Closed-form stationary field in the trigonometric limit ``tau' -> i oo``.

    ``e^{i phi0} = e^{i(phi1+phi2+phi3)} (sum e^{-i phi_k} sin theta_k) / (sum e^{+i phi_k} sin theta_k)``
    with ``theta2 = pi - theta1 - theta3``.  Returns the principal logarithm.
    """
    from .errors import DegenerateDenominator

    t1, t3 = complex(theta1), complex(theta3)
    s = [cmath.sin(t1), cmath.sin(PI - t1 - t3), cmath.sin(t3)]
    ph = [complex(phi1), complex(phi2), complex(phi3)]
    den = sum(sk * cmath.exp(1j * p) for sk, p in zip(s, ph))
    num = sum(sk * cmath.exp(-1j * p) for sk, p in zip(s, ph))
    if abs(den) < 1e-14 * max(1.0, abs(num)):
        raise DegenerateDenominator("trigonometric phi0 formula has a vanishing denominator")
    return -1j * cmath.log(cmath.exp(1j * sum(ph)) * num / den)


def _star_legs(theta1, theta3, phi1, phi2, phi3):
    t1, t3 = complex(theta1), complex(theta3)
    return ((PI - t1, complex(phi1)), (t1 + t3, complex(phi2)), (PI - t3, complex(phi3)))


def threeleg_residual(phi0, theta1, theta3, phi1, phi2, phi3, cp: ClassicalParams) -> float:
    """``|Psi_{pi-t1}(phi0,phi1) Psi_{t1+t3}(phi0,phi2) Psi_{pi-t3}(phi0,phi3) - 1|``."""
    prod = 1.0 + 0j
    for th, ph in _star_legs(theta1, theta3, phi1, phi2, phi3):
        prod *= psi(th, phi0, ph, cp.tau_prime)
    return float(abs(prod - 1))


def threeleg_alternatives(phi0, theta1, theta3, phi1, phi2, phi3, cp: ClassicalParams) -> list[float]:
    """Residuals ``|lhs/rhs - 1|`` of the three other equivalent three-leg forms."""
    t1, t3, tp = complex(theta1), complex(theta3), cp.tau_prime
    p0, p1, p2, p3 = (complex(v) for v in (phi0, phi1, phi2, phi3))
    forms = [
        (psi(PI - t1, p1, p0, tp), psi(PI - t1 - t3, p1, p3, tp) * psi(t3, p1, p2, tp)),
        (psi(t1 + t3, p2, p0, tp), psi(t1, p2, p3, tp) * psi(t3, p2, p1, tp)),
        (psi(PI - t3, p3, p0, tp), psi(t1, p3, p2, tp) * psi(PI - t1 - t3, p3, p1, tp)),
    ]
    return [float(abs(l / r - 1)) for l, r in forms]


def _newton_threeleg(phi0, legs, tp, tol, max_iter):
    res = math.inf
    for _ in range(max_iter):
        g = sum(np.log(psi(th, phi0, ph, tp)) for th, ph in legs)
        g = complex(g)
        g = g - 2j * PI * round(g.imag / (2 * PI))
        res = abs(g)
        if res < tol:
            return phi0, res, True
        dg = sum(dlog_psi(th, phi0, ph, tp, 0) for th, ph in legs)
        if dg == 0:
            break
        step = -g / dg
        lam = 1.0
        while lam > 1e-4:
            cand = phi0 + lam * step
            try:
                gc = complex(sum(np.log(psi(th, cand, ph, tp)) for th, ph in legs))
            except PoleHit:
                lam /= 2
                continue
            gc = gc - 2j * PI * round(gc.imag / (2 * PI))
            if abs(gc) < res:
                phi0 = cand
                break
            lam /= 2
        else:
            break
    return phi0, res, False


def solve_q4_threeleg(theta1, theta3, phi1, phi2, phi3, cp: ClassicalParams,
                      tol: float = 1e-13, max_iter: int = 50, seed: complex | None = None,
                      start_im: float = 40.0, steps: int = 16) -> complex:
    """Stationary field ``phi0`` of the star action (three-leg form of Q4).

    The seed is the trigonometric closed form, continued from
    ``Im tau' = start_im`` down to the target along a geometric ladder;
    each rung is finished with damped Newton on the log of the Psi product.
    Raises :class:`NoConvergence` (with ``.residual``) on failure.
    """
    legs = _star_legs(theta1, theta3, phi1, phi2, phi3)
    tp = cp.tau_prime
    phi0 = complex(seed) if seed is not None else cp_phi0_trig(theta1, theta3, phi1, phi2, phi3)
    if seed is None and tp.imag < start_im:
        ladder = np.geomspace(start_im, tp.imag, steps + 1)[1:-1]
        for im in ladder:
            phi0, _, _ = _newton_threeleg(phi0, legs, tp.real + 1j * im, 1e-12, max_iter)
    phi0, res, ok = _newton_threeleg(phi0, legs, tp, tol, max_iter)
    if not ok:
        err = NoConvergence(f"three-leg Newton stalled at residual {res:.3e}")
        err.residual = res
        raise err
    # land in the strip -pi < Re phi0 <= pi (Psi is 2 pi periodic in phi0)
    phi0 = complex(phi0)
    return phi0 - 2 * PI * math.floor((phi0.real + PI) / (2 * PI))


def T_fun(theta_, tau_prime) -> complex:
    """``T(theta) = theta1(theta/2 | tau'/2) / theta2(theta/2 | tau'/2)``."""
    h = complex(tau_prime) / 2
    return complex(theta(1, complex(theta_) / 2, h) / theta(2, complex(theta_) / 2, h))


@dataclass(frozen=True)
class Q4Quad:
    theta1: complex
    theta3: complex
    phi: tuple
    tau_prime: complex
    u: tuple = field(init=False)

    def __post_init__(self):
        h = complex(self.tau_prime) / 2
        us = []
        for j, ph in enumerate(self.phi):
            t1 = complex(theta(1, complex(ph) / 2, h))
            t2 = complex(theta(2, complex(ph) / 2, h))
            den = t1 if j == 2 else t2
            if abs(den) <= 1e-14 * max(abs(t1), abs(t2)):
                raise PoleHit(f"canonical variable u{j} is infinite at phi = {ph}")
            us.append(t2 / t1 if j == 2 else t1 / t2)
        object.__setattr__(self, "u", tuple(us))

    def T(self, th) -> complex:
        return T_fun(th, self.tau_prime)


def q4_canonical_residual(q: Q4Quad) -> complex:
    """Value of the affine-linear Q4 expression at ``q.u``; zero on solutions."""
    u0, u1, u2, u3 = q.u
    a, b, c = q.T(q.theta1), q.T(q.theta1 + q.theta3), q.T(q.theta3)
    return complex(a * (u0 * u1 - u2 * u3) + b * (u0 * u2 - u1 * u3)
                   + c * (u0 * u3 - u1 * u2) + a * b * c * (u0 * u1 * u2 * u3 - 1))


# ---------------------------------------------------------------------------
# Actions and the saddle factor


def action_star(phi0, phi1, phi2, phi3, theta1, theta3, cp: ClassicalParams,
                ctl: SegmentControl = SegmentControl()) -> complex:
    t1, t3 = complex(theta1), complex(theta3)
    return (lagrangian(PI - t1, phi1, phi0, cp, ctl) + lagrangian(t1 + t3, phi2, phi0, cp, ctl)
            + lagrangian(PI - t3, phi3, phi0, cp, ctl) + complex(c_term(phi0, cp.tau_prime)))


def action_triangle(phi1, phi2, phi3, theta1, theta3, cp: ClassicalParams,
                    ctl: SegmentControl = SegmentControl()) -> complex:
    t1, t3 = complex(theta1), complex(theta3)
    return (lagrangian(t1, phi2, phi3, cp, ctl) + lagrangian(PI - t1 - t3, phi3, phi1, cp, ctl)
            + lagrangian(t3, phi1, phi2, cp, ctl))


def action_star_second(phi0, phi1, phi2, phi3, theta1, theta3, cp: ClassicalParams) -> complex:
    """Closed-form ``d^2 A_star / d phi0^2 = -i/(1-tau') sum_k d log Psi_k / d phi0``.

    The first derivative is ``-i/(1-tau') sum_k log Psi_k``; the C terms
    cancel by the sum rule of the three legs.
    """
    legs = _star_legs(theta1, theta3, phi1, phi2, phi3)
    return complex(-cp.prefactor * sum(dlog_psi(th, phi0, ph, cp.tau_prime, 0) for th, ph in legs))


def saddle_second_derivative(phi0, phi1, phi2, phi3, theta1, theta3, cp: ClassicalParams,
                             h: float = 1e-2, ctl: SegmentControl = SegmentControl()) -> complex:
    """``A_star''(phi0)`` by Richardson-refined central second differences."""
    def A(x):
        return action_star(x, phi1, phi2, phi3, theta1, theta3, cp, ctl)

    a0 = A(phi0)

    def d2(s):
        return (A(phi0 + s) - 2 * a0 + A(phi0 - s)) / s ** 2

    r1, r2, r3 = d2(h), d2(h / 2), d2(h / 4)
    s1 = (4 * r2 - r1) / 3
    s2 = (4 * r3 - r2) / 3
    return complex((16 * s2 - s1) / 15)


def saddle_R(phi0, phi1, phi2, phi3, theta1, theta3, cp: ClassicalParams,
             ctl: SegmentControl = SegmentControl()) -> complex:
    """``(tau'/tau) (A_star''(phi0) / 2 pi)^{1/2}`` with ``tau'/tau = N (1 - tau')``."""
    a2 = saddle_second_derivative(phi0, phi1, phi2, phi3, theta1, theta3, cp, ctl=ctl)
    if abs(a2) < 1e-8:
        raise DegenerateSaddle(f"second derivative of the star action is {abs(a2):.2e}")
    return complex(cp.N * (1 - cp.tau_prime) * cmath.sqrt(a2 / (2 * PI)))


# ---------------------------------------------------------------------------
# Energy functional on graphs


@dataclass
class EnergyResult:
    phi: dict
    energy: complex
    residual: float
    iterations: int


def _site_equations(order, nbrs, phi, tp):
    g = np.zeros(len(order), dtype=complex)
    for k, s in enumerate(order):
        tot = 0j
        for th, t in nbrs[s]:
            tot += np.log(psi(th, phi[s], phi[t], tp))
        g[k] = tot - 2j * PI * round(tot.imag / (2 * PI))
    return g


def edge_thetas(g: LatticeGraph, params: EllipticParams) -> list[complex]:
    """``theta_ij = pi alpha_ij / eta`` (``eta' = pi``), from the edge rapidities."""
    from .lattice import assign_alphas

    a = assign_alphas(g, params, physical=False)
    return [PI * al / params.eta for al in a.alphas]


def minimize_energy(g: LatticeGraph, thetas: Sequence[complex], boundary_phi: Mapping[str, complex],
                    cp: ClassicalParams, seed: Mapping[str, complex] | None = None,
                    tol: float = 1e-10, max_iter: int = 50,
                    ctl: SegmentControl = SegmentControl()) -> EnergyResult:
    """Solve ``prod_j Psi_{theta_ij}(phi_i, phi_j) = 1`` at every internal site and return the energy.

    The sum rule ``sum_j theta_ij = 2 pi`` must hold at internal sites.  The
    energy is ``sum_edges L + sum_internal C``, with the internal-site C terms
    collected as ``(1 - sum_j theta_ij / 2 pi) C(phi_i)`` so that they vanish
    under the sum rule.
    """
    thetas = [complex(t) for t in thetas]
    if len(thetas) != len(g.edges):
        raise ValueError("need one theta per edge")
    tp = cp.tau_prime
    internal = [s.id for s in g.internal]
    phi: dict = {}
    for s in g.sites:
        if s.boundary:
            if s.id not in boundary_phi:
                raise ValueError(f"missing boundary phi for site {s.id}")
            phi[s.id] = complex(boundary_phi[s.id])
    nbrs: dict = {s: [] for s in internal}
    for e, th in zip(g.edges, thetas):
        if e.a in nbrs:
            nbrs[e.a].append((th, e.b))
        if e.b in nbrs:
            nbrs[e.b].append((th, e.a))
    for s in internal:
        tot = sum(th for th, _ in nbrs[s])
        if abs(tot - 2 * PI) > 1e-9:
            raise BadDomain(f"sum rule fails at site {s}: sum theta = {tot}")
    if internal:
        mean = complex(np.mean(list(phi.values()))) if phi else 0j
        for s in internal:
            phi[s] = complex(seed[s]) if seed and s in seed else mean
    it = 0
    res = 0.0
    if internal:
        gv = _site_equations(internal, nbrs, phi, tp)
        res = float(np.max(np.abs(gv)))
        idx = {s: k for k, s in enumerate(internal)}
        while res > tol:
            if it >= max_iter:
                err = NoConvergence(f"energy minimization stalled, worst-site residual {res:.3e}")
                err.residual = res
                raise err
            J = np.zeros((len(internal), len(internal)), dtype=complex)
            for s in internal:
                i = idx[s]
                for th, t in nbrs[s]:
                    J[i, i] += dlog_psi(th, phi[s], phi[t], tp, 0)
                    if t in idx:
                        J[i, idx[t]] += dlog_psi(th, phi[s], phi[t], tp, 1)
            step = np.linalg.solve(J, -gv)
            lam = 1.0
            while True:
                cand = dict(phi)
                for s in internal:
                    cand[s] = phi[s] + lam * step[idx[s]]
                try:
                    gc = _site_equations(internal, nbrs, cand, tp)
                    rc = float(np.max(np.abs(gc)))
                except PoleHit:
                    rc = math.inf
                if rc < res or lam < 1e-4:
                    break
                lam /= 2
            if rc >= res:
                err = NoConvergence(f"damped Newton cannot reduce residual {res:.3e}")
                err.residual = res
                raise err
            phi, gv, res = cand, gc, rc
            it += 1
    energy = 0j
    for e, th in zip(g.edges, thetas):
        # integral parts plus the C terms of boundary endpoints only
        full = lagrangian(th, phi[e.a], phi[e.b], cp, ctl)
        for end in (e.a, e.b):
            if end in nbrs:
                full += th / (2 * PI) * c_term(phi[end], tp)
        energy += full
    for s in internal:
        tot = sum(th for th, _ in nbrs[s])
        energy += (1 - tot / (2 * PI)) * c_term(phi[s], tp)
    return EnergyResult(phi, complex(energy), res, it)


def energy_direct(g: LatticeGraph, thetas: Sequence[complex], phi: Mapping[str, complex],
                  cp: ClassicalParams, ctl: SegmentControl = SegmentControl()) -> complex:
    """``sum_edges L(theta_ij | phi_i, phi_j) + sum_internal C(phi_m)`` without any cancellation."""
    tot = sum(lagrangian(th, phi[e.a], phi[e.b], cp, ctl) for e, th in zip(g.edges, thetas))
    tot += sum(c_term(phi[s.id], cp.tau_prime) for s in g.internal)
    return complex(tot)


# ---------------------------------------------------------------------------
# Asymptotics of the quantum weights


@dataclass
class AsymptoticReport:
    eps: tuple
    slope: complex
    lagrangian: complex
    slope_rel_err: float
    intercept: complex
    site_slope: complex
    c_value: complex
    site_rel_err: float
    site_intercept: complex
    samples: dict = field(default_factory=dict)


def _richardson(eps, vals):
    """Extrapolate ``v(eps) = v0 + a eps + b eps^2`` to ``eps = 0`` from three halving steps."""
    e = np.asarray(eps, dtype=float)
    v = np.asarray(vals, dtype=complex)
    if len(e) != 3 or not np.allclose(e[1:] / e[:-1], 0.5):
        V = np.vander(e, 3, increasing=True)
        cond = np.linalg.cond(V)
        if cond > 1e12:
            raise FitUnstable(f"extrapolation matrix is ill-conditioned ({cond:.1e})")
        return complex(np.linalg.solve(V.astype(complex), v)[0])
    a = 2 * v[1] - v[0]
    b = 2 * v[2] - v[1]
    return complex((4 * b - a) / 3)


def asymptotic_check(x1: float, x2: float, alpha, N: int, tau,
                     eps_sequence: Sequence[float] = (1e-2, 5e-3, 2.5e-3)) -> AsymptoticReport:
    """Fit ``log W`` and ``log S`` against the low-temperature expansion.

    ``-eps log W_alpha(x1, x2)`` extrapolates to ``L(theta | phi1, phi2)``
    and ``log W + L/eps`` to the finite intercept; likewise
    ``-eps (log S(x1) + log(eps)/2)`` extrapolates to ``C(phi1)``.
    Intercepts are reported with their imaginary parts reduced to ``(-pi, pi]``.
    """
    eps_sequence = tuple(float(e) for e in eps_sequence)
    if len(eps_sequence) < 3:
        raise FitUnstable("need at least three eps values")
    if max(eps_sequence) > 0.1:
        raise BadDomain("asymptotic checks require eps <= 0.1")
    d1, d2 = SpinDecomposition.of(x1, N), SpinDecomposition.of(x2, N)
    lp0 = LimitParams(N, eps_sequence[0], tau)
    cp = lp0.classical()
    th = lp0.theta_of(alpha)
    p1, p2 = lp0.phi_of(d1.xi), lp0.phi_of(d2.xi)
    L = lagrangian(th, p1, p2, cp)
    C = complex(c_term(p1, cp.tau_prime))
    slopes, inters, sslopes, sinters = [], [], [], []
    for eps in eps_sequence:
        lp = LimitParams(N, eps, tau)
        P = lp.params
        lw = complex(log_weight_W(WeightSpec(P, alpha, ctl=LIMIT_CONTROL), x1, x2))
        ls = complex(log_weight_S(P, x1, LIMIT_CONTROL))
        # logs are known mod 2 pi i; take the branch whose slope is nearest the prediction
        lw += 2j * PI * round((-L / eps - lw).imag / (2 * PI))
        ls += 2j * PI * round((-C / eps - 0.5 * math.log(eps) - ls).imag / (2 * PI))
        slopes.append(-eps * lw)
        inters.append(lw + L / eps)
        sslopes.append(-eps * (ls + 0.5 * math.log(eps)))
        sinters.append(ls + 0.5 * math.log(eps) + C / eps)

    def wrap(z):
        return complex(z.real, math.remainder(z.imag, 2 * PI))

    # the imaginary parts of the logs are fixed only mod 2 pi: align them to the first sample
    inters = [inters[0]] + [complex(v.real, inters[0].imag + math.remainder(v.imag - inters[0].imag, 2 * PI))
                            for v in inters[1:]]
    sinters = [sinters[0]] + [complex(v.real, sinters[0].imag + math.remainder(v.imag - sinters[0].imag, 2 * PI))
                              for v in sinters[1:]]
    slope = _richardson(eps_sequence, slopes)
    sslope = _richardson(eps_sequence, sslopes)
    c0 = wrap(_richardson(eps_sequence, inters))
    s0 = wrap(_richardson(eps_sequence, sinters))
    return AsymptoticReport(
        eps=eps_sequence, slope=slope, lagrangian=L,
        slope_rel_err=float(abs(slope - L) / max(abs(L), 1e-300)),
        intercept=c0, site_slope=sslope, c_value=C,
        site_rel_err=float(abs(sslope - C) / max(abs(C), 1e-300)),
        site_intercept=s0,
        samples={"theta": th, "phi1": p1, "phi2": p2, "n1": d1.n, "n2": d2.n,
                 "tau_prime": cp.tau_prime},
    )


@dataclass
class InterceptReport:
    n1: int
    n2: int
    weight_gap: float
    site_gap: float
    slope_rel_err: float
    site_rel_err: float


def _mod_2pi_i(z: complex) -> complex:
    return complex(z.real, math.remainder(z.imag, 2 * PI))


def intercept_check(xi1: float, xi2: float, n1: int, n2: int, alpha, N: int, tau,
                    eps_sequence: Sequence[float] = (1e-2, 5e-3, 2.5e-3)) -> InterceptReport:
    """Compare the ``O(1)`` terms of ``log W`` and ``log S`` with the discrete weights.

    The spins ``x_k = xi_k + 2 pi n_k / N`` are expanded at the integers
    ``(n1, n2)`` and at ``(0, 0)``.  The difference of the two intercepts
    must equal ``log W_disc(n1, n2)`` (normalized by ``W_disc(0, 0) = 1``),
    and likewise for ``S`` with ``n2`` ignored; both modulo ``2 pi i``.
    """
    from .discrete import discrete_S, discrete_W

    step = 2 * PI / N
    base = asymptotic_check(xi1, xi2, alpha, N, tau, eps_sequence)
    r = asymptotic_check(xi1 + step * n1, xi2 + step * n2, alpha, N, tau, eps_sequence)
    s = base.samples
    tp, th, p1, p2 = s["tau_prime"], s["theta"], s["phi1"], s["phi2"]
    lw = cmath.log(discrete_W(th, p1, p2, n1, n2, N, tp))
    ls = cmath.log(discrete_S(p1, n1, N, tp) / discrete_S(p1, 0, N, tp))
    return InterceptReport(
        n1, n2,
        weight_gap=abs(_mod_2pi_i(r.intercept - base.intercept - lw)),
        site_gap=abs(_mod_2pi_i(r.site_intercept - base.site_intercept - ls)),
        slope_rel_err=max(base.slope_rel_err, r.slope_rel_err),
        site_rel_err=max(base.site_rel_err, r.site_rel_err),
    )
