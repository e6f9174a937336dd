"""Continuous-spin master weights and quadrature checks of their identities.

Edge weight (kappa-normalized)::

    W_a(x, y) = Phi(x-y+ia)/Phi(x-y-ia) * Phi(x+y+ia)/Phi(x+y-ia) / kappa(a)

Site weight::

    S(x) = e^{eta/4}/(4 pi) * theta1(x|tau) theta1(x|sigma)

All evaluation goes through logarithms; ``weight_W`` and ``weight_S`` simply
exponentiate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Literal

import numpy as np

from ._summation import ksum
from .errors import BadDomain, PoleHit, PoleOnContour, QuadratureNotConverged
from .special_fn import (
    DEFAULT_CONTROL,
    EllipticParams,
    SeriesControl,
    log_elliptic_gamma,
    log_kappa,
    log_theta,
    theta,
)

TWO_PI = 2 * math.pi


def reduce_spin(x):
    """Map real spins onto ``[0, 2 pi)``; complex (contour-shifted) spins reduce their real part."""
    x = np.asarray(x)
    if np.iscomplexobj(x):
        return np.mod(x.real, TWO_PI) + 1j * x.imag
    return np.mod(x, TWO_PI)


@dataclass(frozen=True)
class WeightSpec:
    params: EllipticParams
    alpha: complex
    normalization: Literal["kappa", "raw"] = "kappa"
    ctl: SeriesControl = field(default=DEFAULT_CONTROL, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))
        if self.normalization not in ("kappa", "raw"):
            raise ValueError("normalization must be 'kappa' or 'raw'")

    def with_alpha(self, alpha) -> "WeightSpec":
        return replace(self, alpha=complex(alpha))


@dataclass(frozen=True)
class QuadratureControl:
    points: int = 512
    contour_shift: float = 0.0
    rel_tol: float = 1e-8
    max_points: int = 8192
    abs_tol: float = 1e-14

    def __post_init__(self):
        if self.points < 32:
            raise ValueError("need at least 32 quadrature points")


def log_weight_W(spec: WeightSpec, x, y):
    """``log W_alpha(x, y)`` (elementwise); imaginary part defined modulo ``2 pi``."""
    a = spec.alpha
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    d, s = np.broadcast_arrays(x - y, x + y)
    args = np.stack([d + 1j * a, d - 1j * a, s + 1j * a, s - 1j * a])
    if a == 0:
        return np.zeros(d.shape, dtype=complex) if d.ndim else 0j
    lg = np.asarray(log_elliptic_gamma(args, spec.params, spec.ctl))
    out = (lg[0] - lg[1]) + (lg[2] - lg[3])
    if spec.normalization == "kappa":
        out = out - log_kappa(a, spec.params, spec.ctl, continued=True)
    return out if out.ndim else complex(out)


def weight_W(spec: WeightSpec, x, y):
    """Master edge weight ``W_alpha(x, y)``; real and positive in the physical regimes."""
    out = np.exp(log_weight_W(spec, x, y))
    return out if np.ndim(out) else complex(out)


def log_weight_S(params: EllipticParams, x, ctl: SeriesControl = DEFAULT_CONTROL):
    x = np.asarray(x, dtype=complex)
    out = (params.eta / 4 - math.log(4 * math.pi)
           + log_theta(1, x, params.tau, ctl) + log_theta(1, x, params.sigma, ctl))
    return out if np.ndim(out) else complex(out)


def weight_S(params: EllipticParams, x, ctl: SeriesControl = DEFAULT_CONTROL):
    """Single-spin weight ``S(x)``; vanishes at ``x = 0`` and ``x = pi``."""
    x = np.asarray(x, dtype=complex)
    out = (np.exp(params.eta / 4) / (4 * math.pi)) * theta(1, x, params.tau, ctl) * theta(1, x, params.sigma, ctl)
    return out if np.ndim(out) else complex(out)


def check_recurrence(spec: WeightSpec, x, y) -> float:
    """Largest ``|LHS/RHS - 1|`` of the sigma-shift and tau-shift recurrences.

    ``W(x - pi s, y) / W(x + pi s, y)`` must equal the theta4 cross-ratio at
    the complementary period, for ``s`` each of ``sigma`` and ``tau``.
    """
    if spec.alpha == 0:
        return 0.0
    p = spec.params
    a = spec.alpha
    x, y = complex(x), complex(y)
    res = 0.0
    for shift, other in ((p.sigma, p.tau), (p.tau, p.sigma)):
        lhs = log_weight_W(spec, x - math.pi * shift, y) - log_weight_W(spec, x + math.pi * shift, y)
        args = np.array([x - y + 1j * a, x - y - 1j * a, x + y + 1j * a, x + y - 1j * a]) / 2
        t4 = theta(4, args, other, spec.ctl)
        if np.any(np.abs(t4) < 1e-300):
            raise PoleHit("theta4 vanishes in the recurrence")
        rhs = t4[0] / t4[1] * t4[2] / t4[3]
        res = max(res, abs(np.exp(lhs) / rhs - 1))
    return float(res)


# ---------------------------------------------------------------------------
# Quadrature


def periodic_trapezoid(f: Callable[[np.ndarray], np.ndarray], ctl: QuadratureControl,
                       trace: list | None = None) -> complex:
    """Integrate a ``2 pi``-periodic ``f`` over one period with point doubling.

    ``f`` receives the (possibly contour-shifted) nodes and returns values of
    the same shape.  Converged when two successive results agree to
    ``ctl.rel_tol``; each level is recorded in ``trace`` if given.
    """
    n = ctl.points
    prev = None
    while True:
        nodes = TWO_PI * np.arange(n) / n + 1j * ctl.contour_shift
        vals = np.asarray(f(nodes), dtype=complex)
        if not np.all(np.isfinite(vals)):
            raise PoleOnContour("non-finite integrand on the contour")
        val = complex(ksum(vals) * TWO_PI / n)
        if trace is not None:
            trace.append((n, val))
        if prev is not None and abs(val - prev) <= max(ctl.rel_tol * abs(val), ctl.abs_tol):
            return val
        if 2 * n > ctl.max_points:
            change = "n/a" if prev is None else f"{abs(val - prev):.3e}"
            raise QuadratureNotConverged(f"trapezoid not converged at {n} points (last change {change})")
        prev = val
        n *= 2


@dataclass
class StarTriangleReport:
    lhs: complex
    rhs: complex
    ratio_minus_one: float
    points: int


def verify_str_master(spec1: WeightSpec, spec3: WeightSpec, x1, x2, x3,
                      ctl: QuadratureControl = QuadratureControl()) -> StarTriangleReport:
    """Evaluate both sides of the continuous star-triangle relation.

    ``spec1`` and ``spec3`` carry ``alpha_1`` and ``alpha_3`` (same nomes).
    The star is integrated with the periodic trapezoid rule; the triangle is
    the product ``W_a1(x2,x3) W_{eta-a1-a3}(x1,x3) W_a3(x1,x2)``.
    """
    if spec1.params != spec3.params:
        raise ValueError("both spectral parameters must share the same nomes")
    params = spec1.params
    eta = params.eta
    a1, a3 = spec1.alpha, spec3.alpha
    base = spec1
    w_left = base.with_alpha(eta - a1)
    w_mid = base.with_alpha(a1 + a3)
    w_right = base.with_alpha(eta - a3)

    def integrand(x0):
        lg = (log_weight_S(params, x0, base.ctl) + log_weight_W(w_left, x1, x0)
              + log_weight_W(w_mid, x2, x0) + log_weight_W(w_right, x3, x0))
        return np.exp(lg)

    trace: list = []
    lhs = periodic_trapezoid(integrand, ctl, trace)
    rhs = np.exp(log_weight_W(base.with_alpha(a1), x2, x3)
                 + log_weight_W(base.with_alpha(eta - a1 - a3), x1, x3)
                 + log_weight_W(base.with_alpha(a3), x1, x2))
    return StarTriangleReport(lhs, complex(rhs), float(abs(lhs / rhs - 1)), trace[-1][0])


def verify_inversion_second(spec: WeightSpec, x, y) -> float:
    """``|W_a(x,y) W_{-a}(x,y) - 1|``."""
    lg = log_weight_W(spec, x, y) + log_weight_W(spec.with_alpha(-spec.alpha), x, y)
    return float(abs(np.exp(lg) - 1))


def _circle_residue(f, centers, radii, n=64):
    """``Res`` of ``f`` at each centre by the ``n``-point circle rule."""
    t = np.exp(2j * math.pi * np.arange(n) / n)
    pts = centers[..., None] + radii[..., None] * t
    return np.mean(f(pts) * radii[..., None] * t, axis=-1)


def _safe_radius(centers, poles, cap):
    """Radius below ``0.4`` of the distance to the nearest other candidate pole."""
    d = np.abs(centers[..., None] - poles)
    d = np.where(d < 1e-12, np.inf, d)
    return np.minimum(cap, 0.4 * d.min(axis=-1))


def verify_inversion_first(spec: WeightSpec, x, test_fn: Callable[[np.ndarray], np.ndarray],
                           ctl: QuadratureControl = QuadratureControl()) -> float:
    """Smeared check of ``S * W_{eta-a} * W_{eta+a} = (delta(x-y) + delta(x+y)) / 2S(x)``.

    ``W_{eta+a}`` lies outside the physical strip, so the ``z`` integral is
    defined by analytic continuation from small ``alpha``: the real contour
    plus the residues of the four poles ``z = +-y +- i alpha`` that cross it.
    The continued kernel vanishes for ``|Im y| < alpha`` away from ``y = +-x``,
    where the pinched poles leave a delta term.  The ``y`` integral against
    the even, ``2 pi``-periodic ``test_fn`` is therefore the integral on
    ``R + i alpha/2`` plus the local residues at ``y = +-x``.  Returns the
    relative difference from ``(g(x) + g(-x)) / (2 S(x))``.
    """
    params = spec.params
    x = complex(x)
    if abs(math.sin(x.real)) < 1e-12 and x.imag == 0:
        raise BadDomain("S(x) vanishes at x = 0 and x = pi")
    a = spec.alpha
    if a.imag != 0 or a.real <= 0:
        raise BadDomain("alpha must be real and positive")
    a = a.real
    eta = params.eta
    w_minus = spec.with_alpha(eta - a)
    w_plus = spec.with_alpha(eta + a)

    def F(z, y):
        return np.exp(log_weight_S(params, z, spec.ctl) + log_weight_W(w_minus, x, z)
                      + log_weight_W(w_plus, z, y))

    # singular points of Phi: 1 - e^{+-is} p^{2n+1} q^{2m+1} = 0
    nm = np.arange(3)
    lat = (params.p ** (2 * nm[:, None] + 1) * params.q ** (2 * nm[None, :] + 1)).ravel()
    sing = np.concatenate([1j * np.log(lat), -1j * np.log(lat)])
    sing = (sing[:, None] + np.array([0, TWO_PI, -TWO_PI])).ravel()
    b_plus = 1j * (eta + a)
    b_minus = 1j * (eta - a)
    fixed = np.concatenate([sgn * (x + sgn2 * b_minus + sing) for sgn in (1, -1) for sgn2 in (1, -1)])

    def corrections(y):
        # y: array; returns (R_minus - R_plus, R_minus + R_plus)
        y = np.asarray(y, dtype=complex)
        y = np.mod(y.real + math.pi, TWO_PI) - math.pi + 1j * y.imag
        moving = np.concatenate([sgn * y[..., None] + sgn2 * b_plus + sgn * sing
                                 for sgn in (1, -1) for sgn2 in (1, -1)], axis=-1)
        cand = np.concatenate([moving, np.broadcast_to(fixed, y.shape + fixed.shape)], axis=-1)
        out = []
        for c in (y - 1j * a, y + 1j * a):
            r = _safe_radius(c, cand, a / 4)
            out.append(_circle_residue(lambda z: F(z, y[..., None]), c, r))
        rm, rp = out
        return rm - rp, rm + rp

    def offset_integrand(nodes):
        z = TWO_PI * np.arange(nz) / nz
        base = ksum(F(z[None, :], nodes[:, None]).T) * (TWO_PI / nz)
        diff, _ = corrections(nodes)
        return test_fn(nodes) * (base + 4j * math.pi * diff)

    nz = ctl.points
    off = periodic_trapezoid(offset_integrand, replace(ctl, contour_shift=a / 2, max_points=min(ctl.max_points, 2048)))
    loc = 0j
    for x0 in (x, -x):
        # R_+- are singular at y = 0, pi; keep the circle well clear of them and of -x0
        near = np.array([0, math.pi, -math.pi, TWO_PI, -TWO_PI, -x0, -x0 + TWO_PI, -x0 - TWO_PI])
        ry = min(a / 3, 0.3 * float(np.min(np.abs(near - x0))))
        loc += _circle_residue(lambda yy: test_fn(yy) * corrections(yy)[1], np.array(x0), np.array(ry))
    total = off + 4 * math.pi ** 2 * complex(loc)
    target = (complex(test_fn(np.array([x]))[0]) + complex(test_fn(np.array([-x]))[0])) / (
        2 * weight_S(params, x, spec.ctl))
    return float(abs(total / target - 1))
