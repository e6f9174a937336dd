r"""Jacobi theta functions, the elliptic gamma function and the edge normalization.

Conventions
-----------
Theta functions follow Whittaker & Watson: nome ``e^{i pi tau}``, quasi-periods
``pi`` and ``pi tau``::

    theta1(z) = 2 sum_{n>=0} (-1)^n q^{(n+1/2)^2} sin((2n+1) z)
    theta2(z) = 2 sum_{n>=0}        q^{(n+1/2)^2} cos((2n+1) z)
    theta3(z) = 1 + 2 sum_{n>=1}        q^{n^2} cos(2 n z)
    theta4(z) = 1 + 2 sum_{n>=1} (-1)^n q^{n^2} cos(2 n z)

The elliptic gamma function ``Phi(s)`` is normalized so that
``Phi(s) Phi(-s) = 1``; it has a Fourier-type series valid in the strip
``|Im s| < Re eta`` and a double-product representation valid everywhere off
its poles.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from ._summation import Accumulator, ksum
from .errors import BadDomain, NonConvergent, PoleHit

__all__ = [
    "SeriesControl",
    "EllipticParams",
    "theta",
    "dtheta",
    "log_theta",
    "theta1_prime",
    "elliptic_gamma_series",
    "elliptic_gamma_product",
    "elliptic_gamma",
    "log_elliptic_gamma",
    "kappa",
    "log_kappa",
]

Regime = Literal["generic", "regime-i", "regime-ii"]

# Stop a series after this many consecutive negligible (paired) terms.
_QUIET_RUN = 10


@dataclass(frozen=True)
class SeriesControl:
    """Truncation control for every series in the package."""

    abs_tol: float = 1e-14
    max_terms: int = 100_000

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")


DEFAULT_CONTROL = SeriesControl()


@dataclass(frozen=True)
class EllipticParams:
    """Periods ``tau``, ``sigma`` of the two nomes ``p = e^{i pi tau}``, ``q = e^{i pi sigma}``."""

    tau: complex
    sigma: complex

    def __post_init__(self):
        object.__setattr__(self, "tau", complex(self.tau))
        object.__setattr__(self, "sigma", complex(self.sigma))
        if self.tau.imag <= 0 or self.sigma.imag <= 0:
            raise BadDomain(f"need Im tau > 0 and Im sigma > 0, got {self.tau}, {self.sigma}")

    @classmethod
    def from_nomes(cls, p: complex, q: complex) -> "EllipticParams":
        p, q = complex(p), complex(q)
        if not (0 < abs(p) < 1 and 0 < abs(q) < 1):
            raise BadDomain("nomes must satisfy 0 < |p|, |q| < 1")
        return cls(cmath.log(p) / (1j * math.pi), cmath.log(q) / (1j * math.pi))

    @property
    def p(self) -> complex:
        return cmath.exp(1j * math.pi * self.tau)

    @property
    def q(self) -> complex:
        return cmath.exp(1j * math.pi * self.sigma)

    @property
    def eta(self) -> complex:
        """Crossing parameter, ``e^{-eta} = p q``."""
        return -1j * math.pi * (self.tau + self.sigma)

    @property
    def regime(self) -> Regime:
        p, q = self.p, self.q
        tol = 1e-14
        if abs(p.imag) <= tol * abs(p) and abs(q.imag) <= tol * abs(q):
            return "regime-i"
        if abs(p - q.conjugate()) <= tol * abs(p):
            return "regime-ii"
        return "generic"


# ---------------------------------------------------------------------------
# Theta functions


def _check_tau(tau):
    tau = complex(tau)
    if not tau.imag > 0:
        raise BadDomain(f"theta functions need Im tau > 0, got {tau}")
    return tau


def _theta_series(j, z, tau, ctl, deriv):
    tau = _check_tau(tau)
    if j not in (1, 2, 3, 4):
        raise ValueError("theta index must be 1, 2, 3 or 4")
    z = np.asarray(z, dtype=complex)
    acc = Accumulator(z.shape)
    half = j in (1, 2)
    if not half and deriv == 0:
        acc.add(np.ones(z.shape))
    lognome = math.pi * tau.imag
    y = float(np.max(np.abs(z.imag))) if z.size else 0.0
    quiet = 0
    prev_bound = math.inf
    n = 0 if half else 1
    while True:
        if n - (0 if half else 1) >= ctl.max_terms:
            raise NonConvergent(f"theta{j} series did not converge in {ctl.max_terms} terms")
        k = n + 0.5 if half else float(n)
        freq = 2 * k
        qk = cmath.exp(1j * math.pi * tau * k * k)
        sign = -1.0 if (j in (1, 4) and n % 2) else 1.0
        if j == 1:
            wave = np.sin(freq * z) if deriv == 0 else freq * np.cos(freq * z)
        else:
            wave = np.cos(freq * z) if deriv == 0 else -freq * np.sin(freq * z)
        acc.add(2 * sign * qk * wave)
        bound = 2 * math.exp(-lognome * k * k + freq * y) * (freq if deriv else 1.0)
        scale = max(float(np.max(np.abs(acc.value))) if z.size else 0.0, 1e-300)
        if bound < ctl.abs_tol * scale and bound <= prev_bound:
            quiet += 1
            if quiet >= _QUIET_RUN:
                break
        else:
            quiet = 0
        prev_bound = bound
        n += 1
    out = acc.value
    return out if out.ndim else complex(out)


def theta(j: int, z, tau: complex, ctl: SeriesControl = DEFAULT_CONTROL):
    """Jacobi theta function ``theta_j(z | tau)`` by its Fourier series.

    Works elementwise on arrays.  Raises :class:`BadDomain` when ``Im tau <= 0``
    and :class:`NonConvergent` when ``ctl.max_terms`` is exhausted.
    """
    return _theta_series(j, z, tau, ctl, deriv=0)


def dtheta(j: int, z, tau: complex, ctl: SeriesControl = DEFAULT_CONTROL):
    """Derivative ``d/dz theta_j(z | tau)`` by term-wise differentiation."""
    return _theta_series(j, z, tau, ctl, deriv=1)


_CHUNK_ELEMS = 1 << 20


def _nome_powers_count(tau, tol, max_terms):
    lognome = math.pi * tau.imag
    n = int(math.ceil(-math.log(tol) / lognome)) + 2
    if n > max_terms:
        raise NonConvergent(f"product needs {n} factors (> max_terms={max_terms})")
    return n


def log_theta(j: int, z, tau: complex, ctl: SeriesControl = DEFAULT_CONTROL):
    """A logarithm of ``theta_j(z | tau)`` from the Jacobi triple product.

    The imaginary part is fixed only modulo ``2 pi``.  Unlike the Fourier
    series, this keeps full relative accuracy when the value is exponentially
    small through cancellation (nome close to the unit circle).
    """
    tau = _check_tau(tau)
    z = np.asarray(z, dtype=complex)
    n_fac = _nome_powers_count(tau, ctl.abs_tol, ctl.max_terms)
    e2 = np.exp(2j * z)
    em2 = np.exp(-2j * z)
    if j in (1, 2):
        s = -1.0 if j == 1 else 1.0
        # zeros of theta1/theta2 are genuine: log -> -inf, exp -> 0
        with np.errstate(divide="ignore"):
            head = np.log(np.sin(z) if j == 1 else np.cos(z)) + math.log(2) + 1j * math.pi * tau / 4
        shift = 1.0
    else:
        s = 1.0 if j == 3 else -1.0
        head = np.zeros(z.shape, dtype=complex)
        shift = cmath.exp(-1j * math.pi * tau)
    # chunk the factor index so the work array stays bounded
    chunk = max(1, _CHUNK_ELEMS // max(1, z.size))
    acc = Accumulator(z.shape)
    for start in range(1, n_fac + 1, chunk):
        n = np.arange(start, min(n_fac, start + chunk - 1) + 1).reshape((-1,) + (1,) * z.ndim)
        q2n = np.exp(2j * math.pi * tau * n)
        q2n1 = q2n * shift
        body = np.log1p(-q2n) + np.log1p(s * q2n1 * e2) + np.log1p(s * q2n1 * em2)
        acc.add(body.sum(axis=0))  # numpy pairwise sum inside a chunk
    out = head + acc.value
    return out if out.ndim else complex(out)


def theta1_prime(tau: complex, ctl: SeriesControl = DEFAULT_CONTROL) -> complex:
    """``theta1'(0 | tau)`` via Jacobi's identity ``theta1' = theta2 theta3 theta4`` at zero."""
    return theta(2, 0, tau, ctl) * theta(3, 0, tau, ctl) * theta(4, 0, tau, ctl)


# ---------------------------------------------------------------------------
# Elliptic gamma function


def _strip_margin(s, params):
    s = np.asarray(s, dtype=complex)
    return params.eta.real - (float(np.max(np.abs(s.imag))) if s.size else 0.0)


def _log_gamma_series(s, params, ctl):
    s = np.asarray(s, dtype=complex)
    margin = _strip_margin(s, params)
    if margin <= 0:
        raise BadDomain("elliptic gamma series needs |Im s| < Re eta")
    p, q = params.p, params.q
    pq = p * q
    acc = Accumulator(s.shape)
    quiet = 0
    n = 1
    while True:
        if n > ctl.max_terms:
            raise NonConvergent("elliptic gamma series did not converge")
        # pair (n, -n):  -2i sin(ns) (pq)^n / (n (p^{2n}-1)(q^{2n}-1))
        den = n * (p ** (2 * n) - 1) * (q ** (2 * n) - 1)
        term = -2j * np.sin(n * s) * pq**n / den
        acc.add(term)
        bound = math.exp(-n * margin) / abs(den) * 2
        if bound < ctl.abs_tol:
            quiet += 1
            if quiet >= _QUIET_RUN:
                break
        else:
            quiet = 0
        n += 1
    return acc.value


def log_elliptic_gamma_series(s, params: EllipticParams, ctl: SeriesControl = DEFAULT_CONTROL):
    """``log Phi(s)`` by the two-sided exponential series, paired in ``(n, -n)``."""
    out = _log_gamma_series(s, params, ctl)
    return out if out.ndim else complex(out)


def elliptic_gamma_series(s, params: EllipticParams, ctl: SeriesControl = DEFAULT_CONTROL):
    """``Phi(s)`` from its series; only valid in the strip ``|Im s| < Re eta``."""
    out = np.exp(_log_gamma_series(s, params, ctl))
    return out if out.ndim else complex(out)


def _product_grid(params, y, tol, max_terms):
    p, q = params.p, params.q
    lp, lq = -math.log(abs(p)), -math.log(abs(q))
    # |p^{2n+1} q^{2m+1}| e^{y} < tol
    budget = -math.log(tol) + y
    nmax = max(int(math.ceil((budget - lp - lq) / (2 * lp))) + 2, 1)
    mmax = max(int(math.ceil((budget - lp - lq) / (2 * lq))) + 2, 1)
    if nmax * mmax > max_terms * 100:
        raise NonConvergent("elliptic gamma product grid too large")
    n = np.arange(nmax)
    m = np.arange(mmax)
    a = np.exp(1j * math.pi * (params.tau * (2 * n[:, None] + 1) + params.sigma * (2 * m[None, :] + 1)))
    keep = np.abs(a) * math.exp(y) >= tol * 1e-3
    return a[keep]


_POLE_TOL = 1e-13


def log_elliptic_gamma_product(s, params: EllipticParams, ctl: SeriesControl = DEFAULT_CONTROL):
    """``log Phi(s)`` from the double product, valid in the whole plane off the poles.

    Each factor is ``(1 - e^{is} p^{2n+1} q^{2m+1}) / (1 - e^{-is} p^{2n+1} q^{2m+1})``.
    Raises :class:`PoleHit` when a denominator is within ``1e-13`` of zero.
    """
    s = np.asarray(s, dtype=complex)
    y = float(np.max(np.abs(s.imag))) if s.size else 0.0
    a = _product_grid(params, y, ctl.abs_tol, ctl.max_terms)
    flat = s.reshape(-1)
    out = np.empty(flat.shape, dtype=complex)
    # chunk so the (points x factors) block stays small
    chunk = max(1, 2_000_000 // max(a.size, 1))
    for start in range(0, flat.size, chunk):
        blk = flat[start : start + chunk, None]
        up = np.exp(1j * blk) * a[None, :]
        dn = np.exp(-1j * blk) * a[None, :]
        if np.any(np.abs(1 - dn) < _POLE_TOL) or np.any(np.abs(1 - up) < _POLE_TOL):
            raise PoleHit("elliptic gamma evaluated at a pole or zero")
        out[start : start + chunk] = ksum((np.log1p(-up) - np.log1p(-dn)).T, axis=0)
    out = out.reshape(s.shape)
    return out if out.ndim else complex(out)


def elliptic_gamma_product(s, params: EllipticParams, ctl: SeriesControl = DEFAULT_CONTROL):
    """``Phi(s) = Gamma(e^{-i(s - i eta)}; p^2, q^2)`` from the double product."""
    out = np.exp(log_elliptic_gamma_product(s, params, ctl))
    return out if out.ndim else complex(out)


def log_elliptic_gamma(s, params: EllipticParams, ctl: SeriesControl = DEFAULT_CONTROL):
    """``log Phi(s)``: series deep inside the strip, product near or beyond its edge."""
    s = np.asarray(s, dtype=complex)
    margin = _strip_margin(s, params)
    if margin > 0.25 * params.eta.real:
        return log_elliptic_gamma_series(s, params, ctl)
    return log_elliptic_gamma_product(s, params, ctl)


def elliptic_gamma(s, params: EllipticParams, ctl: SeriesControl = DEFAULT_CONTROL):
    out = np.exp(log_elliptic_gamma(s, params, ctl))
    return out if np.ndim(out) else complex(out)


# ---------------------------------------------------------------------------
# Edge normalization kappa


def _log_kappa_series(alpha, params, ctl):
    alpha = complex(alpha)
    margin = params.eta.real - abs(alpha.real)
    if margin <= 0:
        raise BadDomain("kappa series needs |Re alpha| < Re eta")
    p, q = params.p, params.q
    pq2 = (p * q) ** 2
    acc = Accumulator()
    quiet = 0
    n = 1
    while True:
        if n > ctl.max_terms:
            raise NonConvergent("kappa series did not converge")
        den = n * (p ** (2 * n) - 1) * (q ** (2 * n) - 1) * (1 + pq2**n)
        term = 2 * cmath.sinh(2 * alpha * n) * pq2**n / den
        acc.add(term)
        bound = 2 * math.exp(-2 * n * margin) / abs(den)
        if bound < ctl.abs_tol:
            quiet += 1
            if quiet >= _QUIET_RUN:
                break
        else:
            quiet = 0
        n += 1
    return complex(acc.value)


def log_kappa(alpha: complex, params: EllipticParams, ctl: SeriesControl = DEFAULT_CONTROL,
              continued: bool = False) -> complex:
    """``log kappa(alpha)``.

    With ``continued=True`` values outside the series domain are reached through
    ``kappa(alpha) = kappa(eta - alpha) Phi(2i alpha - i eta)`` and
    ``kappa(-alpha) = 1 / kappa(alpha)``.
    """
    alpha = complex(alpha)
    reta = params.eta.real
    if not continued or abs(alpha.real) < 0.75 * reta:
        return _log_kappa_series(alpha, params, ctl)
    if alpha.real < 0:
        return -log_kappa(-alpha, params, ctl, continued=True)
    if alpha.real >= 2 * reta:
        raise BadDomain("kappa continuation implemented for Re alpha < 2 Re eta")
    eta = params.eta
    return _log_kappa_series(eta - alpha, params, ctl) + complex(
        log_elliptic_gamma(2j * alpha - 1j * eta, params, ctl))


def kappa(alpha: complex, params: EllipticParams, ctl: SeriesControl = DEFAULT_CONTROL) -> complex:
    """Partition function per edge, from its two-sided series (paired in ``(n, -n)``).

    Satisfies ``kappa(a) kappa(-a) = 1`` and ``kappa(eta - a) / kappa(a) = Phi(i eta - 2i a)``.
    Raises :class:`BadDomain` outside ``|Re alpha| < Re eta``.
    """
    return cmath.exp(_log_kappa_series(alpha, params, ctl))
