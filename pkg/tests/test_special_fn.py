from __future__ import annotations

import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from master_str.errors import BadDomain, NonConvergent, PoleHit
from master_str.special_fn import (
    EllipticParams,
    SeriesControl,
    dtheta,
    elliptic_gamma,
    elliptic_gamma_product,
    elliptic_gamma_series,
    kappa,
    log_elliptic_gamma,
    log_kappa,
    log_theta,
    theta,
    theta1_prime,
)
from oracles import elliptic_gamma_mp, log_kappa_mp, theta_bruteforce, theta_mp

# [DERIVED] frozen from the mpmath oracles in tests/oracles.py (40 digits)
THETA3_REF = 1.0996304990944086 - 0.013461363404547518j  # theta3(0.3+0.1i | 0.9i)
PHI_REF = 0.999652620679933 - 0.0014692324078213685j  # Phi(0.4-0.1i), p = q = e^{-pi}
THETA1P_REF = 0.4157548030180143  # theta1'(0 | 2i)

P_SQ = EllipticParams(1j, 1j)


def rel(a, b):
    return abs(a - b) / abs(b)


# theta


def test_theta1_odd_zero():
    assert theta(1, 0, 0.8j) == 0


@pytest.mark.parametrize("j", [1, 2, 3, 4])
def test_theta_matches_mpmath(j):
    rng = np.random.default_rng(j)
    for _ in range(10):
        tau = complex(rng.uniform(-0.5, 0.5), rng.uniform(0.4, 2.0))
        z = complex(rng.uniform(-3, 3), rng.uniform(-0.8, 0.8) * tau.imag)
        assert rel(theta(j, z, tau), theta_mp(j, z, tau)) < 1e-12


def test_theta3_frozen_value():
    assert rel(theta(3, 0.3 + 0.1j, 0.9j), THETA3_REF) < 1e-13
    assert rel(theta_bruteforce(3, 0.3 + 0.1j, 0.9j), THETA3_REF) < 1e-13


def test_theta_bruteforce_all_j():
    for j in (1, 2, 3, 4):
        assert rel(theta(j, 0.7 + 0.2j, 0.5 + 0.8j), theta_bruteforce(j, 0.7 + 0.2j, 0.5 + 0.8j)) < 1e-13


def test_theta1_quasi_periodicity():
    rng = np.random.default_rng(7)
    for _ in range(50):
        tau = complex(rng.uniform(-0.3, 0.3), rng.uniform(0.5, 1.5))
        z = complex(rng.uniform(-3, 3), rng.uniform(-0.9, 0.9) * math.pi * tau.imag / 2)
        t = theta(1, z, tau)
        assert rel(theta(1, -z, tau), -t) < 1e-12
        assert rel(theta(1, z + math.pi, tau), -t) < 1e-12
        shifted = -cmath.exp(-1j * math.pi * tau - 2j * z) * t
        assert rel(theta(1, z + math.pi * tau, tau), shifted) < 1e-12


def test_theta1_prime_is_derivative():
    tau = 0.8j
    h = 1e-5
    fd = (theta(1, h, tau) - theta(1, -h, tau)) / (2 * h)
    assert rel(theta1_prime(tau), fd) < 1e-9
    assert rel(theta1_prime(tau), dtheta(1, 0.0, tau)) < 1e-13


def test_theta1_prime_product_and_frozen():
    prod = theta(2, 0, 2j) * theta(3, 0, 2j) * theta(4, 0, 2j)
    val = theta1_prime(2j)
    assert rel(val, prod) < 1e-14
    assert abs(val.imag) < 1e-15 and val.real > 0
    assert rel(val, THETA1P_REF) < 1e-13


def test_log_theta_consistent():
    z, tau = 0.4 + 0.3j, 0.2 + 0.9j
    for j in (1, 2, 3, 4):
        assert abs(cmath.exp(log_theta(j, z, tau)) / theta(j, z, tau) - 1) < 1e-13


def test_theta_errors():
    with pytest.raises(BadDomain):
        theta(1, 0.1, -1j)
    with pytest.raises(BadDomain):
        theta(1, 0.1, 0.5)
    with pytest.raises(NonConvergent):
        theta(3, 0.1, 0.01j, SeriesControl(max_terms=2))


def test_theta_vectorized():
    zs = np.linspace(0.1, 3.0, 7)
    vals = theta(1, zs, 0.7j)
    assert vals.shape == zs.shape
    for z, v in zip(zs, vals):
        assert rel(v, theta(1, float(z), 0.7j)) < 1e-14


# elliptic gamma


def test_gamma_zero_is_one():
    assert elliptic_gamma_series(0, P_SQ) == 1


def test_gamma_frozen_value():
    assert rel(elliptic_gamma_series(0.4 - 0.1j, P_SQ), PHI_REF) < 1e-12
    assert rel(elliptic_gamma_product(0.4 - 0.1j, P_SQ), PHI_REF) < 1e-12


def test_gamma_matches_mpmath_product():
    rng = np.random.default_rng(3)
    for _ in range(8):
        tau = complex(rng.uniform(-0.3, 0.3), rng.uniform(0.5, 1.2))
        sigma = complex(rng.uniform(-0.3, 0.3), rng.uniform(0.5, 1.2))
        P = EllipticParams(tau, sigma)
        s = complex(rng.uniform(-3, 3), rng.uniform(-0.9, 0.9) * P.eta.real)
        assert rel(elliptic_gamma(s, P), elliptic_gamma_mp(s, tau, sigma)) < 1e-10


def test_gamma_series_product_agree_and_reflect():
    rng = np.random.default_rng(11)
    for _ in range(30):
        P = EllipticParams(1j * rng.uniform(0.5, 1.5), 1j * rng.uniform(0.5, 1.5))
        s = complex(rng.uniform(-4, 4), rng.uniform(-0.9, 0.9) * P.eta.real)
        ser, prod = elliptic_gamma_series(s, P), elliptic_gamma_product(s, P)
        assert rel(ser, prod) < 1e-10
        assert abs(prod * elliptic_gamma_product(-s, P) - 1) < 1e-11


def test_gamma_reflection_outside_strip():
    s = 1.0 + 7j
    assert abs(elliptic_gamma(s, P_SQ) * elliptic_gamma(-s, P_SQ) - 1) < 1e-11


def test_gamma_series_outside_strip_errors():
    with pytest.raises(BadDomain):
        elliptic_gamma_series(1.0 + 7j, P_SQ)


def test_gamma_pole_hit():
    # e^{-is} p q = 1 at s = pi (tau + sigma)
    with pytest.raises(PoleHit):
        elliptic_gamma_product(math.pi * (P_SQ.tau + P_SQ.sigma), P_SQ)


def test_gamma_log_consistent():
    s = 0.3 - 0.2j
    assert abs(cmath.exp(log_elliptic_gamma(s, P_SQ)) / elliptic_gamma(s, P_SQ) - 1) < 1e-13


def test_summation_deterministic():
    s = np.linspace(-2, 2, 11) + 0.3j
    a = elliptic_gamma_series(s, P_SQ)
    b = elliptic_gamma_series(s, P_SQ)
    assert np.array_equal(a, b)
    assert kappa(0.37, P_SQ) == kappa(0.37, P_SQ)


# kappa


def test_kappa_zero():
    assert kappa(0, P_SQ) == 1


def test_kappa_matches_direct_sum():
    for a in (0.3, 1.1 + 0.4j, -0.8):
        assert abs(log_kappa(a, P_SQ) - log_kappa_mp(a, 1j, 1j)) < 1e-12


def test_kappa_functional_equations():
    rng = np.random.default_rng(5)
    for _ in range(30):
        P = EllipticParams(complex(rng.uniform(-0.2, 0.2), rng.uniform(0.6, 1.4)),
                           complex(rng.uniform(-0.2, 0.2), rng.uniform(0.6, 1.4)))
        eta = P.eta
        a = complex(rng.uniform(0.05, 0.45) * eta.real, rng.uniform(-0.5, 0.5))
        assert abs(kappa(a, P) * kappa(-a, P) - 1) < 1e-11
        lhs = kappa(eta - a, P) / kappa(a, P)
        assert rel(lhs, elliptic_gamma(1j * eta - 2j * a, P)) < 1e-11


def test_kappa_continuation():
    a = 0.9 * P_SQ.eta.real
    direct = log_kappa(a, P_SQ)
    cont = log_kappa(a, P_SQ, continued=True)
    assert abs(direct - cont) < 1e-10


def test_kappa_outside_domain():
    with pytest.raises(BadDomain):
        kappa(10.0, P_SQ)


def test_params_validation_and_nomes():
    with pytest.raises(BadDomain):
        EllipticParams(1j, -0.5j)
    P = EllipticParams.from_nomes(math.exp(-math.pi), math.exp(-math.pi))
    assert abs(P.tau - 1j) < 1e-15 and abs(P.eta - 2 * math.pi) < 1e-14
    assert P.regime == "regime-i"
    assert EllipticParams(0.2 + 1j, -0.2 + 1j).regime == "regime-ii"


@settings(max_examples=40, deadline=None)
@given(re_s=st.floats(-5, 5), frac=st.floats(-0.9, 0.9), t=st.floats(0.5, 1.5))
def test_gamma_reflection_property(re_s, frac, t):
    P = EllipticParams(1j * t, 1j * t)
    s = complex(re_s, frac * P.eta.real)
    assert abs(elliptic_gamma(s, P) * elliptic_gamma(-s, P) - 1) < 1e-11


@settings(max_examples=40, deadline=None)
@given(x=st.floats(-6, 6), y=st.floats(-0.4, 0.4), t=st.floats(0.4, 2.0))
def test_theta1_oddness_property(x, y, t):
    z = complex(x, y)
    assert abs(theta(1, -z, 1j * t) + theta(1, z, 1j * t)) < 1e-12 * max(1.0, abs(theta(1, z, 1j * t)))
