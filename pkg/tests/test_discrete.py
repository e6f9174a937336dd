from __future__ import annotations

import json
import math

import numpy as np
import pytest

from master_str.classical import ClassicalParams, solve_q4_threeleg
from master_str.discrete import (
    KMParams,
    P_factor,
    Q_factor,
    discrete_S,
    discrete_W,
    factor_R_discrete,
    km_normalization,
    km_S,
    km_t,
    km_table,
    km_weights,
    r_func,
    t_func,
    table_to_json,
    verify_km,
    verify_str_discrete,
    weight_table,
)
from master_str.errors import BadInput, BranchAmbiguity

PI = math.pi


def draw(rng):
    t1, t3 = rng.uniform(0.3, 1.0, 2)
    ph = tuple(rng.uniform(-0.25, 0.25, 3))
    tp = 1j * rng.uniform(0.8, 2.0)
    return t1, t3, ph, tp


# r, t and the weights


@pytest.mark.parametrize("fn", [r_func, t_func])
def test_zero_sector_is_one(fn):
    assert fn(0.7, 0.2 + 0.1j, 0, 3, 1.2j) == 1


@pytest.mark.parametrize("N", [2, 3, 4, 5])
def test_period_n_symmetry(N):
    # certifies the branch of the fractional powers
    rng = np.random.default_rng(N)
    for _ in range(5):
        th, ph = rng.uniform(0.2, 1.2), rng.uniform(-0.4, 0.4)
        tp = complex(rng.uniform(-0.2, 0.2), rng.uniform(0.8, 2.0))
        for fn in (r_func, t_func):
            for n in range(-N, N):
                a, b = fn(th, ph, n + N, N, tp), fn(th, ph, n, N, tp)
                assert abs(a - b) < 1e-11 * abs(b)


def test_reflection_symmetry():
    for n in range(-3, 4):
        a = r_func(0.8, 0.3, n, 3, 1.1j)
        b = r_func(0.8, -0.3, -n, 3, 1.1j)
        assert abs(a - b) < 1e-12 * abs(a)
        a = t_func(0.8, 0.3, n, 3, 1.1j)
        b = t_func(0.8, -0.3, -n, 3, 1.1j)
        assert abs(a - b) < 1e-12 * abs(a)


def test_branch_ambiguity_detected():
    # the theta2 ratio is negative real here
    with pytest.raises(BranchAmbiguity):
        r_func(2.5, 1.0, 1, 2, 1j)


def test_weight_normalization_and_swap():
    th, a, b, tp = 0.7, 0.15, -0.1, 1.3j
    for N in (2, 3, 5):
        assert abs(discrete_W(th, a, b, 0, 0, N, tp) - 1) < 1e-15
        W = weight_table(th, a, b, N, tp)
        Wt = weight_table(th, b, a, N, tp)
        assert np.allclose(W, Wt.T, rtol=1e-13, atol=0)


def test_weights_are_chiral():
    W = weight_table(0.7, 0.15, -0.1, 3, 1.3j)
    assert abs(W[1, 2] - W[2, 1]) > 1e-3


def test_site_weight_periodic():
    for N in (2, 3, 4):
        for n in range(N):
            a, b = discrete_S(0.3, n + N, N, 1.2j), discrete_S(0.3, n, N, 1.2j)
            assert abs(a - b) < 1e-13 * abs(b)


def test_table_json_export():
    d = json.loads(table_to_json(0.7, 0.1, -0.2, 3, 1.3j))
    assert d["N"] == 3 and len(d["W"]) == 3 and len(d["S"]) == 3
    assert d["W"][0][0] == pytest.approx([1.0, 0.0], abs=1e-15)
    assert d["tau_prime"] == [0.0, 1.3]


# star-triangle factor


def test_P_and_Q_symmetric():
    th, a, b, tp = 0.8, 0.2, -0.15, 1.4j
    for N in (2, 3, 4):
        assert abs(P_factor(th, a, b, N, tp) / P_factor(th, b, a, N, tp) - 1) < 1e-12
        assert abs(Q_factor(th, a, b, N, tp) / Q_factor(th, b, a, N, tp) - 1) < 1e-12


def test_R_rejects_non_solution():
    t1, t3, ph, tp = 0.7, 0.8, (0.1, -0.2, 0.15), 1.5j
    phi0 = solve_q4_threeleg(t1, t3, *ph, ClassicalParams(tp))
    factor_R_discrete(t1, t3, (phi0, *ph), 3, tp)
    with pytest.raises(BadInput):
        factor_R_discrete(t1, t3, (phi0 + 0.3, *ph), 3, tp)


def test_str_example_n2():
    r = verify_str_discrete(0.7, 0.7, 0.1, -0.2, 0.15, 2, 1.5j)
    assert r.max_residual < 1e-10


@pytest.mark.parametrize("N", [2, 3, 4, 5])
def test_str_random_draws(N):
    rng = np.random.default_rng(100 + N)
    for _ in range(3):
        t1, t3, ph, tp = draw(rng)
        r = verify_str_discrete(t1, t3, *ph, N, tp)
        assert r.max_residual < 1e-10
        assert r.ratio_spread < 1e-10
        assert abs(r.R_ratio / r.R_formula - 1) < 1e-10


def test_str_n1_is_scalar_identity():
    r = verify_str_discrete(0.7, 0.8, 0.1, -0.2, 0.15, 1, 1.5j)
    assert r.max_residual < 1e-14 and abs(r.R_formula - 1) < 1e-14


def test_str_at_km_point_matches_km_relation():
    N, tp, t1, t3 = 3, 1.2j, 0.6, 0.9
    kp = KMParams(N, 0, 0.5, tp)
    c = kp.phi
    r = verify_str_discrete(t1, t3, c, c, c, N, tp, phi0=c)
    km = verify_km(kp, t1, t3)
    assert r.max_residual < 1e-10 and km.max_residual < 1e-10


# Kashiwara-Miwa


def test_km_params_validation():
    with pytest.raises(BadInput):
        KMParams(3, 0, 0.25, 1j)
    assert KMParams(3, 1, 0.5, 1j).phi == pytest.approx(1.5 * PI)


def test_km_normalization_value():
    kp = KMParams(4, 2, 0.0, 1.1j)
    th = 0.7
    assert abs(km_weights(kp, th, 0, 0) - km_t(kp, th, kp.zeta) / km_t(kp, th, 0)) < 1e-14
    assert km_normalization(kp, th) == km_t(kp, th, kp.zeta)


@pytest.mark.parametrize("N,zeta,nu", [(3, 0, 0.0), (4, 1, 0.5)])
def test_km_str_examples(N, zeta, nu):
    r = verify_km(KMParams(N, zeta, nu, 1.3j), 0.6, 0.8)
    assert r.max_residual < 1e-10 and r.ratio_spread < 1e-10


@pytest.mark.parametrize("N", [2, 3, 4, 5])
def test_km_reduction_of_general_weights(N):
    for zeta in (0, 1, 2):
        for nu in (0.0, 0.5):
            kp = KMParams(N, zeta, nu, 1.3j)
            for th in (0.6, PI - 0.6, 1.4):
                c = km_normalization(kp, th)
                gen = weight_table(th, kp.phi, kp.phi, N, kp.tau_prime)
                assert np.allclose(c * gen, km_table(kp, th), rtol=1e-10, atol=0)
            S = [km_S(kp, n) for n in range(N)]
            assert np.allclose(S, [discrete_S(kp.phi, n, N, kp.tau_prime) for n in range(N)], rtol=1e-12)
