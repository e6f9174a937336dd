from __future__ import annotations

import math

import numpy as np
import pytest

from master_str.errors import BadDomain, MasterSTRError, QuadratureNotConverged
from master_str.master_weights import (
    QuadratureControl,
    WeightSpec,
    check_recurrence,
    reduce_spin,
    verify_inversion_first,
    verify_inversion_second,
    verify_str_master,
    weight_S,
    weight_W,
)
from master_str.special_fn import EllipticParams
from oracles import weight_S_mp, weight_W_mp

# [DERIVED] frozen from the mpmath oracles in tests/oracles.py, p = q = e^{-pi}
W_REF = 0.9864995809353522  # W_{eta/3}(1.0, 2.0)
S_REF = 0.3194998513597812  # S(pi/2)

P_SQ = EllipticParams(1j, 1j)
P_II = EllipticParams(0.2 + 0.9j, -0.2 + 0.9j)


def test_alpha_zero_weight_is_one():
    spec = WeightSpec(P_SQ, 0.0)
    for x, y in [(0.3, 1.2), (2.0, 5.5), (4.4, 0.1)]:
        assert abs(weight_W(spec, x, y) - 1) < 1e-14


def test_weight_symmetries():
    rng = np.random.default_rng(0)
    for P in (P_SQ, P_II):
        for _ in range(50):
            spec = WeightSpec(P, rng.uniform(0.05, 0.95) * P.eta.real)
            x, y = rng.uniform(0, 2 * math.pi, 2)
            w = weight_W(spec, x, y)
            for other in (weight_W(spec, y, x), weight_W(spec, -x, y), weight_W(spec, x + 2 * math.pi, y)):
                assert abs(other / w - 1) < 1e-12


def test_weight_frozen_value():
    w = weight_W(WeightSpec(P_SQ, P_SQ.eta.real / 3), 1.0, 2.0)
    assert abs(w.imag) < 1e-14 and w.real > 0
    assert abs(w / W_REF - 1) < 1e-12


def test_weight_matches_oracle_regime_ii():
    a = 0.4 * P_II.eta.real
    w = weight_W(WeightSpec(P_II, a), 0.8, 2.9)
    ref = weight_W_mp(a, 0.8, 2.9, P_II.tau, P_II.sigma)
    assert abs(w / ref - 1) < 1e-11


@pytest.mark.parametrize("P", [P_SQ, P_II])
def test_positivity(P):
    rng = np.random.default_rng(1)
    for _ in range(50):
        spec = WeightSpec(P, rng.uniform(0.02, 0.98) * P.eta.real)
        x, y = rng.uniform(0, 2 * math.pi, 2)
        w = weight_W(spec, x, y)
        assert w.real > 0 and abs(w.imag) < 1e-12 * abs(w)
        s = weight_S(P, rng.uniform(0.05, math.pi - 0.05))
        assert s.real > 0 and abs(s.imag) < 1e-12 * abs(s)


def test_raw_normalization_differs_by_kappa():
    from master_str.special_fn import kappa

    a = 0.3 * P_SQ.eta.real
    k = WeightSpec(P_SQ, a)
    r = WeightSpec(P_SQ, a, normalization="raw")
    assert abs(weight_W(r, 0.4, 1.3) / weight_W(k, 0.4, 1.3) / kappa(a, P_SQ) - 1) < 1e-12


def test_bad_normalization():
    with pytest.raises(ValueError):
        WeightSpec(P_SQ, 0.3, normalization="other")


def test_single_spin_weight():
    assert weight_S(P_SQ, 0.0) == 0
    s = weight_S(P_SQ, math.pi / 2)
    assert abs(s / S_REF - 1) < 1e-12
    assert abs(s / weight_S_mp(math.pi / 2, 1j, 1j) - 1) < 1e-12
    for x in (0.4, 1.7, 2.9):
        assert abs(weight_S(P_SQ, x) - weight_S(P_SQ, 2 * math.pi - x)) < 1e-14


def test_reduce_spin():
    assert abs(reduce_spin(2 * math.pi + 0.25) - 0.25) < 1e-14
    assert 0 <= reduce_spin(-0.1) < 2 * math.pi


def test_recurrence():
    rng = np.random.default_rng(2)
    for _ in range(10):
        spec = WeightSpec(P_SQ, rng.uniform(0.1, 0.9) * P_SQ.eta.real)
        x, y = rng.uniform(0, 2 * math.pi, 2)
        assert check_recurrence(spec, x, y) < 1e-10
    assert check_recurrence(WeightSpec(P_SQ, 0.0), 0.7, 1.3) == 0


def test_recurrence_on_pole_line_errors():
    # x - y + i alpha hits a pole of Phi after the pi*sigma shift
    spec = WeightSpec(P_SQ, 0.3 * P_SQ.eta.real)
    with pytest.raises(MasterSTRError):
        check_recurrence(spec, 1.0 + math.pi * P_SQ.tau.imag * 1j - 1j * spec.alpha + 0.0, 1.0)


def test_str_canonical_point():
    eta = P_SQ.eta.real
    r = verify_str_master(WeightSpec(P_SQ, eta / 4), WeightSpec(P_SQ, eta / 4), 0.7, 1.9, 3.1,
                          QuadratureControl(points=64))
    assert r.ratio_minus_one < 1e-8


def test_str_symmetric_point():
    eta = P_SQ.eta.real
    h = math.pi / 2
    r = verify_str_master(WeightSpec(P_SQ, eta / 3), WeightSpec(P_SQ, eta / 3), h, h, h,
                          QuadratureControl(points=64))
    assert r.ratio_minus_one < 1e-8


def test_str_regime_ii_and_degenerate():
    eta = P_II.eta.real
    r = verify_str_master(WeightSpec(P_II, 0.2 * eta), WeightSpec(P_II, 0.35 * eta), 0.4, 2.2, 5.0)
    assert r.ratio_minus_one < 1e-8
    r0 = verify_str_master(WeightSpec(P_II, 1e-3 * eta), WeightSpec(P_II, 0.3 * eta), 0.4, 2.2, 5.0)
    assert r0.ratio_minus_one < 1e-8


def test_str_quadrature_cap():
    eta = P_SQ.eta.real
    ctl = QuadratureControl(points=32, max_points=32)
    with pytest.raises(QuadratureNotConverged):
        verify_str_master(WeightSpec(P_SQ, 0.02 * eta), WeightSpec(P_SQ, 0.02 * eta), 0.7, 1.9, 3.1, ctl)


def test_quadrature_control_validation():
    with pytest.raises(ValueError):
        QuadratureControl(points=16)


def test_inversion_second():
    rng = np.random.default_rng(4)
    for _ in range(20):
        a = rng.uniform(0.05, 0.95) * P_SQ.eta.real
        x, y = rng.uniform(0, 2 * math.pi, 2)
        assert verify_inversion_second(WeightSpec(P_SQ, a), x, y) < 1e-12
    assert verify_inversion_second(WeightSpec(P_SQ, 0.0), 0.3, 0.4) == 0
    assert verify_inversion_second(WeightSpec(P_SQ, 0.3 + 0.2j), 0.5, 1.7) < 1e-11


def test_inversion_first_constant():
    spec = WeightSpec(P_SQ, 0.1 * P_SQ.eta.real)
    assert verify_inversion_first(spec, 1.1, lambda y: np.ones_like(y), QuadratureControl(points=64)) < 1e-4


def test_inversion_first_cosine_improves_with_points():
    spec = WeightSpec(P_SQ, 0.1 * P_SQ.eta.real)

    def run(n):
        # two grid levels, always accepted, so the residual reflects the grid size
        ctl = QuadratureControl(points=n, max_points=2 * n, rel_tol=1.0, abs_tol=1.0)
        return verify_inversion_first(spec, math.pi / 3, np.cos, ctl)

    coarse, fine = run(32), run(64)
    assert fine < 1e-4
    assert fine < coarse


def test_inversion_first_at_zero_spin():
    with pytest.raises(BadDomain):
        verify_inversion_first(WeightSpec(P_SQ, 0.3), 0.0, np.cos)
