"""Special functions and jet arithmetic against independent oracles.

Frozen reference values come from the integral representations evaluated
with mpmath at 50 digits (not from the same library routes the
implementation uses), or from closed forms checked by hand.
"""

import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special as sp

from specdens import (
    Jet,
    bessel_i0,
    bessel_i0_scaled,
    gamma_inc0,
    harmonic_number,
    laguerre,
    mod_laguerre,
    numerator_jet,
    tricomi_u,
)
from specdens.errors import AccuracyError, DomainError, InvalidInputError, SingularJetError
from specdens.specfun import (
    _g_asymptotic_jet,
    _g_recurrence_jet,
    _g_series_jet,
    _g_values,
)

mp.mp.dps = 50


def g_reference(p):
    p = mp.mpc(p)
    return mp.e ** p * (mp.euler + mp.log(p) + mp.e1(p))


# --- scalar special functions ------------------------------------------------

def test_harmonic_numbers():
    assert harmonic_number(0) == 0.0
    assert harmonic_number(1) == 1.0
    assert harmonic_number(4) == pytest.approx(25 / 12, rel=1e-15)


def test_laguerre_against_scipy():
    xs = np.linspace(-30, 30, 13)
    for k in range(9):
        assert laguerre(k, xs) == pytest.approx(sp.eval_laguerre(k, xs), rel=1e-11)


def test_mod_laguerre_at_zero_is_minus_harmonic():
    # hand values: -3/2 and -11/6
    assert mod_laguerre(2, 0.0) == pytest.approx(-1.5, rel=1e-15)
    assert mod_laguerre(3, 0.0) == pytest.approx(-11 / 6, rel=1e-15)
    for m in range(13):
        assert mod_laguerre(m, 0.0) == pytest.approx(-harmonic_number(m), rel=1e-13)


def test_gamma_inc0_frozen_value():
    # int_1^inf e^-t / t dt
    assert gamma_inc0(1.0) == pytest.approx(0.21938393439552027, rel=1e-14)


def test_gamma_inc0_quadrature_oracle():
    for x in (0.05, 0.7, 3.0, 14.0):
        ref = float(mp.quad(lambda t: mp.e ** (-t) / t, [x, mp.inf]))
        assert gamma_inc0(x) == pytest.approx(ref, rel=1e-12)


def test_gamma_inc0_domain():
    with pytest.raises(DomainError):
        gamma_inc0(0.0)
    with pytest.raises(DomainError):
        gamma_inc0(-1.0)


def _u_integral(a, b, x):
    # U(a,b,x) = (1/Gamma(a)) int_0^inf e^-xt t^(a-1) (1+t)^(b-a-1) dt
    f = lambda t: mp.e ** (-x * t) * t ** (a - 1) * (1 + t) ** (b - a - 1)
    return float(mp.quad(f, [0, 1, mp.inf]) / mp.gamma(a))


def test_tricomi_u_frozen_value():
    # U(1,1,1) = e * Gamma(0,1)
    assert tricomi_u(1, 1, 1.0) == pytest.approx(0.59634736232319407, rel=1e-12)


@pytest.mark.parametrize(
    "a, b, x",
    [
        (1, 1, 0.8),
        (2, 1, 3.0),
        (3, 2, 1.5),
        (4, 3, 0.3),
        (1, 0, 2.0),
        (2, -1, 0.7),
        (3, -2, 0.05),
        (2, 2, 7.0),
        (2, 2, 60.0),
        (1, 1, 75.0),
        (5, 1, 12.0),
    ],
)
def test_tricomi_u_integral_oracle(a, b, x):
    assert tricomi_u(a, b, x) == pytest.approx(_u_integral(a, b, x), rel=1e-10)


def test_tricomi_u_kummer_consistency():
    # U(a,b,x) = x^(1-b) U(a-b+1, 2-b, x) with a=1, b=0
    assert tricomi_u(1, 0, 2.0) == pytest.approx(2.0 * tricomi_u(2, 2, 2.0), rel=1e-11)


def test_tricomi_u_rejects_bad_arguments():
    with pytest.raises(InvalidInputError):
        tricomi_u(0, 1, 1.0)
    with pytest.raises(DomainError):
        tricomi_u(1, 1, 0.0)


def _mod_laguerre_mp(k, y):
    # same recurrence as the package, run in 50-digit arithmetic
    y = mp.mpf(y)
    prev, cur = mp.mpf(0), mp.mpf(-1)
    if k == 0:
        return prev
    for m in range(1, k):
        prev, cur = cur, ((2 * m + 1 - y) * cur - m * prev) / (m + 1)
    return cur


@pytest.mark.parametrize("x", [0.05, 0.3, 1.0, 4.0, 11.0, 20.0])
@pytest.mark.parametrize("k", [0, 1, 2, 5, 8, 12])
def test_gamsing_identity_full_range(k, x):
    # k! U(k+1,1,x) = e^x Gamma(0,x) L_k(-x) + Lt_k(-x).  The right side
    # cancels like x^k e^x / k! (18 digits at k=12, x=20), so it is summed
    # in high precision; the package value under test is the left side.
    lhs = math.factorial(k) * tricomi_u(k + 1, 1, x)
    rhs = float(mp.e ** x * mp.e1(x) * mp.laguerre(k, 0, -x) + _mod_laguerre_mp(k, -x))
    assert lhs == pytest.approx(rhs, rel=1e-9)


@pytest.mark.parametrize("x", [0.1, 1.0, 5.0])
@pytest.mark.parametrize("k", [0, 1, 2, 3, 4, 5, 6])
def test_gamsing_identity_both_sides_double(k, x):
    # on this range the cancellation stays mild, so the double-precision
    # package pieces must close the identity on their own
    lhs = math.factorial(k) * tricomi_u(k + 1, 1, x)
    rhs = math.exp(x) * gamma_inc0(x) * laguerre(k, -x) + mod_laguerre(k, -x)
    assert lhs == pytest.approx(rhs, rel=1e-9)


def test_bessel_i0():
    assert bessel_i0(1.0) == pytest.approx(1.2660658777520084, rel=1e-13)
    assert bessel_i0(0.0) == 1.0
    # scaled form stays finite where the plain one overflows
    assert bessel_i0_scaled(800.0) == pytest.approx(
        float(mp.besseli(0, 800) * mp.e ** (-800)), rel=1e-12
    )


# --- jet arithmetic ----------------------------------------------------------

def test_jet_product_example():
    p = Jet.variable(0.0, 2)
    one = Jet.constant(1.0, 0.0, 2)
    prod = (one + p) * (one - p)
    assert prod.coeffs == (1 + 0j, 0j, -1 + 0j)


def test_jet_reciprocal_example():
    p = Jet.variable(0.0, 3)
    inv = (p + Jet.constant(2.0, 0.0, 3)).reciprocal()
    assert inv.coeffs == pytest.approx((0.5, -0.25, 0.125, -0.0625))


def test_jet_reciprocal_of_zero_constant():
    with pytest.raises(SingularJetError):
        Jet.variable(0.0, 2).reciprocal()


def test_jet_frame_mismatch_rejected():
    a = Jet.variable(0.0, 2)
    b = Jet.variable(1.0, 2)
    with pytest.raises(InvalidInputError):
        a + b


def test_jet_compose_linear_reparameterizes():
    # q -> p = 2q + 1; jet of p^2 at p-center 3 becomes a jet at q-center 1
    p = Jet.variable(3.0, 4)
    j = p * p
    k = j.compose_linear(2.0, 1.0)
    assert k.center == pytest.approx(1.0)
    for q in (0.9, 1.0, 1.2):
        assert k.evaluate(q) == pytest.approx((2 * q + 1) ** 2, rel=1e-12)


small_c = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False)


@settings(max_examples=60)
@given(small_c, st.lists(small_c, min_size=1, max_size=4), st.lists(small_c, min_size=1, max_size=4))
def test_jet_product_evaluates_like_product(center, ca, cb):
    a = Jet(center, tuple(ca) + (0j,) * (4 - len(ca)))
    b = Jet(center, tuple(cb) + (0j,) * (4 - len(cb)))
    x = center + 1e-3
    got = (a * b).evaluate(x)
    want = a.evaluate(x) * b.evaluate(x)
    # product truncates at order 3; dropped cross terms are O(1e-12) here
    assert got == pytest.approx(want, abs=1e-9 * (1 + abs(want)))


@settings(max_examples=60)
@given(small_c, st.lists(small_c, min_size=1, max_size=5))
def test_jet_reciprocal_round_trip(center, coeffs):
    j = Jet(center, tuple(coeffs) + (0j,) * (5 - len(coeffs)))
    if abs(j.coeffs[0]) < 1e-6:
        return
    unit = j * j.reciprocal()
    assert unit.coeffs[0] == pytest.approx(1.0, rel=1e-9)
    for c in unit.coeffs[1:]:
        assert abs(c) < 1e-7 * (1 + abs(j.coeffs[0]))


# --- jets of g ---------------------------------------------------------------

def test_g_taylor_coefficients_at_origin():
    jet = numerator_jet(0j, 20)
    assert jet.coeffs[0] == 0j
    assert jet.coeffs[1] == 1 + 0j
    for m in range(2, 21):
        assert jet.coeffs[m] == pytest.approx(harmonic_number(m) / math.factorial(m), rel=1e-13)


@pytest.mark.parametrize(
    "p0",
    [-5 + 0j, -15 + 0j, -39 + 1j, -41 + 0j, -120 + 5j, 3 + 4j, -30 + 10j, -7.84 + 0.02j],
)
def test_g_jets_against_mpmath(p0):
    jet = numerator_jet(p0, 8)
    for k in range(9):
        ref = complex(mp.diff(g_reference, mp.mpc(p0), k) / mp.factorial(k))
        assert jet.coeffs[k] == pytest.approx(ref, rel=1e-11)


def test_g_regime_seams_agree():
    # series jet vs recurrence jet straddling the tiny-|p| cutoff
    for p0 in (0.45 + 0.1j, 0.55 - 0.2j, -0.4 + 0j):
        a = _g_series_jet(p0, 6)
        b = _g_recurrence_jet(p0, 6)
        for x, y in zip(a.coeffs, b.coeffs):
            assert x == pytest.approx(y, rel=1e-11, abs=1e-14)
    # recurrence vs asymptotic straddling the far-left cutoff; high-order
    # coefficients shrink like |p0|^-(k+1), so anchor the tolerance to the
    # leading coefficient rather than demanding relative agreement of tails
    for p0 in (-39 + 0j, -41 + 2j, -45 - 4j):
        a = _g_recurrence_jet(p0, 6)
        b = _g_asymptotic_jet(p0, 6)
        scale = abs(a.coeffs[0])
        for x, y in zip(a.coeffs, b.coeffs):
            assert abs(x - y) <= 1e-11 * (scale + abs(x))


def test_g_overflow_guard():
    with pytest.raises(AccuracyError):
        numerator_jet(1000.0 + 0j, 3)


def test_g_values_matches_jets():
    pts = np.array(
        [0.1 + 0.2j, -0.3j, 0.49, -2.0 + 0j, -7.5 + 0.3j, 3.0 + 4.0j,
         -39.0 + 1j, -41.0 + 0j, -120.0 + 5j, -60.0 + 59.0j, 0.6 + 0j, -1e-3 + 1e-4j]
    )
    vals = _g_values(pts)
    for p, v in zip(pts, vals):
        ref = numerator_jet(complex(p), 1).coeffs[0]
        assert v == pytest.approx(ref, rel=1e-12, abs=1e-300)
