import math

import mpmath
import numpy as np
import pytest
import sympy

from invsq.errors import ParameterError
from invsq.specfun import (
    BesselOrder,
    bessel_i,
    bessel_j,
    gamma_fn,
    gegenbauer,
    gegenbauer_table,
    log_bessel_i_scaled,
)


def test_bessel_j_half_integer_zero():
    # J_{1/2}(x) = sqrt(2/(pi x)) sin x vanishes at x = pi
    assert abs(bessel_j(BesselOrder(0.5), math.pi)) < 1e-10


def test_bessel_j_half_integer_value():
    assert bessel_j(0.5, math.pi / 2) == pytest.approx(2.0 / math.pi, rel=1e-12)


def test_bessel_j_at_zero():
    assert bessel_j(0.0, 0.0) == 1.0
    with pytest.raises(ParameterError):
        bessel_j(0.5, -1.0)


def test_bessel_j_recurrence():
    # J_{nu-1}(x) + J_{nu+1}(x) = (2 nu / x) J_nu(x)
    for nu in np.linspace(0.5, 5.0, 10):
        for x in np.geomspace(0.1, 100.0, 12):
            lhs = bessel_j(nu - 1, x) + bessel_j(nu + 1, x)
            rhs = 2 * nu / x * bessel_j(nu, x)
            assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-12)


def test_bessel_i_half_integer():
    scaled, expo = bessel_i(BesselOrder(0.5), 1.0)
    expect = math.sqrt(2 / math.pi) * math.sinh(1.0)
    assert scaled * math.exp(expo) == pytest.approx(expect, rel=1e-12)


def test_bessel_i_at_zero():
    scaled, expo = bessel_i(0.0, 0.0)
    assert scaled * math.exp(expo) == 1.0
    with pytest.raises(ParameterError):
        bessel_i(0.5, -1.0)


def test_bessel_i_series_oracle():
    # brute-force power series for I_{3/2}(2)
    nu, x = 1.5, 2.0
    expect = sum((x / 2) ** (nu + 2 * k) / (math.gamma(k + 1) * math.gamma(nu + k + 1))
                 for k in range(60))
    scaled, expo = bessel_i(nu, x)
    assert scaled * math.exp(expo) == pytest.approx(expect, rel=1e-12)


def test_bessel_i_positive_increasing():
    xs = np.geomspace(0.1, 50.0, 30)
    vals = [bessel_i(0.7, x).scaled * math.exp(x) for x in xs]
    assert all(v > 0 for v in vals)
    assert all(b > a for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("nu,z", [(0.0, 1e-3), (0.5, 0.5), (2.0, 10.0), (30.0, 3.0),
                                  (400.0, 1.0), (150.0, 40.0), (5.0, 2000.0)])
def test_log_scaled_i_vs_mpmath(nu, z):
    got = float(log_bessel_i_scaled(nu, np.array([z]))[0])
    with mpmath.workdps(60):
        expect = float(mpmath.log(mpmath.besseli(nu, z)) - z)
    assert got == pytest.approx(expect, rel=1e-11, abs=1e-11)


def test_gegenbauer_degree_zero_and_one():
    for lam in (0.5, 1.0, 1.5):
        for t in (-1.0, -0.3, 0.0, 0.9, 1.0):
            assert gegenbauer(0, lam, t) == 1.0
            assert gegenbauer(1, lam, t) == pytest.approx(2 * lam * t, rel=1e-14, abs=1e-14)


def test_gegenbauer_legendre_normalization():
    # lambda = 1/2 reduces to Legendre; P_2(1) = 1
    assert gegenbauer(2, 0.5, 1.0) == pytest.approx(1.0, rel=1e-14)


@pytest.mark.parametrize("lam", [0.5, 1.0, 1.5])
@pytest.mark.parametrize("t", [-0.9, -0.25, 0.0, 0.4, 1.0])
def test_gegenbauer_degree_three_vs_sympy(lam, t):
    x = sympy.Symbol("x")
    expect = float(sympy.gegenbauer(3, sympy.Rational(lam).limit_denominator(), x).subs(x, t))
    assert gegenbauer(3, lam, t) == pytest.approx(expect, rel=1e-12, abs=1e-12)


def test_gegenbauer_table_matches_scalar():
    t = np.linspace(-1, 1, 11)
    table = gegenbauer_table(6, 1.0, t)
    for ell in range(7):
        np.testing.assert_allclose(table[ell], [gegenbauer(ell, 1.0, ti) for ti in t],
                                   rtol=1e-12, atol=1e-12)


def test_gegenbauer_domain_check():
    with pytest.raises(ParameterError):
        gegenbauer(2, 0.5, 1.5)


def test_gamma_values():
    assert gamma_fn(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-12)
    assert gamma_fn(1.0) == 1.0
    assert gamma_fn(5.0) == 24.0


def test_gamma_functional_equation():
    for x in (0.3, 1.7, 4.2, 9.9):
        assert gamma_fn(x + 1) == pytest.approx(x * gamma_fn(x), rel=1e-12)


def test_gamma_pole():
    with pytest.raises(ParameterError):
        gamma_fn(0.0)
    with pytest.raises(ParameterError):
        gamma_fn(-3.0)
