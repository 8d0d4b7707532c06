"""Characteristic function layer: scalar exponents and empirical CFs.

The scalar quadrature path is checked against an independent mpmath
quadrature with a different decomposition of the integrand, plus closed
forms for symmetric stable processes.
"""

import cmath
import math

import mpmath as mp
import numpy as np
import pytest

from smalljumps.charfn import (
    CfGrid,
    big_jump_exponent,
    cf_big_jumps,
    cf_full,
    cf_gaussian,
    cf_small_jumps,
    deconvolved_cf,
    empirical_cf,
    small_jump_exponent,
)
from smalljumps.models import ProcessConfig, TemperedStableParams

mp.mp.dps = 30

SYM_STABLE = ProcessConfig(TemperedStableParams(1.0, 1.0, 0.0, 0.0, 0.7), delta=1.0, n=10)
ONE_STABLE = ProcessConfig(TemperedStableParams(1.0, 1.0, 0.0, 0.0, 1.0), delta=1.0, n=10)
ASYM = ProcessConfig(TemperedStableParams(2.0, 0.5, 1.0, 0.3, 1.3), delta=0.5, n=10)


def _mp_small_exponent(config, u):
    """Independent oracle: mpmath quadrature of the defining integrals."""
    p = config.params
    a = p.alpha

    def re_int(x):
        return (mp.cos(u * x) - 1) * (
            p.P * mp.e ** (-p.A * x) + p.Q * mp.e ** (-p.B * x)
        ) * x ** (-1 - a)

    if a < 1:
        def im_int(x):
            return mp.sin(u * x) * (
                p.P * mp.e ** (-p.A * x) - p.Q * mp.e ** (-p.B * x)
            ) * x ** (-1 - a)
    else:
        def im_int(x):
            return (mp.sin(u * x) - u * x) * (
                p.P * mp.e ** (-p.A * x) - p.Q * mp.e ** (-p.B * x)
            ) * x ** (-1 - a)

    pts = [0, 1.0 / (1 + abs(u)), 1]
    return complex(float(mp.quad(re_int, pts)), float(mp.quad(im_int, pts)))


@pytest.mark.parametrize("config", [SYM_STABLE, ONE_STABLE, ASYM])
@pytest.mark.parametrize("u", [0.3, 1.0, 4.0, 17.5])
def test_small_jump_exponent_against_mpmath(config, u):
    got = small_jump_exponent(config, u)
    ref = _mp_small_exponent(config, u)
    assert got == pytest.approx(ref, rel=1e-9, abs=1e-12)


def test_small_exponent_zero_frequency():
    assert small_jump_exponent(SYM_STABLE, 0.0) == 0.0


@pytest.mark.parametrize("config", [SYM_STABLE, ONE_STABLE, ASYM])
@pytest.mark.parametrize("u", [0.5, 2.0, 9.0])
def test_hermitian_symmetry(config, u):
    for f in (cf_small_jumps, cf_big_jumps):
        assert f(config, -u) == pytest.approx(f(config, u).conjugate(), rel=1e-12)


def test_big_jump_exponent_against_mpmath():
    p = ASYM.params
    u = 1.7

    def integrand(x):
        return (mp.e ** (1j * u * x) - 1) * p.P * x ** (-1 - p.alpha) * mp.e ** (-p.A * x)

    def integrand_neg(x):
        return (mp.e ** (-1j * u * x) - 1) * p.Q * x ** (-1 - p.alpha) * mp.e ** (-p.B * x)

    pts = [1, 2, 3, 5, 8, 13, 21, 34, 55]
    ref = complex(
        mp.quad(integrand, pts, maxdegree=10) + mp.quad(integrand_neg, pts, maxdegree=10)
    )
    assert big_jump_exponent(ASYM, u) == pytest.approx(ref, rel=1e-8)


def test_symmetric_one_stable_full_cf_closed_form():
    # P = Q = 1, alpha = 1: phi_X(u) = exp(-pi |u| Delta)
    for u in (0.5, 1.0, 2.0):
        total = cf_small_jumps(ONE_STABLE, u) * cf_big_jumps(ONE_STABLE, u)
        assert total == pytest.approx(
            cmath.exp(-math.pi * u * ONE_STABLE.delta), rel=1e-8
        )


def test_full_cf_factorizes():
    config = ProcessConfig(ASYM.params, delta=0.5, sigma=0.4, n=10)
    u = 1.3
    assert cf_full(config, u) == pytest.approx(
        cf_small_jumps(config, u)
        * cf_big_jumps(config, u)
        * cf_gaussian(0.4, 0.5, u),
        rel=1e-12,
    )


def test_cf_gaussian_values():
    assert cf_gaussian(0.5, 2.0, 0.0) == 1.0
    assert cf_gaussian(0.5, 2.0, 3.0) == pytest.approx(math.exp(-0.25 * 2.0 * 9.0 / 2.0), rel=1e-12)
    out = cf_gaussian(1.0, 1.0, np.array([0.0, 1.0]))
    np.testing.assert_allclose(out, [1.0, math.exp(-0.5)], rtol=1e-14)


def test_empirical_cf_matches_direct_sum():
    rng = np.random.default_rng(5)
    x = rng.normal(size=200)
    u = np.array([-2.0, 0.0, 0.7, 3.1])
    got = empirical_cf(x, u)
    ref = np.array([np.mean(np.exp(1j * ui * x)) for ui in u])
    ref[1] = 1.0
    np.testing.assert_allclose(got, ref, rtol=1e-13)
    assert empirical_cf(x, 0.0) == 1.0 + 0.0j
    assert isinstance(empirical_cf(x, 0.7), complex)


def test_empirical_cf_empty_sample_rejected():
    with pytest.raises(ValueError):
        empirical_cf(np.array([]), 1.0)


def test_deconvolved_cf_divides_and_guards():
    x = np.array([0.1, -0.2, 0.3])
    out = deconvolved_cf(x, np.array([1.0]), lambda u: np.full_like(u, 0.5, dtype=complex))
    assert out[0] == pytest.approx(empirical_cf(x, 1.0) / 0.5)
    with pytest.raises(ZeroDivisionError):
        deconvolved_cf(x, np.array([1.0]), lambda u: np.zeros_like(u, dtype=complex))


def test_decay_bound_small_jump_cf():
    # 1 - cos(ux) >= 2(ux)^2/pi^2 on |ux| <= pi/2 plus the moment lower bound
    # give |phi_Z(u)| <= exp(-2^{alpha-1} M Delta u^alpha / pi^alpha), u >= pi/2
    from smalljumps.models import orey_constants

    for config in (SYM_STABLE, ONE_STABLE, ASYM):
        m_const, a = orey_constants(config.params, config.epsilon)
        c = 2.0 ** (a - 1.0) * m_const / math.pi**a
        for u in (math.pi / 2, 3.0, 10.0, 40.0):
            bound = math.exp(-c * config.delta * u**a)
            assert abs(cf_small_jumps(config, u)) <= bound * (1 + 1e-10)


def test_cfgrid_roundtrip(tmp_path):
    u = np.array([0.0, 0.5, 1.5])
    vals = np.array([1.0 + 0j, 0.8 - 0.1j, 0.3 + 0.05j])
    grid = CfGrid(u, vals)
    path = tmp_path / "cf.csv"
    grid.write_csv(path)
    back = CfGrid.read_csv(path)
    np.testing.assert_array_equal(back.u_values, u)
    np.testing.assert_array_equal(back.cf_values, vals)


def test_cfgrid_validation():
    with pytest.raises(ValueError):
        CfGrid(np.array([0.0, 0.0]), np.array([1.0 + 0j, 1.0 + 0j]))
    with pytest.raises(ValueError):
        CfGrid(np.array([0.0, 1.0]), np.array([1.0 + 0j]))
