"""Oracle tests for the incomplete gamma and exponential integral kernels.

mpmath is the reference: adaptive quadrature is unreliable at the tiny tail
values these functions reach (relative errors there can exceed 1e-5 even
with tight tolerances).
"""

import math

import mpmath as mp
import numpy as np
import pytest

from smalljumps.special import (
    exp_integral_p,
    upper_incomplete_gamma,
    upper_incomplete_gamma_neg,
)

mp.mp.dps = 40


def test_gamma_1_2_closed_form():
    assert upper_incomplete_gamma(1.0, 2.0) == pytest.approx(math.exp(-2.0), rel=1e-12)


def test_gamma_half_at_zero_is_sqrt_pi():
    assert upper_incomplete_gamma(0.5, 0.0) == pytest.approx(math.sqrt(math.pi), rel=1e-12)


def test_gamma_2_3_closed_form():
    # Gamma(2, s) = (1 + s) e^-s
    assert upper_incomplete_gamma(2.0, 3.0) == pytest.approx(4.0 * math.exp(-3.0), rel=1e-12)


@pytest.mark.parametrize("a", [0.3, 0.588, 1.0, 1.429, 2.5, 5.0])
@pytest.mark.parametrize("s", [1e-6, 0.1, 0.9, 2.0, 10.0, 80.0, 300.0])
def test_gamma_against_mpmath(a, s):
    got = upper_incomplete_gamma(a, s)
    ref = float(mp.gammainc(a, s))
    assert got == pytest.approx(ref, rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("a", [-1.9, -1.3, -1.0, -0.7, -0.2, 0.0, 0.4])
@pytest.mark.parametrize("s", [0.01, 0.3, 0.999, 1.0, 2.0, 20.0, 80.0])
def test_gamma_neg_against_mpmath(a, s):
    got = upper_incomplete_gamma_neg(a, s)
    ref = float(mp.gammainc(a, s))
    assert got == pytest.approx(ref, rel=5e-12, abs=1e-300)


def test_gamma_rejects_nonpositive_parameter():
    with pytest.raises(ValueError):
        upper_incomplete_gamma(0.0, 1.0)
    with pytest.raises(ValueError):
        upper_incomplete_gamma(-0.5, 1.0)


def test_gamma_rejects_negative_argument():
    with pytest.raises(ValueError):
        upper_incomplete_gamma(1.0, -1.0)


def test_gamma_neg_requires_positive_argument():
    with pytest.raises(ValueError):
        upper_incomplete_gamma_neg(-0.5, 0.0)


@pytest.mark.parametrize("p", [1.0, 2.0, 1.7, 2.1, 2.7])
@pytest.mark.parametrize(
    "z", [0.1 + 0j, 0.5 - 6j, 1.0 - 2j, 3.0 + 0.5j, 7.0 - 7j, 20.0 - 40j, 100.0 + 0j]
)
def test_exp_integral_against_mpmath(p, z):
    got = complex(exp_integral_p(p, np.array([z]))[0])
    ref = complex(mp.expint(p, z))
    assert got == pytest.approx(ref, rel=5e-12)


def test_exp_integral_vectorized_matches_scalar():
    z = np.array([0.2 + 0.1j, 5.0 - 3j, 12.0 + 0j, 0.05 - 9j])
    batch = exp_integral_p(1.7, z)
    singles = [exp_integral_p(1.7, np.array([zi]))[0] for zi in z]
    np.testing.assert_allclose(batch, singles, rtol=1e-14)


def test_exp_integral_at_zero_for_p_above_one():
    # E_p(0) = 1/(p - 1)
    assert exp_integral_p(2.5, np.array([0.0 + 0j]))[0] == pytest.approx(1.0 / 1.5, rel=1e-12)


def test_exp_integral_rejects_negative_real_part():
    with pytest.raises(ValueError):
        exp_integral_p(1.5, np.array([-1.0 + 0j]))
