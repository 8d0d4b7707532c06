"""Vectorized exponent grids vs the scalar quadrature reference.

The grid paths (universal-kernel tabulation for stable sides, exponential
integral closed form for tempered sides) must agree with the adaptive
quadrature scalars in charfn at every frequency, including short grids
where the tail asymptotics used to misfire.
"""

import math

import numpy as np
import pytest

from smalljumps.charfn import big_jump_exponent, small_jump_exponent
from smalljumps.gridcf import ExponentGrid
from smalljumps.models import ProcessConfig, TemperedStableParams

CONFIGS = [
    ProcessConfig(TemperedStableParams(1.0, 1.0, 0.0, 0.0, 0.7), delta=1.0, n=10),
    ProcessConfig(TemperedStableParams(1.0, 1.0, 0.0, 0.0, 1.0), delta=1.0, n=10),
    ProcessConfig(TemperedStableParams(2.0, 0.0, 0.0, 0.0, 1.1), delta=0.1, n=10),
    ProcessConfig(TemperedStableParams(1.0, 0.5, 0.0, 0.0, 1.7), delta=0.01, n=10),
    ProcessConfig(TemperedStableParams(2.0, 0.5, 1.0, 0.3, 0.7), delta=1.0, n=10),
    ProcessConfig(TemperedStableParams(1.0, 1.0, 0.5, 0.5, 1.0), delta=1.0, n=10),
    ProcessConfig(TemperedStableParams(1.5, 0.2, 2.0, 0.4, 1.3), delta=0.5, n=10),
]

SHORT = np.linspace(0.1, 1.5, 8)  # regression: short grids once hit the tail bug
# start at 0.3: the scalar QUADPACK reference itself fails below ~0.1
LONG = np.linspace(0.3, 60.0, 120)


@pytest.mark.parametrize("config", CONFIGS)
@pytest.mark.parametrize("u", [SHORT, LONG], ids=["short", "long"])
def test_exponents_match_scalar_reference(config, u):
    grid = ExponentGrid(config, u)
    small_ref = np.array([small_jump_exponent(config, ui) for ui in u])
    big_ref = np.array([big_jump_exponent(config, ui) for ui in u])
    np.testing.assert_allclose(grid.psi_small(), small_ref, rtol=5e-8, atol=1e-10)
    np.testing.assert_allclose(grid.psi_big(), big_ref, rtol=5e-8, atol=1e-10)


def test_cf_factors_consistent():
    config = CONFIGS[4]
    u = np.linspace(0.2, 5.0, 12)
    grid = ExponentGrid(config, u)
    np.testing.assert_allclose(
        grid.cf_small(), np.exp(config.delta * grid.psi_small()), rtol=1e-14
    )
    np.testing.assert_allclose(grid.cf_total(), grid.cf_small() * grid.cf_big(), rtol=1e-14)


def test_cf_noise_includes_gaussian_factor():
    params = TemperedStableParams(1.0, 1.0, 0.0, 0.0, 0.7)
    u = np.linspace(0.5, 3.0, 6)
    base = ExponentGrid(ProcessConfig(params, delta=2.0, n=10), u)
    noisy = ExponentGrid(ProcessConfig(params, delta=2.0, sigma=0.5, n=10), u)
    ratio = noisy.cf_noise() / base.cf_noise()
    np.testing.assert_allclose(ratio, np.exp(-0.25 * 2.0 * u**2 / 2.0), rtol=1e-12)
    np.testing.assert_allclose(
        noisy.cf_noise(include_gaussian=False), base.cf_noise(), rtol=1e-12
    )


def test_zero_frequency_included():
    config = CONFIGS[0]
    grid = ExponentGrid(config, np.array([0.0, 1.0]))
    assert grid.psi_small()[0] == 0.0
    assert grid.cf_total()[0] == pytest.approx(1.0, rel=1e-12)


def test_symmetric_alpha_one_closed_form():
    # P = Q = 1, alpha = 1, stable: phi_X(u) = exp(-pi u Delta)
    config = CONFIGS[1]
    u = np.array([0.5, 1.0, 2.0, 10.0])
    grid = ExponentGrid(config, u)
    np.testing.assert_allclose(grid.cf_total(), np.exp(-math.pi * u), rtol=1e-7)


def test_grid_validation():
    config = CONFIGS[0]
    with pytest.raises(ValueError):
        ExponentGrid(config, np.array([1.0, 0.5]))
    with pytest.raises(ValueError):
        ExponentGrid(config, np.array([-1.0, 0.5]))
    with pytest.raises(ValueError):
        ExponentGrid(config, np.array([[0.5, 1.0]]))
    bad_eps = ProcessConfig(TemperedStableParams(1.0, 1.0, 0.0, 0.0, 0.7),
                            delta=1.0, n=10, epsilon=1.0)
    object.__setattr__(bad_eps, "epsilon", 0.5)
    with pytest.raises(ValueError):
        ExponentGrid(bad_eps, np.array([0.5, 1.0]))


def test_dense_selection_scale_grid_tempered():
    # the selection scan hits ~10^4-10^5 frequencies; spot-check a stride
    config = CONFIGS[6]
    u = np.linspace(0.0, 800.0, 20001)
    grid = ExponentGrid(config, u)
    take = np.arange(0, u.size, 2500)
    small_ref = np.array([small_jump_exponent(config, u[i]) for i in take])
    np.testing.assert_allclose(grid.psi_small()[take], small_ref, rtol=1e-7, atol=1e-10)
