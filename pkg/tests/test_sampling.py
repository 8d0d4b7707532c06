"""Sampler correctness: CF oracles, determinism, tail laws, persistence.

The load-bearing checks compare empirical CFs of the simulated increments
to the exact model CFs from the quadrature layer — the sampler and the CF
code share no machinery, so agreement certifies both.
"""

import math

import numpy as np
import pytest
from scipy import stats

from smalljumps.charfn import cf_full, empirical_cf
from smalljumps.models import ProcessConfig, TemperedStableParams
from smalljumps.sampling import (
    IncrementSample,
    cp_bias_bound,
    derive_rng,
    derive_seed,
    sample_big_jump_increments,
    sample_full_increments,
    sample_small_jump_increments,
    sample_stable_increments,
    sample_tempered_stable_increments,
    stable_marginal,
)

STABLE_SYM = TemperedStableParams(1.0, 1.0, 0.0, 0.0, 0.7)
STABLE_ASYM = TemperedStableParams(2.0, 0.5, 0.0, 0.0, 1.1)
TEMPERED_FV = TemperedStableParams(2.0, 0.5, 1.0, 0.3, 0.7)
TEMPERED_IV = TemperedStableParams(1.0, 1.0, 0.5, 0.5, 1.3)

U_GRID = np.linspace(-10.0, 10.0, 41)


def _cf_check(sample, config, tol_mult=3.0):
    """Max ECF-vs-model-CF deviation on the standard grid, against 3/sqrt(n)."""
    model = np.array([cf_full(config, u) for u in U_GRID])
    emp = empirical_cf(sample.values, U_GRID)
    err = np.max(np.abs(emp - model))
    assert err <= tol_mult / math.sqrt(config.n), err


def test_stable_sampler_cf_oracle_symmetric():
    config = ProcessConfig(STABLE_SYM, delta=1.0, n=100_000)
    _cf_check(sample_full_increments(config, seed=42), config)


def test_stable_sampler_cf_oracle_asymmetric_with_noise():
    config = ProcessConfig(STABLE_ASYM, delta=0.1, sigma=0.5, n=100_000)
    _cf_check(sample_full_increments(config, seed=7), config)


def test_tempered_sampler_cf_oracle_finite_variation():
    config = ProcessConfig(TEMPERED_FV, delta=1.0, n=100_000)
    _cf_check(sample_full_increments(config, seed=3), config)


def test_tempered_sampler_cf_oracle_infinite_variation():
    # coarser truncation keeps the jump count manageable at alpha > 1; the
    # variance-matched Gaussian keeps the CF error well below the band
    config = ProcessConfig(TEMPERED_IV, delta=0.1, n=100_000)
    sample = sample_full_increments(config, seed=5, trunc_eta=0.05)
    _cf_check(sample, config)


def test_small_jump_sampler_cf_oracle():
    from smalljumps.charfn import cf_small_jumps

    config = ProcessConfig(TEMPERED_FV, delta=1.0, n=100_000)
    sample = sample_small_jump_increments(config, seed=11)
    model = np.array([cf_small_jumps(config, u) for u in U_GRID])
    emp = empirical_cf(sample.values, U_GRID)
    assert np.max(np.abs(emp - model)) <= 3.0 / math.sqrt(config.n)


def test_big_jump_sampler_cf_oracle():
    from smalljumps.charfn import cf_big_jumps

    config = ProcessConfig(TEMPERED_FV, delta=1.0, n=100_000)
    sample = sample_big_jump_increments(config, seed=13)
    model = np.array([cf_big_jumps(config, u) for u in U_GRID])
    emp = empirical_cf(sample.values, U_GRID)
    assert np.max(np.abs(emp - model)) <= 3.0 / math.sqrt(config.n)


def test_stable_marginal_matches_numeric_exponent():
    # the S_alpha(scale, beta, shift) closed form vs the quadrature exponent
    from smalljumps.charfn import cf_big_jumps, cf_small_jumps

    for params, delta in ((STABLE_SYM, 1.0), (STABLE_ASYM, 0.5),
                          (TemperedStableParams(2.0, 0.5, 0.0, 0.0, 1.0), 1.0)):
        config = ProcessConfig(params, delta=delta, n=10)
        scale, beta, shift = stable_marginal(params, delta)
        a = params.alpha
        for u in (0.5, 1.0, 3.0):
            if a != 1.0:
                expo = -scale**a * u**a * (1 - 1j * beta * math.tan(math.pi * a / 2))
            else:
                expo = -scale * u * (1 + 2j * beta * math.log(u) / math.pi)
            closed = np.exp(expo + 1j * shift * u)
            numeric = cf_small_jumps(config, u) * cf_big_jumps(config, u)
            assert closed == pytest.approx(numeric, rel=1e-7)


def test_determinism_and_seed_separation():
    config = ProcessConfig(TEMPERED_FV, delta=1.0, n=500)
    a = sample_full_increments(config, seed=21)
    b = sample_full_increments(config, seed=21)
    c = sample_full_increments(config, seed=22)
    np.testing.assert_array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)


def test_derive_seed_distinct_and_stable():
    seeds = [derive_seed(123, r) for r in range(200)]
    assert len(set(seeds)) == 200
    assert seeds[0] == derive_seed(123, 0)


def test_derive_rng_streams_independent():
    a = derive_rng(5, 0).standard_normal(4)
    b = derive_rng(5, 1).standard_normal(4)
    assert not np.array_equal(a, b)


def test_sigma_zero_matches_jump_only_sample():
    base = ProcessConfig(TEMPERED_FV, delta=1.0, n=300)
    jump = sample_tempered_stable_increments(base, seed=9)
    full = sample_full_increments(base, seed=9)
    np.testing.assert_array_equal(jump.values, full.values)


def test_noise_stream_does_not_disturb_jumps():
    cfg0 = ProcessConfig(TEMPERED_FV, delta=1.0, n=300)
    cfg1 = ProcessConfig(TEMPERED_FV, delta=1.0, sigma=1.0, n=300)
    jump = sample_full_increments(cfg0, seed=9)
    noisy = sample_full_increments(cfg1, seed=9)
    diff = noisy.values - jump.values
    # difference is exactly the Brownian part: mean ~ 0, sd ~ sigma sqrt(delta)
    assert abs(np.std(diff) - 1.0) < 0.15
    assert not np.allclose(diff, 0.0)


def test_big_jump_one_sided_and_pareto_tail():
    params = TemperedStableParams(1.0, 0.0, 0.0, 0.0, 0.7)
    # tiny delta: nonzero increments are single jumps with prob ~ 0.995
    config = ProcessConfig(params, delta=0.007, n=200_000)
    sample = sample_big_jump_increments(config, seed=17)
    vals = sample.values
    assert np.all(vals >= 0.0)
    jumps = vals[vals > 0.0]
    assert jumps.size > 1000
    assert np.all(jumps >= 1.0 - 1e-12)
    p_hat = np.mean(jumps > 2.0)
    se = math.sqrt(0.25 / jumps.size)
    assert abs(p_hat - 2.0**-0.7) < 4 * se + 0.01


def test_tempered_big_jump_magnitudes_above_epsilon():
    config = ProcessConfig(TEMPERED_FV, delta=0.01, n=50_000)
    sample = sample_big_jump_increments(config, seed=19)
    nonzero = sample.values[sample.values != 0.0]
    assert nonzero.size > 100
    # increments with two jumps of opposite sign can land below epsilon
    assert np.mean(np.abs(nonzero) >= 1.0 - 1e-12) > 0.99


def test_stable_self_similarity_ks():
    params = TemperedStableParams(2.0, 0.0, 0.0, 0.0, 0.7)
    n = 20_000
    fine = sample_stable_increments(ProcessConfig(params, delta=0.01, n=n), seed=23)
    unit = sample_stable_increments(ProcessConfig(params, delta=1.0, n=n), seed=24)
    scaled = 0.01 ** (1.0 / 0.7) * unit.values
    assert stats.ks_2samp(fine.values, scaled).pvalue > 1e-3


def test_cp_bias_bound_monotone_in_eta():
    etas = [1e-4, 1e-3, 1e-2, 0.1]
    bounds = [cp_bias_bound(TEMPERED_FV, eta) for eta in etas]
    assert all(b1 < b2 for b1, b2 in zip(bounds, bounds[1:]))
    assert bounds[0] < 1e-5


def test_sampler_input_validation():
    with pytest.raises(ValueError):
        sample_tempered_stable_increments(
            ProcessConfig(STABLE_SYM, delta=1.0, n=10), seed=1
        )
    with pytest.raises(ValueError):
        sample_stable_increments(ProcessConfig(TEMPERED_FV, delta=1.0, n=10), seed=1)
    cfg = ProcessConfig(TEMPERED_FV, delta=1.0, n=10)
    with pytest.raises(ValueError):
        sample_small_jump_increments(cfg, seed=1, trunc_eta=1.0)
    with pytest.raises(ValueError):
        sample_tempered_stable_increments(cfg, seed=1, trunc_eta=0.0)


def test_increment_sample_csv_roundtrip(tmp_path):
    config = ProcessConfig(TEMPERED_FV, delta=0.5, sigma=0.3, n=50)
    sample = sample_full_increments(config, seed=31)
    path = tmp_path / "inc.csv"
    sample.write_csv(path)
    back = IncrementSample.read_csv(path)
    np.testing.assert_array_equal(back.values, sample.values)
    assert back.seed == sample.seed
    assert back.config == sample.config
    assert back.meta == sample.meta
