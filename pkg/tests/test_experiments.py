"""Monte Carlo harness: determinism, structure, light table/rate runs."""

import math

import numpy as np
import pytest

from smalljumps.estimators import theoretical_bounds
from smalljumps.experiments import (
    RATE_COLUMNS,
    TABLE_COLUMNS,
    TABLE_IDS,
    CutoffMode,
    ExperimentSpec,
    RiskReport,
    oracle_cutoff,
    overlay_curves,
    rate_study,
    reproduce_table,
    run_monte_carlo,
    write_overlay_csv,
    write_rate_csv,
    write_table_csv,
)
from smalljumps.models import ProcessConfig, TemperedStableParams

SYM_STABLE = ProcessConfig(
    TemperedStableParams(1.0, 1.0, 0.0, 0.0, 0.7), delta=1.0, n=500
)
TEMPERED = ProcessConfig(
    TemperedStableParams(2.0, 0.5, 1.0, 0.3, 0.7), delta=1.0, n=400
)


def test_cutoff_mode_validation():
    with pytest.raises(ValueError):
        CutoffMode("nope")
    with pytest.raises(ValueError):
        CutoffMode("fixed")
    with pytest.raises(ValueError):
        CutoffMode("fixed", m=-1.0)
    CutoffMode("fixed", m=3.0)
    CutoffMode("oracle")


def test_experiment_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec(config=SYM_STABLE, replications=0)
    with pytest.raises(ValueError):
        ExperimentSpec(config=SYM_STABLE, estimator_kind="Else")
    with pytest.raises(ValueError):
        RiskReport(0.1, -1.0, 2.0, 0.0, 10)


def test_oracle_cutoff_closed_form_agrees():
    config = ProcessConfig(
        TemperedStableParams(0.5, 0.5, 0.0, 0.0, 1.0), delta=1.0, n=3000
    )
    m_star = oracle_cutoff(config, 3000)
    assert m_star == pytest.approx(theoretical_bounds(config, 5.0, 3000).m_star)


def test_oracle_cutoff_fallback_minimizes_bound():
    # log n <= 4 lambda Delta: no closed form; the numerical fallback still
    # returns a sensible cutoff above the grid floor
    m_star = oracle_cutoff(SYM_STABLE, 500)
    assert m_star >= math.pi / 2


def test_single_replication_zero_std():
    spec = ExperimentSpec(
        config=TEMPERED, replications=1, base_seed=5,
        cutoff_mode=CutoffMode("fixed", m=3.0),
    )
    report = run_monte_carlo(spec, threads=1)
    assert report.replications == 1
    assert report.std_rel_l2 == 0.0
    assert report.std_m_hat == 0.0
    assert report.mean_m_hat == 3.0
    assert 0.0 < report.mean_rel_l2 < 1.0


def test_run_monte_carlo_thread_invariance():
    spec = ExperimentSpec(
        config=TEMPERED, replications=4, base_seed=11,
        cutoff_mode=CutoffMode("adaptive"),
    )
    one = run_monte_carlo(spec, threads=1)
    two = run_monte_carlo(spec, threads=2)
    assert one.mean_rel_l2 == two.mean_rel_l2
    assert one.std_rel_l2 == two.std_rel_l2
    assert one.mean_m_hat == two.mean_m_hat


def test_reproduce_table_cell_structure():
    rows = reproduce_table("T1", base_seed=3, replications=3,
                           threads=1, cells={(0.7, 1.0, 500)})
    assert len(rows) == 1
    row = rows[0]
    for col in TABLE_COLUMNS:
        assert col in row
    assert row["alpha"] == 0.7 and row["n"] == 500 and row["sigma"] == 0.0
    assert row["paper_mean"] == pytest.approx(0.421)
    assert math.isfinite(row["z_score"])
    assert row["mean_m_hat"] >= math.pi / 2


def test_reproduce_table_t4_keys_by_sigma():
    rows = reproduce_table("T4", base_seed=3, replications=2,
                           threads=1, cells={0.0})
    assert len(rows) == 1
    assert rows[0]["sigma"] == 0.0
    assert rows[0]["alpha"] == 1.0 and rows[0]["n"] == 5000


def test_reproduce_table_unknown_id():
    with pytest.raises(ValueError):
        reproduce_table("T9", base_seed=0)
    assert TABLE_IDS == ("T1", "T2", "T3", "T4")


def test_write_table_csv_columns(tmp_path):
    rows = reproduce_table("T1", base_seed=3, replications=2,
                           threads=1, cells={(0.7, 1.0, 500)})
    path = tmp_path / "t1.csv"
    write_table_csv(rows, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == ",".join(TABLE_COLUMNS)
    assert len(lines) == 2
    assert len(lines[1].split(",")) == len(TABLE_COLUMNS)
    for tok in lines[1].split(","):
        float(tok)  # parseable numerics only


def test_rate_study_structure(tmp_path):
    params = TemperedStableParams(0.5, 0.5, 0.0, 0.0, 1.0)
    rows = rate_study(params, 1.0, [500, 1000], base_seed=7,
                      replications=2, threads=1)
    assert [r["n"] for r in rows] == [500, 1000]
    for row in rows:
        assert set(RATE_COLUMNS) <= set(row)
        assert row["m_star"] >= math.pi / 2
        assert row["theory_rate"] > 0
    path = tmp_path / "rate.csv"
    write_rate_csv(rows, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == ",".join(RATE_COLUMNS)
    assert len(lines) == 3


def test_overlay_curves_shapes(tmp_path):
    spec = ExperimentSpec(
        config=TEMPERED, replications=3, base_seed=13,
        cutoff_mode=CutoffMode("fixed", m=3.0),
    )
    x, bench, curves = overlay_curves(spec, curves=3)
    assert curves.shape == (3, x.size)
    assert bench.shape == x.shape
    assert not np.array_equal(curves[0], curves[1])
    path = tmp_path / "overlay.csv"
    write_overlay_csv(x, bench, curves, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "x,benchmark,estimate_rep1,estimate_rep2,estimate_rep3"
    assert len(lines) == x.size + 1


def test_overlay_matches_monte_carlo_first_rep():
    # the overlay's first curve is the rep-0 estimate of the harness
    from smalljumps import estimators, sampling

    spec = ExperimentSpec(
        config=TEMPERED, replications=1, base_seed=17,
        cutoff_mode=CutoffMode("fixed", m=3.0),
    )
    x, bench, curves = overlay_curves(spec, curves=1)
    seed = sampling.derive_seed(17, 0)
    sample = sampling.sample_full_increments(TEMPERED, seed)
    est = estimators.estimate_known_noise(sample, 3.0, x)
    np.testing.assert_array_equal(curves[0], est.values)
