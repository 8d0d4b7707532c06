"""Command-line front end: sampling, estimation, selection, bounds, tables.

Every command is deterministic given its flags and seed.  Options may come
from a TOML config file (``--config``, snake_case keys mirroring the field
names); explicit flags override file values.  Each output file gets a JSON
metadata sidecar (``<out>.meta.json``).  Exit codes: 0 success, 2 validation
error, 3 numeric failure.
"""

from __future__ import annotations

import json
import math
import os
import warnings

import click
import numpy as np

from . import estimators, experiments, sampling, selection
from .estimators import CutoffUndefinedError
from .models import ProcessConfig, QuadratureError, TemperedStableParams, big_jump_intensity
from .selection import KappaBelowTheoryWarning

__version__ = "0.1.0"


class NumericFailure(click.ClickException):
    exit_code = 3


_NUMERIC_ERRORS = (
    ZeroDivisionError,
    FloatingPointError,
    QuadratureError,
    CutoffUndefinedError,
)

_PROCESS_KEYS = ("alpha", "p", "q", "a", "b", "delta", "sigma", "epsilon", "n")


def _load_config_file(path):
    if path is None:
        return {}
    try:
        import tomllib as tomli
    except ModuleNotFoundError:
        import tomli

    with open(path, "rb") as fh:
        return tomli.load(fh)


def _merged(file_vals, flag_vals, defaults):
    """flags > config file > defaults, per key."""
    out = {}
    for key, default in defaults.items():
        if flag_vals.get(key) is not None:
            out[key] = flag_vals[key]
        elif key in file_vals:
            out[key] = file_vals[key]
        else:
            out[key] = default
    return out


def _build_process_config(vals) -> ProcessConfig:
    """Validate every field, reporting all problems at once."""
    errors = []
    if not 0.0 < vals["alpha"] < 2.0:
        errors.append(f"alpha must lie in (0, 2), got {vals['alpha']}")
    for key in ("p", "q", "a", "b"):
        if vals[key] < 0:
            errors.append(f"{key} must be non-negative, got {vals[key]}")
    if vals["p"] + vals["q"] <= 0:
        errors.append("p + q must be positive")
    if vals["delta"] <= 0:
        errors.append(f"delta must be positive, got {vals['delta']}")
    if vals["sigma"] < 0:
        errors.append(f"sigma must be non-negative, got {vals['sigma']}")
    if not 0.0 < vals["epsilon"] <= 1.0:
        errors.append(f"epsilon must lie in (0, 1], got {vals['epsilon']}")
    if vals["n"] < 1:
        errors.append(f"n must be at least 1, got {vals['n']}")
    if errors:
        raise click.UsageError("invalid configuration:\n  " + "\n  ".join(errors))
    params = TemperedStableParams(
        P=vals["p"], Q=vals["q"], A=vals["a"], B=vals["b"], alpha=vals["alpha"]
    )
    return ProcessConfig(
        params, epsilon=vals["epsilon"], delta=vals["delta"],
        sigma=vals["sigma"], n=vals["n"],
    )


def _resolve_threads(threads):
    if threads is None:
        env = os.environ.get("LEVY_THREADS")
        threads = int(env) if env else 1
    threads = max(1, int(threads))
    try:
        import numba

        numba.set_num_threads(min(threads, numba.config.NUMBA_NUM_THREADS))
    except ImportError:  # pragma: no cover
        pass
    return threads


def _write_sidecar(out_path, command, payload):
    meta = {"command": command, "version": __version__}
    meta.update(payload)
    with open(str(out_path) + ".meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _process_options(fn):
    opts = [
        click.option("--config", "config_path", type=click.Path(exists=True),
                     default=None, help="TOML config file (flags override it)."),
        click.option("--alpha", type=float, default=None, help="Stability index in (0, 2)."),
        click.option("--p", type=float, default=None, help="Positive-jump weight P (default 1)."),
        click.option("--q", type=float, default=None, help="Negative-jump weight Q (default 1)."),
        click.option("--a", type=float, default=None, help="Positive-side tempering A (default 0)."),
        click.option("--b", type=float, default=None, help="Negative-side tempering B (default 0)."),
        click.option("--delta", type=float, default=None, help="Sampling step Delta (default 1)."),
        click.option("--sigma", type=float, default=None, help="Brownian coefficient (default 0)."),
        click.option("--epsilon", type=float, default=None, help="Small-jump threshold (default 1)."),
        click.option("--n", type=int, default=None, help="Number of increments (default 500)."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


_PROCESS_DEFAULTS = {
    "alpha": 0.7, "p": 1.0, "q": 1.0, "a": 0.0, "b": 0.0,
    "delta": 1.0, "sigma": 0.0, "epsilon": 1.0, "n": 500,
}


def _gather_config(config_path, kwargs):
    file_vals = _load_config_file(config_path)
    flag_vals = {k: kwargs.get(k) for k in _PROCESS_KEYS}
    vals = _merged(file_vals, flag_vals, _PROCESS_DEFAULTS)
    return _build_process_config(vals), file_vals


@click.group()
@click.version_option(__version__)
def main():
    """Small-jump density estimation for Levy processes."""


@main.command()
@_process_options
@click.option("--seed", type=int, default=None, help="Base RNG seed (default 0).")
@click.option("--trunc-eta", type=float, default=None,
              help="Compound-Poisson truncation for tempered sampling (default 1e-3).")
@click.option("--out", "out_path", type=click.Path(), required=True,
              help="Output CSV path.")
def sample(config_path, seed, trunc_eta, out_path, **kwargs):
    """Draw n increments of the process and write them to CSV."""
    config, file_vals = _gather_config(config_path, kwargs)
    seed = seed if seed is not None else file_vals.get("seed", 0)
    trunc_eta = (
        trunc_eta if trunc_eta is not None
        else file_vals.get("trunc_eta", sampling.DEFAULT_TRUNC_ETA)
    )
    try:
        samp = sampling.sample_full_increments(config, seed, trunc_eta=trunc_eta)
    except _NUMERIC_ERRORS as exc:
        raise NumericFailure(str(exc)) from exc
    if not config.params.is_stable:
        samp.meta.setdefault("trunc_eta", trunc_eta)
    samp.write_csv(out_path)
    _write_sidecar(out_path, "sample", {
        "seed": seed, "n": config.n, "delta": config.delta,
        "sigma": config.sigma, "trunc_eta": trunc_eta,
        "stable": config.params.is_stable,
    })
    click.echo(f"wrote {config.n} increments to {out_path}")


_KIND_MAP = {
    "known-noise": "KnownNoise",
    "direct": "Direct",
    "gaussian-noise": "GaussianNoise",
}


def _get_sample(config, file_vals, input_path, seed, trunc_eta):
    if input_path is not None:
        return sampling.IncrementSample.read_csv(input_path)
    seed = seed if seed is not None else file_vals.get("seed", 0)
    trunc_eta = (
        trunc_eta if trunc_eta is not None
        else file_vals.get("trunc_eta", sampling.DEFAULT_TRUNC_ETA)
    )
    return sampling.sample_full_increments(config, seed, trunc_eta=trunc_eta)


def _select_m(samp, kind, kappa):
    config = samp.config
    include_gaussian = kind == "GaussianNoise"
    noise_cf = experiments._noise_cf_factory(config, include_gaussian)
    grid = selection.CutoffGrid.default(config)
    lam_delta = big_jump_intensity(config) * config.delta
    s2d = config.sigma**2 * config.delta if include_gaussian else 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", KappaBelowTheoryWarning)
        return selection.select_cutoff(
            samp, grid, noise_cf, lam_delta, kappa=kappa, sigma2delta=s2d
        )


@main.command()
@_process_options
@click.option("--input", "input_path", type=click.Path(exists=True), default=None,
              help="Increment CSV from `sample` (otherwise simulate with --seed).")
@click.option("--seed", type=int, default=None, help="Seed when simulating (default 0).")
@click.option("--trunc-eta", type=float, default=None)
@click.option("--kind", type=click.Choice(sorted(_KIND_MAP)), default="known-noise",
              show_default=True, help="Estimator variant.")
@click.option("--cutoff", type=click.Choice(["adaptive", "fixed", "oracle"]),
              default="adaptive", show_default=True)
@click.option("--m", "m_fixed", type=float, default=None,
              help="Cutoff value for --cutoff fixed.")
@click.option("--kappa", type=float, default=selection.KAPPA_DEFAULT, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def estimate(config_path, input_path, seed, trunc_eta, kind, cutoff, m_fixed,
             kappa, out_path, **kwargs):
    """Estimate the small-jump density; writes CSV, figures, and the
    selection trace when the cutoff is adaptive."""
    config, file_vals = _gather_config(config_path, kwargs)
    kind = _KIND_MAP[kind]
    if kind == "GaussianNoise" and config.sigma == 0.0:
        raise click.UsageError(
            "--kind gaussian-noise requires sigma > 0; with sigma = 0 use "
            "--kind known-noise"
        )
    if cutoff == "fixed" and m_fixed is None:
        raise click.UsageError("--cutoff fixed requires --m")
    try:
        samp = _get_sample(config, file_vals, input_path, seed, trunc_eta)
        config = samp.config
        trace = None
        if cutoff == "adaptive":
            m_hat, trace = _select_m(samp, kind, kappa)
        elif cutoff == "fixed":
            m_hat = m_fixed
        else:
            m_hat = experiments.oracle_cutoff(config, config.n)
        x_grid = estimators.default_x_grid(config)
        if kind == "KnownNoise":
            est = estimators.estimate_known_noise(samp, m_hat, x_grid)
        elif kind == "Direct":
            est = estimators.estimate_direct(samp, m_hat, x_grid)
        else:
            est = estimators.estimate_gaussian_noise(samp, m_hat, x_grid)
        bench = None
        if config.epsilon == 1.0:
            bench = estimators.benchmark_density(config, "auto", x_grid)
    except _NUMERIC_ERRORS as exc:
        raise NumericFailure(str(exc)) from exc
    est.write_csv(out_path)
    from . import plots

    base, _ = os.path.splitext(str(out_path))
    plots.render_estimate(est, base + ".png", benchmark=bench)
    artifacts = [str(out_path), base + ".png"]
    if trace is not None:
        selection.write_trace_csv(trace, base + "_trace.csv")
        plots.render_selection_trace(trace, m_hat, base + "_trace.png")
        artifacts += [base + "_trace.csv", base + "_trace.png"]
    _write_sidecar(out_path, "estimate", {
        "kind": kind, "cutoff": cutoff, "m": m_hat, "kappa": kappa,
        "input": input_path, "seed": seed, "artifacts": artifacts,
    })
    click.echo(f"m = {m_hat!r}; wrote {', '.join(artifacts)}")


@main.command()
@_process_options
@click.option("--input", "input_path", type=click.Path(exists=True), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--trunc-eta", type=float, default=None)
@click.option("--kind", type=click.Choice(sorted(_KIND_MAP)), default="known-noise",
              show_default=True)
@click.option("--kappa", type=float, default=selection.KAPPA_DEFAULT, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True,
              help="Selection trace CSV path.")
def select(config_path, input_path, seed, trunc_eta, kind, kappa, out_path, **kwargs):
    """Run the penalized cutoff selection and write the objective trace."""
    config, file_vals = _gather_config(config_path, kwargs)
    kind = _KIND_MAP[kind]
    if kind == "GaussianNoise" and config.sigma == 0.0:
        raise click.UsageError(
            "--kind gaussian-noise requires sigma > 0; with sigma = 0 use "
            "--kind known-noise"
        )
    try:
        samp = _get_sample(config, file_vals, input_path, seed, trunc_eta)
        m_hat, trace = _select_m(samp, kind, kappa)
    except _NUMERIC_ERRORS as exc:
        raise NumericFailure(str(exc)) from exc
    selection.write_trace_csv(trace, out_path)
    from . import plots

    base, _ = os.path.splitext(str(out_path))
    plots.render_selection_trace(trace, m_hat, base + ".png")
    _write_sidecar(out_path, "select", {
        "kind": kind, "kappa": kappa, "m_hat": m_hat,
        "input": input_path, "seed": seed,
    })
    click.echo(f"selected m = {m_hat!r}; trace in {out_path}")


@main.command()
@_process_options
@click.option("--m", "m_value", type=float, default=None,
              help="Cutoff at which to evaluate the bounds (default pi/2).")
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Optional CSV output (default: print to stdout).")
def bounds(config_path, m_value, out_path, **kwargs):
    """Bias/variance bounds and the rate-optimal cutoff m*."""
    config, _ = _gather_config(config_path, kwargs)
    m_value = m_value if m_value is not None else math.pi / 2.0
    try:
        report = estimators.theoretical_bounds(config, m_value, config.n)
        m_star, note = report.m_star, ""
    except CutoffUndefinedError as exc:
        lam_delta = big_jump_intensity(config) * config.delta
        report = None
        m_star = experiments.oracle_cutoff(config, config.n)
        note = (
            f"m* undefined in closed form: log n = {math.log(config.n):.4f} "
            f"<= 4 lambda Delta = {4 * lam_delta:.4f} ({exc}); reporting the "
            "numerical minimizer of the bias + variance bound instead"
        )
    if report is not None:
        lines = [
            f"bias_bound(m={m_value!r}) = {report.bias_bound!r}",
            f"variance_bound(m={m_value!r}) = {report.variance_bound!r}",
            f"m_star = {report.m_star!r}",
        ]
    else:
        lines = [note, f"m_star (numerical) = {m_star!r}"]
    if out_path:
        with open(out_path, "w") as fh:
            fh.write("m,bias_bound,variance_bound,m_star\n")
            if report is not None:
                fh.write(f"{m_value!r},{report.bias_bound!r},"
                         f"{report.variance_bound!r},{report.m_star!r}\n")
            else:
                fh.write(f"{m_value!r},,,{m_star!r}\n")
        _write_sidecar(out_path, "bounds", {"m": m_value, "note": note})
    click.echo("\n".join(lines))


@main.command()
@click.argument("table_id")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--reps", type=int, default=experiments.DEFAULT_REPLICATIONS,
              show_default=True, help="Replications per cell.")
@click.option("--threads", type=int, default=None,
              help="Worker processes (default: LEVY_THREADS or 1).")
@click.option("--out", "out_path", type=click.Path(), required=True)
def table(table_id, seed, reps, threads, out_path):
    """Reproduce a reference table (T1 | T2 | T3 | T4, plus T4-alt)."""
    if table_id not in experiments.TABLE_IDS + ("T4-alt",):
        raise click.UsageError(
            f"unknown table id {table_id!r}; expected one of "
            f"{', '.join(experiments.TABLE_IDS)} (or T4-alt)"
        )
    threads = _resolve_threads(threads)
    try:
        rows = experiments.reproduce_table(
            table_id, base_seed=seed, replications=reps, threads=threads
        )
    except _NUMERIC_ERRORS as exc:
        raise NumericFailure(str(exc)) from exc
    experiments.write_table_csv(rows, out_path)
    from . import plots

    base, _ = os.path.splitext(str(out_path))
    plots.render_table(rows, base + ".png", title=f"{table_id} (seed {seed})")
    _write_sidecar(out_path, "table", {
        "table_id": table_id, "seed": seed, "replications": reps,
        "threads": threads, "artifacts": [str(out_path), base + ".png"],
    })
    click.echo(f"wrote {len(rows)} cells to {out_path}")


@main.command("rate-study")
@_process_options
@click.option("--ns", default="500,2000,8000,32000", show_default=True,
              help="Comma-separated sample sizes.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--reps", type=int, default=experiments.DEFAULT_REPLICATIONS,
              show_default=True)
@click.option("--kind", type=click.Choice(sorted(_KIND_MAP)), default="known-noise",
              show_default=True)
@click.option("--threads", type=int, default=None)
@click.option("--out", "out_path", type=click.Path(), required=True)
def rate_study(config_path, ns, seed, reps, kind, threads, out_path, **kwargs):
    """Risk sweep over n at the rate-optimal cutoff, with the theory curve."""
    config, _ = _gather_config(config_path, kwargs)
    try:
        n_values = [int(tok) for tok in ns.split(",") if tok.strip()]
    except ValueError as exc:
        raise click.UsageError(f"--ns must be comma-separated integers: {exc}")
    if not n_values or any(n < 1 for n in n_values):
        raise click.UsageError("--ns must contain positive integers")
    threads = _resolve_threads(threads)
    try:
        rows = experiments.rate_study(
            config.params, config.delta, n_values, base_seed=seed,
            sigma=config.sigma, replications=reps,
            estimator_kind=_KIND_MAP[kind], threads=threads,
        )
    except _NUMERIC_ERRORS as exc:
        raise NumericFailure(str(exc)) from exc
    experiments.write_rate_csv(rows, out_path)
    from . import plots

    base, _ = os.path.splitext(str(out_path))
    plots.render_rate(rows, base + ".png")
    slope = np.polyfit(
        np.log([r["n"] for r in rows]),
        np.log([r["mean_rel_l2"] for r in rows]), 1
    )[0]
    _write_sidecar(out_path, "rate-study", {
        "ns": n_values, "seed": seed, "replications": reps,
        "slope": slope, "threads": threads,
    })
    click.echo(f"log-log slope = {slope:.4f}; wrote {out_path}")


if __name__ == "__main__":  # pragma: no cover
    main()
