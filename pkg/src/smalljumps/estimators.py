"""Spectral cut-off density estimators and the exact Fourier benchmark.

All three estimators share one mechanism: estimate the characteristic
function of the target on [-m, m] (empirical CF, divided by the known CF of
whatever nuisance convolution factor the variant removes) and invert

    (1/2 pi) int_{-m}^{m} phi(u) e^{-iux} du

on a uniform frequency grid.  The benchmark applies the same inversion to
the exact small-jump CF with a large cutoff.  Risks are relative L^2 errors
against the benchmark on a shared x-grid.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import charfn, ecf, gridcf
from .models import ProcessConfig, big_jump_intensity, orey_constants
from .special import upper_incomplete_gamma

incomplete_gamma = upper_incomplete_gamma

KINDS = ("KnownNoise", "Direct", "GaussianNoise", "Benchmark")

# benchmark inversion cutoffs from the simulation protocol: heavier for
# stable models and for small delta, where the CF decays slowly
BENCHMARK_ELL = {
    (True, True): 1000.0,   # (stable, delta < 1)
    (True, False): 100.0,
    (False, True): 50.0,
    (False, False): 10.0,
}


@dataclass
class SpectralEstimate:
    m: float
    x_grid: np.ndarray
    values: np.ndarray
    u_step: float
    kind: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x_grid = np.asarray(self.x_grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.kind not in KINDS:
            raise ValueError(f"unknown estimate kind {self.kind!r}")
        if self.x_grid.shape != self.values.shape:
            raise ValueError("x_grid and values must have equal shape")
        if self.m <= 0 or self.u_step <= 0:
            raise ValueError("m and u_step must be positive")

    @property
    def x_step(self) -> float:
        return float(self.x_grid[1] - self.x_grid[0])

    def total_mass(self) -> float:
        """Grid quadrature of the estimate (should be ~1 for wide grids)."""
        return float(np.trapezoid(self.values, self.x_grid))

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write(f"# kind={self.kind} m={self.m!r} u_step={self.u_step!r}")
            for key, val in sorted(self.meta.items()):
                fh.write(f" {key}={val!r}")
            fh.write("\nx,value\n")
            for x, v in zip(self.x_grid, self.values):
                fh.write(f"{x!r},{v!r}\n")


@dataclass
class BoundReport:
    bias_bound: float
    variance_bound: float
    m_star: float

    def __post_init__(self):
        for name in ("bias_bound", "variance_bound", "m_star"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and nonnegative, got {v}")


class CutoffUndefinedError(ValueError):
    """The rate-optimal cutoff formula has no solution for this config."""


def default_x_grid(config: ProcessConfig, points: int = 2048, width: float = 15.0):
    """Symmetric uniform grid matched to the scale of the target density."""
    m_const, a = orey_constants(config.params, config.epsilon)
    scale = max((config.delta * m_const) ** (1.0 / a), config.delta ** (1.0 / a))
    return np.linspace(-width * scale, width * scale, points)


def _resolve_u_step(m: float, x_grid: np.ndarray, u_step):
    x_max = float(np.max(np.abs(x_grid)))
    bound = min(math.pi / (4.0 * x_max), 0.05) if x_max > 0 else 0.05
    if u_step is None:
        # pick the largest step below the bound dividing m evenly
        k = max(2, int(math.ceil(m / bound)))
        return m / k
    if u_step > bound:
        warnings.warn(
            f"u_step={u_step} exceeds the aliasing bound {bound:.4g} "
            "for this x-grid; the inversion may alias",
            stacklevel=3,
        )
    return float(u_step)


def fourier_invert(cf, m: float, x_grid, u_step: float | None = None):
    """(1/2 pi) int_{-m}^m cf(u) e^{-iux} du on the grid, by trapezoid.

    ``cf`` maps a non-negative frequency array to complex values; negative
    frequencies enter through Hermitian symmetry (double the real part).
    Returns (values, u_step_used).
    """
    x_grid = np.asarray(x_grid, dtype=float)
    if m <= 0:
        raise ValueError("cutoff m must be positive")
    h = _resolve_u_step(m, x_grid, u_step)
    k = max(2, int(round(m / h)))
    h = m / k
    u = h * np.arange(k + 1)
    phi = np.asarray(cf(u), dtype=complex)
    values = ecf.invert_uniform(phi, h, x_grid)
    return values, h


def _noise_on_grid(config: ProcessConfig, u: np.ndarray, include_gaussian: bool):
    """Known-noise CF (big jumps, optionally Gaussian) on an increasing grid."""
    if config.epsilon == 1.0:
        grid = gridcf.ExponentGrid(config, u)
        return grid.cf_noise(include_gaussian=include_gaussian)
    out = np.array([charfn.cf_big_jumps(config, ui) for ui in u])
    if include_gaussian and config.sigma > 0:
        out = out * charfn.cf_gaussian(config.sigma, config.delta, u)
    return out


def _check_noise(den: np.ndarray):
    if np.any(np.abs(den) < 1e-300):
        raise ZeroDivisionError(
            "noise CF vanishes to working precision inside [-m, m]; "
            "the requested cutoff is far too large"
        )


def _deconvolution_estimate(sample, m, x_grid, kind, include_gaussian):
    config = sample.config
    if m < math.pi / (2.0 * config.epsilon):
        raise ValueError(
            f"cutoff m={m} below the threshold pi/(2 eps) = "
            f"{math.pi / (2 * config.epsilon):.4f}"
        )
    x_grid = np.asarray(x_grid, dtype=float)
    h = _resolve_u_step(m, x_grid, None)
    k = max(2, int(round(m / h)))
    h = m / k
    u = h * np.arange(k + 1)
    num = ecf.ecf_uniform(sample.values, h, k)
    den = _noise_on_grid(config, u, include_gaussian)
    _check_noise(den)
    values = ecf.invert_uniform(num / den, h, x_grid)
    return SpectralEstimate(
        m=m, x_grid=x_grid, values=values, u_step=h, kind=kind,
        meta={"n": config.n, "seed": sample.seed},
    )


def estimate_known_noise(sample, m: float, x_grid) -> SpectralEstimate:
    """Deconvolve the known large-jump compound Poisson factor, then invert."""
    return _deconvolution_estimate(sample, m, x_grid, "KnownNoise", False)


def estimate_direct(sample, m: float, x_grid) -> SpectralEstimate:
    """Invert the raw empirical CF: no deconvolution at all.

    Valid in spirit for small delta, where the large-jump factor is close
    to 1 on the relevant frequencies.
    """
    config = sample.config
    x_grid = np.asarray(x_grid, dtype=float)
    h = _resolve_u_step(m, x_grid, None)
    k = max(2, int(round(m / h)))
    h = m / k
    num = ecf.ecf_uniform(sample.values, h, k)
    values = ecf.invert_uniform(num, h, x_grid)
    return SpectralEstimate(
        m=m, x_grid=x_grid, values=values, u_step=h, kind="Direct",
        meta={"n": config.n, "seed": sample.seed},
    )


def estimate_gaussian_noise(sample, m: float, x_grid) -> SpectralEstimate:
    """Deconvolve both the large jumps and the Brownian factor.

    The Gaussian division amplifies by e^{sigma^2 Delta u^2/2}; beyond the
    overflow regime the cutoff is rejected outright.
    """
    config = sample.config
    if config.sigma <= 0:
        raise ValueError("estimate_gaussian_noise requires sigma > 0")
    if config.sigma**2 * config.delta * m**2 / 2.0 > 700.0:
        raise ZeroDivisionError(
            f"cutoff m={m} puts the Gaussian deconvolution factor past the "
            "overflow regime (sigma^2 Delta m^2 / 2 > 700)"
        )
    return _deconvolution_estimate(sample, m, x_grid, "GaussianNoise", True)


def default_benchmark_ell(config: ProcessConfig) -> float:
    return BENCHMARK_ELL[(config.params.is_stable, config.delta < 1.0)]


def benchmark_density(config: ProcessConfig, ell, x_grid) -> SpectralEstimate:
    """Numerical Fourier inversion of the exact small-jump CF.

    ``ell`` may be 'auto' for the protocol defaults.  Includes the 1/(2 pi)
    inversion factor so the output is an actual density (relative L^2 risk
    is scale-invariant, so this choice cannot change any reported risk).
    """
    if config.epsilon != 1.0:
        raise ValueError("benchmark requires epsilon = 1 (exact CF constraint)")
    if ell == "auto" or ell is None:
        ell = default_benchmark_ell(config)
    x_grid = np.asarray(x_grid, dtype=float)
    h = _resolve_u_step(ell, x_grid, None)
    k = max(2, int(round(ell / h)))
    h = ell / k
    u = h * np.arange(k + 1)
    phi = gridcf.ExponentGrid(config, u).cf_small()
    values = ecf.invert_uniform(phi, h, x_grid)
    return SpectralEstimate(
        m=float(ell), x_grid=x_grid, values=values, u_step=h, kind="Benchmark",
        meta={"n": config.n},
    )


def benchmark_doubling_change(config: ProcessConfig, ell, x_grid) -> float:
    """Sup-norm change of the benchmark when the cutoff is doubled.

    The protocol's stopping rule: at an adequate cutoff, doubling should not
    change the curve.  Reported as a diagnostic, not asserted, because slow
    CF decay (small delta, small alpha) can leave a visible tail at the
    protocol defaults.
    """
    if ell == "auto" or ell is None:
        ell = default_benchmark_ell(config)
    base = benchmark_density(config, ell, x_grid)
    double = benchmark_density(config, 2.0 * ell, x_grid)
    return float(np.max(np.abs(double.values - base.values)))


def relative_l2_error(estimate: SpectralEstimate, benchmark: SpectralEstimate):
    """Grid quadrature of |est - bench|^2 / |bench|^2 on the shared x-grid."""
    if estimate.x_grid.shape != benchmark.x_grid.shape or not np.array_equal(
        estimate.x_grid, benchmark.x_grid
    ):
        raise ValueError("estimate and benchmark must share the same x-grid")
    dx = benchmark.x_step
    denom = float(np.sum(benchmark.values**2) * dx)
    if denom < 1e-300:
        raise ZeroDivisionError("benchmark is numerically zero on this grid")
    num = float(np.sum((estimate.values - benchmark.values) ** 2) * dx)
    return num / denom


def theoretical_bounds(config: ProcessConfig, m: float, n: int) -> BoundReport:
    """Bias/variance bounds of the cut-off estimator and the optimal cutoff.

    bias = C Gamma(1/alpha, c Delta m^alpha), with C = 1/(2 alpha (2 M
    Delta)^(1/alpha)) and c = 2^(alpha+1) M / pi^alpha; variance =
    e^{4 lambda Delta} m / (pi n).  The bound-minimizing cutoff equates the
    two terms' derivatives: m* = (pi/2) ((log n - 4 lambda Delta) /
    (2 M Delta))^(1/alpha), undefined when log n <= 4 lambda Delta.  With a
    Brownian component (sigma > 0, alpha = 1) the balance instead solves
    exp(sigma^2 Delta m^2 + c Delta m) = pi c C e^{-4 lambda Delta} n, whose
    positive root is closed-form.
    """
    m_const, a = orey_constants(config.params, config.epsilon)
    delta = config.delta
    lam = big_jump_intensity(config)
    lam_delta = lam * delta

    big_c = 1.0 / (2.0 * a * (2.0 * m_const * delta) ** (1.0 / a))
    small_c = 2.0 ** (a + 1.0) * m_const / math.pi**a
    bias = big_c * upper_incomplete_gamma(1.0 / a, small_c * delta * m**a)
    variance = math.exp(4.0 * lam_delta) * m / (math.pi * n)

    if config.sigma > 0.0:
        if a != 1.0:
            raise CutoffUndefinedError(
                "the Brownian-case cutoff equation is only available at alpha = 1"
            )
        c = 4.0 * m_const / math.pi
        # the bias constant enters Delta-free here: bias = (C/Delta) e^{-c Delta m}
        c_lam = math.pi * c * (big_c * delta) * math.exp(-4.0 * lam_delta)
        rhs = math.log(c_lam * n)
        if rhs <= 0.0:
            raise CutoffUndefinedError(
                f"no positive cutoff root: log(c_lambda n) = {rhs:.4f} <= 0"
            )
        s2d = config.sigma**2 * delta
        m_star = (-c * delta + math.sqrt((c * delta) ** 2 + 4.0 * s2d * rhs)) / (
            2.0 * s2d
        )
    else:
        if math.log(n) <= 4.0 * lam_delta:
            raise CutoffUndefinedError(
                f"optimal cutoff undefined: log n = {math.log(n):.4f} <= "
                f"4 lambda Delta = {4 * lam_delta:.4f}"
            )
        m_star = (math.pi / 2.0) * (
            (math.log(n) - 4.0 * lam_delta) / (2.0 * m_const * delta)
        ) ** (1.0 / a)
    return BoundReport(bias_bound=bias, variance_bound=variance, m_star=m_star)


def sup_norm_bound(config: ProcessConfig) -> float:
    """Upper bound on ||g_Delta||_inf from the CF decay.

    1/(2 eps) + (pi/alpha) / (2 (Delta M)^(1/alpha)) *
    Gamma(1/alpha, Delta M / eps^alpha), valid for any eps, used at eps=1.
    """
    m_const, a = orey_constants(config.params, config.epsilon)
    eps = config.epsilon
    dm = config.delta * m_const
    return 1.0 / (2.0 * eps) + (1.0 / a) * math.pi / (
        2.0 * dm ** (1.0 / a)
    ) * upper_incomplete_gamma(1.0 / a, dm / eps**a)
