"""Tempered-stable jump model: parameters and analytic scalar characteristics.

The jump density is

    p(x) = P x^(-1-alpha) e^(-A x)      for x > 0,
           Q |x|^(-1-alpha) e^(-B |x|)  for x < 0,

with P, Q, A, B >= 0, P + Q > 0 and 0 < alpha < 2.  A = B = 0 is the stable
case.  Jumps of magnitude above ``epsilon`` form a compound Poisson component
with intensity ``lambda``; the remainder (plus the convention-dependent drift)
is the estimation target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


@dataclass(frozen=True)
class TemperedStableParams:
    P: float
    Q: float
    A: float
    B: float
    alpha: float

    def __post_init__(self):
        if self.P < 0 or self.Q < 0 or self.A < 0 or self.B < 0:
            raise ValueError("P, Q, A, B must be non-negative")
        if self.P + self.Q <= 0:
            raise ValueError("P + Q must be positive")
        if not 0.0 < self.alpha < 2.0:
            raise ValueError(f"alpha must lie in (0, 2), got {self.alpha}")

    @property
    def is_stable(self) -> bool:
        return self.A == 0.0 and self.B == 0.0

    @property
    def is_symmetric(self) -> bool:
        return self.P == self.Q and self.A == self.B

    @property
    def finite_variation(self) -> bool:
        # Exact for this family: int_{|x|<=1} |x| p(x) dx < inf iff alpha < 1.
        return self.alpha < 1.0


@dataclass(frozen=True)
class ProcessConfig:
    params: TemperedStableParams
    epsilon: float = 1.0
    delta: float = 1.0
    sigma: float = 0.0
    n: int = 1

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in (0, 1]")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.n < 1:
            raise ValueError("n must be at least 1")


def levy_density(params: TemperedStableParams, x):
    """Jump density p(x); raises on x = 0 where the pole is non-integrable."""
    x = np.asarray(x, dtype=float)
    if np.any(x == 0.0):
        raise ValueError("levy_density is undefined at x = 0")
    a = params.alpha
    pos = np.where(
        x > 0, params.P * np.abs(x) ** (-1.0 - a) * np.exp(-params.A * np.abs(x)), 0.0
    )
    neg = np.where(
        x < 0, params.Q * np.abs(x) ** (-1.0 - a) * np.exp(-params.B * np.abs(x)), 0.0
    )
    out = pos + neg
    return float(out) if out.ndim == 0 else out


def orey_constants(params: TemperedStableParams, epsilon: float) -> tuple[float, float]:
    """Lower-bound constants (M, alpha) of the second-moment condition.

    The closed form M = (P e^-A + Q e^-B) / (2 - alpha) is specific to
    epsilon = 1; other thresholds are rejected rather than extrapolated.
    """
    if epsilon != 1.0:
        raise ValueError(
            "orey_constants is only available for epsilon = 1 "
            f"(got epsilon={epsilon})"
        )
    m = (params.P * math.exp(-params.A) + params.Q * math.exp(-params.B)) / (
        2.0 - params.alpha
    )
    return m, params.alpha


def _tail_integral(weight: float, temper: float, alpha: float, lo: float,
                   integrand_extra=None) -> float:
    """weight * int_lo^inf x^(-1-alpha) e^(-temper x) [extra(x)] dx."""
    if weight == 0.0:
        return 0.0
    if integrand_extra is None:
        integrand_extra = lambda x: 1.0

    def f(x):
        return weight * x ** (-1.0 - alpha) * math.exp(-temper * x) * integrand_extra(x)

    val, err = integrate.quad(f, lo, np.inf, epsrel=1e-12, epsabs=0.0, limit=400)
    if val != 0.0 and err > 1e-10 * abs(val):
        raise QuadratureError(
            f"tail quadrature did not converge: value={val}, error estimate={err}"
        )
    return val


def big_jump_intensity(config_or_params, epsilon: float | None = None) -> float:
    """lambda = nu(R \\ [-eps, eps]); closed form in the stable case."""
    params, epsilon = _unpack(config_or_params, epsilon)
    a = params.alpha
    if params.is_stable:
        return (params.P + params.Q) / (a * epsilon**a)
    return _tail_integral(params.P, params.A, a, epsilon) + _tail_integral(
        params.Q, params.B, a, epsilon
    )


def small_jump_drift(config_or_params, epsilon: float | None = None) -> float:
    """Drift b of the small-jump component under the truncation convention.

    Finite variation (alpha < 1): b = int_{|x|<=eps} x p(x) dx.
    Infinite variation (alpha >= 1): b = -int_{eps<|x|<=1} x p(x) dx,
    which vanishes at eps = 1.
    """
    params, epsilon = _unpack(config_or_params, epsilon)
    if params.is_symmetric:
        return 0.0
    a = params.alpha
    if params.finite_variation:
        pos = _graded_moment(params.P, params.A, a, 0.0, epsilon)
        neg = _graded_moment(params.Q, params.B, a, 0.0, epsilon)
        return pos - neg
    if epsilon == 1.0:
        return 0.0
    pos = _band_first_moment(params.P, params.A, a, epsilon, 1.0)
    neg = _band_first_moment(params.Q, params.B, a, epsilon, 1.0)
    return -(pos - neg)


def truncated_second_moment(params: TemperedStableParams, eta: float) -> float:
    """int_{|x|<=eta} x^2 p(x) dx, with the graded substitution near the pole."""
    a = params.alpha
    pos = _graded_moment(params.P, params.A, a, 1.0, eta)
    neg = _graded_moment(params.Q, params.B, a, 1.0, eta)
    return pos + neg


def truncated_first_moment(params: TemperedStableParams, eta: float) -> float:
    """int_{|x|<=eta} x p(x) dx (finite only for alpha < 1)."""
    if params.alpha >= 1.0:
        raise ValueError("first absolute moment diverges near 0 for alpha >= 1")
    a = params.alpha
    pos = _graded_moment(params.P, params.A, a, 0.0, eta)
    neg = _graded_moment(params.Q, params.B, a, 0.0, eta)
    return pos - neg


def _graded_moment(weight: float, temper: float, alpha: float, extra_power: float,
                   hi: float) -> float:
    """weight * int_0^hi x^(1+extra_power) x^(-1-alpha) e^(-temper x) dx.

    The integrand behaves like x^(extra_power - alpha) at 0; the substitution
    x = t^(1/(2-alpha)) makes the transformed integrand bounded.
    """
    if weight == 0.0 or hi == 0.0:
        return 0.0
    g = 2.0 - alpha

    def f(t):
        x = t ** (1.0 / g)
        return (
            weight
            * x ** (extra_power - alpha)
            * math.exp(-temper * x)
            * (1.0 / g)
            * t ** (1.0 / g - 1.0)
        )

    val, err = integrate.quad(f, 0.0, hi**g, epsrel=1e-12, epsabs=1e-300, limit=400)
    if val != 0.0 and err > 1e-10 * abs(val):
        raise QuadratureError(
            f"graded quadrature did not converge: value={val}, error estimate={err}"
        )
    return val


def _band_first_moment(weight: float, temper: float, alpha: float, lo: float,
                       hi: float) -> float:
    if weight == 0.0 or lo >= hi:
        return 0.0

    def f(x):
        return weight * x ** (-alpha) * math.exp(-temper * x)

    val, err = integrate.quad(f, lo, hi, epsrel=1e-12, epsabs=1e-300, limit=200)
    if val != 0.0 and err > 1e-10 * abs(val):
        raise QuadratureError(f"band quadrature did not converge (err={err})")
    return val


def _unpack(config_or_params, epsilon):
    if isinstance(config_or_params, ProcessConfig):
        return config_or_params.params, config_or_params.epsilon
    if epsilon is None:
        raise TypeError("epsilon is required when passing raw parameters")
    return config_or_params, epsilon
