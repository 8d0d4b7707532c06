"""Characteristic functions of the model and of the data.

Exact CFs come from the piecewise characteristic exponent: the small-jump
component integrates the compensated kernel over (0, 1], the large-jump
component is a compound Poisson exponent over {|x| > eps}, and an optional
Gaussian factor handles the Brownian part.  Empirical CFs average complex
exponentials over the sample; deconvolution divides by the known noise CF.

Scalar evaluations here are reference implementations built on adaptive
quadrature.  Vectorized grid paths live in :mod:`smalljumps.gridcf` and are
validated against these in the tests.
"""

from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .models import ProcessConfig, QuadratureError


@dataclass
class CfGrid:
    """Characteristic function values tabulated on a frequency grid."""

    u_values: np.ndarray
    cf_values: np.ndarray

    def __post_init__(self):
        self.u_values = np.asarray(self.u_values, dtype=float)
        self.cf_values = np.asarray(self.cf_values, dtype=complex)
        if self.u_values.ndim != 1 or self.u_values.shape != self.cf_values.shape:
            raise ValueError("u_values and cf_values must be 1-d and equal length")
        if np.any(np.diff(self.u_values) <= 0):
            raise ValueError("u_values must be strictly increasing")

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["u", "re", "im"])
            for u, c in zip(self.u_values, self.cf_values):
                writer.writerow([repr(float(u)), repr(float(c.real)), repr(float(c.imag))])

    @classmethod
    def read_csv(cls, path):
        u, re, im = [], [], []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            next(reader)
            for row in reader:
                u.append(float(row[0]))
                re.append(float(row[1]))
                im.append(float(row[2]))
        return cls(np.array(u), np.array(re) + 1j * np.array(im))


def small_jump_exponent(config: ProcessConfig, u: float) -> complex:
    """Characteristic exponent (per unit time) of the small-jump component.

    For alpha < 1 the sine kernel is sin(ux); for alpha >= 1 it is the
    compensated sin(ux) - ux.  Requires eps = 1, where the exponent integrals
    run over (0, 1].
    """
    if config.epsilon != 1.0:
        raise ValueError("exact small-jump CF is only available for epsilon = 1")
    params = config.params
    a = params.alpha
    if u == 0.0:
        return 0.0 + 0.0j
    even = _exponent_integral(u, a, params.P, params.A, params.Q, params.B, "cos")
    kernel = "sin" if a < 1.0 else "sin_comp"
    odd = 0.0
    if params.P != 0.0 or params.Q != 0.0:
        odd = _exponent_integral(u, a, params.P, params.A, -params.Q, params.B, kernel)
    return complex(even, odd)


def cf_small_jumps(config: ProcessConfig, u: float) -> complex:
    """phi of the small-jump increment: exp(Delta * small_jump_exponent)."""
    return cmath.exp(config.delta * small_jump_exponent(config, u))


def _exponent_integral(u, alpha, w_pos, temper_pos, w_neg, temper_neg, kernel):
    """int_0^1 k(ux) x^(-1-alpha) (w_pos e^(-temper_pos x) + w_neg e^(-temper_neg x)) dx.

    Splits at x0 = min(1, c/|u|) and uses the small-argument expansion of the
    kernel on the initial graded panel, where the raw integrand is singular
    but the expanded one is tame.
    """
    au = abs(u)
    sign = 1.0 if u >= 0 else -1.0
    x0 = min(1.0, 0.02 / max(au, 1.0))

    def weight(x):
        return w_pos * math.exp(-temper_pos * x) + w_neg * math.exp(-temper_neg * x)

    if kernel == "cos":
        k = lambda x: math.cos(au * x) - 1.0
        # cos(ux)-1 ~ -u^2 x^2 / 2 + u^4 x^4 / 24
        head = lambda x: -((au * x) ** 2) / 2.0 + (au * x) ** 4 / 24.0
        odd_sign = 1.0
    elif kernel == "sin":
        k = lambda x: math.sin(au * x)
        head = lambda x: au * x - (au * x) ** 3 / 6.0
        odd_sign = sign
    elif kernel == "sin_comp":
        k = lambda x: math.sin(au * x) - au * x
        # sin(ux)-ux ~ -u^3 x^3 / 6 + u^5 x^5 / 120
        head = lambda x: -((au * x) ** 3) / 6.0 + (au * x) ** 5 / 120.0
        odd_sign = sign
    else:  # pragma: no cover
        raise ValueError(kernel)

    def f_head(x):
        return head(x) * x ** (-1.0 - alpha) * weight(x)

    def f(x):
        return k(x) * x ** (-1.0 - alpha) * weight(x)

    head_val, head_err = integrate.quad(
        f_head, 0.0, x0, epsrel=1e-11, epsabs=1e-300, limit=200
    )
    if x0 < 1.0:
        tail_val, tail_err = integrate.quad(
            f, x0, 1.0, epsrel=1e-9, epsabs=1e-13, limit=max(200, int(10 + au))
        )
    else:
        tail_val, tail_err = 0.0, 0.0
    val = head_val + tail_val
    err = head_err + tail_err
    if err > 1e-9 * max(1.0, abs(val)):
        raise QuadratureError(
            f"exponent quadrature at u={u}: value={val}, error estimate={err}"
        )
    return odd_sign * val


def big_jump_exponent(config: ProcessConfig, u: float) -> complex:
    """Compound Poisson exponent (per unit time) int_{|x|>eps}(e^{iux}-1) p dx.

    The oscillatory tail integrals over (eps, inf) use the Fourier-weighted
    quadrature of QUADPACK, which handles the slowly decaying stable tails
    without an explicit truncation point.
    """
    params = config.params
    eps = config.epsilon
    a = params.alpha
    if u == 0.0:
        return 0.0 + 0.0j
    au = abs(u)
    sign = 1.0 if u > 0 else -1.0
    re = 0.0
    im = 0.0
    for w, temper, s in ((params.P, params.A, 1.0), (params.Q, params.B, -1.0)):
        if w == 0.0:
            continue

        def g(x):
            return x ** (-1.0 - a) * math.exp(-temper * x)

        const, c_err = integrate.quad(g, eps, np.inf, epsrel=1e-12, epsabs=0.0,
                                      limit=200)
        cos_i, r_err = integrate.quad(g, eps, np.inf, weight="cos", wvar=au,
                                      limlst=200, limit=200, epsabs=1e-12,
                                      epsrel=1e-10)
        sin_i, i_err = integrate.quad(g, eps, np.inf, weight="sin", wvar=au,
                                      limlst=200, limit=200, epsabs=1e-12,
                                      epsrel=1e-10)
        if c_err + r_err + i_err > 1e-8 * max(1.0, const):
            raise QuadratureError(
                f"big-jump quadrature at u={u}: error estimate={c_err + r_err + i_err}"
            )
        re += w * (cos_i - const)
        im += s * sign * w * sin_i
    return complex(re, im)


def cf_big_jumps(config: ProcessConfig, u: float) -> complex:
    """phi of the large-jump compound Poisson increment over [0, Delta]."""
    return cmath.exp(config.delta * big_jump_exponent(config, u))


def cf_gaussian(sigma: float, delta: float, u) -> float | np.ndarray:
    """phi of sigma * W_Delta: exp(-sigma^2 Delta u^2 / 2)."""
    u = np.asarray(u, dtype=float)
    out = np.exp(-0.5 * sigma**2 * delta * u**2)
    return float(out) if out.ndim == 0 else out


def cf_full(config: ProcessConfig, u: float) -> complex:
    """Exact CF of the observed increment (small + big jumps + Gaussian)."""
    return (
        cf_small_jumps(config, u)
        * cf_big_jumps(config, u)
        * cf_gaussian(config.sigma, config.delta, u)
    )


def empirical_cf(values: np.ndarray, u) -> complex | np.ndarray:
    """(1/n) sum_j e^{i u x_j}; exact 1 at u = 0."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("empirical_cf requires a non-empty sample")
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    out = np.exp(1j * np.outer(u_arr, values)).mean(axis=1)
    out[u_arr == 0.0] = 1.0 + 0.0j
    if np.isscalar(u) or np.asarray(u).ndim == 0:
        return complex(out[0])
    return out


def deconvolved_cf(values: np.ndarray, u, noise_cf) -> complex | np.ndarray:
    """Empirical CF divided by the known noise CF.

    ``noise_cf`` maps a frequency (array) to the CF of the nuisance
    convolution factor; the identity function recovers the direct estimator.
    """
    num = empirical_cf(values, u)
    den = np.asarray(noise_cf(u), dtype=complex)
    if np.any(np.abs(den) < 1e-300):
        raise ZeroDivisionError(
            "noise CF vanishes beyond the regularized regime (|phi| < 1e-300); "
            "the requested cutoff is far too large"
        )
    return num / den
