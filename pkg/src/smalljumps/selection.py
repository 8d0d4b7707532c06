"""Adaptive cutoff selection by penalized contrast.

The contrast of the cut-off estimator is the negative of its squared L^2
norm, which by Plancherel is an integral of the squared modulus of the
deconvolved empirical CF; the penalty is the variance bound scaled by a
calibration constant kappa.  The selected cutoff minimizes contrast +
penalty over a geometric grid.

The grid is geometric rather than integer: the collection in the theory is
indexed by integers up to n, but observed selections sit at fractional
values right above the lower end pi/(2 eps), which an integer grid cannot
produce.  Ratio 1.01 reproduces both regimes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import erfi

from . import charfn, ecf

KAPPA_DEFAULT = 0.9
KAPPA_THEORY_FLOOR = 32.0 / (3.0 * math.pi)
GRID_RATIO = 1.01
CONTRAST_STEP = 0.02


class KappaBelowTheoryWarning(UserWarning):
    """kappa is below the floor the oracle inequality requires."""


@dataclass
class CutoffGrid:
    """Strictly increasing candidate cutoffs in [pi/(2 eps), n]."""

    m_values: np.ndarray

    def __post_init__(self):
        self.m_values = np.asarray(self.m_values, dtype=float)
        if self.m_values.size == 0:
            raise ValueError("cutoff grid must be nonempty")
        if np.any(np.diff(self.m_values) <= 0) or self.m_values[0] <= 0:
            raise ValueError("cutoff grid must be positive and strictly increasing")

    @classmethod
    def default(cls, config, ratio: float = GRID_RATIO, m_max: float | None = None):
        """Geometric grid from pi/(2 eps) to n (capped for Gaussian noise).

        With sigma > 0 the deconvolution factor e^{sigma^2 Delta u^2/2}
        overflows past sigma^2 Delta m^2 = 700; the grid never goes there.
        """
        lo = math.pi / (2.0 * config.epsilon)
        hi = float(config.n) if m_max is None else float(m_max)
        if config.sigma > 0:
            s2d = config.sigma**2 * config.delta
            hi = min(hi, math.sqrt(700.0 / s2d))
        if hi <= lo:
            return cls(np.array([lo]))
        count = int(math.floor(math.log(hi / lo) / math.log(ratio)))
        values = lo * ratio ** np.arange(count + 1)
        if values[-1] < hi:
            values = np.append(values, hi)
        return cls(values)


def penalty(m, lambda_delta: float, n: int, kappa: float) -> float:
    """kappa e^{4 lambda Delta} m / n — the calibrated variance proxy."""
    return kappa * math.exp(4.0 * lambda_delta) * np.asarray(m) / n


def penalty_gaussian(m, lambda_delta, n, kappa, sigma2delta):
    """Penalty with the Gaussian deconvolution variance integrated in.

    kappa e^{4 lambda Delta} int_0^m e^{sigma^2 Delta u^2} du / n, matching
    the variance bound of the Brownian-noise estimator; reduces to the
    linear penalty at sigma = 0.  A linear penalty under Gaussian
    deconvolution would always pick the largest cutoff, because the
    contrast's decrease outruns any linear term.
    """
    m = np.asarray(m, dtype=float)
    if sigma2delta == 0.0:
        return penalty(m, lambda_delta, n, kappa)
    s = math.sqrt(sigma2delta)
    integral = math.sqrt(math.pi) / (2.0 * s) * erfi(s * m)
    return kappa * math.exp(4.0 * lambda_delta) * integral / n


def _deconvolved_sq(sample, h: float, count: int, noise_cf):
    u = h * np.arange(count + 1)
    num = ecf.ecf_uniform(sample.values, h, count)
    den = np.asarray(noise_cf(u), dtype=complex)
    if np.any(np.abs(den) < 1e-300):
        raise ZeroDivisionError("noise CF vanishes on the contrast grid")
    return np.abs(num / den) ** 2


def _point_sq(sample, m: float, noise_cf) -> float:
    num = charfn.empirical_cf(sample.values, m)
    den = complex(np.asarray(noise_cf(np.array([m])), dtype=complex)[0])
    return abs(num / den) ** 2


def contrast(sample, m: float, noise_cf, u_step: float = CONTRAST_STEP,
             refine_tol: float = 1e-6, max_refinements: int = 3) -> float:
    """-(1/2 pi) int_{-m}^m |deconvolved CF|^2 du by trapezoid quadrature.

    The grid runs 0, h, 2h, ... with a partial final cell up to m (Hermitian
    symmetry folds the negative frequencies into a factor 2).  The step is
    halved until the value is stable to ``refine_tol`` relative, up to
    ``max_refinements`` times — empirical CFs of heavy-tailed samples carry
    irreducible fine-scale wiggle, so unconditional refinement to 1e-6 is
    not attainable in general and the cap keeps the cost bounded.
    """
    if m <= 0:
        raise ValueError("m must be positive")
    h = u_step
    prev = None
    for _ in range(max_refinements + 1):
        val = _contrast_fixed_step(sample, m, noise_cf, h)
        if prev is not None and abs(val - prev) <= refine_tol * max(1.0, abs(val)):
            return val
        prev = val
        h /= 2.0
    return prev


def _contrast_fixed_step(sample, m, noise_cf, h):
    k = int(math.floor(m / h))
    # guard against m being an exact multiple up to fp noise
    if k * h >= m:
        k -= 1
    sq = _deconvolved_sq(sample, h, k, noise_cf)
    integral = float(np.trapezoid(sq, dx=h))
    end = _point_sq(sample, m, noise_cf)
    integral += (m - k * h) * (sq[-1] + end) / 2.0
    return -integral / math.pi


def select_cutoff(sample, grid: CutoffGrid, noise_cf, lambda_delta: float,
                  kappa: float = KAPPA_DEFAULT, sigma2delta: float = 0.0,
                  u_step: float = CONTRAST_STEP):
    """Minimize contrast + penalty over the grid; ties go to the smallest m.

    Returns (m_hat, trace) where trace is a structured array with columns
    m, contrast, penalty.  The contrast is evaluated incrementally: one
    empirical-CF pass over [0, max m] and a cumulative trapezoid, plus an
    exact partial cell per grid point — identical to recomputing each
    contrast at the same step.
    """
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    if kappa < KAPPA_THEORY_FLOOR:
        warnings.warn(
            f"kappa={kappa} is below the theoretical floor 32/(3 pi) "
            f"= {KAPPA_THEORY_FLOOR:.4f}; using the calibrated value anyway",
            KappaBelowTheoryWarning,
            stacklevel=2,
        )
    m_values = grid.m_values
    n = sample.config.n
    m_max = float(m_values[-1])
    h = u_step
    count = int(math.floor(m_max / h))
    if count * h >= m_max:
        count -= 1
    sq = _deconvolved_sq(sample, h, count, noise_cf)
    cum = np.concatenate([[0.0], np.cumsum(h * (sq[:-1] + sq[1:]) / 2.0)])

    end_sq = np.empty(m_values.size)
    num_end = charfn.empirical_cf(sample.values, m_values)
    den_end = np.asarray(noise_cf(m_values), dtype=complex)
    if np.any(np.abs(den_end) < 1e-300):
        raise ZeroDivisionError("noise CF vanishes at a grid cutoff")
    end_sq[:] = np.abs(np.atleast_1d(num_end) / den_end) ** 2

    idx = np.minimum(np.floor(m_values / h).astype(int), count)
    contrasts = -(
        cum[idx] + (m_values - idx * h) * (sq[idx] + end_sq) / 2.0
    ) / math.pi
    pens = penalty_gaussian(m_values, lambda_delta, n, kappa, sigma2delta)
    objective = contrasts + pens
    best = int(np.argmin(objective))  # first minimum = smallest m on ties
    trace = np.rec.fromarrays(
        [m_values, contrasts, np.broadcast_to(pens, m_values.shape)],
        names="m,contrast,penalty",
    )
    return float(m_values[best]), trace


def write_trace_csv(trace, path):
    with open(path, "w") as fh:
        fh.write("m,contrast,penalty,objective\n")
        for row in trace:
            m, con, pen = float(row.m), float(row.contrast), float(row.penalty)
            fh.write(f"{m!r},{con!r},{pen!r},{con + pen!r}\n")


def sinc_basis_coefficient(sample, m: float, j: int, noise_cf) -> complex:
    """Coefficient of the estimator on the j-th orthonormal sinc basis
    function of the [-m, m]-bandlimited space.

    The basis member has Fourier transform sqrt(pi/m) e^{-iu j pi/m} on
    [-m, m], so the coefficient is sqrt(pi/m) times the estimate evaluated
    at the Nyquist point j pi / m.  Test utility: the squared sum over j
    reproduces the (negated) contrast by Parseval.
    """
    if m <= 0:
        raise ValueError("m must be positive")
    # the trapezoid inversion is 2 pi / h periodic in x; keep the evaluation
    # point j pi / m well inside half a period
    k = max(400, int(round(m / 0.005)), 4 * abs(int(j)))
    h = m / k
    u = h * np.arange(k + 1)
    num = ecf.ecf_uniform(sample.values, h, k)
    den = np.asarray(noise_cf(u), dtype=complex)
    phi = num / den
    x = np.array([j * math.pi / m])
    val = ecf.invert_uniform(phi, h, x)[0]  # (1/2pi) * integral
    return complex(math.sqrt(math.pi / m) * val)
