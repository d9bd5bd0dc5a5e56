"""Continuous reference laws with closed-form probability-cell integrals.

The quantile-coupling machinery repeatedly needs, for a law with quantile
function Q and a probability cell (c0, c1),

    cell_sq_moment(z, c0, c1) = integral over (c0, c1) of (z - Q(w))^2 dw.

Each law here evaluates that integral through exact partial moments on
(Q(c0), Q(c1)) instead of quadrature, so cells in the far tails lose no
accuracy.  ``QuantileLaw`` is the fallback for arbitrary quantile
callables and integrates on the probability scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special
from scipy.integrate import quad

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _norm_pdf(t: float) -> float:
    if not math.isfinite(t):
        return 0.0
    return math.exp(-0.5 * t * t) / _SQRT_2PI


def _t_phi(t: float) -> float:
    """t * phi(t) with the zero limit at +-inf."""
    if not math.isfinite(t):
        return 0.0
    return t * _norm_pdf(t)


@dataclass(frozen=True)
class NormalLaw:
    mean: float = 0.0
    sd: float = 1.0

    @property
    def variance(self) -> float:
        return self.sd ** 2

    def quantile(self, w):
        return self.mean + self.sd * special.ndtri(w)

    def cdf(self, y):
        return special.ndtr((np.asarray(y, dtype=float) - self.mean) / self.sd)

    def cell_sq_moment(self, z: float, c0: float, c1: float) -> float:
        if c1 <= c0:
            return 0.0
        # Standardized bounds; c0/c1 are exact probabilities, so the mass
        # term is c1 - c0 with no cdf round trip.
        t0 = special.ndtri(c0) if c0 > 0.0 else -math.inf
        t1 = special.ndtri(c1) if c1 < 1.0 else math.inf
        a = z - self.mean
        dphi = _norm_pdf(t0) - _norm_pdf(t1)
        mass = c1 - c0
        second = mass + _t_phi(t0) - _t_phi(t1)
        return a * a * mass - 2.0 * a * self.sd * dphi + self.sd ** 2 * second


@dataclass(frozen=True)
class GammaLaw:
    shape: float
    scale: float

    @property
    def mean(self) -> float:
        return self.shape * self.scale

    @property
    def variance(self) -> float:
        return self.shape * self.scale ** 2

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)

    def quantile(self, w):
        return self.scale * special.gammaincinv(self.shape, w)

    def cdf(self, y):
        return special.gammainc(self.shape, np.asarray(y, dtype=float) / self.scale)

    def _reg(self, m: int, y: float) -> float:
        # Regularized lower incomplete gamma at shifted shape; the shift by
        # m turns partial moments of order m into plain cdf differences.
        if y <= 0.0:
            return 0.0
        if math.isinf(y):
            return 1.0
        return float(special.gammainc(self.shape + m, y / self.scale))

    def cell_sq_moment(self, z: float, c0: float, c1: float) -> float:
        if c1 <= c0:
            return 0.0
        k, s = self.shape, self.scale
        y0 = float(self.quantile(c0)) if c0 > 0.0 else 0.0
        y1 = float(self.quantile(c1)) if c1 < 1.0 else math.inf
        d1 = self._reg(1, y1) - self._reg(1, y0)
        d2 = self._reg(2, y1) - self._reg(2, y0)
        return z * z * (c1 - c0) - 2.0 * z * k * s * d1 + k * (k + 1.0) * s * s * d2


@dataclass(frozen=True)
class UniformLaw:
    """Uniform(0, 1); the quantile is the identity."""

    mean: float = 0.5
    variance: float = 1.0 / 12.0

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)

    def quantile(self, w):
        return np.asarray(w, dtype=float)

    def cdf(self, y):
        return np.clip(np.asarray(y, dtype=float), 0.0, 1.0)

    def cell_sq_moment(self, z: float, c0: float, c1: float) -> float:
        if c1 <= c0:
            return 0.0
        return ((z - c0) ** 3 - (z - c1) ** 3) / 3.0


def _entropy_antideriv(w: float) -> float:
    """Antiderivative of log(w/(1-w)): w log w + (1-w) log(1-w)."""
    if w <= 0.0 or w >= 1.0:
        return 0.0
    return w * math.log(w) + (1.0 - w) * math.log1p(-w)


def _logistic_sq_antideriv(w: float) -> float:
    """Antiderivative of log(w/(1-w))^2 on (0, 1).

    B(w) = w log^2 w - 2 w log w log(1-w) + (w-1) log^2(1-w) - 2 Li2(1-w),
    with B(0) = -pi^2/3 and B(1) = 0; scipy's spence(w) is Li2(1-w).
    """
    if w <= 0.0:
        return -math.pi ** 2 / 3.0
    if w >= 1.0:
        return 0.0
    lw = math.log(w)
    l1w = math.log1p(-w)
    return (w * lw * lw - 2.0 * w * lw * l1w + (w - 1.0) * l1w * l1w
            - 2.0 * float(special.spence(w)))


@dataclass(frozen=True)
class LogisticLaw:
    """Standard logistic; mean 0, variance pi^2/3."""

    mean: float = 0.0

    @property
    def variance(self) -> float:
        return math.pi ** 2 / 3.0

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)

    def quantile(self, w):
        w = np.asarray(w, dtype=float)
        return np.log(w) - np.log1p(-w)

    def cdf(self, y):
        return special.expit(np.asarray(y, dtype=float))

    def cell_sq_moment(self, z: float, c0: float, c1: float) -> float:
        if c1 <= c0:
            return 0.0
        da = _entropy_antideriv(c1) - _entropy_antideriv(c0)
        db = _logistic_sq_antideriv(c1) - _logistic_sq_antideriv(c0)
        return z * z * (c1 - c0) - 2.0 * z * da + db


class QuantileLaw:
    """Adapter for an arbitrary quantile callable; cells go through
    adaptive quadrature on the probability scale (absolute tol 1e-12)."""

    def __init__(self, quantile_fn: Callable[[float], float], tol: float = 1e-12):
        self._q = quantile_fn
        self._tol = tol

    def quantile(self, w):
        return self._q(w)

    def cell_sq_moment(self, z: float, c0: float, c1: float) -> float:
        if c1 <= c0:
            return 0.0
        val, err = quad(lambda w: (z - self._q(w)) ** 2, c0, c1,
                        epsabs=self._tol, epsrel=1e-12, limit=500)
        if err > max(self._tol * 100.0, 1e-9 * max(abs(val), 1.0)):
            raise RuntimeError(
                f"cell quadrature did not converge on ({c0}, {c1}): "
                f"estimated error {err:.3e}")
        return val
