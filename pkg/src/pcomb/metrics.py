"""Method-selection diagnostics: variance ratios and scaled Wasserstein
distances between adjusted statistics and their continuous laws.

All distances are order-2 Wasserstein computed by quantile coupling: the
squared distance is the sum over atoms of the exact cell integral
int (z_i - Q(w))^2 dw over the atom's probability cell, with the cells
evaluated in closed form for normal, gamma, uniform and logistic laws.
Distances are reported scaled by the standard deviation of the continuous
transform Y (not of the surrogate), following the variance-ratio
convention Var(Z)/Var(Y).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _laws
from .adjust import METHODS, AdjustedStatistic, adjust, method_spec
from .combine import surrogate
from .distributions import DiscretePValueDist

#: exact continuous law of the per-term transform, per method
_EXACT_LAW = {
    "fisher": _laws.GammaLaw(1.0, 2.0),    # chi-square with 2 df
    "pearson": _laws.GammaLaw(1.0, 2.0),
    "george": _laws.LogisticLaw(),
    "stouffer": _laws.NormalLaw(0.0, 1.0),
    "edgington": _laws.UniformLaw(),
}


def exact_law(method: str):
    """Law of the per-term transform under continuous p-values."""
    method_spec(method)
    return _EXACT_LAW[method]


def surrogate_law(method: str, variance: float):
    """Per-term moment-matched surrogate law for one adjusted statistic."""
    return surrogate(method, [variance]).law


def _sorted_cells(adjusted: AdjustedStatistic) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """z sorted ascending with the cumulative cell boundaries of Z.

    Boundaries are clipped to one: rounding can push a cumulative sum
    slightly past it, and cells saturated at double precision are width
    zero (the laws return an exact zero for those)."""
    order = np.argsort(adjusted.z, kind="stable")
    z = adjusted.z[order]
    masses = adjusted.masses[order]
    hi = np.minimum(np.cumsum(masses), 1.0)
    hi[-1] = 1.0
    lo = np.concatenate(([0.0], hi[:-1]))
    return z, lo, hi


def _coupling_cells(adjusted: AdjustedStatistic, law) -> np.ndarray:
    z, lo, hi = _sorted_cells(adjusted)
    return np.array([law.cell_sq_moment(z[i], lo[i], hi[i]) for i in range(z.size)])


def w2_discrete_continuous(adjusted: AdjustedStatistic, continuous_quantile) -> float:
    """W2 between an adjusted statistic and a continuous law.

    ``continuous_quantile`` is either one of the law objects used in this
    package or a bare quantile callable (integrated by quadrature at
    absolute cell tolerance 1e-12).  Atoms are reordered by z internally,
    so decreasing-orientation methods need no special handling.
    """
    law = continuous_quantile
    if not hasattr(law, "cell_sq_moment"):
        law = _laws.QuantileLaw(continuous_quantile)
    total = float(np.sum(_coupling_cells(adjusted, law)))
    # the summands are nonnegative up to roundoff
    return math.sqrt(max(total, 0.0))


def w2_to_continuous_transform(method: str, dist: DiscretePValueDist) -> float:
    """W2 between the adjusted statistic and its exact continuous law Y."""
    return w2_discrete_continuous(adjust(method, dist), exact_law(method))


def _require_nondegenerate(adjusted: AdjustedStatistic) -> None:
    if adjusted.is_degenerate:
        raise ValueError("diagnostics need at least two atoms; "
                         "a single-atom distribution is degenerate")


def scaled_w2(method: str, dist: DiscretePValueDist) -> float:
    """W2(Z, per-term surrogate) / SD(Y)."""
    adjusted = adjust(method, dist)
    _require_nondegenerate(adjusted)
    law = surrogate_law(method, adjusted.variance)
    return w2_discrete_continuous(adjusted, law) / method_spec(method).sd


def variance_ratio(method: str, dist) -> float:
    """Var(Z)/Var(Y); for a sequence of distributions, the average ratio."""
    spec = method_spec(method)
    if isinstance(dist, DiscretePValueDist):
        return adjust(method, dist).variance / spec.variance
    dists = list(dist)
    if not dists:
        raise ValueError("need at least one distribution")
    return float(np.mean([adjust(method, d).variance for d in dists])) / spec.variance


def w2_lower_bound(method: str, dist: DiscretePValueDist) -> float:
    """Largest single-cell contribution to W2(Z, surrogate), scaled by SD(Y).

    A lower bound for ``scaled_w2`` since the squared distance is the sum
    of the nonnegative cell integrals."""
    adjusted = adjust(method, dist)
    _require_nondegenerate(adjusted)
    law = surrogate_law(method, adjusted.variance)
    worst = float(np.max(_coupling_cells(adjusted, law)))
    return math.sqrt(max(worst, 0.0)) / method_spec(method).sd


@dataclass(frozen=True)
class MethodMetrics:
    method: str
    variance: float
    ratio: float
    scaled_w2: float
    w2_to_y: float
    lower_bound: float


@dataclass(frozen=True)
class MetricsReport:
    """Per-method diagnostics plus two recommendations: the method with
    the highest variance ratio and the one with the smallest scaled
    distance (ties broken by the fixed method order)."""

    rows: tuple[MethodMetrics, ...]
    recommended_by_ratio: str
    recommended_by_distance: str

    def row(self, method: str) -> MethodMetrics:
        for r in self.rows:
            if r.method == method:
                return r
        raise KeyError(method)

    def to_json(self) -> dict:
        return {
            "methods": [vars(r) for r in self.rows],
            "recommended_by_ratio": self.recommended_by_ratio,
            "recommended_by_distance": self.recommended_by_distance,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("method,variance,ratio,scaled_w2,w2_to_Y,lower_bound\n")
        for r in self.rows:
            buf.write(f"{r.method},{r.variance:.6f},{r.ratio:.6f},"
                      f"{r.scaled_w2:.6f},{r.w2_to_y:.6f},{r.lower_bound:.6f}\n")
        return buf.getvalue()


def rank_methods(dists) -> MetricsReport:
    """Full diagnostic table over all methods for one distribution or,
    for a sequence, the across-distribution averages of each column."""
    if isinstance(dists, DiscretePValueDist):
        dists = [dists]
    else:
        dists = list(dists)
    if not dists:
        raise ValueError("need at least one distribution")

    rows = []
    for method in METHODS:
        spec = method_spec(method)
        variances, sw2, w2y, lb = [], [], [], []
        for d in dists:
            adjusted = adjust(method, d)
            _require_nondegenerate(adjusted)
            variances.append(adjusted.variance)
            law = surrogate_law(method, adjusted.variance)
            cells = _coupling_cells(adjusted, law)
            sw2.append(math.sqrt(max(float(np.sum(cells)), 0.0)) / spec.sd)
            lb.append(math.sqrt(max(float(np.max(cells)), 0.0)) / spec.sd)
            w2y.append(w2_discrete_continuous(adjusted, exact_law(method)))
        rows.append(MethodMetrics(
            method=method,
            variance=float(np.mean(variances)),
            ratio=float(np.mean(variances)) / spec.variance,
            scaled_w2=float(np.mean(sw2)),
            w2_to_y=float(np.mean(w2y)),
            lower_bound=float(np.mean(lb)),
        ))

    by_ratio = max(rows, key=lambda r: r.ratio).ratio
    by_dist = min(rows, key=lambda r: r.scaled_w2).scaled_w2
    rec_ratio = next(r.method for r in rows if r.ratio == by_ratio)
    rec_dist = next(r.method for r in rows if r.scaled_w2 == by_dist)
    return MetricsReport(rows=tuple(rows), recommended_by_ratio=rec_ratio,
                         recommended_by_distance=rec_dist)
