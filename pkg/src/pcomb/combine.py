"""Moment-matched surrogate nulls and global p-values for sum statistics.

The combined statistic is the sum of adjusted per-test values.  Its null
is approximated by a parametric law matched to the first two moments:
a Gamma for the chi-square based transforms (mean 2n preserved by shape
4n/nu, scale nu/2) and a Normal for the others.  Independent but
non-identically distributed tests use the same families with the variance
replaced by the sum of the per-test variances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special

from . import _laws
from .adjust import AdjustedStatistic, adjust, method_spec
from .distributions import DiscretePValueDist

#: relative tolerance for matching a supplied p-value to an atom
ATOM_MATCH_RTOL = 1e-9


@dataclass(frozen=True)
class SurrogateDist:
    """Parametric null for the sum of n adjusted terms.

    gamma: shape/scale set; normal: mean/sd set.  ``tail`` is the
    rejection tail of the method that produced it.
    """

    family: str
    n: int
    tail: str
    shape: float | None = None
    scale: float | None = None
    mean: float | None = None
    sd: float | None = None

    @property
    def law(self):
        if self.family == "gamma":
            return _laws.GammaLaw(self.shape, self.scale)
        return _laws.NormalLaw(self.mean, self.sd)

    @property
    def moments(self) -> tuple[float, float]:
        """(mean, variance), exact from the parameters."""
        if self.family == "gamma":
            return self.shape * self.scale, self.shape * self.scale ** 2
        return self.mean, self.sd ** 2

    def cdf(self, s: float) -> float:
        if self.family == "gamma":
            return float(special.gammainc(self.shape, s / self.scale)) if s > 0.0 else 0.0
        return float(special.ndtr((s - self.mean) / self.sd))

    def sf(self, s: float) -> float:
        if self.family == "gamma":
            return float(special.gammaincc(self.shape, s / self.scale)) if s > 0.0 else 1.0
        return float(special.ndtr((self.mean - s) / self.sd))

    def quantile(self, p: float) -> float:
        if not 0.0 < p < 1.0:
            raise ValueError(f"p must be in (0, 1), got {p!r}")
        if self.family == "gamma":
            return float(self.scale * special.gammaincinv(self.shape, p))
        return float(self.mean + self.sd * special.ndtri(p))

    def to_json(self) -> dict:
        out = {"family": self.family, "n": self.n, "tail": self.tail}
        if self.family == "gamma":
            out.update(shape=self.shape, scale=self.scale)
        else:
            out.update(mean=self.mean, sd=self.sd)
        return out


def surrogate(method: str, variances: Sequence[float]) -> SurrogateDist:
    """Surrogate null of the n-term sum from the per-test variances.

    The i.i.d. case is the constant-sequence special case; in general the
    surrogate mean is n E[Y] and the variance is the sum of the inputs.
    """
    spec = method_spec(method)
    nus = np.asarray(variances, dtype=float)
    if nus.size == 0:
        raise ValueError("variances must be a nonempty sequence")
    if np.any(nus <= 0.0):
        raise ValueError("every per-test variance must be positive "
                         "(degenerate single-atom p-value distribution)")
    n = int(nus.size)
    nu_bar = float(nus.mean())
    if method in ("fisher", "pearson"):
        return SurrogateDist(family="gamma", n=n, tail=spec.tail,
                             shape=4.0 * n / nu_bar, scale=nu_bar / 2.0)
    mean = n / 2.0 if method == "edgington" else 0.0
    return SurrogateDist(family="normal", n=n, tail=spec.tail,
                         mean=mean, sd=math.sqrt(n * nu_bar))


def surrogate_tail_p(surr: SurrogateDist, s: float) -> float:
    """Global p-value of an observed sum under the surrogate's tail."""
    return surr.sf(s) if surr.tail == "upper" else surr.cdf(s)


def surrogate_quantile(surr: SurrogateDist, p: float) -> float:
    """Inverse of the surrogate cdf."""
    return surr.quantile(p)


@dataclass(frozen=True, eq=False)
class CombinedResult:
    method: str
    n: int
    statistic: float
    surrogate: SurrogateDist
    global_p: float
    atom_indices: tuple[int, ...]

    def to_json(self) -> dict:
        return {"method": self.method, "n": self.n, "S": self.statistic,
                "p": self.global_p, "surrogate": self.surrogate.to_json()}


def _match_atom(dist: DiscretePValueDist, value: float) -> int:
    atoms = dist.atoms
    i = int(np.argmin(np.abs(atoms - value)))
    if abs(atoms[i] - value) > ATOM_MATCH_RTOL * max(abs(value), atoms[i]):
        raise ValueError(f"p-value {value!r} matches no atom of the distribution")
    return i


def _combine_indices(method: str, indices: Sequence[int],
                     adjusted: Sequence[AdjustedStatistic]) -> CombinedResult:
    for adj in adjusted:
        if adj.is_degenerate:
            raise ValueError("single-atom p-value distribution has zero "
                             "variance; no surrogate exists")
    statistic = float(sum(adj.z[i] for i, adj in zip(indices, adjusted)))
    surr = surrogate(method, [adj.variance for adj in adjusted])
    return CombinedResult(method=method, n=len(adjusted), statistic=statistic,
                          surrogate=surr, global_p=surrogate_tail_p(surr, statistic),
                          atom_indices=tuple(int(i) for i in indices))


def combine(method: str, observed_pvalues: Sequence[float],
            dists: Sequence[DiscretePValueDist]) -> CombinedResult:
    """Combined statistic and global p-value from observed p-value atoms.

    Each observed value must equal one atom of its distribution within
    ``ATOM_MATCH_RTOL`` relative; independence across tests is assumed.
    """
    if len(observed_pvalues) != len(dists):
        raise ValueError(f"got {len(observed_pvalues)} p-values for {len(dists)} distributions")
    if len(dists) == 0:
        raise ValueError("nothing to combine")
    indices = [_match_atom(d, p) for p, d in zip(observed_pvalues, dists)]
    adjusted = [adjust(method, d) for d in dists]
    return _combine_indices(method, indices, adjusted)


def combine_observations(method: str, observations: Sequence[int],
                         dists: Sequence[DiscretePValueDist]) -> CombinedResult:
    """Combine raw statistic observations against model-backed
    distributions; avoids the atom-matching tolerance entirely."""
    if len(observations) != len(dists):
        raise ValueError(f"got {len(observations)} observations for {len(dists)} distributions")
    if len(dists) == 0:
        raise ValueError("nothing to combine")
    indices = [d.atom_of(x)[1] for x, d in zip(observations, dists)]
    adjusted = [adjust(method, d) for d in dists]
    return _combine_indices(method, indices, adjusted)
