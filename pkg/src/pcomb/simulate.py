"""Monte-Carlo Type I error and power experiments, scenario generators,
the geometric likelihood-ratio comparator, an exact small-n convolution
oracle, and the embedded gene-level example.

Replication is deterministic and independent of the worker count: each
replicate draws from its own counter-based Philox substream, and reports
aggregate integer rejection counts, so chunking over threads cannot
change a single byte of the output.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from . import _genedata
from .adjust import METHODS, AdjustedStatistic, adjust
from .combine import CombinedResult, combine_observations, surrogate, surrogate_quantile
from .distributions import (DiscretePValueDist, custom_pvalue_distribution,
                            make_statistic_model, pvalue_distribution)

LRT_GEOMETRIC = "lrt-geometric"

GENERATOR_NAME = "philox"

#: cap on the materialized support size of the exact convolution
CONVOLUTION_CAP = 10_000_000
#: relative tolerance for merging equal convolution support values
CONVOLUTION_MERGE_RTOL = 1e-12

SYNTHETIC_ATOMS = {
    # large mass 0.4 at the left, right, and center, and 0.3 at both ends
    "PL": np.arange(40, 101) / 100.0,
    "PR": np.concatenate([np.arange(1, 61), [100]]) / 100.0,
    "PC": np.concatenate([np.arange(1, 31), [70], np.arange(71, 101)]) / 100.0,
    "PS": np.concatenate([[30], np.arange(31, 71), [100]]) / 100.0,
}


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Scenario:
    """A sampling scenario: per-test null p-value distributions plus a
    one-parameter family of alternatives for the underlying statistic.

    ``null_param`` is the alternative-parameter value that reproduces the
    null (None for the synthetic distributions, which have no statistic
    model and therefore no alternative).
    """

    kind: str
    name: str
    side: str | None = None
    params: Mapping = field(default_factory=dict)

    @property
    def null_param(self) -> float | None:
        if self.kind == "binomial":
            return float(self.params["theta0"])
        if self.kind == "geometric":
            return float(self.params["p0"])
        if self.kind in ("geometric-noniid", "circular"):
            return 0.0
        return None

    def null_dists(self) -> tuple[DiscretePValueDist, ...]:
        """The distinct per-test null distributions (one per group)."""
        return tuple(g.dist for g in _groups(self))

    def group_assignment(self, n: int) -> np.ndarray:
        """Group index of each of the n tests (cyclic for non-i.i.d.)."""
        return np.arange(n) % len(_groups(self))

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        out.update(self.params)
        if self.side is not None:
            out["side"] = self.side
        return out


def synthetic_scenario(name: str) -> Scenario:
    if name not in SYNTHETIC_ATOMS:
        raise ValueError(f"unknown synthetic distribution {name!r}; "
                         f"expected one of {tuple(SYNTHETIC_ATOMS)}")
    return Scenario(kind="synthetic", name=name, params={"name": name})


def binomial_scenario(theta0: float, trials: int = 5, side: str = "left") -> Scenario:
    return Scenario(kind="binomial", name=f"binomial-theta{theta0:g}-{side}",
                    side=side, params={"theta0": float(theta0), "trials": int(trials)})


def geometric_scenario(p0: float, side: str) -> Scenario:
    return Scenario(kind="geometric", name=f"geometric-p{p0:g}-{side}",
                    side=side, params={"p0": float(p0)})


def geometric_noniid_scenario(p0_set: Sequence[float] = (0.2, 0.5, 0.8),
                              side: str = "right") -> Scenario:
    """Independent non-identical geometric tests: null parameters cycle
    through ``p0_set``; the alternative parameter is a common offset added
    to every test's null parameter."""
    return Scenario(kind="geometric-noniid", name=f"geometric-noniid-{side}",
                    side=side, params={"p0_set": tuple(float(p) for p in p0_set)})


def circular_scenario(points: int) -> Scenario:
    """Uniform sampling on ``points`` equispaced circle points (odd), with
    the exponential concentration alternative."""
    if points < 3 or points % 2 == 0:
        raise ValueError(f"points must be an odd integer >= 3, got {points}")
    return Scenario(kind="circular", name=f"circular-{points}",
                    params={"points": int(points)})


def scenario_from_json(obj: Mapping) -> Scenario:
    kind = obj.get("kind")
    if kind == "synthetic":
        return synthetic_scenario(obj["name"])
    if kind == "binomial":
        return binomial_scenario(obj["theta0"], obj.get("trials", 5), obj.get("side", "left"))
    if kind == "geometric":
        return geometric_scenario(obj["p0"], obj["side"])
    if kind == "geometric-noniid":
        return geometric_noniid_scenario(obj.get("p0_set", (0.2, 0.5, 0.8)), obj["side"])
    if kind == "circular":
        return circular_scenario(obj["points"])
    raise ValueError(f"unknown scenario kind {kind!r}")


@dataclass(frozen=True, eq=False)
class _Group:
    """One distinct per-test design: a null p-value distribution plus the
    machinery to sample outcomes under an alternative parameter."""

    dist: DiscretePValueDist
    outcome_values: np.ndarray      # raw statistic per outcome index
    outcome_map: np.ndarray         # outcome index -> atom index
    null_cdf: np.ndarray
    alt_cdf_fn: object              # callable alt_param -> outcome cdf, or None

    def cdf_for(self, alt_param) -> np.ndarray:
        if alt_param is None or self.alt_cdf_fn is None:
            return self.null_cdf
        return self.alt_cdf_fn(alt_param)


_GROUP_CACHE: dict[tuple, tuple] = {}


def _model_group(model, side) -> _Group:
    dist = pvalue_distribution(model, side)
    cdf = model.cdf()
    return dist, cdf


def _groups(sc: Scenario) -> tuple[_Group, ...]:
    key = (sc.kind, sc.side, tuple(sorted(sc.params.items())))
    if key in _GROUP_CACHE:
        return _GROUP_CACHE[key]

    groups: list[_Group] = []
    if sc.kind == "synthetic":
        atoms = SYNTHETIC_ATOMS[sc.params["name"]]
        dist = custom_pvalue_distribution(atoms, "left")
        m = atoms.size
        groups.append(_Group(dist=dist, outcome_values=np.arange(m),
                             outcome_map=np.arange(m), null_cdf=np.asarray(atoms),
                             alt_cdf_fn=None))
    elif sc.kind == "binomial":
        trials = sc.params["trials"]
        model = make_statistic_model("binomial", {"trials": trials,
                                                  "prob": sc.params["theta0"]})
        dist, cdf = _model_group(model, sc.side)

        def alt_cdf(theta, _support=model.support, _trials=trials):
            F = stats.binom(_trials, float(theta)).cdf(_support)
            F[-1] = 1.0
            return F

        groups.append(_Group(dist=dist, outcome_values=model.support.astype(float),
                             outcome_map=dist.outcome_map, null_cdf=cdf,
                             alt_cdf_fn=alt_cdf))
    elif sc.kind in ("geometric", "geometric-noniid"):
        p0s = ([sc.params["p0"]] if sc.kind == "geometric"
               else list(sc.params["p0_set"]))
        for p0 in p0s:
            model = make_statistic_model("geometric", {"prob": p0})
            dist, cdf = _model_group(model, sc.side)

            def alt_cdf(param, _support=model.support, _p0=p0, _noniid=sc.kind.endswith("noniid")):
                # i.i.d. scenarios sweep p1 directly; non-i.i.d. ones sweep a
                # common offset added to each test's null parameter
                p1 = _p0 + float(param) if _noniid else float(param)
                if not 0.0 < p1 < 1.0:
                    raise ValueError(f"alternative parameter gives p1={p1}, outside (0, 1)")
                # alternatives heavier than the null truncation are censored
                # into the last support point (residual < the null tail cap
                # for the swept ranges)
                F = stats.geom(p1).cdf(_support)
                F[-1] = 1.0
                return F

            groups.append(_Group(dist=dist, outcome_values=model.support.astype(float),
                                 outcome_map=dist.outcome_map, null_cdf=cdf,
                                 alt_cdf_fn=alt_cdf))
    elif sc.kind == "circular":
        N = sc.params["points"]
        half = (N + 1) // 2
        atoms = (2.0 * np.arange(half) + 1.0) / N
        dist = custom_pvalue_distribution(atoms, "right")
        tvals = np.arange(half)

        def alt_cdf(lam, _tvals=tvals, _N=N):
            # weights proportional to exp(-lambda t), doubled off the pole;
            # the normalizing constant is computed by direct summation
            if lam < 0.0:
                raise ValueError(f"lambda must be >= 0, got {lam}")
            w = np.exp(-float(lam) * _tvals) * np.where(_tvals == 0, 1.0, 2.0)
            F = np.cumsum(w / w.sum())
            F[-1] = 1.0
            return F

        groups.append(_Group(dist=dist, outcome_values=tvals.astype(float),
                             outcome_map=np.arange(half), null_cdf=np.asarray(atoms),
                             alt_cdf_fn=alt_cdf))
    else:
        raise ValueError(f"unknown scenario kind {sc.kind!r}")

    _GROUP_CACHE[key] = tuple(groups)
    return _GROUP_CACHE[key]


# ---------------------------------------------------------------------------
# deterministic replication
# ---------------------------------------------------------------------------

def _stream(seed: int, config_index: int, replicate: int) -> np.random.Generator:
    """Counter-based substream: one Philox block range per replicate, so
    results do not depend on how replicates are chunked over workers."""
    key = int(seed) & ((1 << 128) - 1)
    counter = (int(config_index) << 192) | (int(replicate) << 64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def sample_pvalues(scenario: Scenario, rng: np.random.Generator, n: int,
                   alt_param: float | None = None) -> list[tuple[float, DiscretePValueDist]]:
    """Draw n observed p-values (with their null distributions).

    Under the null each p-value lands on atom i with mass p_i; under an
    alternative the statistic is drawn from the alternative model and
    mapped through the null model's sided p-value."""
    groups = _groups(scenario)
    assign = scenario.group_assignment(n)
    if alt_param is not None and scenario.null_param is None:
        raise ValueError(f"scenario {scenario.name!r} has no alternative family")
    out = []
    u = rng.random(n)
    for j in range(n):
        g = groups[assign[j]]
        cdf = g.cdf_for(alt_param)
        k = int(np.searchsorted(cdf, u[j], side="left"))
        atom = g.dist.atoms[g.outcome_map[k]]
        out.append((float(atom), g.dist))
    return out


@dataclass(frozen=True)
class ExperimentRow:
    scenario: str
    method: str
    n: int
    alt_param: float | None
    alpha: float
    reps: int
    rejections: int

    @property
    def proportion(self) -> float:
        return self.rejections / self.reps

    @property
    def mc_se(self) -> float:
        r = self.proportion
        return math.sqrt(r * (1.0 - r) / self.reps)


@dataclass(frozen=True)
class ExperimentReport:
    rows: tuple[ExperimentRow, ...]
    seed: int
    generator: str = GENERATOR_NAME

    def proportion(self, method: str, *, n: int | None = None,
                   alt_param: float | None = None) -> float:
        for r in self.rows:
            if (r.method == method and (n is None or r.n == n)
                    and (alt_param is None or r.alt_param == alt_param)):
                return r.proportion
        raise KeyError((method, n, alt_param))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("scenario,method,n,alt_param,alpha,reps,rejections,proportion,mc_se,seed\n")
        for r in self.rows:
            alt = "" if r.alt_param is None else f"{r.alt_param:.10g}"
            buf.write(f"{r.scenario},{r.method},{r.n},{alt},{r.alpha:.10g},"
                      f"{r.reps},{r.rejections},{r.proportion:.6f},"
                      f"{r.mc_se:.6f},{self.seed}\n")
        return buf.getvalue()


class _ConfigPrep:
    """Per-configuration sampling tables and rejection thresholds."""

    def __init__(self, scenario: Scenario, methods: Sequence[str], n: int,
                 alt_param: float | None, alpha: float):
        groups = _groups(scenario)
        assign = scenario.group_assignment(n)
        self.n = n
        self.group_pos = [np.flatnonzero(assign == gi) for gi in range(len(groups))]
        self.group_cdf = [g.cdf_for(alt_param) for g in groups]
        self.method_names = list(methods)

        score_rows, self.thresholds, self.upper = [], [], []
        for name in self.method_names:
            if name == LRT_GEOMETRIC:
                if scenario.kind != "geometric":
                    raise ValueError(f"{LRT_GEOMETRIC} is only defined for "
                                     f"i.i.d. geometric scenarios, not {scenario.kind!r}")
                score_rows.append([g.outcome_values for g in groups])
                t, upper = _geometric_lrt_threshold(scenario, n, alpha)
                self.thresholds.append(t)
                self.upper.append(upper)
                continue
            adjusted = [adjust(name, g.dist) for g in groups]
            # z looked up directly by outcome index
            score_rows.append([adj.z[g.outcome_map] for adj, g in zip(adjusted, groups)])
            nus = [adjusted[assign[j]].variance for j in range(n)]
            surr = surrogate(name, nus)
            q = surrogate_quantile(surr, 1.0 - alpha if surr.tail == "upper" else alpha)
            self.thresholds.append(q)
            self.upper.append(surr.tail == "upper")

        # stack per-group score matrices: one fancy index serves all methods
        self.group_scores = [np.vstack([score_rows[mi][gi] for mi in range(len(score_rows))])
                             for gi in range(len(groups))]
        self.thresholds = np.asarray(self.thresholds)
        self.upper = np.asarray(self.upper, dtype=bool)


def _geometric_lrt_threshold(scenario: Scenario, n: int, alpha: float) -> tuple[float, bool]:
    """Conservative discrete threshold for the sum of n geometric trials.

    Right-sided p-values pair with alternatives p1 < p0 and reject large
    sums; left-sided ones reject small sums.  The threshold is the closest
    integer whose exact tail stays at or below alpha."""
    p0 = scenario.params["p0"]
    if scenario.side == "right":
        t = n + int(stats.nbinom.isf(alpha, n, p0))
        while stats.nbinom.sf(t - n - 1, n, p0) > alpha:
            t += 1
        while t > n and stats.nbinom.sf(t - n - 2, n, p0) <= alpha:
            t -= 1
        return float(t), True
    t = n + int(stats.nbinom.ppf(alpha, n, p0))
    while t >= n and stats.nbinom.cdf(t - n, n, p0) > alpha:
        t -= 1
    return float(t), False


def _run_config(prep: _ConfigPrep, reps: int, seed: int, config_index: int,
                workers: int) -> np.ndarray:
    nm = prep.thresholds.size

    def chunk(lo: int, hi: int) -> np.ndarray:
        counts = np.zeros(nm, dtype=np.int64)
        for rep in range(lo, hi):
            gen = _stream(seed, config_index, rep)
            u = gen.random(prep.n)
            scores = np.zeros(nm)
            for gi, pos in enumerate(prep.group_pos):
                if pos.size == 0:
                    continue
                idx = np.searchsorted(prep.group_cdf[gi], u[pos], side="left")
                scores += prep.group_scores[gi][:, idx].sum(axis=1)
            counts += np.where(prep.upper, scores >= prep.thresholds,
                               scores <= prep.thresholds)
        return counts

    if workers <= 1:
        return chunk(0, reps)
    step = max(1, -(-reps // workers))
    bounds = [(lo, min(lo + step, reps)) for lo in range(0, reps, step)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda b: chunk(*b), bounds))
    return np.sum(parts, axis=0, dtype=np.int64)


def type1_experiment(scenario: Scenario, methods: Sequence[str], n_grid: Sequence[int],
                     alpha: float, reps: int, seed: int, workers: int = 1) -> ExperimentReport:
    """Null rejection proportions for each grid size and method."""
    rows = []
    for ci, n in enumerate(n_grid):
        prep = _ConfigPrep(scenario, methods, int(n), scenario.null_param, alpha)
        counts = _run_config(prep, reps, seed, ci, workers)
        for m, c in zip(methods, counts):
            rows.append(ExperimentRow(scenario=scenario.name, method=m, n=int(n),
                                      alt_param=scenario.null_param, alpha=alpha,
                                      reps=reps, rejections=int(c)))
    return ExperimentReport(rows=tuple(rows), seed=seed)


def power_experiment(scenario: Scenario, methods: Sequence[str], alt_grid: Sequence[float],
                     n: int, alpha: float, reps: int, seed: int,
                     workers: int = 1) -> ExperimentReport:
    """Rejection proportions across alternative-parameter values.

    ``methods`` may include the geometric likelihood-ratio comparator
    ``lrt-geometric`` for i.i.d. geometric scenarios.  At the grid point
    equal to the null parameter, power is the Type I error."""
    if scenario.null_param is None:
        raise ValueError(f"scenario {scenario.name!r} has no alternative family")
    rows = []
    for ci, alt in enumerate(alt_grid):
        prep = _ConfigPrep(scenario, methods, int(n), float(alt), alpha)
        counts = _run_config(prep, reps, seed, ci, workers)
        for m, c in zip(methods, counts):
            rows.append(ExperimentRow(scenario=scenario.name, method=m, n=int(n),
                                      alt_param=float(alt), alpha=alpha,
                                      reps=reps, rejections=int(c)))
    return ExperimentReport(rows=tuple(rows), seed=seed)


# ---------------------------------------------------------------------------
# exact convolution oracle
# ---------------------------------------------------------------------------

def _merge_support(values: np.ndarray, masses: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(values, kind="stable")
    v, w = values[order], masses[order]
    gaps = np.diff(v)
    tol = CONVOLUTION_MERGE_RTOL * np.maximum(np.abs(v[1:]), np.abs(v[:-1]))
    starts = np.concatenate(([0], np.flatnonzero(gaps > tol) + 1))
    group = np.repeat(np.arange(starts.size), np.diff(np.append(starts, v.size)))
    merged_w = np.bincount(group, weights=w)
    merged_v = np.bincount(group, weights=w * v) / merged_w
    return merged_v, merged_w


def exact_convolution(adjusted: AdjustedStatistic, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact support and masses of the n-fold sum of an adjusted statistic.

    Verification oracle; feasible only while the merged support stays
    under ``CONVOLUTION_CAP``.  Support values within 1e-12 relative are
    merged (mass-weighted)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    base_v = np.asarray(adjusted.z, dtype=float)
    base_w = np.asarray(adjusted.masses, dtype=float)
    values, masses = base_v.copy(), base_w.copy()
    for _ in range(n - 1):
        if values.size * base_v.size > CONVOLUTION_CAP:
            raise ValueError(f"convolution support would exceed {CONVOLUTION_CAP} points")
        values = (values[:, None] + base_v[None, :]).ravel()
        masses = (masses[:, None] * base_w[None, :]).ravel()
        values, masses = _merge_support(values, masses)
    return values, masses


# ---------------------------------------------------------------------------
# gene-level example
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GeneAssociationRow:
    gene: str
    side: str
    method: str
    statistic: float
    global_p: float


@dataclass(frozen=True)
class GeneExampleReport:
    rows: tuple[GeneAssociationRow, ...]

    def row(self, gene: str, side: str, method: str) -> GeneAssociationRow:
        for r in self.rows:
            if (r.gene, r.side, r.method) == (gene, side, method):
                return r
        raise KeyError((gene, side, method))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("gene,side,method,statistic,p\n")
        for r in self.rows:
            buf.write(f"{r.gene},{r.side},{r.method},{r.statistic:.6f},{r.global_p:.6f}\n")
        return buf.getvalue()

    def to_json(self) -> list:
        return [vars(r) for r in self.rows]


def gene_example() -> GeneExampleReport:
    """Gene-level association of the embedded case-control dataset.

    Each SNP's case-mutation count is tested against its hypergeometric
    null; per-gene p-values are combined for right-, left-, and two-sided
    alternatives with all five methods (2 genes x 3 sides x 5 methods)."""
    models = [make_statistic_model("hypergeometric",
                                   {"population": _genedata.POPULATION,
                                    "successes": _genedata.CASES,
                                    "draws": total})
              for total in _genedata.TOTAL_MUTATIONS]
    rows = []
    for gene, snp_idx in _genedata.GENES.items():
        observations = [_genedata.CASE_MUTATIONS[i] for i in snp_idx]
        for side in ("two", "right", "left"):
            dists = [pvalue_distribution(models[i], side) for i in snp_idx]
            for method in METHODS:
                res: CombinedResult = combine_observations(method, observations, dists)
                rows.append(GeneAssociationRow(gene=gene, side=side, method=method,
                                               statistic=res.statistic,
                                               global_p=res.global_p))
    return GeneExampleReport(rows=tuple(rows))
