"""Exact and sampled privacy audits.

A *scheme* for the exact audits is any callable ``(DemandSpec, K) ->
QueryDistribution``.  Posteriors are computed with ``Fraction`` so an audit
distinguishes exactly-uniform from nearly-uniform.
"""

from __future__ import annotations

import warnings
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np
from scipy.stats import chi2_contingency

from .core import CapacityError, DemandSpec, ParameterError, all_demands, as_rng, joint_prior


class QueryDistribution(dict):
    """Canonical query -> exact probability, for one (W, S)."""

    def __init__(self, entries):
        super().__init__((k, Fraction(v)) for k, v in dict(entries).items() if v)
        if any(v < 0 for v in self.values()):
            raise ValueError("negative probability")
        if sum(self.values()) != 1:
            raise ValueError(f"probabilities sum to {sum(self.values())}, not 1")

    @property
    def entries(self) -> dict:
        return dict(self)


def constant_query(value="constant"):
    """Scheme whose query never depends on (W, S), e.g. full download."""

    def enumerate_queries(spec: DemandSpec, K: int) -> QueryDistribution:
        return QueryDistribution({value: 1})

    return enumerate_queries


full_download_queries = constant_query("download-all")


# -- priors --------------------------------------------------------------------


def uniform_prior(K: int, M: int) -> dict:
    """The prior with W uniform and S uniform among M-subsets avoiding W."""
    return {(d.W, d.S): joint_prior(d.W, d.S, K, M) for d in all_demands(K, M)}


def random_prior(K: int, M: int, rng=None, scale: int = 1000) -> dict:
    """Random non-uniform prior over valid (W, S) with |S| = M, all W possible."""
    rng = as_rng(rng)
    demands = list(all_demands(K, M))
    weights = [int(w) for w in rng.integers(1, scale + 1, size=len(demands))]
    total = sum(weights)
    return {(d.W, d.S): Fraction(w, total) for d, w in zip(demands, weights)}


def _check_prior(prior: dict, K: int, M: int) -> None:
    if sum(prior.values()) != 1:
        raise ParameterError("prior does not sum to 1")
    for (w, S), p in prior.items():
        if p < 0 or not 0 <= w < K or len(S) != M:
            raise ParameterError(f"invalid prior entry {(w, sorted(S))}: {p}")


# -- exact audits --------------------------------------------------------------


@dataclass
class PosteriorRow:
    query: object
    hypothesis: object
    posterior: Fraction
    prior: Fraction

    @property
    def deviation(self) -> Fraction:
        return abs(self.posterior - self.prior)


@dataclass
class AuditReport:
    max_posterior_deviation: Fraction
    rows: list[PosteriorRow] = field(default_factory=list)
    query_count: int = 0

    @property
    def private(self) -> bool:
        return self.max_posterior_deviation == 0

    def posterior_sums(self) -> dict:
        sums = defaultdict(Fraction)
        for r in self.rows:
            sums[r.query] += r.posterior
        return dict(sums)

    def to_table(self) -> str:
        lines = ["query\thypothesis\tposterior\tprior\tdeviation"]
        for r in self.rows:
            lines.append(f"{r.query}\t{_fmt_hyp(r.hypothesis)}\t{r.posterior}\t{r.prior}\t{r.deviation}")
        return "\n".join(lines)

    def summary(self) -> str:
        verdict = "private" if self.private else "LEAKS"
        return (f"{self.query_count} distinct queries audited; "
                f"max posterior deviation {self.max_posterior_deviation} ({verdict})")


def _fmt_hyp(h) -> str:
    if isinstance(h, tuple) and len(h) == 2 and isinstance(h[1], frozenset):
        return f"W={h[0]},S={{{','.join(map(str, sorted(h[1])))}}}"
    return f"W={h}"


def _joint(scheme, K: int, prior: dict, max_queries: int):
    """query -> {(w, S): prior(w, S) * P(query | w, S)}."""
    joint = defaultdict(lambda: defaultdict(Fraction))
    for (w, S), p in prior.items():
        if not p:
            continue
        dist = scheme(DemandSpec(w, S), K)
        for q, pq in dist.items():
            joint[q][(w, S)] += p * pq
            if len(joint) > max_queries:
                raise CapacityError(f"more than {max_queries} distinct queries (reached {len(joint)})")
    return joint


def _audit(scheme, K, M, prior, max_queries, key) -> AuditReport:
    prior = uniform_prior(K, M) if prior is None else prior
    _check_prior(prior, K, M)
    hyp_prior = defaultdict(Fraction)
    for (w, S), p in prior.items():
        hyp_prior[key(w, S)] += p
    joint = _joint(scheme, K, prior, max_queries)
    rows = []
    worst = Fraction(0)
    for q, col in joint.items():
        marginal = sum(col.values())
        post = defaultdict(Fraction)
        for (w, S), p in col.items():
            post[key(w, S)] += p / marginal
        for h, hp in hyp_prior.items():
            row = PosteriorRow(q, h, post.get(h, Fraction(0)), hp)
            rows.append(row)
            worst = max(worst, row.deviation)
    return AuditReport(worst, rows, len(joint))


def audit_w(scheme, K: int, M: int, prior: dict | None = None, max_queries: int = 10**6) -> AuditReport:
    """Max over queries and demands of |P(W=w | Q) - P(W=w)|."""
    return _audit(scheme, K, M, prior, max_queries, key=lambda w, S: w)


def audit_ws(scheme, K: int, M: int, prior: dict | None = None, max_queries: int = 10**6) -> AuditReport:
    """Max over queries and (w, S) of |P(W=w, S=s | Q) - P(W=w, S=s)|."""
    return _audit(scheme, K, M, prior, max_queries, key=lambda w, S: (w, S))


def posterior_given_query(scheme, K: int, M: int, query, prior: dict | None = None) -> dict:
    """P(W = w | Q = query) for every w."""
    report = audit_w(scheme, K, M, prior)
    return {r.hypothesis: r.posterior for r in report.rows if r.query == query}


# -- sampled audits ------------------------------------------------------------


@dataclass
class PairTest:
    a: object
    b: object
    tv: float
    p_value: float


@dataclass
class StatisticalReport:
    samples: int
    pairs: list[PairTest]
    status: str = "ok"

    @property
    def max_tv(self) -> float:
        return max((p.tv for p in self.pairs), default=0.0)

    @property
    def min_p(self) -> float:
        return min((p.p_value for p in self.pairs), default=1.0)


def total_variation(a: Counter, b: Counter) -> float:
    na, nb = sum(a.values()), sum(b.values())
    keys = set(a) | set(b)
    return 0.5 * sum(abs(a[k] / na - b[k] / nb) for k in keys)


def homogeneity_p(a: Counter, b: Counter, min_expected: float = 5.0) -> float:
    """Chi-square homogeneity p-value; sparse categories are pooled into one bin."""
    na, nb = sum(a.values()), sum(b.values())
    total = na + nb
    frac_small = min(na, nb) / total
    keep, pooled = [], [0, 0]
    for k in set(a) | set(b):
        n = a[k] + b[k]
        if n * frac_small >= min_expected:
            keep.append([a[k], b[k]])
        else:
            pooled[0] += a[k]
            pooled[1] += b[k]
    if sum(pooled):
        keep.append(pooled)
    if len(keep) < 2:
        return 1.0
    table = np.array(keep).T
    return float(chi2_contingency(table, correction=False).pvalue)


def audit_statistical(sampler, hypotheses, samples: int, rng=None) -> StatisticalReport:
    """Compare empirical query distributions across hypotheses.

    ``sampler(hypothesis, rng)`` returns one canonical (hashable) query.
    Every pair of hypotheses gets a total-variation estimate and a
    chi-square homogeneity p-value.
    """
    rng = as_rng(rng)
    hypotheses = list(hypotheses)
    status = "ok"
    if samples < 1000:
        warnings.warn(f"only {samples} samples per hypothesis; results are unreliable")
        status = "warning: fewer than 1000 samples"
    counts = {}
    for h in hypotheses:
        counts[h] = Counter(sampler(h, rng) for _ in range(samples))
    pairs = [
        PairTest(a, b, total_variation(counts[a], counts[b]), homogeneity_p(counts[a], counts[b]))
        for a, b in combinations(hypotheses, 2)
    ]
    return StatisticalReport(samples, pairs, status)


def w_hypothesis_sampler(query_sampler, K: int, M: int):
    """Wrap ``query_sampler(spec, K, rng)`` so hypotheses are demands w with S ~ prior."""

    def sample(w, rng):
        others = [j for j in range(K) if j != w]
        S = rng.choice(others, size=M, replace=False) if M else []
        return query_sampler(DemandSpec(w, frozenset(int(j) for j in S)), K, rng)

    return sample
