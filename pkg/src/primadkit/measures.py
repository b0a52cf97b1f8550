"""Reproducibility measures comparing an original run with a reproduced one.

Ranking-level: Kendall's tau Union (KTU) and Rank-Biased Overlap (RBO),
both averaged over the topics the two runs share.  Score-level: RMSE and a
paired t-test p-value over per-topic effectiveness, and the overall effects
Effect Ratio (ER) and Delta Relative Improvement (DRI) for baseline/advanced
pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .errors import (
    EmptyRanking,
    NoCommonTopics,
    TooFewTopics,
    ZeroBaselineMean,
    ZeroOriginalEffect,
)
from .run_model import RunFile, canonical_sort, topic_key


@dataclass(frozen=True)
class MeasureConfig:
    rbo_p: float = 0.8
    ktu_depth: int = 1000
    ttest_two_sided: bool = True
    measure: str = "map"
    depth: int = 1000

    def __post_init__(self):
        if not 0 < self.rbo_p < 1:
            raise ValueError("RBO persistence must lie strictly between 0 and 1")
        if self.ktu_depth < 1 or self.depth < 1:
            raise ValueError("depths must be positive")


@dataclass(frozen=True)
class PairedTopicSeries:
    topics: tuple[str, ...]
    original: tuple[float, ...]
    reproduced: tuple[float, ...]

    def __post_init__(self):
        if not len(self.topics) == len(self.original) == len(self.reproduced):
            raise ValueError("paired series must have equal lengths")

    @classmethod
    def from_scores(cls, original: Mapping[str, float], reproduced: Mapping[str, float]) -> PairedTopicSeries:
        topics = tuple(sorted(set(original) & set(reproduced), key=topic_key))
        return cls(topics, tuple(original[t] for t in topics), tuple(reproduced[t] for t in topics))

    def __len__(self) -> int:
        return len(self.topics)


# --------------------------------------------------------------------------- rankings

def kendalls_tau_union(orig_ranking: Sequence[str], rep_ranking: Sequence[str], depth: int = 1000) -> float:
    """Kendall's tau over the union of two truncated rankings.

    Each ranking is cut at ``depth`` and extended by the documents only the
    other one retrieved, in the other ranking's order.
    """
    a = list(orig_ranking[:depth])
    b = list(rep_ranking[:depth])
    if not a or not b:
        raise EmptyRanking()
    in_a, in_b = set(a), set(b)
    ext_a = a + [d for d in b if d not in in_a]
    ext_b = b + [d for d in a if d not in in_b]
    n = len(ext_a)
    if n < 2:
        return 1.0
    pos_b = {doc: i for i, doc in enumerate(ext_b)}
    perm = np.fromiter((pos_b[doc] for doc in ext_a), dtype=np.int64, count=n)
    discordant = kernels.count_inversions(perm)
    pairs = n * (n - 1) // 2
    return (pairs - 2 * discordant) / pairs


def _rbo_from_overlaps(overlaps: np.ndarray, s: int, l: int, p: float) -> float:
    depths = np.arange(1, l + 1, dtype=np.float64)
    weights = p**depths
    agreement = overlaps / depths
    head = math.fsum(agreement * weights)
    x_s = float(overlaps[s - 1])
    x_l = float(overlaps[l - 1])
    tail_depths = depths[s:]
    tail = math.fsum(x_s * (tail_depths - s) / (s * tail_depths) * weights[s:])
    return (1 - p) / p * (head + tail) + ((x_l - x_s) / l + x_s / s) * p**l


def rank_biased_overlap(orig_ranking: Sequence[str], rep_ranking: Sequence[str], p: float = 0.8) -> float:
    """Extrapolated RBO of two finite rankings of possibly different length."""
    if not orig_ranking or not rep_ranking:
        raise EmptyRanking()
    if not 0 < p < 1:
        raise ValueError("p must lie strictly between 0 and 1")
    if len(orig_ranking) <= len(rep_ranking):
        short, long_ = orig_ranking, rep_ranking
    else:
        short, long_ = rep_ranking, orig_ranking
    ids: dict[str, int] = {}
    ids_short = np.fromiter((ids.setdefault(d, len(ids)) for d in short), dtype=np.int64, count=len(short))
    ids_long = np.fromiter((ids.setdefault(d, len(ids)) for d in long_), dtype=np.int64, count=len(long_))
    overlaps = kernels.prefix_overlaps(ids_short, ids_long, len(ids))
    s, l = len(short), len(long_)
    if s == l and np.array_equal(overlaps, np.arange(1, l + 1)):
        # full agreement at every depth; the closed form sums to 1 only up to rounding
        return 1.0
    return _rbo_from_overlaps(overlaps, s, l, p)


def _common_rankings(orig: RunFile, rep: RunFile):
    orig = canonical_sort(orig)
    rep = canonical_sort(rep)
    topics = sorted(set(orig.topics) & set(rep.topics), key=topic_key)
    if not topics:
        raise NoCommonTopics()
    for t in topics:
        yield t, orig.ranking(t), rep.ranking(t)


def ktu_by_topic(orig: RunFile, rep: RunFile, depth: int = 1000) -> dict[str, float]:
    return {t: kendalls_tau_union(a, b, depth) for t, a, b in _common_rankings(orig, rep)}


def rbo_by_topic(orig: RunFile, rep: RunFile, p: float = 0.8) -> dict[str, float]:
    return {t: rank_biased_overlap(a, b, p) for t, a, b in _common_rankings(orig, rep)}


def mean(values) -> float:
    values = list(values)
    return math.fsum(values) / len(values)


# --------------------------------------------------------------------------- topic scores

def rmse(series: PairedTopicSeries) -> float:
    if len(series) == 0:
        raise NoCommonTopics()
    sq = math.fsum((o - r) ** 2 for o, r in zip(series.original, series.reproduced))
    return math.sqrt(sq / len(series))


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = tiny if abs(d) < tiny else d
    d = 1.0 / d
    h = d
    for m in range(1, 1000):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and 0 <= x <= 1."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_sf2(t: float, df: float) -> float:
    """Two-sided tail probability P(|T| >= |t|) of Student's t."""
    if math.isinf(t):
        return 0.0
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))


def paired_t_statistic(series: PairedTopicSeries) -> tuple[float, int]:
    n = len(series)
    diffs = [o - r for o, r in zip(series.original, series.reproduced)]
    mu = math.fsum(diffs) / n
    var = math.fsum((d - mu) ** 2 for d in diffs) / (n - 1)
    if var == 0.0:
        return (0.0 if mu == 0.0 else math.copysign(math.inf, mu)), n - 1
    return mu / math.sqrt(var / n), n - 1


def paired_p_value(series: PairedTopicSeries, two_sided: bool = True) -> float:
    """p-value of a paired t-test on original minus reproduced topic scores.

    The one-sided variant tests whether the original scores are higher.
    All-zero differences give exactly 1.0.
    """
    n = len(series)
    if n == 0:
        raise NoCommonTopics()
    if n < 2:
        raise TooFewTopics(n)
    if all(o == r for o, r in zip(series.original, series.reproduced)):
        return 1.0
    t, df = paired_t_statistic(series)
    p2 = student_t_sf2(t, df)
    if two_sided:
        return p2
    return p2 / 2.0 if t > 0 else 1.0 - p2 / 2.0


# --------------------------------------------------------------------------- overall effects

def _pair_means(base: Mapping[str, float], adv: Mapping[str, float]) -> tuple[float, float]:
    topics = set(base) & set(adv)
    if not topics:
        raise NoCommonTopics()
    return mean(base[t] for t in topics), mean(adv[t] for t in topics)


def effect_ratio(
    orig_base: Mapping[str, float],
    orig_adv: Mapping[str, float],
    rep_base: Mapping[str, float],
    rep_adv: Mapping[str, float],
) -> float:
    """Mean reproduced improvement divided by mean original improvement.

    Each pair is averaged over its own common topics, so the original and
    reproduced pairs may come from different test collections.
    """
    ob, oa = _pair_means(orig_base, orig_adv)
    rb, ra = _pair_means(rep_base, rep_adv)
    if oa - ob == 0:
        raise ZeroOriginalEffect()
    return (ra - rb) / (oa - ob)


def delta_relative_improvement(
    orig_base: Mapping[str, float],
    orig_adv: Mapping[str, float],
    rep_base: Mapping[str, float],
    rep_adv: Mapping[str, float],
) -> float:
    ob, oa = _pair_means(orig_base, orig_adv)
    rb, ra = _pair_means(rep_base, rep_adv)
    if ob == 0:
        raise ZeroBaselineMean("original")
    if rb == 0:
        raise ZeroBaselineMean("reproduced")
    return (oa - ob) / ob - (ra - rb) / rb
