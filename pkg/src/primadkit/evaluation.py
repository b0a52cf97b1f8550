"""Per-topic effectiveness scores following trec_eval conventions.

Documents with grade > 0 are relevant, unjudged documents count as
non-relevant, and topics without any relevant document are skipped.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import NoOverlap, NoRelevant
from .run_model import Qrels, RunFile, canonical_sort, topic_key

DEFAULT_DEPTH = 1000
DEFAULT_MEASURES = ("map", "P_10", "ndcg")

_P_AT = re.compile(r"^P_(\d+)$")
_NDCG_CUT = re.compile(r"^ndcg_cut_(\d+)$")


def _num_relevant(judged: Mapping[str, int]) -> int:
    return sum(1 for g in judged.values() if g > 0)


def average_precision(ranking: Sequence[str], judged: Mapping[str, int], depth: int = DEFAULT_DEPTH) -> float:
    n_rel = _num_relevant(judged)
    if n_rel == 0:
        raise NoRelevant()
    hits = 0
    total = 0.0
    for k, doc in enumerate(ranking[:depth], start=1):
        if judged.get(doc, 0) > 0:
            hits += 1
            total += hits / k
    return total / n_rel


def precision_at_k(ranking: Sequence[str], judged: Mapping[str, int], k: int) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    return sum(1 for doc in ranking[:k] if judged.get(doc, 0) > 0) / k


def ndcg(ranking: Sequence[str], judged: Mapping[str, int], k: int | None = None) -> float:
    """nDCG@k with log2(i + 1) discount and gains clamped at zero.

    Without ``k`` the ideal ranking holds every judged document, as trec_eval's ndcg does.
    """
    ideal = sorted((max(g, 0) for g in judged.values()), reverse=True)[:k]
    idcg = sum(g / math.log2(i + 2) for i, g in enumerate(ideal))
    if idcg == 0:
        raise NoRelevant()
    dcg = sum(max(judged.get(doc, 0), 0) / math.log2(i + 2) for i, doc in enumerate(ranking[:k]))
    return dcg / idcg


def score_topic(measure: str, ranking: Sequence[str], judged: Mapping[str, int], depth: int) -> float:
    ranking = ranking[:depth]
    if measure == "map":
        return average_precision(ranking, judged, depth)
    if measure == "ndcg":
        return ndcg(ranking, judged)
    if m := _P_AT.match(measure):
        return precision_at_k(ranking, judged, int(m.group(1)))
    if m := _NDCG_CUT.match(measure):
        return ndcg(ranking, judged, int(m.group(1)))
    raise ValueError(f"unsupported measure {measure!r}")


def check_measure(measure: str) -> str:
    if measure in ("map", "ndcg") or _P_AT.match(measure) or _NDCG_CUT.match(measure):
        return measure
    raise ValueError(f"unsupported measure {measure!r}; use map, ndcg, P_<k> or ndcg_cut_<k>")


@dataclass
class TopicScores:
    scores: dict[str, dict[str, float]] = field(default_factory=dict)
    evaluated_depth: int = DEFAULT_DEPTH

    def topics(self, measure: str) -> list[str]:
        return list(self.scores[measure])

    def mean(self, measure: str) -> float:
        values = self.scores[measure].values()
        return math.fsum(values) / len(values)

    def means(self) -> dict[str, float]:
        return {m: self.mean(m) for m in self.scores}


def evaluate_run(
    run: RunFile,
    qrels: Qrels,
    measures: Iterable[str] = DEFAULT_MEASURES,
    depth: int = DEFAULT_DEPTH,
) -> TopicScores:
    measures = [check_measure(m) for m in measures]
    if depth < 1:
        raise ValueError("depth must be positive")
    run = canonical_sort(run)
    topics = sorted(
        (t for t in run.topics if _num_relevant(qrels.judgments.get(t, {})) > 0), key=topic_key
    )
    if not topics:
        raise NoOverlap()
    scores: dict[str, dict[str, float]] = {m: {} for m in measures}
    for topic in topics:
        ranking = run.ranking(topic)
        judged = qrels.judgments[topic]
        for m in measures:
            scores[m][topic] = score_topic(m, ranking, judged, depth)
    return TopicScores(scores, depth)
