import math
import random

import pytest

from primadkit.errors import NoOverlap, NoRelevant
from primadkit.evaluation import average_precision, check_measure, evaluate_run, ndcg, precision_at_k
from primadkit.run_model import parse_qrels, parse_run

RUN = "t1 Q0 d1 0 3.0 r\nt1 Q0 d2 1 2.0 r\nt1 Q0 d3 2 1.0 r\n"
QRELS = "t1 0 d1 1\nt1 0 d2 0\nt1 0 d3 1\n"


def test_hand_values():
    judged = {"d1": 1, "d2": 0, "d3": 1}
    ranking = ["d1", "d2", "d3"]
    assert average_precision(ranking, judged) == pytest.approx((1 + 2 / 3) / 2)
    assert round(average_precision(ranking, judged), 4) == 0.8333
    assert precision_at_k(ranking, judged, 2) == 0.5
    # DCG 1 + 0 + 1/log2(4); IDCG 1 + 1/log2(3)
    assert ndcg(ranking, judged, 3) == pytest.approx(1.5 / (1 + 1 / math.log2(3)))
    assert round(ndcg(ranking, judged, 3), 4) == 0.9197


def test_evaluate_run_composes():
    scores = evaluate_run(parse_run(RUN), parse_qrels(QRELS), ["map", "P_2"])
    assert scores.scores["map"] == {"t1": pytest.approx(0.8333, abs=1e-4)}
    assert scores.scores["P_2"] == {"t1": 0.5}


def test_unretrieved_relevant_counts_against_ap():
    assert average_precision(["d1"], {"d1": 1, "d9": 2}) == 0.5


def test_depth_truncates():
    judged = {"d3": 1}
    assert average_precision(["d1", "d2", "d3"], judged, depth=2) == 0.0


def test_no_relevant():
    with pytest.raises(NoRelevant):
        average_precision(["d1"], {"d1": 0})
    with pytest.raises(NoOverlap):
        evaluate_run(parse_run(RUN), parse_qrels("t9 0 d1 1\n"))


def test_unsorted_run_is_sorted_before_scoring():
    shuffled = "t1 Q0 d3 0 1.0 r\nt1 Q0 d1 1 3.0 r\nt1 Q0 d2 2 2.0 r\n"
    a = evaluate_run(parse_run(shuffled), parse_qrels(QRELS), ["map"])
    assert a.scores["map"]["t1"] == pytest.approx(0.8333, abs=1e-4)


def test_measure_ids():
    for ok in ("map", "ndcg", "P_10", "ndcg_cut_5"):
        assert check_measure(ok) == ok
    with pytest.raises(ValueError):
        check_measure("bpref")


def random_fixture(seed: int):
    rng = random.Random(seed)
    docs = [f"D{i}" for i in range(rng.randint(5, 30))]
    run_lines, qrel_lines = [], []
    for t in range(1, rng.randint(2, 6)):
        judged = rng.sample(docs, rng.randint(1, len(docs)))
        grades = [rng.choice([0, 0, 1, 2, 3]) for _ in judged]
        grades[0] = max(grades[0], 1)
        qrel_lines += [f"{t} 0 {d} {g}" for d, g in zip(judged, grades)]
        retrieved = rng.sample(docs, rng.randint(1, len(docs)))
        # coarse scores force ties, exercising the tie-break order
        run_lines += [f"{t} Q0 {d} {i} {rng.randint(0, 5)} r" for i, d in enumerate(retrieved)]
    return "\n".join(run_lines) + "\n", "\n".join(qrel_lines) + "\n"


@pytest.mark.parametrize("seed", range(20))
def test_trec_eval_conformance(seed):
    pytrec_eval = pytest.importorskip("pytrec_eval")
    run_text, qrels_text = random_fixture(seed)
    run, qrels = parse_run(run_text), parse_qrels(qrels_text)
    ours = evaluate_run(run, qrels, ["map", "P_10", "ndcg"]).scores
    trec_run = {t: {line.doc_id: line.score for line in lines} for t, lines in run.topics.items()}
    evaluator = pytrec_eval.RelevanceEvaluator(qrels.judgments, {"map", "P", "ndcg"})
    theirs = evaluator.evaluate(trec_run)
    assert set(theirs) == set(ours["map"])
    for topic, values in theirs.items():
        assert ours["map"][topic] == pytest.approx(values["map"], abs=1e-4)
        assert ours["P_10"][topic] == pytest.approx(values["P_10"], abs=1e-4)
        assert ours["ndcg"][topic] == pytest.approx(values["ndcg"], abs=1e-4)
