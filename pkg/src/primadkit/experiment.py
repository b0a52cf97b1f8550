"""Evaluate an original/reproduced run pairing with the measures its PRIMAD type allows."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from . import measures as rm
from .errors import EvaluationError, MissingRun
from .evaluation import check_measure, evaluate_run
from .metadata import MetadataRecord, read_metadata
from .primad import Measure, PrimadDiff, applicable_measures, diff
from .run_model import canonical_sort, read_qrels, read_run, topic_key

SECTIONS = ("baseline", "advanced")

LABELS = {
    Measure.KTU: "Kendall's tau Union",
    Measure.RBO: "Rank-Biased Overlap",
    Measure.RMSE: "Root Mean Square Error",
    Measure.P_VALUE: "p-value",
    Measure.ER: "Effect Ratio",
    Measure.DRI: "Delta Relative Improvement",
}
_EFFECTIVENESS_LABELS = {"map": "Average Precision", "ndcg": "nDCG"}


def effectiveness_label(measure: str) -> str:
    return _EFFECTIVENESS_LABELS.get(measure, measure)


@dataclass
class ExperimentSpec:
    qrels_orig: Path | str
    orig_baseline: Path | str | None = None
    orig_advanced: Path | str | None = None
    rep_baseline: Path | str | None = None
    rep_advanced: Path | str | None = None
    qrels_rep: Path | str | None = None
    signature: str | None = None
    config: rm.MeasureConfig = field(default_factory=rm.MeasureConfig)


@dataclass
class SectionResult:
    original: float
    reproduced: float
    values: dict[Measure, float | None] = field(default_factory=dict)
    per_topic: dict[str, dict] = field(default_factory=dict)


@dataclass
class ReproReport:
    signature: str
    measure: str
    measures: tuple[Measure, ...]
    sections: dict[str, SectionResult]
    overall: dict[Measure, float | None]
    diff: PrimadDiff
    original_metadata: MetadataRecord | None = None
    reproduced_metadata: MetadataRecord | None = None
    warnings: list[str] = field(default_factory=list)

    @property
    def unavailable(self) -> tuple[Measure, ...]:
        return tuple(m for m in Measure if m not in self.measures)

    def value(self, section: str, m: Measure):
        if section == "overall":
            return self.overall[m]
        sec = self.sections[section]
        if m is Measure.EFFECTIVENESS:
            return sec.reproduced
        return sec.values[m]

    def _values(self, fmt) -> dict:
        out: dict = {}
        for name, sec in self.sections.items():
            block = {"effectiveness": {"original": fmt(sec.original), "reproduced": fmt(sec.reproduced)}}
            for m, v in sec.values.items():
                block[m.value] = fmt(v)
            out[name] = block
        if self.overall:
            out["overall"] = {m.value: fmt(v) for m, v in self.overall.items()}
        return out

    def to_dict(self) -> dict:
        return {
            "signature": self.signature,
            "measure": self.measure,
            "measures": [m.value for m in self.measures],
            "unavailable": [m.value for m in self.unavailable],
            **self._values(_round4),
            "raw": self._values(lambda v: v),
            "per_topic": {name: sec.per_topic for name, sec in self.sections.items()},
            "provenance": {
                "original_metadata": self.original_metadata.to_mapping() if self.original_metadata else None,
                "reproduced_metadata": self.reproduced_metadata.to_mapping() if self.reproduced_metadata else None,
                "diff": self.diff.to_dict(),
            },
            "warnings": list(self.warnings),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False, default=str) + "\n"

    def format_table(self) -> str:
        width = 30
        lines = [
            f"PRIMAD experiment: {self.signature}   measure: {self.measure}",
            f"{'':<{width}}{'Original':>12}{'Reproduced':>12}",
        ]
        for name, sec in self.sections.items():
            lines.append(name.capitalize())
            lines.append(
                f"  {effectiveness_label(self.measure):<{width - 2}}{_fmt(sec.original):>12}{_fmt(sec.reproduced):>12}"
            )
            for m, v in sec.values.items():
                lines.append(f"  {LABELS[m]:<{width - 2}}{'':>12}{_fmt(v):>12}")
        if self.overall:
            lines.append("Overall effects")
            for m, v in self.overall.items():
                lines.append(f"  {LABELS[m]:<{width - 2}}{'':>12}{_fmt(v):>12}")
        if self.unavailable:
            lines.append("unavailable: " + ", ".join(m.value for m in self.unavailable))
        lines += [f"warning: {w}" for w in self.warnings]
        return "\n".join(lines) + "\n"


def _round4(v):
    return None if v is None else round(v, 4)


def _fmt(v) -> str:
    return "n/a" if v is None else f"{v:.4f}"


def _sorted_map(scores: dict[str, float]) -> dict[str, float]:
    return {t: scores[t] for t in sorted(scores, key=topic_key)}


def _first_metadata(*paths) -> MetadataRecord | None:
    for p in paths:
        if p is not None:
            record = read_metadata(p)
            if record is not None:
                return record
    return None


def _distinct_qrels(spec: ExperimentSpec) -> bool:
    if spec.qrels_rep is None:
        return False
    return Path(spec.qrels_rep).read_bytes() != Path(spec.qrels_orig).read_bytes()


def _resolve_diff(spec: ExperimentSpec, orig_meta, rep_meta, warnings: list[str]) -> PrimadDiff:
    if orig_meta is not None and rep_meta is not None:
        computed = diff(orig_meta, rep_meta)
        if spec.signature is not None and spec.signature != computed.signature:
            paths = [p for c in computed.changed_components() for p in computed.detail[c]]
            warnings.append(
                f"supplied signature {spec.signature} disagrees with metadata signature "
                f"{computed.signature} (differing: {', '.join(paths) or 'none'})"
            )
        return computed
    if spec.signature is not None:
        warnings.append("run metadata incomplete; using the supplied signature")
        return PrimadDiff.from_signature(spec.signature)
    sig = "primaD" if _distinct_qrels(spec) else "primad"
    warnings.append(f"no run metadata and no signature given; assuming {sig} from the qrels")
    return PrimadDiff.from_signature(sig)


def _guarded(fn, label: str, warnings: list[str]):
    try:
        return fn()
    except EvaluationError as exc:
        warnings.append(f"{label}: {exc}")
        return None


def run_experiment(spec: ExperimentSpec) -> ReproReport:
    cfg = spec.config
    measure = check_measure(cfg.measure)
    present = []
    for sec in SECTIONS:
        orig, rep = getattr(spec, f"orig_{sec}"), getattr(spec, f"rep_{sec}")
        if orig is not None and rep is not None:
            present.append(sec)
        elif orig is not None or rep is not None:
            missing = "reproduced" if orig is not None else "original"
            raise MissingRun(f"{missing} {sec}", f"the {sec} comparison")
    if not present:
        raise MissingRun("original and reproduced baseline", "any comparison")
    has_pair = len(present) == 2

    warnings: list[str] = []
    orig_meta = _first_metadata(spec.orig_baseline, spec.orig_advanced)
    rep_meta = _first_metadata(spec.rep_baseline, spec.rep_advanced)
    d = _resolve_diff(spec, orig_meta, rep_meta, warnings)
    allowed = applicable_measures(d, has_pair)
    if not d.changed["D"] and _distinct_qrels(spec):
        warnings.append("Data is unchanged but the reproduction qrels differ from the original qrels")

    qrels_orig = read_qrels(spec.qrels_orig)
    qrels_rep = read_qrels(spec.qrels_rep) if spec.qrels_rep is not None else qrels_orig

    runs, scores = {}, {}
    for sec in present:
        for side, qrels in (("orig", qrels_orig), ("rep", qrels_rep)):
            key = f"{side}_{sec}"
            runs[key] = canonical_sort(read_run(getattr(spec, key)))
            scores[key] = evaluate_run(runs[key], qrels, [measure], cfg.depth).scores[measure]

    sections: dict[str, SectionResult] = {}
    for sec in present:
        o_run, r_run = runs[f"orig_{sec}"], runs[f"rep_{sec}"]
        o_sc, r_sc = scores[f"orig_{sec}"], scores[f"rep_{sec}"]
        result = SectionResult(rm.mean(o_sc.values()), rm.mean(r_sc.values()))
        result.per_topic["effectiveness"] = {"original": _sorted_map(o_sc), "reproduced": _sorted_map(r_sc)}
        series = rm.PairedTopicSeries.from_scores(o_sc, r_sc)
        if Measure.KTU in allowed:
            ktu = _guarded(lambda: rm.ktu_by_topic(o_run, r_run, cfg.ktu_depth), f"{sec} KTU", warnings)
            result.values[Measure.KTU] = rm.mean(ktu.values()) if ktu else None
            result.per_topic["KTU"] = ktu or {}
        if Measure.RBO in allowed:
            rbo = _guarded(lambda: rm.rbo_by_topic(o_run, r_run, cfg.rbo_p), f"{sec} RBO", warnings)
            result.values[Measure.RBO] = rm.mean(rbo.values()) if rbo else None
            result.per_topic["RBO"] = rbo or {}
        if Measure.RMSE in allowed:
            result.values[Measure.RMSE] = _guarded(lambda: rm.rmse(series), f"{sec} RMSE", warnings)
        if Measure.P_VALUE in allowed:
            result.values[Measure.P_VALUE] = _guarded(
                lambda: rm.paired_p_value(series, cfg.ttest_two_sided), f"{sec} p-value", warnings
            )
        sections[sec] = result

    overall: dict[Measure, float | None] = {}
    if has_pair:
        args = (scores["orig_baseline"], scores["orig_advanced"], scores["rep_baseline"], scores["rep_advanced"])
        overall[Measure.ER] = _guarded(lambda: rm.effect_ratio(*args), "ER", warnings)
        overall[Measure.DRI] = _guarded(lambda: rm.delta_relative_improvement(*args), "DRI", warnings)

    return ReproReport(
        signature=d.signature,
        measure=measure,
        measures=allowed,
        sections=sections,
        overall=overall,
        diff=d,
        original_metadata=orig_meta,
        reproduced_metadata=rep_meta,
        warnings=warnings,
    )
