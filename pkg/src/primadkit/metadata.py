"""PRIMAD metadata records: typed components, YAML (de)serialization, validation.

YAML keys follow the published layout exactly, so multi-word keys are spelled
with spaces (``operating system``, ``score ties``) except ``test_collection``,
``training_data`` and ``ir_datasets``.  Keys the schema does not know are kept
in an ``extra`` mapping on the enclosing node (``extensions`` at the root) and
written back unchanged.
"""

from __future__ import annotations

import dataclasses as dc
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .errors import MetadataConflict, YamlSyntax
from .run_model import header_text_of

SCHEMA_VERSION = "0.1"
ACTOR_ROLES = ("experimenter", "reproducer")
COMPONENTS = ("platform", "research_goal", "implementation", "method", "actor", "data")
SIDECAR_SUFFIXES = (".yaml", ".yml")

_UNDERSCORE_KEYS = {"test_collection", "training_data", "ir_datasets", "schema_version"}


def yaml_key(attr: str) -> str:
    return attr if attr in _UNDERSCORE_KEYS else attr.replace("_", " ")


# --------------------------------------------------------------------------- YAML dialect

class _Loader(yaml.SafeLoader):
    """SafeLoader restricted to YAML 1.2 core-schema booleans and no timestamps."""


_BOOL_TAG = "tag:yaml.org,2002:bool"
_TIMESTAMP_TAG = "tag:yaml.org,2002:timestamp"
_Loader.yaml_implicit_resolvers = {
    first: [(tag, rx) for tag, rx in resolvers if tag not in (_BOOL_TAG, _TIMESTAMP_TAG)]
    for first, resolvers in yaml.SafeLoader.yaml_implicit_resolvers.items()
}
_Loader.add_implicit_resolver(
    _BOOL_TAG, re.compile(r"^(?:true|True|TRUE|false|False|FALSE)$"), list("tTfF")
)


class _Dumper(yaml.SafeDumper):
    def ignore_aliases(self, data):
        return True

    def increase_indent(self, flow=False, indentless=False):
        return super().increase_indent(flow, False)


_UNICODE_BREAKS = ("\x85", "\u2028", "\u2029")


def _represent_str(dumper, value: str):
    # PyYAML folds these breaks inside single-quoted scalars; escape them instead
    if any(ch in value for ch in _UNICODE_BREAKS):
        return dumper.represent_scalar("tag:yaml.org,2002:str", value, style='"')
    return dumper.represent_str(value)


_Dumper.add_representer(str, _represent_str)


def load_yaml(text: str) -> dict:
    """Load one YAML mapping; anchors, aliases and multiple documents are rejected."""
    try:
        for token in yaml.scan(text, Loader=_Loader):
            if isinstance(token, (yaml.AnchorToken, yaml.AliasToken)):
                raise YamlSyntax(token.start_mark.line + 1, "anchors and aliases are not supported")
        docs = list(yaml.load_all(text, Loader=_Loader))
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        raise YamlSyntax(mark.line + 1 if mark else None, exc.problem or str(exc)) from None
    except yaml.YAMLError as exc:
        raise YamlSyntax(None, str(exc)) from None
    if len(docs) > 1:
        raise YamlSyntax(None, "expected a single YAML document")
    data = docs[0] if docs else None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise YamlSyntax(1, "document root must be a mapping")
    return data


def dump_yaml(data: dict) -> str:
    return yaml.dump(
        data, Dumper=_Dumper, sort_keys=False, allow_unicode=True, default_flow_style=False, width=1000
    )


# --------------------------------------------------------------------------- field kinds

@dataclass(frozen=True)
class Malformed:
    path: str
    reason: str


def _is_scalar(value) -> bool:
    return isinstance(value, (str, int, float, bool))


def _field(kind, cls=None):
    return field(default=None, metadata={"kind": kind, "cls": cls})


def _text():
    return _field("text")


def _count():
    return _field("count")


def _flag():
    return _field("bool")


def _real():
    return _field("real")


def _texts():
    return _field("texts")


def _text_lists():
    return _field("text_lists")


def _node(cls):
    return _field("node", cls)


def _nodes(cls):
    return _field("nodes", cls)


def _convert(kind: str, cls, value, path: str, issues: list[Malformed]):
    """Return (ok, converted).  On failure an issue is recorded."""
    if kind == "text":
        if _is_scalar(value):
            return True, value
        issues.append(Malformed(path, "expected a scalar"))
    elif kind == "count":
        if isinstance(value, int) and not isinstance(value, bool):
            return True, value
        issues.append(Malformed(path, "expected an integer"))
    elif kind == "real":
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return True, value
        issues.append(Malformed(path, "expected a number"))
    elif kind == "bool":
        if isinstance(value, bool):
            return True, value
        if isinstance(value, str) and value.strip().lower() in ("true", "false"):
            return True, value.strip().lower() == "true"
        issues.append(Malformed(path, "expected a boolean"))
    elif kind == "texts":
        if isinstance(value, list) and all(_is_scalar(v) for v in value):
            return True, list(value)
        issues.append(Malformed(path, "expected a sequence of scalars"))
    elif kind == "text_lists":
        if isinstance(value, dict) and all(
            isinstance(v, list) and all(_is_scalar(x) for x in v) for v in value.values()
        ):
            return True, {k: list(v) for k, v in value.items()}
        issues.append(Malformed(path, "expected a mapping of sequences"))
    elif kind == "node":
        if isinstance(value, dict):
            return True, cls.from_mapping(value, path, issues)
        issues.append(Malformed(path, "expected a mapping"))
    elif kind == "nodes":
        if isinstance(value, list) and all(isinstance(v, dict) for v in value):
            return True, [cls.from_mapping(v, f"{path}[{i}]", issues) for i, v in enumerate(value)]
        issues.append(Malformed(path, "expected a sequence of mappings"))
    else:  # pragma: no cover
        raise AssertionError(kind)
    return False, None


def _schema_fields(cls):
    return [f for f in dc.fields(cls) if "kind" in f.metadata]


@dataclass(kw_only=True)
class Node:
    """A mapping in the metadata tree with typed known keys and preserved unknown ones."""

    extra: dict = field(default_factory=dict)

    @classmethod
    def from_mapping(cls, data: dict, path: str = "", issues: list[Malformed] | None = None):
        issues = [] if issues is None else issues
        by_key = {yaml_key(f.name): f for f in _schema_fields(cls)}
        kwargs: dict[str, Any] = {}
        extra: dict = {}
        for key, value in data.items():
            f = by_key.get(key) if isinstance(key, str) else None
            if f is None:
                extra[key] = value
                continue
            if value is None:
                continue
            sub = f"{path}.{f.name}" if path else f.name
            ok, converted = _convert(f.metadata["kind"], f.metadata["cls"], value, sub, issues)
            if ok:
                kwargs[f.name] = converted
            else:
                extra[key] = value
        return cls(**kwargs, extra=extra)

    def to_mapping(self) -> dict:
        out: dict = {}
        for f in _schema_fields(type(self)):
            value = getattr(self, f.name)
            if value is None:
                continue
            kind = f.metadata["kind"]
            if kind == "node":
                value = value.to_mapping()
            elif kind == "nodes":
                value = [v.to_mapping() for v in value]
            elif kind == "texts":
                value = list(value)
            elif kind == "text_lists":
                value = {k: list(v) for k, v in value.items()}
            out[yaml_key(f.name)] = value
        out.update(self.extra)
        return out

    def is_empty(self) -> bool:
        return not self.extra and all(getattr(self, f.name) is None for f in _schema_fields(type(self)))


# --------------------------------------------------------------------------- Platform

@dataclass(kw_only=True)
class Cpu(Node):
    model: str | None = _text()
    architecture: str | None = _text()
    operation_mode: str | None = _text()
    number_of_cores: int | None = _count()


@dataclass(kw_only=True)
class Hardware(Node):
    cpu: Cpu | None = _node(Cpu)
    ram: str | None = _text()


@dataclass(kw_only=True)
class OperatingSystem(Node):
    kernel: str | None = _text()
    distribution: str | None = _text()


@dataclass(kw_only=True)
class Software(Node):
    libraries: dict[str, list[str]] | None = _text_lists()
    retrieval_toolkit: list[str] | None = _texts()


@dataclass(kw_only=True)
class Platform(Node):
    hardware: Hardware | None = _node(Hardware)
    operating_system: OperatingSystem | None = _node(OperatingSystem)
    software: Software | None = _node(Software)


# --------------------------------------------------------------------------- Research goal

@dataclass(kw_only=True)
class Venue(Node):
    name: str | None = _text()
    year: str | None = _text()


@dataclass(kw_only=True)
class Publication(Node):
    dblp: str | None = _text()
    arxiv: str | None = _text()
    doi: str | None = _text()
    abstract: str | None = _text()


@dataclass(kw_only=True)
class SignificanceTest(Node):
    name: str | None = _text()
    correction_method: str | None = _text()


@dataclass(kw_only=True)
class Evaluation(Node):
    reported_measures: list[str] | None = _texts()
    baseline: list[str] | None = _texts()
    significance_test: list[SignificanceTest] | None = _nodes(SignificanceTest)


@dataclass(kw_only=True)
class ResearchGoal(Node):
    venue: Venue | None = _node(Venue)
    publication: Publication | None = _node(Publication)
    evaluation: Evaluation | None = _node(Evaluation)


# --------------------------------------------------------------------------- Implementation

@dataclass(kw_only=True)
class Executable(Node):
    cmd: str | None = _text()


@dataclass(kw_only=True)
class Source(Node):
    lang: list[str] | None = _texts()
    repository: str | None = _text()
    commit: str | None = _text()


@dataclass(kw_only=True)
class Implementation(Node):
    executable: Executable | None = _node(Executable)
    source: Source | None = _node(Source)


# --------------------------------------------------------------------------- Method

@dataclass(kw_only=True)
class Indexing(Node):
    tokenizer: str | None = _text()
    stemmer: str | None = _text()
    stopwords: str | None = _text()


@dataclass(kw_only=True)
class RetrievalStage(Node):
    """One ranking stage.  Free-form parameters (``b``, ``k1``, ...) live in ``extra``."""

    name: str | None = _text()
    method: str | None = _text()
    reranks: str | None = _text()
    interpolates: list[str] | None = _texts()
    weight: float | None = _real()

    @property
    def params(self) -> dict:
        return self.extra


@dataclass(kw_only=True)
class Method(Node):
    automatic: bool | None = _flag()
    score_ties: str | None = _text()
    indexing: Indexing | None = _node(Indexing)
    retrieval: list[RetrievalStage] | None = _nodes(RetrievalStage)


# --------------------------------------------------------------------------- Actor

@dataclass(kw_only=True)
class Actor(Node):
    name: str | None = _text()
    orcid: str | None = _text()
    team: str | None = _text()
    fields: list[str] | None = _texts()
    mail: str | None = _text()
    role: str | None = _text()
    degree: str | None = _text()
    github: str | None = _text()
    twitter: str | None = _text()


# --------------------------------------------------------------------------- Data

@dataclass(kw_only=True)
class TestCollection(Node):
    __test__ = False  # not a pytest class

    name: str | None = _text()
    source: str | None = _text()
    qrels: str | None = _text()
    topics: str | None = _text()
    ir_datasets: str | None = _text()


@dataclass(kw_only=True)
class TrainingData(Node):
    name: str | None = _text()
    folds: list[str] | None = _texts()


@dataclass(kw_only=True)
class OtherResource(Node):
    name: str | None = _text()
    source: str | None = _text()


@dataclass(kw_only=True)
class DataComponent(Node):
    test_collection: TestCollection | None = _node(TestCollection)
    training_data: list[TrainingData] | None = _nodes(TrainingData)
    other: list[OtherResource] | None = _nodes(OtherResource)


# --------------------------------------------------------------------------- record

_COMPONENT_TYPES = {
    "platform": Platform,
    "research_goal": ResearchGoal,
    "implementation": Implementation,
    "method": Method,
    "actor": Actor,
    "data": DataComponent,
}


@dataclass
class MetadataRecord:
    platform: Platform | None = None
    research_goal: ResearchGoal | None = None
    implementation: Implementation | None = None
    method: Method | None = None
    actor: Actor | None = None
    data: DataComponent | None = None
    schema_version: str = SCHEMA_VERSION
    extensions: dict = field(default_factory=dict)
    # type mismatches found while parsing; derived from content, so not compared
    issues: list[Malformed] = field(default_factory=list, compare=False, repr=False)

    def component(self, name: str):
        return getattr(self, name)

    def present_components(self) -> list[str]:
        return [c for c in COMPONENTS if getattr(self, c) is not None]

    def is_empty(self) -> bool:
        return not self.present_components() and not self.extensions and self.schema_version == SCHEMA_VERSION

    @classmethod
    def from_mapping(cls, data: dict) -> MetadataRecord:
        issues: list[Malformed] = []
        kwargs: dict[str, Any] = {}
        extensions: dict = {}
        by_key = {yaml_key(c): c for c in COMPONENTS}
        for key, value in data.items():
            name = by_key.get(key) if isinstance(key, str) else None
            if key == "schema_version" and _is_scalar(value):
                kwargs["schema_version"] = str(value)
            elif name is None:
                extensions[key] = value
            elif value is None:
                continue
            elif isinstance(value, dict):
                kwargs[name] = _COMPONENT_TYPES[name].from_mapping(value, name, issues)
            else:
                issues.append(Malformed(name, "expected a mapping"))
                extensions[key] = value
        return cls(**kwargs, extensions=extensions, issues=issues)

    def to_mapping(self, include_version: bool = True) -> dict:
        out: dict = {}
        for name in COMPONENTS:
            comp = getattr(self, name)
            if comp is not None:
                out[yaml_key(name)] = comp.to_mapping()
        out.update(self.extensions)
        if include_version:
            out["schema_version"] = self.schema_version
        return out


def parse_metadata(yaml_text: str) -> MetadataRecord:
    return MetadataRecord.from_mapping(load_yaml(yaml_text))


def serialize_metadata(record: MetadataRecord) -> str:
    """Components in fixed PRIMAD order, then extensions, then the schema version.

    An empty record serializes to the empty string.
    """
    if record.is_empty():
        return ""
    return dump_yaml(record.to_mapping())


# --------------------------------------------------------------------------- validation

@dataclass(frozen=True)
class ValidationReport:
    missing: tuple[str, ...] = ()
    malformed: tuple[Malformed, ...] = ()

    @property
    def level(self) -> str:
        if self.malformed:
            return "invalid"
        if self.missing:
            return "warnings"
        return "valid"

    @property
    def is_valid(self) -> bool:
        return self.level == "valid"

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "missing": list(self.missing),
            "malformed": [{"path": m.path, "reason": m.reason} for m in self.malformed],
        }

    def format(self) -> str:
        lines = [self.level]
        lines += [f"missing: {p}" for p in self.missing]
        lines += [f"malformed: {m.path}: {m.reason}" for m in self.malformed]
        return "\n".join(lines)


# Each entry lists alternatives; any one present satisfies it.
ESSENTIAL_FIELDS: tuple[tuple[str, ...], ...] = (
    ("platform.hardware.cpu.model",),
    ("platform.operating_system.kernel",),
    ("platform.software",),
    ("research_goal.venue.name",),
    ("research_goal.evaluation.reported_measures",),
    ("implementation.executable.cmd", "implementation.source.repository"),
    ("method.retrieval",),
    ("method.score_ties",),
    ("actor.role",),
    ("actor.name", "actor.team"),
    ("data.test_collection.name",),
)


def _blank(value) -> bool:
    if value is None:
        return True
    if isinstance(value, Node):
        return value.is_empty()
    if isinstance(value, str):
        return not value.strip()
    if isinstance(value, (list, dict)):
        return not value
    return False


def _first_missing(record: MetadataRecord, dotted: str) -> str | None:
    """Shallowest absent node on ``dotted`` (never shallower than component.child)."""
    parts = dotted.split(".")
    obj: Any = record
    for depth, part in enumerate(parts):
        obj = getattr(obj, part, None) if obj is not None else None
        if _blank(obj):
            return ".".join(parts[: max(depth + 1, 2)])
    return None


_HEX = re.compile(r"^[0-9a-fA-F]{7,40}$")
_VERSIONED = re.compile(r"^[^=]+==[^=]+$")


def _check_versions(tokens, path: str, out: list[Malformed]):
    for i, tok in enumerate(tokens):
        if isinstance(tok, str) and "=" in tok and not _VERSIONED.match(tok.strip()):
            out.append(Malformed(f"{path}[{i}]", "version token must contain exactly one '=='"))


def _invariant_violations(record: MetadataRecord) -> list[Malformed]:
    out: list[Malformed] = []
    p = record.platform
    if p is not None:
        cpu = p.hardware.cpu if p.hardware else None
        if cpu is not None and isinstance(cpu.number_of_cores, int) and cpu.number_of_cores < 1:
            out.append(Malformed("platform.hardware.cpu.number_of_cores", "must be at least 1"))
        if p.software is not None:
            for eco, toks in (p.software.libraries or {}).items():
                _check_versions(toks, f"platform.software.libraries.{eco}", out)
            _check_versions(p.software.retrieval_toolkit or [], "platform.software.retrieval_toolkit", out)

    rg = record.research_goal
    ev = rg.evaluation if rg is not None else None
    if ev is not None:
        for i, m in enumerate(ev.reported_measures or []):
            if not isinstance(m, str) or not m.strip() or len(m.split()) != 1:
                out.append(Malformed(f"research_goal.evaluation.reported_measures[{i}]", "measure id must be a non-empty token"))
    if record.actor is not None and record.actor.role == "reproducer":
        if ev is None or not ev.baseline:
            out.append(Malformed("research_goal.evaluation.baseline", "a reproducer must name the reproduced baseline run"))

    impl = record.implementation
    if impl is not None and impl.source is not None and impl.source.commit is not None:
        if not _HEX.match(str(impl.source.commit)):
            out.append(Malformed("implementation.source.commit", "commit must be 7-40 hex characters"))

    m = record.method
    if m is not None and m.retrieval:
        seen: set = set()
        for i, stage in enumerate(m.retrieval):
            path = f"method.retrieval[{i}]"
            if _blank(stage.name):
                out.append(Malformed(f"{path}.name", "stage name is required"))
            elif stage.name in seen:
                out.append(Malformed(f"{path}.name", f"duplicate stage name {stage.name!r}"))
            if stage.reranks is not None and stage.reranks not in seen:
                out.append(Malformed(f"{path}.reranks", f"{stage.reranks!r} is not an earlier stage"))
            for j, ref in enumerate(stage.interpolates or []):
                if ref not in seen:
                    out.append(Malformed(f"{path}.interpolates[{j}]", f"{ref!r} is not an earlier stage"))
            if not _blank(stage.name):
                seen.add(stage.name)

    if record.actor is not None and record.actor.role is not None and record.actor.role not in ACTOR_ROLES:
        out.append(Malformed("actor.role", f"enum violation: {record.actor.role!r} not in {list(ACTOR_ROLES)}"))
    return out


def validate(record: MetadataRecord, essential=ESSENTIAL_FIELDS) -> ValidationReport:
    missing = set()
    for alternatives in essential:
        gaps = [_first_missing(record, alt) for alt in alternatives]
        if all(g is not None for g in gaps):
            missing.add("|".join(sorted(set(gaps))))
    malformed = {(m.path, m.reason): m for m in [*record.issues, *_invariant_violations(record)]}
    return ValidationReport(
        missing=tuple(sorted(missing)),
        malformed=tuple(malformed[k] for k in sorted(malformed)),
    )


# --------------------------------------------------------------------------- files

def read_header_text(path) -> str | None:
    """Header block of a run file, reading only the leading ``#`` lines."""
    lines = []
    with open(path, encoding="utf-8", errors="surrogateescape", newline="") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            lines.append(line)
    return header_text_of(lines)


def sidecar_candidates(run_path) -> list[Path]:
    run_path = Path(run_path)
    out = [run_path.with_name(run_path.name + s) for s in SIDECAR_SUFFIXES]
    if run_path.suffix:
        out += [run_path.with_suffix(s) for s in SIDECAR_SUFFIXES]
    return out


def is_metadata_file(path) -> bool:
    return Path(path).suffix.lower() in SIDECAR_SUFFIXES


def read_metadata(path) -> MetadataRecord | None:
    """Metadata of a run (in-file header or sidecar) or of a YAML file; None when absent.

    Raises MetadataConflict when both a header and a sidecar exist and disagree.
    """
    path = Path(path)
    if is_metadata_file(path):
        return parse_metadata(path.read_text(encoding="utf-8"))
    header = read_header_text(path)
    in_file = parse_metadata(header) if header is not None else None
    for sidecar in sidecar_candidates(path):
        if sidecar.is_file():
            side = parse_metadata(sidecar.read_text(encoding="utf-8"))
            if in_file is not None and side != in_file:
                raise MetadataConflict(path, sidecar)
            return side
    return in_file
