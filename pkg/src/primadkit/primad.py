"""Compare metadata records component by component and classify run pairs.

A comparison yields one changed/unchanged flag per PRIMAD component, written
as a six-letter signature where uppercase marks a change: a pure parameter
sweep of the method is ``priMad``.  A primed letter in prime notation is an
uppercase letter here (PRIM'AD is ``priMad``, P'R'I'M'A'D is ``PRIMAd``).
"""

from __future__ import annotations

import enum
import re
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .errors import AnnotationMissing, MetadataConflict, PrimadWarning, YamlSyntax
from .metadata import MetadataRecord, Node, _schema_fields, is_metadata_file, read_metadata

LETTERS = "PRIMAD"
COMPONENT_OF = {
    "P": "platform",
    "R": "research_goal",
    "I": "implementation",
    "M": "method",
    "A": "actor",
    "D": "data",
}
SIGNATURE_RE = re.compile(r"^[Pp][Rr][Ii][Mm][Aa][Dd]$")

# Descriptive fields that cannot affect reproducibility.
DEFAULT_IGNORED = frozenset(
    {
        "research_goal.publication.abstract",
        "actor.mail",
        "actor.github",
        "actor.twitter",
        "actor.degree",
        "actor.fields",
    }
)


class Measure(enum.Enum):
    EFFECTIVENESS = "effectiveness"
    KTU = "KTU"
    RBO = "RBO"
    RMSE = "RMSE"
    P_VALUE = "p-value"
    ER = "ER"
    DRI = "DRI"


PAIRED_MEASURES = (Measure.KTU, Measure.RBO, Measure.RMSE, Measure.P_VALUE)
OVERALL_MEASURES = (Measure.ER, Measure.DRI)


@dataclass(frozen=True)
class PrimadDiff:
    changed: dict[str, bool]
    detail: dict[str, tuple[str, ...]]

    @property
    def signature(self) -> str:
        return signature(self)

    def changed_components(self) -> list[str]:
        return [c for c in LETTERS if self.changed[c]]

    @classmethod
    def from_signature(cls, sig: str) -> PrimadDiff:
        """Diff implied by a signature alone; detail names whole components."""
        if not SIGNATURE_RE.match(sig):
            raise ValueError(f"not a PRIMAD signature: {sig!r}")
        changed = {c: ch.isupper() for c, ch in zip(LETTERS, sig)}
        detail = {c: ((COMPONENT_OF[c],) if changed[c] else ()) for c in LETTERS}
        return cls(changed, detail)

    def to_dict(self) -> dict:
        return {
            "signature": self.signature,
            "changed": {c: self.changed[c] for c in LETTERS},
            "detail": {c: list(self.detail[c]) for c in LETTERS},
        }


def signature(d: PrimadDiff) -> str:
    return "".join(c if d.changed[c] else c.lower() for c in LETTERS)


# --------------------------------------------------------------------------- flattening

_NUMBER = re.compile(r"^[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?$")


def _norm(value):
    if isinstance(value, bool):
        return value
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        s = value.strip()
        if _NUMBER.match(s):
            return float(s)
        if s.lower() in ("true", "false"):
            return s.lower() == "true"
        return s
    return value


def _ignored(path: str, ignored: frozenset[str]) -> bool:
    return any(path == ig or path.startswith(ig + ".") or path.startswith(ig + "[") for ig in ignored)


def _flatten(value, path: str, out: dict, ignored: frozenset[str]) -> None:
    if _ignored(path, ignored):
        return
    if isinstance(value, Node):
        for f in _schema_fields(type(value)):
            sub = getattr(value, f.name)
            if sub is not None:
                _flatten(sub, f"{path}.{f.name}", out, ignored)
        for key, sub in value.extra.items():
            _flatten(sub, f"{path}.{key}", out, ignored)
    elif isinstance(value, dict):
        for key, sub in value.items():
            _flatten(sub, f"{path}.{key}", out, ignored)
    elif isinstance(value, list):
        for i, sub in enumerate(value):
            _flatten(sub, f"{path}[{i}]", out, ignored)
    elif value is not None:
        out[path] = _norm(value)


def _same(path: str, x, y) -> bool:
    if path.endswith(".commit") and isinstance(x, str) and isinstance(y, str):
        # an abbreviated hash matches the full one it abbreviates
        x, y = x.lower(), y.lower()
        return min(len(x), len(y)) >= 7 and (x.startswith(y) or y.startswith(x))
    return x == y


def _compare_flat(a: dict, b: dict) -> tuple[str, ...]:
    return tuple(sorted(p for p in set(a) | set(b) if p not in a or p not in b or not _same(p, a[p], b[p])))


def _actor_detail(a, b) -> tuple[str, ...]:
    """Actors are identified by ORCID when both have one, else by name, else team."""
    if a.orcid is not None and b.orcid is not None:
        keys = ("orcid",)
    elif a.name is not None or b.name is not None:
        keys = ("name",)
    elif a.team is not None or b.team is not None:
        keys = ("team",)
    else:
        keys = ("role",)
    return tuple(f"actor.{k}" for k in keys if _norm(getattr(a, k)) != _norm(getattr(b, k)))


def _data_view(data) -> dict:
    tc = data.test_collection
    return {
        "test_collection": {"name": tc.name, "ir_datasets": tc.ir_datasets} if tc is not None else None,
        "training_data": [{"folds": t.folds} for t in data.training_data or []],
        "other": [{"name": o.name, "source": o.source} for o in data.other or []],
    }


def _component_detail(name: str, a, b, ignored: frozenset[str]) -> tuple[str, ...]:
    if a is None and b is None:
        return ()
    if a is None or b is None:
        return (name,)
    if name == "actor":
        return _actor_detail(a, b)
    fa: dict = {}
    fb: dict = {}
    if name == "data":
        _flatten(_data_view(a), name, fa, ignored)
        _flatten(_data_view(b), name, fb, ignored)
    else:
        _flatten(a, name, fa, ignored)
        _flatten(b, name, fb, ignored)
    return _compare_flat(fa, fb)


def diff(a: MetadataRecord, b: MetadataRecord, ignored: Iterable[str] = DEFAULT_IGNORED) -> PrimadDiff:
    """Which PRIMAD components differ between two records, and where.

    Root-level extensions and the fields in ``ignored`` never count.
    """
    ignored = frozenset(ignored)
    detail = {}
    for letter, name in COMPONENT_OF.items():
        detail[letter] = _component_detail(name, getattr(a, name), getattr(b, name), ignored)
    return PrimadDiff({c: bool(detail[c]) for c in LETTERS}, detail)


# --------------------------------------------------------------------------- directories

def _candidate_files(dir_path: Path, recursive: bool) -> list[Path]:
    it = dir_path.rglob("*") if recursive else dir_path.iterdir()
    return sorted(
        p for p in it
        if p.is_file() and not p.name.startswith(".") and not is_metadata_file(p)
    )


def analyze_directory(
    reference_run_path,
    dir_path,
    recursive: bool = False,
    ignored: Iterable[str] = DEFAULT_IGNORED,
) -> dict[str, list[Path]]:
    """Group the annotated runs in ``dir_path`` by their signature against the reference.

    Unannotated or unreadable files are skipped with a PrimadWarning.
    """
    reference = read_metadata(reference_run_path)
    if reference is None:
        raise AnnotationMissing(reference_run_path)
    groups: dict[str, list[Path]] = {}
    for path in _candidate_files(Path(dir_path), recursive):
        try:
            record = read_metadata(path)
        except (YamlSyntax, MetadataConflict, UnicodeDecodeError) as exc:
            warnings.warn(f"{path}: skipped ({exc})", PrimadWarning, stacklevel=2)
            continue
        if record is None:
            warnings.warn(f"{path}: skipped (no metadata)", PrimadWarning, stacklevel=2)
            continue
        sig = diff(reference, record, ignored).signature
        groups.setdefault(sig, []).append(path)
    return {sig: groups[sig] for sig in sorted(groups)}


# --------------------------------------------------------------------------- gating

def applicable_measures(d: PrimadDiff | str, has_pair: bool) -> tuple[Measure, ...]:
    """Measures that make sense for this kind of experiment, in report order.

    When the Data changed the runs do not share topics or pools, so only the
    effectiveness scores and the overall effects (ER, DRI) remain.
    """
    if isinstance(d, str):
        d = PrimadDiff.from_signature(d)
    out = [Measure.EFFECTIVENESS]
    if not d.changed["D"]:
        out += PAIRED_MEASURES
    if has_pair:
        out += OVERALL_MEASURES
    return tuple(out)
