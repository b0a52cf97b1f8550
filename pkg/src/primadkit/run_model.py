"""TREC run and qrels files.

A run file may start with a block of ``#``-prefixed lines holding YAML
metadata.  The header is the maximal prefix of such lines; each line loses
its first ``#`` and at most one following space.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable

from .errors import DuplicateDocument, DuplicateJudgment, MalformedLine, PrimadWarning


@dataclass(frozen=True, slots=True)
class RunLine:
    topic_id: str
    iteration: str
    doc_id: str
    rank: int
    score: float
    run_tag: str


@dataclass(frozen=True)
class RunFile:
    tag: str
    topics: dict[str, tuple[RunLine, ...]]
    header_text: str | None = None

    @property
    def topic_ids(self) -> list[str]:
        return list(self.topics)

    def ranking(self, topic_id: str) -> list[str]:
        """Document ids of one topic in line order."""
        return [line.doc_id for line in self.topics.get(topic_id, ())]

    def lines(self) -> Iterable[RunLine]:
        for topic_lines in self.topics.values():
            yield from topic_lines

    def __len__(self) -> int:
        return sum(len(v) for v in self.topics.values())


@dataclass(frozen=True)
class Qrels:
    judgments: dict[str, dict[str, int]] = field(default_factory=dict)

    @property
    def topic_ids(self) -> list[str]:
        return list(self.judgments)

    def relevant(self, topic_id: str) -> set[str]:
        return {d for d, g in self.judgments.get(topic_id, {}).items() if g > 0}


class TiePolicy(enum.Enum):
    REVERSE_ALPHABETICAL = "reverse-alphabetical"
    ALPHABETICAL = "alphabetical"
    AS_GIVEN = "as-given"


def split_header(text: str) -> tuple[list[str], str]:
    """Split raw text into header lines (with line endings) and the untouched body."""
    header = []
    pos = 0
    n = len(text)
    while pos < n and text.startswith("#", pos):
        end = text.find("\n", pos)
        end = n if end == -1 else end + 1
        header.append(text[pos:end])
        pos = end
    return header, text[pos:]


def strip_header_line(line: str) -> str:
    line = line.rstrip("\r\n")
    line = line[1:] if line.startswith("#") else line
    return line[1:] if line.startswith(" ") else line


def header_text_of(header_lines: list[str]) -> str | None:
    if not header_lines:
        return None
    return "\n".join(strip_header_line(line) for line in header_lines)


def format_header(header_text: str) -> str:
    out = []
    for line in header_text.split("\n"):
        out.append(f"# {line}\n" if line else "#\n")
    return "".join(out)


def _body_lines(body: str, first_line_no: int):
    for offset, raw in enumerate(body.split("\n")):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield first_line_no + offset, line.split()


def parse_run(text: str) -> RunFile:
    header_lines, body = split_header(text)
    topics: dict[str, list[RunLine]] = {}
    seen: dict[str, set[str]] = {}
    tags: list[str] = []
    for line_no, fields in _body_lines(body, len(header_lines) + 1):
        if len(fields) != 6:
            raise MalformedLine(line_no, f"expected 6 fields, got {len(fields)}")
        topic, iteration, doc, rank_s, score_s, tag = fields
        try:
            rank = int(rank_s)
            score = float(score_s)
        except ValueError:
            raise MalformedLine(line_no, "rank must be an integer and score a real") from None
        if rank < 0:
            raise MalformedLine(line_no, "negative rank")
        if not math.isfinite(score):
            raise MalformedLine(line_no, "score is not finite")
        docs = seen.setdefault(topic, set())
        if doc in docs:
            raise DuplicateDocument(topic, doc)
        docs.add(doc)
        topics.setdefault(topic, []).append(RunLine(topic, iteration, doc, rank, score, tag))
        if not tags or tags[-1] != tag:
            tags.append(tag)
    distinct = set(tags)
    if len(distinct) > 1:
        warnings.warn(f"run mixes several run tags: {sorted(distinct)}", PrimadWarning, stacklevel=2)
    return RunFile(
        tag=tags[0] if tags else "",
        topics={t: tuple(lines) for t, lines in topics.items()},
        header_text=header_text_of(header_lines),
    )


def canonical_sort(run: RunFile, tie_policy: TiePolicy = TiePolicy.REVERSE_ALPHABETICAL) -> RunFile:
    """Order each topic by descending score, break ties per policy, renumber ranks from 0."""
    topics = {}
    for topic, lines in run.topics.items():
        ordered = list(lines)
        if tie_policy is TiePolicy.REVERSE_ALPHABETICAL:
            ordered.sort(key=lambda line: line.doc_id, reverse=True)
        elif tie_policy is TiePolicy.ALPHABETICAL:
            ordered.sort(key=lambda line: line.doc_id)
        ordered.sort(key=lambda line: line.score, reverse=True)
        if all(a is b and a.rank == i for i, (a, b) in enumerate(zip(ordered, lines))):
            topics[topic] = lines
        else:
            topics[topic] = tuple(
                RunLine(x.topic_id, x.iteration, x.doc_id, i, x.score, x.run_tag) for i, x in enumerate(ordered)
            )
    return replace(run, topics=topics)


def serialize_run(run: RunFile, include_header: bool = True) -> str:
    parts = []
    if include_header and run.header_text is not None:
        parts.append(format_header(run.header_text))
    for line in run.lines():
        parts.append(
            f"{line.topic_id} {line.iteration} {line.doc_id} {line.rank} {line.score!r} {line.run_tag}\n"
        )
    return "".join(parts)


def parse_qrels(text: str) -> Qrels:
    judgments: dict[str, dict[str, int]] = {}
    for line_no, fields in _body_lines(text, 1):
        if len(fields) != 4:
            raise MalformedLine(line_no, f"expected 4 fields, got {len(fields)}")
        topic, _iteration, doc, grade_s = fields
        try:
            grade = int(grade_s)
        except ValueError:
            raise MalformedLine(line_no, "relevance grade must be an integer") from None
        docs = judgments.setdefault(topic, {})
        if doc in docs:
            raise DuplicateJudgment(topic, doc)
        docs[doc] = grade
    return Qrels(judgments)


def read_run(path) -> RunFile:
    return parse_run(Path(path).read_text(encoding="utf-8"))


def read_qrels(path) -> Qrels:
    return parse_qrels(Path(path).read_text(encoding="utf-8"))


def topic_key(topic_id: str):
    """Sort key placing numeric topic ids in numeric order before the rest."""
    return (0, int(topic_id), "") if topic_id.isdecimal() else (1, 0, topic_id)
