"""Exception hierarchy shared by all primadkit modules."""

from __future__ import annotations


class PrimadError(Exception):
    """Base class for every error raised by primadkit."""


class ParseError(PrimadError, ValueError):
    """Input text could not be parsed."""


class MalformedLine(ParseError):
    def __init__(self, line_no: int, reason: str = "malformed line"):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"line {line_no}: {reason}")


class DuplicateDocument(ParseError):
    def __init__(self, topic: str, doc: str):
        self.topic = topic
        self.doc = doc
        super().__init__(f"document {doc!r} appears twice in topic {topic!r}")


class DuplicateJudgment(ParseError):
    def __init__(self, topic: str, doc: str):
        self.topic = topic
        self.doc = doc
        super().__init__(f"document {doc!r} judged twice for topic {topic!r}")


class YamlSyntax(ParseError):
    def __init__(self, line: int | None, reason: str):
        self.line = line
        self.reason = reason
        where = f"line {line}" if line is not None else "document"
        super().__init__(f"YAML syntax error at {where}: {reason}")


class AnnotationMissing(PrimadError):
    def __init__(self, path):
        self.path = path
        super().__init__(f"{path}: no metadata header or sidecar file found")


class MetadataConflict(PrimadError):
    """In-file header and sidecar YAML both exist and disagree."""

    def __init__(self, path, sidecar):
        self.path = path
        self.sidecar = sidecar
        super().__init__(f"{path}: in-file metadata header disagrees with sidecar {sidecar}")


class OverwriteRefused(PrimadError):
    def __init__(self, path):
        self.path = path
        super().__init__(f"refusing to overwrite {path} in place (use force)")


class EvaluationError(PrimadError, ValueError):
    """Base class for errors raised while scoring runs."""


class NoRelevant(EvaluationError):
    def __init__(self, topic: str | None = None):
        self.topic = topic
        super().__init__(f"topic {topic!r} has no relevant documents")


class NoOverlap(EvaluationError):
    def __init__(self):
        super().__init__("run and qrels share no evaluable topic")


class EmptyRanking(EvaluationError):
    def __init__(self, topic: str | None = None):
        self.topic = topic
        super().__init__(f"empty ranking for topic {topic!r}")


class NoCommonTopics(EvaluationError):
    def __init__(self):
        super().__init__("the two runs share no topic")


class TooFewTopics(EvaluationError):
    def __init__(self, n: int):
        self.n = n
        super().__init__(f"paired test needs at least 2 common topics, got {n}")


class ZeroOriginalEffect(EvaluationError):
    def __init__(self):
        super().__init__("original advanced and baseline runs have equal mean scores")


class ZeroBaselineMean(EvaluationError):
    def __init__(self, which: str):
        self.which = which
        super().__init__(f"{which} baseline has a zero mean score")


class MissingRun(PrimadError):
    def __init__(self, role: str, needed_for: str):
        self.role = role
        self.needed_for = needed_for
        super().__init__(f"{role} run is required for {needed_for}")


class PrimadWarning(UserWarning):
    """Non-fatal data problems (mixed run tags, unannotated runs, ...)."""
