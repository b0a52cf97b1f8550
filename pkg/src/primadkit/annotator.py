"""Semi-automatic annotation of run files.

Platform facts are read from the host, Implementation facts from the git
checkout enclosing the run, and both are merged under a hand-written
template: whatever a human wrote wins over what a probe found.

Environment overrides:
  PRIMADKIT_NO_GIT=1    read .git directly instead of running the git executable
  PRIMADKIT_NO_PROBE=1  skip all probing
"""

from __future__ import annotations

import logging
import os
import platform as _platform
import re
import shlex
import shutil
import struct
import subprocess
import tempfile
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from .errors import OverwriteRefused, PrimadWarning
from .metadata import (
    Cpu,
    Hardware,
    Implementation,
    MetadataRecord,
    OperatingSystem,
    Platform,
    Source,
    ValidationReport,
    parse_metadata,
    serialize_metadata,
    validate,
)
from .run_model import format_header, header_text_of, parse_run, split_header

log = logging.getLogger(__name__)

PLATFORM_PROBED_PATHS = (
    "platform.hardware.cpu.model",
    "platform.hardware.cpu.architecture",
    "platform.hardware.cpu.operation_mode",
    "platform.hardware.cpu.number_of_cores",
    "platform.hardware.ram",
    "platform.operating_system.kernel",
    "platform.operating_system.distribution",
)

_SOFTWARE_NOTE = "platform.software: never probed; list libraries in the template"


@dataclass
class ProbeResult:
    platform: Platform | None = None
    implementation: Implementation | None = None
    warnings: list[str] = field(default_factory=list)
    full_commit: str | None = None

    def as_record(self) -> MetadataRecord:
        return MetadataRecord(platform=self.platform, implementation=self.implementation)

    def __add__(self, other: ProbeResult) -> ProbeResult:
        return ProbeResult(
            platform=other.platform or self.platform,
            implementation=other.implementation or self.implementation,
            warnings=self.warnings + other.warnings,
            full_commit=other.full_commit or self.full_commit,
        )


def _env_flag(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() in ("1", "true", "yes")


# --------------------------------------------------------------------------- platform

def _read(path: Path) -> str | None:
    try:
        return path.read_text(encoding="utf-8", errors="replace")
    except OSError:
        return None


def _cpu_model(cpuinfo: str | None) -> str | None:
    if not cpuinfo:
        return None
    for key in ("model name", "Model", "Hardware", "cpu model", "Processor"):
        m = re.search(rf"^{key}\s*:\s*(.+?)\s*$", cpuinfo, re.MULTILINE)
        if m:
            return re.sub(r"\s+", " ", m.group(1))
    return None


def _effective_cores() -> int | None:
    try:
        return len(os.sched_getaffinity(0))
    except (AttributeError, OSError):
        return os.cpu_count()


def _ram_bytes(root: Path) -> int | None:
    mem_dir = root / "sys/devices/system/memory"
    block = _read(mem_dir / "block_size_bytes")
    if block:
        online = 0
        for entry in mem_dir.glob("memory[0-9]*"):
            if (_read(entry / "online") or "").strip() == "1":
                online += 1
        if online:
            return online * int(block.strip(), 16)
    meminfo = _read(root / "proc/meminfo")
    if meminfo:
        m = re.search(r"^MemTotal:\s*(\d+)\s*kB", meminfo, re.MULTILINE)
        if m:
            return int(m.group(1)) * 1024
    return None


def _os_release(root: Path) -> str | None:
    for rel in ("etc/os-release", "usr/lib/os-release"):
        text = _read(root / rel)
        if not text:
            continue
        for line in text.splitlines():
            if line.startswith("PRETTY_NAME="):
                value = shlex.split(line.partition("=")[2])
                return value[0] if value else None
    return None


def probe_platform(root="/", system: str | None = None) -> ProbeResult:
    """Best-effort description of the host; never raises.

    ``root`` relocates the /proc, /sys and /etc lookups (for chroots and tests).
    """
    system = system or _platform.system()
    if system != "Linux":
        return ProbeResult(
            platform=Platform(),
            warnings=[f"{p}: not probed on {system or 'this OS'}" for p in PLATFORM_PROBED_PATHS] + [_SOFTWARE_NOTE],
        )
    root = Path(root)
    found = {
        "platform.hardware.cpu.model": _cpu_model(_read(root / "proc/cpuinfo")),
        "platform.hardware.cpu.architecture": _platform.machine() or None,
        "platform.hardware.cpu.operation_mode": f"{struct.calcsize('P') * 8}-bit",
        "platform.hardware.cpu.number_of_cores": _effective_cores(),
        "platform.hardware.ram": None,
        "platform.operating_system.kernel": (_read(root / "proc/sys/kernel/osrelease") or "").strip() or None,
        "platform.operating_system.distribution": _os_release(root),
    }
    ram = _ram_bytes(root)
    if ram:
        found["platform.hardware.ram"] = f"{round(ram / 2**30)} GB"
    if found["platform.operating_system.kernel"] is None and Path(root) == Path("/"):
        found["platform.operating_system.kernel"] = _platform.release() or None

    cpu = Cpu(
        model=found["platform.hardware.cpu.model"],
        architecture=found["platform.hardware.cpu.architecture"],
        operation_mode=found["platform.hardware.cpu.operation_mode"],
        number_of_cores=found["platform.hardware.cpu.number_of_cores"],
    )
    hardware = Hardware(cpu=None if cpu.is_empty() else cpu, ram=found["platform.hardware.ram"])
    osys = OperatingSystem(
        kernel=found["platform.operating_system.kernel"],
        distribution=found["platform.operating_system.distribution"],
    )
    plat = Platform(
        hardware=None if hardware.is_empty() else hardware,
        operating_system=None if osys.is_empty() else osys,
    )
    missing = [f"{p}: could not be determined" for p, v in found.items() if v is None]
    return ProbeResult(platform=plat, warnings=missing + [_SOFTWARE_NOTE])


# --------------------------------------------------------------------------- implementation

def find_repository_root(path) -> Path | None:
    path = Path(path).resolve()
    if path.is_file():
        path = path.parent
    for candidate in (path, *path.parents):
        if (candidate / ".git").exists():
            return candidate
    return None


def normalize_remote_url(url: str) -> str:
    """'git@github.com:org/repo.git' and 'https://github.com/org/repo' both give 'github.com/org/repo'."""
    url = url.strip()
    if url.startswith("file://") or url.startswith("/") or url.startswith("."):
        return url
    m = re.match(r"^[a-zA-Z][a-zA-Z0-9+.-]*://(?:[^@/]*@)?(.*)$", url)
    if m:
        url = m.group(1)
    else:
        m = re.match(r"^(?:[^@/]+@)?([^:/]+):(?!//)(.*)$", url)
        if m:
            url = f"{m.group(1)}/{m.group(2)}"
    url = url.rstrip("/")
    if url.endswith(".git"):
        url = url[:-4]
    return url


def _git_dirs(root: Path) -> tuple[Path, Path]:
    """(per-worktree git dir, common git dir)."""
    dot_git = root / ".git"
    if dot_git.is_file():
        ref = dot_git.read_text(encoding="utf-8").strip()
        git_dir = Path(ref.partition("gitdir:")[2].strip())
        if not git_dir.is_absolute():
            git_dir = (root / git_dir).resolve()
    else:
        git_dir = dot_git
    common = git_dir
    commondir = _read(git_dir / "commondir")
    if commondir:
        common = Path(commondir.strip())
        if not common.is_absolute():
            common = (git_dir / common).resolve()
    return git_dir, common


def _resolve_ref(git_dir: Path, common: Path, ref: str, depth: int = 0) -> str | None:
    if depth > 10:
        return None
    for base in (git_dir, common):
        text = _read(base / ref)
        if text is not None:
            text = text.strip()
            if text.startswith("ref:"):
                return _resolve_ref(git_dir, common, text[4:].strip(), depth + 1)
            return text or None
    packed = _read(common / "packed-refs") or ""
    for line in packed.splitlines():
        if line and line[0] not in "#^":
            sha, _, name = line.partition(" ")
            if name.strip() == ref:
                return sha
    return None


def _read_git_files(root: Path) -> tuple[str | None, str | None]:
    git_dir, common = _git_dirs(root)
    head = _read(git_dir / "HEAD")
    commit = None
    if head:
        head = head.strip()
        commit = _resolve_ref(git_dir, common, head[4:].strip()) if head.startswith("ref:") else head
    urls: dict[str, str] = {}
    section = None
    for line in (_read(common / "config") or "").splitlines():
        line = line.strip()
        if line.startswith("["):
            m = re.match(r'^\[\s*remote\s+"(.*)"\s*\]', line)
            section = m.group(1) if m else None
        elif section is not None and section not in urls:
            m = re.match(r"^url\s*=\s*(.*?)\s*$", line)
            if m:
                urls[section] = m.group(1).strip('"')
    remote = urls[min(urls)] if urls else None
    return commit, remote


def _run_git(root: Path, *args: str) -> str | None:
    try:
        proc = subprocess.run(
            ["git", "-C", str(root), *args],
            capture_output=True,
            text=True,
            timeout=10,
            env={**os.environ, "GIT_OPTIONAL_LOCKS": "0"},
        )
    except (OSError, subprocess.SubprocessError):
        return None
    return proc.stdout.strip() if proc.returncode == 0 else None


def _query_git(root: Path) -> tuple[str | None, str | None]:
    commit = _run_git(root, "rev-parse", "--verify", "-q", "HEAD")
    names = (_run_git(root, "remote") or "").split()
    remote = _run_git(root, "remote", "get-url", names[0]) if names else None
    return commit or None, remote or None


def probe_implementation(repo_path, use_git: bool | None = None) -> ProbeResult:
    """Repository URL (first remote) and HEAD commit of the checkout enclosing ``repo_path``.

    The serialized commit is abbreviated to 7 characters; ``full_commit``
    keeps the whole hash.
    """
    root = find_repository_root(repo_path)
    if root is None:
        return ProbeResult(warnings=["implementation.source: not a git repository"])
    if use_git is None:
        use_git = not _env_flag("PRIMADKIT_NO_GIT") and shutil.which("git") is not None
    commit, remote = _query_git(root) if use_git else _read_git_files(root)
    warnings_ = []
    if commit is None:
        warnings_.append("implementation.source.commit: could not be determined")
    if remote is None:
        warnings_.append("implementation.source.repository: repository has no remote")
    source = Source(
        repository=normalize_remote_url(remote) if remote else None,
        commit=commit[:7] if commit else None,
    )
    impl = Implementation(source=None if source.is_empty() else source)
    return ProbeResult(implementation=impl, warnings=warnings_, full_commit=commit)


def probe(repo_path) -> ProbeResult:
    if _env_flag("PRIMADKIT_NO_PROBE"):
        return ProbeResult(warnings=["probing disabled by PRIMADKIT_NO_PROBE"])
    return probe_platform() + probe_implementation(repo_path)


# --------------------------------------------------------------------------- merging

def _deep_merge(over: dict, under: dict, path: str, notes: list[str], labels: tuple[str, str]) -> dict:
    out = dict(under)
    for key, value in over.items():
        sub = f"{path}.{key}".lstrip(".").replace(" ", "_") if isinstance(key, str) else f"{path}.{key}"
        if key in under and isinstance(value, dict) and isinstance(under[key], dict):
            out[key] = _deep_merge(value, under[key], sub, notes, labels)
            continue
        if key in under and under[key] != value:
            notes.append(f"{sub}: {labels[0]} value {value!r} overrides {labels[1]} value {under[key]!r}")
        out[key] = value
    return out


def merge(
    template: MetadataRecord,
    probed: ProbeResult | MetadataRecord,
    labels: tuple[str, str] = ("template", "probed"),
) -> tuple[MetadataRecord, list[str]]:
    """Field-wise union of two records; on conflict the template wins.

    Returns the merged record and one note per overridden value.
    """
    under = probed.as_record() if isinstance(probed, ProbeResult) else probed
    notes: list[str] = []
    merged = _deep_merge(
        template.to_mapping(include_version=False), under.to_mapping(include_version=False), "", notes, labels
    )
    record = MetadataRecord.from_mapping(merged)
    record.schema_version = template.schema_version
    return record, notes


# --------------------------------------------------------------------------- writing

def annotate_run(
    run_path,
    template_path=None,
    output_path=None,
    force: bool = False,
    probed: ProbeResult | None = None,
    repo_path=None,
) -> ValidationReport:
    """Write ``run_path`` with a merged metadata header to ``output_path``.

    An existing header is kept underneath the new template.  The run body is
    copied byte for byte.  Writing over ``run_path`` itself needs ``force``.
    """
    run_path = Path(run_path)
    output_path = Path(output_path) if output_path is not None else run_path
    if not force and output_path.exists() and output_path.resolve() == run_path.resolve():
        raise OverwriteRefused(run_path)

    text = run_path.read_bytes().decode("utf-8", "surrogateescape")
    header_lines, body = split_header(text)
    parse_run(text)
    header = header_text_of(header_lines)

    if template_path is not None and Path(template_path).is_file():
        template = parse_metadata(Path(template_path).read_text(encoding="utf-8"))
    else:
        if template_path is not None:
            warnings.warn(f"template {template_path} not found; using probes only", PrimadWarning, stacklevel=2)
        template = MetadataRecord()

    if header is not None:
        template, notes = merge(template, parse_metadata(header), labels=("template", "existing header"))
        for note in notes:
            log.info(note)
    if probed is None:
        probed = probe(repo_path if repo_path is not None else run_path.parent)
    for note in probed.warnings:
        log.info("probe: %s", note)
    record, notes = merge(template, probed)
    for note in notes:
        log.warning(note)

    yaml_text = serialize_metadata(record).rstrip("\n")
    head = format_header(yaml_text) if yaml_text else ""
    data = head.encode("utf-8") + body.encode("utf-8", "surrogateescape")
    output_path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=output_path.parent, prefix=f".{output_path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.chmod(tmp, run_path.stat().st_mode & 0o777)
        os.replace(tmp, output_path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return validate(record)
