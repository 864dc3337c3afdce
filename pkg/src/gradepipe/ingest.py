"""Collection of student submissions from a drop-box directory.

Submissions arrive as zip archives named ``FirstName_LastName_AssignmentNumber.zip``.
This module owns everything that happens before a compiler runs: validating
the filename grammar, noticing new archives without racing half-written
uploads, unpacking them into per-submission workspaces under hard resource
limits, and moving anything suspicious into a quarantine directory with a
machine-readable reason.
"""

from __future__ import annotations

import shutil
import zipfile
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Mapping

ARCHIVE_SUFFIX = ".zip"

# Filename grammar violations, one code per distinct failure mode.
REASON_MISSING_EXTENSION = "missing-extension"
REASON_WRONG_FIELD_COUNT = "wrong-field-count"
REASON_EMPTY_FIELD = "empty-field"
REASON_NON_NUMERIC_ASSIGNMENT = "non-numeric-assignment"
REASON_INVALID_CHARACTER = "invalid-character"

# Archive-content quarantine reasons.
REASON_CORRUPT_ARCHIVE = "corrupt-archive"
REASON_PATH_TRAVERSAL = "path-traversal"
REASON_NO_SOURCE_FILES = "no-source-files"
REASON_LIMIT_TOTAL_BYTES = "limit-exceeded:max-total-bytes"
REASON_LIMIT_ENTRY_COUNT = "limit-exceeded:max-entry-count"
REASON_LIMIT_PATH_DEPTH = "limit-exceeded:max-path-depth"

_NAME_EXTRA_CHARS = "-'"
_ASCII_DIGITS = frozenset("0123456789")


class MalformedName(ValueError):
    """Raised when an archive filename does not follow First_Last_N.zip.

    The ``reason`` attribute carries one of the ``REASON_*`` filename codes so
    callers can quarantine with a stable, machine-readable cause.
    """

    def __init__(self, reason: str, message: str):
        super().__init__(message)
        self.reason = reason


class InboxUnreadable(OSError):
    """Raised when the inbox directory cannot be listed at all."""


def _valid_name_field(value: str) -> bool:
    if not value:
        return False
    return all(ch.isalpha() or ch in _NAME_EXTRA_CHARS for ch in value)


@dataclass(frozen=True)
class SubmissionIdentity:
    """Who submitted what: the parsed form of a submission filename."""

    first_name: str
    last_name: str
    assignment_number: int

    def __post_init__(self) -> None:
        for label, value in (("first name", self.first_name), ("last name", self.last_name)):
            if not _valid_name_field(value):
                raise ValueError(f"invalid {label}: {value!r}")
        if not isinstance(self.assignment_number, int) or self.assignment_number < 0:
            raise ValueError(f"assignment number must be a non-negative int, got {self.assignment_number!r}")

    def stem(self) -> str:
        """Canonical filename without the .zip suffix, e.g. ``Ada_Lovelace_3``."""
        return f"{self.first_name}_{self.last_name}_{self.assignment_number}"

    def display_name(self) -> str:
        return f"{self.first_name} {self.last_name}"


def parse_submission_filename(filename: str) -> SubmissionIdentity:
    """Parse ``First_Last_N.zip`` into a :class:`SubmissionIdentity`.

    Raises :class:`MalformedName` with a distinct reason code for each way the
    grammar can be violated: missing/wrong extension, a field count other than
    three, an empty field, a non-numeric assignment field, or a name field
    containing anything besides letters, hyphens, and apostrophes.
    """
    if not filename.lower().endswith(ARCHIVE_SUFFIX):
        raise MalformedName(REASON_MISSING_EXTENSION, f"{filename!r} does not end in {ARCHIVE_SUFFIX}")
    stem = filename[: -len(ARCHIVE_SUFFIX)]
    fields = stem.split("_")
    if len(fields) != 3:
        raise MalformedName(
            REASON_WRONG_FIELD_COUNT,
            f"{filename!r} has {len(fields)} underscore-separated fields, expected 3",
        )
    first, last, assignment = fields
    if not first or not last or not assignment:
        raise MalformedName(REASON_EMPTY_FIELD, f"{filename!r} has an empty field")
    if not set(assignment) <= _ASCII_DIGITS:
        raise MalformedName(
            REASON_NON_NUMERIC_ASSIGNMENT,
            f"assignment field {assignment!r} in {filename!r} is not a decimal number",
        )
    for value in (first, last):
        if not _valid_name_field(value):
            raise MalformedName(
                REASON_INVALID_CHARACTER,
                f"name field {value!r} in {filename!r} contains characters outside letters, '-', and \"'\"",
            )
    return SubmissionIdentity(first, last, int(assignment))


def render_submission_filename(identity: SubmissionIdentity) -> str:
    """Inverse of :func:`parse_submission_filename` up to leading zeros."""
    return identity.stem() + ARCHIVE_SUFFIX


# A file observation: (size in bytes, mtime). Two identical consecutive
# observations are taken as proof the upload has finished.
FileStamp = tuple[int, float]
# Exactly-once key for a processed file: (filename, size, mtime).
FileKey = tuple[str, int, float]


def scan_inbox(
    inbox: Path,
    seen: set[FileKey],
    previous: Mapping[str, FileStamp],
) -> tuple[list[Path], dict[str, FileStamp]]:
    """One polling pass over the inbox.

    Returns ``(ready, observed)`` where ``ready`` lists files whose
    (size, mtime) matched the ``previous`` scan and whose key is not yet in
    ``seen``, and ``observed`` is the stamp map to feed into the next call.
    Keys of returned files are added to ``seen`` immediately, so a file is
    handed out exactly once per distinct (name, size, mtime). A resubmission
    under the same name gets a fresh stamp and therefore a fresh key.
    """
    try:
        entries = sorted(path for path in inbox.iterdir() if path.is_file())
    except OSError as exc:
        raise InboxUnreadable(f"cannot list inbox {inbox}: {exc}") from exc
    ready: list[Path] = []
    observed: dict[str, FileStamp] = {}
    for path in entries:
        try:
            stat = path.stat()
        except OSError:
            # Vanished between listing and stat; pretend we never saw it.
            continue
        stamp: FileStamp = (stat.st_size, stat.st_mtime)
        observed[path.name] = stamp
        key: FileKey = (path.name, stat.st_size, stat.st_mtime)
        if key in seen:
            continue
        if previous.get(path.name) == stamp:
            ready.append(path)
            seen.add(key)
    return ready, observed


class InboxScanner:
    """Stateful wrapper around :func:`scan_inbox` for repeated polling."""

    def __init__(self, inbox: Path, seen: set[FileKey] | None = None):
        self.inbox = inbox
        self.seen: set[FileKey] = set() if seen is None else seen
        self._previous: dict[str, FileStamp] = {}

    def poll(self) -> list[Path]:
        ready, self._previous = scan_inbox(self.inbox, self.seen, self._previous)
        return ready


class SubmissionStatus(Enum):
    PENDING = "Pending"
    EXTRACTED = "Extracted"
    QUARANTINED = "Quarantined"


@dataclass
class SubmissionRecord:
    """A submission as it moves through collection.

    ``workspace_path`` is set exactly when status is EXTRACTED and
    ``quarantine_reason`` exactly when status is QUARANTINED.
    """

    identity: SubmissionIdentity
    archive_path: Path
    received_at: datetime
    status: SubmissionStatus = SubmissionStatus.PENDING
    workspace_path: Path | None = None
    quarantine_reason: str | None = None

    def __post_init__(self) -> None:
        if (self.workspace_path is not None) != (self.status is SubmissionStatus.EXTRACTED):
            raise ValueError("workspace_path must be set exactly when status is Extracted")
        if (self.quarantine_reason is not None) != (self.status is SubmissionStatus.QUARANTINED):
            raise ValueError("quarantine_reason must be set exactly when status is Quarantined")


@dataclass(frozen=True)
class ExtractionLimits:
    """Hard caps applied while unpacking an archive."""

    max_total_bytes: int = 64 * 1024 * 1024
    max_entry_count: int = 256
    max_path_depth: int = 4
    allowed_extensions: frozenset[str] = frozenset({".cpp", ".h", ".hpp", ".c", ".txt"})

    def __post_init__(self) -> None:
        for name in ("max_total_bytes", "max_entry_count", "max_path_depth"):
            value = getattr(self, name)
            if not isinstance(value, int) or value <= 0:
                raise ValueError(f"{name} must be a positive int, got {value!r}")
        for ext in self.allowed_extensions:
            if not ext.startswith(".") or ext != ext.lower():
                raise ValueError(f"extensions must be lowercase and dotted, got {ext!r}")


def _entry_parts(entry_name: str) -> list[str]:
    # Zip paths are nominally "/"-separated, but archives built on Windows
    # sometimes carry backslashes; treat both as separators before judging.
    return [part for part in entry_name.replace("\\", "/").split("/") if part not in ("", ".")]


def extract_archive(
    record: SubmissionRecord,
    limits: ExtractionLimits,
    workspace_dir: Path,
) -> SubmissionRecord:
    """Unpack ``record.archive_path`` into ``workspace_dir`` under ``limits``.

    Returns a new record: EXTRACTED with ``workspace_path`` set on success,
    QUARANTINED with a reason code otherwise. Content problems (corruption,
    traversal paths, busted limits, nothing extractable) never raise; they
    come back as quarantine reasons. Entries whose extension is not allowed
    are silently skipped. Any existing workspace content is replaced.

    The byte budget is enforced on the actual decompressed stream, not the
    sizes declared in the zip directory, so a lying header cannot smuggle
    more than ``max_total_bytes`` onto disk.
    """

    def quarantined(reason: str) -> SubmissionRecord:
        return replace(record, status=SubmissionStatus.QUARANTINED, quarantine_reason=reason, workspace_path=None)

    try:
        archive = zipfile.ZipFile(record.archive_path)
    except (zipfile.BadZipFile, NotImplementedError):
        return quarantined(REASON_CORRUPT_ARCHIVE)

    with archive:
        infos = archive.infolist()
        if len(infos) > limits.max_entry_count:
            return quarantined(REASON_LIMIT_ENTRY_COUNT)

        plan: list[tuple[zipfile.ZipInfo, list[str]]] = []
        for info in infos:
            name = info.filename
            parts = _entry_parts(name)
            if name.startswith(("/", "\\")) or any(part == ".." for part in parts):
                return quarantined(REASON_PATH_TRAVERSAL)
            if info.is_dir():
                continue
            if not parts:
                continue
            if len(parts) > limits.max_path_depth:
                return quarantined(REASON_LIMIT_PATH_DEPTH)
            if Path(parts[-1]).suffix.lower() not in limits.allowed_extensions:
                continue
            plan.append((info, parts))

        if not plan:
            return quarantined(REASON_NO_SOURCE_FILES)

        if workspace_dir.exists():
            shutil.rmtree(workspace_dir)
        workspace_dir.mkdir(parents=True)

        remaining = limits.max_total_bytes
        try:
            for info, parts in plan:
                target = workspace_dir.joinpath(*parts)
                target.parent.mkdir(parents=True, exist_ok=True)
                with archive.open(info) as source, open(target, "wb") as sink:
                    while chunk := source.read(64 * 1024):
                        remaining -= len(chunk)
                        if remaining < 0:
                            shutil.rmtree(workspace_dir, ignore_errors=True)
                            return quarantined(REASON_LIMIT_TOTAL_BYTES)
                        sink.write(chunk)
        except (zipfile.BadZipFile, RuntimeError, NotImplementedError, EOFError):
            # Truncated/encrypted/unsupported payloads surface here rather
            # than at open time.
            shutil.rmtree(workspace_dir, ignore_errors=True)
            return quarantined(REASON_CORRUPT_ARCHIVE)

    return replace(record, status=SubmissionStatus.EXTRACTED, workspace_path=workspace_dir)


def quarantine_archive(archive_path: Path, reason: str, quarantine_dir: Path) -> Path:
    """Move an archive into quarantine and drop a one-line reason file.

    Returns the quarantined archive's new path. Repeated quarantines of the
    same filename get a numeric suffix instead of overwriting the evidence.
    """
    quarantine_dir.mkdir(parents=True, exist_ok=True)
    target = quarantine_dir / archive_path.name
    counter = 2
    while target.exists():
        target = quarantine_dir / f"{archive_path.name}.{counter}"
        counter += 1
    shutil.move(str(archive_path), str(target))
    target.with_name(target.name + ".reason.txt").write_text(reason + "\n", encoding="utf-8")
    return target


def archive_owner(path: Path) -> str | None:
    """Best-effort owner of the archive file, recorded for the audit trail."""
    try:
        return path.owner()
    except (KeyError, OSError, NotImplementedError):
        return None


def utc_now() -> datetime:
    """Receipt timestamps are UTC with second precision."""
    return datetime.now(timezone.utc).replace(microsecond=0)
