"""End-to-end grading pipeline.

A :class:`GradingSession` owns the directories and the audit log for one
grading run and drives each submission through the same path: validate the
filename, unpack under limits, compile, apply lexical rules, run black-box
tests, score, and write the report pair. Nothing a student uploads can abort
a session; every failure mode lands in exactly one of three terminal states
per submission (Graded, Quarantined, Errored). The single exception is the
audit log itself becoming unwritable, which stops the batch loudly because
grades without an audit trail are worse than no grades.

On disk a run looks like::

    inbox/                     student uploads, watched or batch-read
    workspace/First_Last_N/    per-submission build dirs (replaced each run)
    reports/First_Last_N.report.txt and .report.json
    quarantine/                rejected archives plus *.reason.txt files
    grading.log                append-only JSONL event log
"""

from __future__ import annotations

import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

from .assess import (
    EVENT_COMPILE_ERROR,
    EVENT_ERRORED,
    EVENT_GRADED,
    EVENT_IGNORED,
    EVENT_QUARANTINED,
    EVENT_RECEIVED,
    EVENT_SUPERSEDED,
    AssessmentReport,
    GradingLog,
    GradingLogError,
    ReportStatus,
    initialize_report,
    render_report_json,
    render_report_text,
    score_submission,
)
from .blackbox import SpawnFailure, run_test_suite
from .build import CompilerNotFound, compile_workspace
from .ingest import (
    InboxScanner,
    MalformedName,
    SubmissionRecord,
    SubmissionStatus,
    archive_owner,
    extract_archive,
    parse_submission_filename,
    quarantine_archive,
    utc_now,
)
from .lexcheck import collect_sources, evaluate_ruleset
from .specfile import AssignmentSpec

REASON_WRONG_ASSIGNMENT = "wrong-assignment"

DEFAULT_POLL_INTERVAL = 30.0
MIN_POLL_INTERVAL = 1.0


@dataclass
class BatchSummary:
    graded: int = 0
    quarantined: int = 0
    errored: int = 0
    superseded: int = 0
    ignored: int = 0

    def record(self, report: AssessmentReport) -> None:
        if report.status is ReportStatus.GRADED:
            self.graded += 1
        elif report.status is ReportStatus.QUARANTINED:
            self.quarantined += 1
        elif report.status is ReportStatus.SUPERSEDED:
            self.superseded += 1
        else:
            self.errored += 1

    @property
    def total(self) -> int:
        return self.graded + self.quarantined + self.errored + self.superseded


@dataclass(frozen=True)
class WatchConfig:
    """Where and how often to poll for new submissions."""

    inbox: Path
    poll_interval: float = DEFAULT_POLL_INTERVAL
    workspace_root: Path = Path("workspace")
    reports_dir: Path = Path("reports")

    def __post_init__(self) -> None:
        if not (isinstance(self.poll_interval, (int, float)) and self.poll_interval >= MIN_POLL_INTERVAL):
            raise ValueError(f"poll_interval must be at least {MIN_POLL_INTERVAL:g} s, got {self.poll_interval!r}")
        if Path(self.inbox) in (Path(self.workspace_root), Path(self.reports_dir)):
            raise ValueError("inbox must be distinct from workspace and reports directories")


def _default_jobs() -> int:
    return min(8, os.cpu_count() or 1)


class GradingSession:
    """One grading run: shared directories, audit log, and duplicate tracking.

    Sessions are safe to drive from multiple threads; per-submission state
    never leaves the submission, and the log and the latest-wins registry
    are the only shared mutable pieces.
    """

    def __init__(
        self,
        spec: AssignmentSpec,
        *,
        workspace_root: Path = Path("workspace"),
        reports_dir: Path = Path("reports"),
        quarantine_dir: Path = Path("quarantine"),
        log_path: Path = Path("grading.log"),
        jobs: int | None = None,
    ):
        self.spec = spec
        self.workspace_root = Path(workspace_root)
        self.reports_dir = Path(reports_dir)
        self.quarantine_dir = Path(quarantine_dir)
        self.jobs = jobs if jobs and jobs > 0 else _default_jobs()
        self.log = GradingLog(Path(log_path))
        self._registry: dict[str, datetime] = {}
        self._registry_lock = threading.Lock()

    def close(self) -> None:
        self.log.close()

    def __enter__(self) -> GradingSession:
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()

    # -- single submission ------------------------------------------------

    def grade_archive(self, archive_path: Path, received_at: datetime | None = None) -> AssessmentReport:
        """Grade one archive through the full pipeline.

        Always returns a finished report; student-caused problems become
        Quarantined, environment problems become Errored. Only
        :class:`GradingLogError` escapes.
        """
        archive_path = Path(archive_path)
        received = received_at or utc_now()
        try:
            return self._grade(archive_path, received)
        except GradingLogError:
            raise
        except Exception as exc:  # noqa: BLE001 - one submission must not sink the batch
            report = initialize_report(None, archive_path.name, received)
            report.status = ReportStatus.ERRORED
            report.detail = f"internal-error:{type(exc).__name__}"
            report.generated_at = utc_now()
            self.log.append(
                EVENT_ERRORED,
                report.generated_at,
                archive=archive_path.name,
                reason=report.detail,
                message=str(exc),
            )
            return report

    def _grade(self, archive_path: Path, received: datetime) -> AssessmentReport:
        owner = archive_owner(archive_path)
        self.log.append(EVENT_RECEIVED, received, archive=archive_path.name, owner=owner)
        try:
            identity = parse_submission_filename(archive_path.name)
        except MalformedName as exc:
            report = initialize_report(None, archive_path.name, received, owner)
            report.scale = self.spec.rubric.scale
            return self._quarantine(report, archive_path, f"malformed-name:{exc.reason}", str(exc))

        report = initialize_report(identity, archive_path.name, received, owner)
        report.scale = self.spec.rubric.scale
        if identity.assignment_number != self.spec.assignment_number:
            message = (
                f"archive is for assignment {identity.assignment_number}, "
                f"this session grades assignment {self.spec.assignment_number}"
            )
            return self._quarantine(report, archive_path, REASON_WRONG_ASSIGNMENT, message)

        record = SubmissionRecord(identity, archive_path, received)
        record = extract_archive(record, self.spec.extraction, self.workspace_root / identity.stem())
        if record.status is SubmissionStatus.QUARANTINED:
            assert record.quarantine_reason is not None
            return self._quarantine(report, archive_path, record.quarantine_reason, "")

        assert record.workspace_path is not None
        try:
            compile_result = compile_workspace(record.workspace_path, self.spec.compiler)
        except CompilerNotFound as exc:
            return self._errored(report, "compiler-not-found", str(exc))
        report.compile_result = compile_result
        if not compile_result.succeeded:
            self.log.append(
                EVENT_COMPILE_ERROR,
                utc_now(),
                submission=identity.stem(),
                diagnostics=[d.text for d in compile_result.diagnostics],
            )

        # Lexical rules read source text, so they apply whether or not the
        # build succeeded; behaviour tests need a binary.
        report.lexical = evaluate_ruleset(self.spec.rules, collect_sources(record.workspace_path))
        if compile_result.succeeded:
            assert compile_result.output_path is not None
            try:
                report.blackbox = run_test_suite(
                    compile_result.output_path,
                    self.spec.tests,
                    self.spec.normalization,
                    self.spec.output_cap,
                )
            except SpawnFailure as exc:
                return self._errored(report, "spawn-failure", str(exc))

        report.score = score_submission(compile_result, report.lexical, report.blackbox, self.spec.rubric)
        report.status = ReportStatus.GRADED
        self._finalize(report)
        self.log.append(
            EVENT_GRADED if report.status is ReportStatus.GRADED else EVENT_SUPERSEDED,
            report.generated_at or utc_now(),
            submission=identity.stem(),
            score=report.score,
            status=report.status.value,
        )
        return report

    # -- terminal states ---------------------------------------------------

    def _quarantine(
        self,
        report: AssessmentReport,
        archive_path: Path,
        reason: str,
        message: str,
    ) -> AssessmentReport:
        report.status = ReportStatus.QUARANTINED
        report.detail = reason
        report.generated_at = utc_now()
        quarantine_archive(archive_path, reason, self.quarantine_dir)
        self.log.append(
            EVENT_QUARANTINED,
            report.generated_at,
            archive=report.archive_name,
            submission=report.identity.stem() if report.identity else None,
            reason=reason,
            message=message,
        )
        self._write_report_files(report)
        return report

    def _errored(self, report: AssessmentReport, reason: str, message: str) -> AssessmentReport:
        report.status = ReportStatus.ERRORED
        report.detail = reason
        report.generated_at = utc_now()
        self.log.append(
            EVENT_ERRORED,
            report.generated_at,
            archive=report.archive_name,
            submission=report.identity.stem() if report.identity else None,
            reason=reason,
            message=message,
        )
        self._write_report_files(report)
        return report

    def _finalize(self, report: AssessmentReport) -> None:
        """Apply latest-wins resolution and write the report pair.

        If a submission with the same stem and a newer receipt time has
        already been graded, this report is marked Superseded and its files
        are not written; otherwise it replaces the previous report and the
        replacement is noted in the log.
        """
        report.generated_at = utc_now()
        report.check_invariants()
        assert report.identity is not None
        stem = report.identity.stem()
        with self._registry_lock:
            prior = self._registry.get(stem)
            if prior is not None and prior > report.received_at:
                report.status = ReportStatus.SUPERSEDED
                return
            if prior is not None:
                self.log.append(
                    EVENT_SUPERSEDED,
                    report.generated_at,
                    submission=stem,
                    superseded_received_at=prior.isoformat(),
                )
            self._registry[stem] = report.received_at
            self._write_report_files(report)

    def _write_report_files(self, report: AssessmentReport) -> None:
        if report.identity is None:
            return
        stem = report.identity.stem()
        try:
            self.reports_dir.mkdir(parents=True, exist_ok=True)
            (self.reports_dir / f"{stem}.report.txt").write_text(
                render_report_text(report), encoding="utf-8"
            )
            (self.reports_dir / f"{stem}.report.json").write_text(
                render_report_json(report), encoding="utf-8"
            )
        except OSError as exc:
            self.log.append(
                EVENT_ERRORED,
                utc_now(),
                submission=stem,
                reason="report-unwritable",
                message=str(exc),
            )
            report.status = ReportStatus.ERRORED
            report.detail = "report-unwritable"

    # -- batch and watch ----------------------------------------------------

    def _ignore(self, path: Path, summary: BatchSummary) -> None:
        self.log.append(EVENT_IGNORED, utc_now(), archive=path.name, reason="not-a-zip-archive")
        summary.ignored += 1

    def run_batch(self, inbox: Path) -> BatchSummary:
        """Grade every archive currently in the inbox, then return counts.

        A one-shot pass takes the inbox as-is (no upload debouncing, unlike
        watch mode). Files without a .zip suffix are logged as ignored and
        left untouched. Submissions grade in parallel up to ``jobs`` workers.
        """
        summary = BatchSummary()
        entries = sorted(path for path in Path(inbox).iterdir() if path.is_file())
        archives: list[Path] = []
        for path in entries:
            if path.suffix.lower() == ".zip":
                archives.append(path)
            else:
                self._ignore(path, summary)
        with ThreadPoolExecutor(max_workers=self.jobs) as executor:
            for report in executor.map(self.grade_archive, archives):
                summary.record(report)
        return summary

    def watch_inbox(
        self,
        inbox: Path,
        poll_interval: float = DEFAULT_POLL_INTERVAL,
        stop: threading.Event | None = None,
    ) -> BatchSummary:
        """Poll the inbox until ``stop`` is set, grading archives as they settle.

        A file is picked up once its size and mtime have stayed unchanged
        across two consecutive polls, so half-uploaded archives are never
        opened. Resubmissions under the same name are graded again and the
        older report is superseded. Returns counts for everything processed;
        in-flight submissions are finished before returning.
        """
        if poll_interval < MIN_POLL_INTERVAL:
            raise ValueError(f"poll_interval must be at least {MIN_POLL_INTERVAL:g} s")
        stop = stop or threading.Event()
        summary = BatchSummary()
        scanner = InboxScanner(Path(inbox))
        futures = []
        executor = ThreadPoolExecutor(max_workers=self.jobs)
        try:
            while not stop.is_set():
                for path in scanner.poll():
                    if path.suffix.lower() != ".zip":
                        self._ignore(path, summary)
                        continue
                    futures.append(executor.submit(self.grade_archive, path))
                stop.wait(poll_interval)
        except KeyboardInterrupt:
            stop.set()
        finally:
            executor.shutdown(wait=True)
        for future in futures:
            summary.record(future.result())
        return summary


# -- convenience one-call entry points ---------------------------------------


def grade_submission(archive_path: Path, spec: AssignmentSpec, **session_kwargs: object) -> AssessmentReport:
    """Grade a single archive with a throwaway session."""
    with GradingSession(spec, **session_kwargs) as session:  # type: ignore[arg-type]
        return session.grade_archive(Path(archive_path))


def run_batch(inbox: Path, spec: AssignmentSpec, **session_kwargs: object) -> BatchSummary:
    """Grade everything in an inbox with a throwaway session."""
    with GradingSession(spec, **session_kwargs) as session:  # type: ignore[arg-type]
        return session.run_batch(Path(inbox))


def watch(
    config: WatchConfig,
    spec: AssignmentSpec,
    *,
    quarantine_dir: Path = Path("quarantine"),
    log_path: Path = Path("grading.log"),
    jobs: int | None = None,
    stop: threading.Event | None = None,
) -> BatchSummary:
    """Run watch mode as described by ``config`` until ``stop`` is set."""
    with GradingSession(
        spec,
        workspace_root=config.workspace_root,
        reports_dir=config.reports_dir,
        quarantine_dir=quarantine_dir,
        log_path=log_path,
        jobs=jobs,
    ) as session:
        return session.watch_inbox(config.inbox, config.poll_interval, stop)
