"""Loading and validating assignment specification files.

An assignment spec is a YAML document that tells the grader everything
assignment-specific: which assignment number it covers, how to compile
submissions, the lexical rules, the black-box tests, and how the rubric
weighs it all. Validation is eager and exhaustive: a bad spec is rejected
before any grading starts, and every problem in the file is reported at
once rather than one per run.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml

from .assess import Rubric
from .blackbox import DEFAULT_OUTPUT_CAP, DEFAULT_TEST_TIMEOUT, NormalizationPolicy, TestCase
from .build import CompilerProfile
from .ingest import ExtractionLimits
from .lexcheck import LexicalRule, RulePolarity, join_pattern_lines

DEFAULT_COMPILER_COMMAND = ("g++", "-std=c++17", "{sources}", "-o", "{output}")

_TOP_LEVEL_KEYS = {"assignment", "compiler", "rubric", "normalization", "extraction", "output_cap", "rules", "tests"}
_COMPILER_KEYS = {"command", "timeout_secs"}
_RUBRIC_KEYS = {"lexical_weight", "blackbox_weight", "compile_gate", "scale"}
_NORMALIZATION_KEYS = {"unify_line_endings", "trim_trailing_ws", "drop_trailing_blank_lines", "case_sensitive"}
_EXTRACTION_KEYS = {"max_total_bytes", "max_entry_count", "max_path_depth", "allowed_extensions"}
_RULE_KEYS = {"id", "description", "pattern", "polarity", "weight", "strip_comments", "strip_strings"}
_TEST_KEYS = {"id", "stdin", "expected_stdout", "expected_stdout_file", "args", "timeout_secs", "weight"}


class SpecError(ValueError):
    """A spec file failed validation; ``problems`` lists every finding."""

    def __init__(self, source: str, problems: list[str]):
        self.source = source
        self.problems = problems
        listing = "\n".join(f"  - {problem}" for problem in problems)
        super().__init__(f"invalid assignment spec {source}:\n{listing}")


@dataclass(frozen=True)
class AssignmentSpec:
    """Everything the grader needs to know about one assignment."""

    assignment_number: int
    compiler: CompilerProfile
    rubric: Rubric
    normalization: NormalizationPolicy
    extraction: ExtractionLimits
    rules: tuple[LexicalRule, ...]
    tests: tuple[TestCase, ...]
    output_cap: int = DEFAULT_OUTPUT_CAP


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _as_text(value: Any) -> str | None:
    """Scalar-to-text coercion for stdin/expected fields.

    YAML happily parses ``stdin: 2000`` as an integer; insisting on quotes
    there would reject specs that read perfectly clearly, so bare numbers
    are accepted and stringified. Anything else non-string is refused.
    """
    if isinstance(value, str):
        return value
    if _is_number(value):
        return str(value)
    return None


def _check_keys(section: dict[str, Any], allowed: set[str], where: str, problems: list[str]) -> None:
    for key in sorted(set(section) - allowed):
        problems.append(f"{where}: unknown key {key!r}")


def _parse_compiler(section: Any, problems: list[str]) -> CompilerProfile:
    default = CompilerProfile(command=DEFAULT_COMPILER_COMMAND)
    if section is None:
        return default
    if not isinstance(section, dict):
        problems.append("compiler: must be a mapping")
        return default
    _check_keys(section, _COMPILER_KEYS, "compiler", problems)
    command = section.get("command", list(DEFAULT_COMPILER_COMMAND))
    if not (isinstance(command, list) and command and all(isinstance(token, str) for token in command)):
        problems.append("compiler.command: must be a non-empty list of strings")
        return default
    timeout = section.get("timeout_secs", default.timeout_secs)
    if not _is_number(timeout):
        problems.append("compiler.timeout_secs: must be a number")
        return default
    try:
        return CompilerProfile(command=tuple(command), timeout_secs=float(timeout))
    except ValueError as exc:
        problems.append(f"compiler: {exc}")
        return default


def _parse_rubric(section: Any, problems: list[str]) -> Rubric:
    if section is None:
        return Rubric()
    if not isinstance(section, dict):
        problems.append("rubric: must be a mapping")
        return Rubric()
    _check_keys(section, _RUBRIC_KEYS, "rubric", problems)
    gate = section.get("compile_gate", True)
    if not isinstance(gate, bool):
        problems.append("rubric.compile_gate: must be a boolean")
        gate = True
    values = {}
    for key, fallback in (("lexical_weight", 0.3), ("blackbox_weight", 0.7), ("scale", 100.0)):
        value = section.get(key, fallback)
        if not _is_number(value):
            problems.append(f"rubric.{key}: must be a number")
            value = fallback
        values[key] = float(value)
    try:
        return Rubric(
            lexical_weight=values["lexical_weight"],
            blackbox_weight=values["blackbox_weight"],
            compile_gate=gate,
            scale=values["scale"],
        )
    except ValueError as exc:
        problems.append(f"rubric: {exc}")
        return Rubric()


def _parse_normalization(section: Any, problems: list[str]) -> NormalizationPolicy:
    if section is None:
        return NormalizationPolicy()
    if not isinstance(section, dict):
        problems.append("normalization: must be a mapping")
        return NormalizationPolicy()
    _check_keys(section, _NORMALIZATION_KEYS, "normalization", problems)
    kwargs = {}
    for key in _NORMALIZATION_KEYS:
        if key in section:
            if isinstance(section[key], bool):
                kwargs[key] = section[key]
            else:
                problems.append(f"normalization.{key}: must be a boolean")
    return NormalizationPolicy(**kwargs)


def _parse_extraction(section: Any, problems: list[str]) -> ExtractionLimits:
    if section is None:
        return ExtractionLimits()
    if not isinstance(section, dict):
        problems.append("extraction: must be a mapping")
        return ExtractionLimits()
    _check_keys(section, _EXTRACTION_KEYS, "extraction", problems)
    kwargs: dict[str, Any] = {}
    for key in ("max_total_bytes", "max_entry_count", "max_path_depth"):
        if key in section:
            value = section[key]
            if isinstance(value, int) and not isinstance(value, bool):
                kwargs[key] = value
            else:
                problems.append(f"extraction.{key}: must be an integer")
    if "allowed_extensions" in section:
        raw = section["allowed_extensions"]
        if isinstance(raw, list) and all(isinstance(item, str) and item for item in raw):
            normalized = []
            for item in raw:
                item = item.lower()
                normalized.append(item if item.startswith(".") else "." + item)
            kwargs["allowed_extensions"] = frozenset(normalized)
        else:
            problems.append("extraction.allowed_extensions: must be a list of extension strings")
    try:
        return ExtractionLimits(**kwargs)
    except ValueError as exc:
        problems.append(f"extraction: {exc}")
        return ExtractionLimits()


def _parse_rules(section: Any, problems: list[str]) -> tuple[LexicalRule, ...]:
    if section is None:
        return ()
    if not isinstance(section, list):
        problems.append("rules: must be a list")
        return ()
    rules: list[LexicalRule] = []
    seen_ids: set[str] = set()
    for index, entry in enumerate(section):
        where = f"rules[{index}]"
        if not isinstance(entry, dict):
            problems.append(f"{where}: must be a mapping")
            continue
        _check_keys(entry, _RULE_KEYS, where, problems)
        rule_id = entry.get("id")
        if not isinstance(rule_id, str) or not rule_id:
            problems.append(f"{where}: missing or non-string id")
            continue
        if rule_id in seen_ids:
            problems.append(f"{where}: duplicate rule id {rule_id!r}")
            continue
        seen_ids.add(rule_id)
        pattern = entry.get("pattern")
        if not isinstance(pattern, str) or not pattern.strip():
            problems.append(f"{where} ({rule_id}): missing or empty pattern")
            continue
        polarity_raw = entry.get("polarity", "must-match")
        try:
            polarity = RulePolarity(polarity_raw)
        except ValueError:
            problems.append(f"{where} ({rule_id}): polarity must be 'must-match' or 'must-not-match'")
            continue
        weight = entry.get("weight", 1.0)
        flags = {}
        for key in ("strip_comments", "strip_strings"):
            value = entry.get(key, True)
            if not isinstance(value, bool):
                problems.append(f"{where} ({rule_id}): {key} must be a boolean")
                value = True
            flags[key] = value
        description = entry.get("description", rule_id)
        if not isinstance(description, str):
            problems.append(f"{where} ({rule_id}): description must be a string")
            description = rule_id
        try:
            rule = LexicalRule(
                rule_id=rule_id,
                description=description,
                pattern=join_pattern_lines(pattern),
                polarity=polarity,
                weight=float(weight) if _is_number(weight) else weight,
                **flags,
            )
        except ValueError as exc:
            problems.append(f"{where}: {exc}")
            continue
        rules.append(rule)
    return tuple(rules)


def _parse_tests(section: Any, spec_dir: Path, problems: list[str]) -> tuple[TestCase, ...]:
    if section is None:
        return ()
    if not isinstance(section, list):
        problems.append("tests: must be a list")
        return ()
    tests: list[TestCase] = []
    seen_ids: set[str] = set()
    for index, entry in enumerate(section):
        where = f"tests[{index}]"
        if not isinstance(entry, dict):
            problems.append(f"{where}: must be a mapping")
            continue
        _check_keys(entry, _TEST_KEYS, where, problems)
        test_id = entry.get("id")
        if not isinstance(test_id, str) or not test_id:
            problems.append(f"{where}: missing or non-string id")
            continue
        if test_id in seen_ids:
            problems.append(f"{where}: duplicate test id {test_id!r}")
            continue
        seen_ids.add(test_id)
        if "expected_stdout" in entry and "expected_stdout_file" in entry:
            problems.append(f"{where} ({test_id}): give expected_stdout or expected_stdout_file, not both")
            continue
        if "expected_stdout_file" in entry:
            ref = entry["expected_stdout_file"]
            if not isinstance(ref, str):
                problems.append(f"{where} ({test_id}): expected_stdout_file must be a path string")
                continue
            expected_path = spec_dir / ref
            try:
                expected = expected_path.read_text(encoding="utf-8")
            except OSError as exc:
                problems.append(f"{where} ({test_id}): cannot read expected output file: {exc}")
                continue
        else:
            expected = _as_text(entry.get("expected_stdout"))
            if expected is None:
                problems.append(f"{where} ({test_id}): missing expected_stdout")
                continue
        stdin_text = _as_text(entry.get("stdin", ""))
        if stdin_text is None:
            problems.append(f"{where} ({test_id}): stdin must be text")
            continue
        args_raw = entry.get("args", [])
        if not (isinstance(args_raw, list) and all(isinstance(arg, str) for arg in args_raw)):
            problems.append(f"{where} ({test_id}): args must be a list of strings")
            continue
        timeout = entry.get("timeout_secs", DEFAULT_TEST_TIMEOUT)
        weight = entry.get("weight", 1.0)
        try:
            case = TestCase(
                test_id=test_id,
                expected_stdout=expected,
                stdin_text=stdin_text,
                args=tuple(args_raw),
                timeout_secs=float(timeout) if _is_number(timeout) else timeout,
                weight=float(weight) if _is_number(weight) else weight,
            )
        except (ValueError, TypeError) as exc:
            problems.append(f"{where} ({test_id}): {exc}")
            continue
        tests.append(case)
    return tuple(tests)


def load_spec(path: Path | str) -> AssignmentSpec:
    """Load and validate an assignment spec, raising :class:`SpecError` with
    every problem found if the file is not usable."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SpecError(str(path), [f"cannot read file: {exc}"]) from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SpecError(str(path), [f"not valid YAML: {exc}"]) from exc
    if not isinstance(raw, dict):
        raise SpecError(str(path), ["top level must be a mapping"])

    problems: list[str] = []
    _check_keys(raw, _TOP_LEVEL_KEYS, "spec", problems)

    assignment = raw.get("assignment")
    if not (isinstance(assignment, int) and not isinstance(assignment, bool) and assignment >= 0):
        problems.append("assignment: required, must be a non-negative integer")
        assignment = 0

    compiler = _parse_compiler(raw.get("compiler"), problems)
    rubric = _parse_rubric(raw.get("rubric"), problems)
    normalization = _parse_normalization(raw.get("normalization"), problems)
    extraction = _parse_extraction(raw.get("extraction"), problems)
    rules = _parse_rules(raw.get("rules"), problems)
    tests = _parse_tests(raw.get("tests"), path.parent, problems)

    output_cap = raw.get("output_cap", DEFAULT_OUTPUT_CAP)
    if not (isinstance(output_cap, int) and not isinstance(output_cap, bool) and output_cap > 0):
        problems.append("output_cap: must be a positive integer")
        output_cap = DEFAULT_OUTPUT_CAP

    if problems:
        raise SpecError(str(path), problems)
    return AssignmentSpec(
        assignment_number=assignment,
        compiler=compiler,
        rubric=rubric,
        normalization=normalization,
        extraction=extraction,
        rules=rules,
        tests=tests,
        output_cap=output_cap,
    )
