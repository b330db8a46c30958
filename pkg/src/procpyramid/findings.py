"""Findings: the uniform diagnostic record emitted by every check."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

SEVERITIES = ("error", "warning", "info")

# Default severity per finding code. Checks may not emit a code that is
# absent from this catalog.
CATALOG: dict[str, str] = {
    # model ingestion
    "UNSUPPORTED-ELEMENT": "info",
    "EXTRA-PROCESS": "info",
    "UNRESOLVED-DATA-REF": "warning",
    "MODEL-PARSE-ERROR": "error",
    # well-formedness of a single model
    "R1-UNREACHABLE": "warning",
    "R2-NO-DURATION": "error",
    "R2-NO-INPUT": "error",
    "R2-NO-OUTPUT": "error",
    "R3-NO-ROLE": "error",
    "R4-NO-TIMER": "error",
    # milestone extraction
    "AMBIGUOUS-ANCHOR": "error",
    # pyramid assembly
    "ORPHAN-MODEL": "warning",
    "MISSING-MODEL": "error",
    "LEVEL-SKIP": "warning",
    "UNRESOLVED-CALL": "warning",
    "UNLINKED-CHILD": "warning",
    "MULTI-PARENT": "info",
    "DISCONNECTED": "error",
    # offset resolution and the reference timeline
    "NO-ANCHOR": "warning",
    "FLOW-CYCLE": "error",
    "OFFSET-MISMATCH": "error",
    "GQ1-UNANSWERED": "warning",
    "GQ2-UNANSWERED": "warning",
    "GQ3-UNANSWERED": "warning",
    "GQ4-UNANSWERED": "warning",
    "GQ5-UNANSWERED": "warning",
    "GQ6-UNANSWERED": "warning",
    "GQ7-UNANSWERED": "warning",
    "GQ8-UNANSWERED": "warning",
    "GQ8-INCOMPLETE": "warning",
    "MISALIGNED": "error",
    "DANGLING-ALIGNMENT": "error",
    # dependency analysis
    "UNDECLARED-DEPENDENCY": "warning",
    "DECLARED-UNMATCHED": "error",
    "TEMPORAL-VIOLATION": "error",
    "CYCLE": "error",
    "NOT-TIMED": "info",
    "REDUNDANT-OUTPUT": "warning",
    # conformance
    "VV-UNLINKED": "error",
    "MAJOR-DEVIATION": "warning",
    "MINOR-DEVIATION": "info",
    "UNBOUND-REFERENCE": "info",
    "MILESTONE-DROPPED": "error",
    "ADDED-INTERMEDIATE": "info",
}

_RANK = {"error": 0, "warning": 1, "info": 2}


@dataclass(frozen=True)
class Finding:
    """One diagnostic: a catalog code, a severity, a subject id, a message."""

    code: str
    severity: str
    subject: str
    message: str

    def __post_init__(self):
        if self.severity not in SEVERITIES:
            raise ValueError(f"unknown severity {self.severity!r}")

    def sort_key(self) -> tuple:
        return (_RANK[self.severity], self.code, self.subject, self.message)


def finding(code: str, subject: str, message: str, severity: str | None = None) -> Finding:
    """Build a Finding, defaulting the severity from the catalog."""
    if severity is None:
        if code not in CATALOG:
            raise ValueError(f"finding code {code!r} is not in the catalog")
        severity = CATALOG[code]
    return Finding(code=code, severity=severity, subject=subject, message=message)


def sort_findings(items: list[Finding]) -> list[Finding]:
    return sorted(items, key=Finding.sort_key)


def merge_findings(*groups: list[Finding]) -> list[Finding]:
    """Union of finding groups with exact duplicates collapsed."""
    seen: set[Finding] = set()
    for group in groups:
        seen.update(group)
    return sort_findings(list(seen))


def summarize(items: list[Finding]) -> dict:
    by_severity = Counter(f.severity for f in items)
    by_code = Counter(f.code for f in items)
    return {
        "bySeverity": {sev: by_severity.get(sev, 0) for sev in SEVERITIES},
        "byCode": dict(sorted(by_code.items())),
        "total": len(items),
    }


def error_count(items: list[Finding], strict: bool = False) -> int:
    """Number of findings that should fail the run. Strict counts warnings too."""
    bad = {"error", "warning"} if strict else {"error"}
    return sum(1 for f in items if f.severity in bad)
