"""Milestones, SOP-relative offsets, and the reference timeline grid."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable

from . import flowgraph
from .durations import Duration, render_offset
from .errors import EmptyTimelineError
from .findings import Finding, finding, sort_findings
from .naming import normalize_name

if TYPE_CHECKING:
    from .pyramid import Pyramid


@dataclass
class GqRecord:
    """Answers to the eight golden questions for one milestone.

    gq1 owning process, gq2 responsible role, gq3 tools, gq4 process
    duration, gq5 inputs, gq6 outputs, gq7 consumers, gq8 storage location
    per data object. Empty values mean unanswered.
    """

    gq1_process: str = ""
    gq2_role: str = ""
    gq3_tools: frozenset[str] = frozenset()
    gq4_duration: Duration | None = None
    gq5_inputs: frozenset[str] = frozenset()
    gq6_outputs: frozenset[str] = frozenset()
    gq7_consumers: frozenset[str] = frozenset()
    gq8_storage: dict[str, str] = field(default_factory=dict)


@dataclass
class Milestone:
    """An event paired with a time symbol, plus its golden-question record."""

    milestone_id: str
    model_id: str
    event_node_id: str
    name: str
    kind: str
    gq: GqRecord = field(default_factory=GqRecord)
    declared_offset: int | None = None
    terminal: bool = False
    aligns_with: frozenset[str] = frozenset()

    def __post_init__(self):
        if self.kind not in ("start", "intermediate", "end"):
            raise ValueError(f"unknown milestone kind {self.kind!r}")


@dataclass
class OffsetTable:
    """Resolved SOP-relative offsets in days, with a provenance note each."""

    offsets: dict[str, int] = field(default_factory=dict)
    provenance: dict[str, str] = field(default_factory=dict)

    def render(self, milestone_id: str) -> str:
        return render_offset(self.offsets[milestone_id])


@dataclass
class ReferenceTimeline:
    """A fixed-step grid of slots covering every resolved offset.

    Boundaries are signed days; slot i spans [boundaries[i], boundaries[i+1])
    and the final boundary is closed.
    """

    step: int
    boundaries: list[int]
    assignments: dict[str, int]

    @property
    def slot_count(self) -> int:
        return len(self.boundaries) - 1


def resolve_offsets(
    pyramid: Pyramid, milestones: Iterable[Milestone], sop_label: str = "SOP"
) -> tuple[OffsetTable, list[Finding]]:
    """Compute each milestone's offset from its anchor timer.

    offset = -(anchor amount) + longest path of task durations and elapsed
    waits from the anchor to the event. Diverging branches take the latest
    completion. A milestone named like the SOP label is pinned to day zero.
    """
    table = OffsetTable()
    out: list[Finding] = []
    models = pyramid.model_map()
    sop_key = normalize_name(sop_label)

    for ms in milestones:
        if normalize_name(ms.name) == sop_key:
            table.offsets[ms.milestone_id] = 0
            table.provenance[ms.milestone_id] = "designated SOP milestone"
            continue
        model = models.get(ms.model_id)
        if model is None or ms.event_node_id not in model.node_map():
            out.append(
                finding("NO-ANCHOR", ms.milestone_id, "owning model or event not present in the pyramid")
            )
            continue
        candidates, cyclic = flowgraph.anchor_candidates(model, ms.event_node_id)
        if cyclic:
            out.append(
                finding("FLOW-CYCLE", ms.milestone_id, "flow cycle on the path from the anchor timer")
            )
            continue
        offsets = sorted({off for _, off in candidates})
        if not offsets:
            out.append(finding("NO-ANCHOR", ms.milestone_id, "no anchor timer on any incoming path"))
            continue
        if len(offsets) > 1:
            detail = ", ".join(f"{aid} -> {off}d" for aid, off in candidates)
            out.append(
                finding(
                    "AMBIGUOUS-ANCHOR",
                    ms.milestone_id,
                    f"conflicting anchors on converging paths: {detail}",
                )
            )
            continue
        anchor_id, offset = candidates[0]
        amount = model.node_map()[anchor_id].timer.amount.days
        path = offset + amount
        table.offsets[ms.milestone_id] = offset
        table.provenance[ms.milestone_id] = (
            f"anchor {anchor_id} at {amount}d before SOP plus {path}d longest path"
        )
    return table, sort_findings(out)


def reconcile_declared(table: OffsetTable, milestones: Iterable[Milestone]) -> list[Finding]:
    """Compare computed offsets against declared milestone annotations."""
    out: list[Finding] = []
    for ms in milestones:
        if ms.declared_offset is None or ms.milestone_id not in table.offsets:
            continue
        computed = table.offsets[ms.milestone_id]
        if computed != ms.declared_offset:
            out.append(
                finding(
                    "OFFSET-MISMATCH",
                    ms.milestone_id,
                    f"declared {ms.declared_offset}d but flow arithmetic gives {computed}d",
                )
            )
    return sort_findings(out)


def check_gq(milestone: Milestone) -> list[Finding]:
    """Flag unanswered golden questions on one milestone.

    Terminal milestones are exempt from gq7. gq8 must name a storage
    location for every input and output.
    """
    gq = milestone.gq
    subject = milestone.milestone_id
    out: list[Finding] = []
    missing = {
        1: not gq.gq1_process.strip(),
        2: not gq.gq2_role.strip(),
        3: not gq.gq3_tools,
        4: gq.gq4_duration is None,
        5: not gq.gq5_inputs,
        6: not gq.gq6_outputs,
        7: not gq.gq7_consumers and not milestone.terminal,
        8: not gq.gq8_storage,
    }
    questions = {
        1: "no owning process recorded",
        2: "no responsible role recorded",
        3: "no tools recorded",
        4: "no process duration recorded",
        5: "no inputs recorded",
        6: "no outputs recorded",
        7: "no consumers recorded and milestone is not terminal",
        8: "no storage locations recorded",
    }
    for k in range(1, 9):
        if missing[k]:
            out.append(finding(f"GQ{k}-UNANSWERED", subject, questions[k]))
    if gq.gq8_storage:
        uncovered = sorted(
            name for name in gq.gq5_inputs | gq.gq6_outputs if name not in gq.gq8_storage
        )
        if uncovered:
            out.append(
                finding(
                    "GQ8-INCOMPLETE",
                    subject,
                    "no storage location for: " + ", ".join(uncovered),
                )
            )
    return sort_findings(out)


def build_reference_timeline(table: OffsetTable, step: int = 30) -> ReferenceTimeline:
    """Lay every resolved offset onto a fixed-step slot grid."""
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    if not table.offsets:
        raise EmptyTimelineError("no resolved offsets to place on a timeline")
    lo = math.floor(min(table.offsets.values()) / step) * step
    hi = math.ceil(max(table.offsets.values()) / step) * step
    if hi == lo:
        hi = lo + step
    boundaries = list(range(lo, hi + 1, step))
    slots = len(boundaries) - 1
    assignments = {
        mid: min((off - lo) // step, slots - 1) for mid, off in table.offsets.items()
    }
    return ReferenceTimeline(step=step, boundaries=boundaries, assignments=assignments)


def check_alignment(
    pyramid: Pyramid,
    table: OffsetTable,
    milestones: Iterable[Milestone],
    tolerance: int = 0,
) -> list[Finding]:
    """Verify that milestones linked across levels carry matching offsets.

    Links come from explicit alignsWith metadata and from gq7 consumer
    declarations that point at a milestone on another level.
    """
    milestones = list(milestones)
    by_id = {ms.milestone_id: ms for ms in milestones}
    levels = pyramid.level_map()
    out: list[Finding] = []
    pairs: set[tuple[str, str]] = set()

    for ms in milestones:
        for ref in sorted(ms.aligns_with):
            if ref not in by_id:
                out.append(
                    finding("DANGLING-ALIGNMENT", ms.milestone_id, f"alignsWith unknown milestone {ref!r}")
                )
                continue
            pairs.add((min(ms.milestone_id, ref), max(ms.milestone_id, ref)))
        for ref in sorted(ms.gq.gq7_consumers):
            other = by_id.get(ref)
            if other is None:
                continue
            if levels.get(other.model_id) != levels.get(ms.model_id):
                pairs.add((min(ms.milestone_id, ref), max(ms.milestone_id, ref)))

    for a, b in sorted(pairs):
        if a not in table.offsets or b not in table.offsets:
            continue
        delta = abs(table.offsets[a] - table.offsets[b])
        if delta > tolerance:
            out.append(
                finding(
                    "MISALIGNED",
                    f"{a}~{b}",
                    f"linked milestones are {delta}d apart "
                    f"({table.offsets[a]}d vs {table.offsets[b]}d, tolerance {tolerance}d)",
                )
            )
    return sort_findings(out)
