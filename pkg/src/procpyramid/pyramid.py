"""The process pyramid: a leveled forest of models joined by call activities."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .durations import Duration
from .errors import ManifestError
from .findings import Finding, finding, sort_findings
from .model import ProcessModel


@dataclass
class DocumentRef:
    path: str
    kind: str = ""
    description: str = ""


@dataclass
class LevelEntry:
    model_id: str
    file: str
    level: int
    parent_hint: tuple[str, str] | None = None
    documents: list[DocumentRef] = field(default_factory=list)


@dataclass
class Manifest:
    """Single source of truth for levels, files, and bundle-wide settings."""

    entries: list[LevelEntry]
    root_model: str
    sop_label: str = "SOP"
    reference_step: Duration = Duration(30)
    alignment_tolerance: int = 0
    aliases: dict[str, str] = field(default_factory=dict)
    reference_templates: list[str] = field(default_factory=list)

    def entry_map(self) -> dict[str, LevelEntry]:
        return {e.model_id: e for e in self.entries}


@dataclass(frozen=True)
class VerticalLink:
    parent_model: str
    call_node: str
    child_model: str


@dataclass
class Pyramid:
    """Models placed at their levels, plus the links that join the levels."""

    root_model: str
    levels: dict[int, list[ProcessModel]] = field(default_factory=dict)
    vertical_links: list[VerticalLink] = field(default_factory=list)
    documents: dict[str, list[DocumentRef]] = field(default_factory=dict)

    def model_map(self) -> dict[str, ProcessModel]:
        return {m.model_id: m for models in self.levels.values() for m in models}

    def level_map(self) -> dict[str, int]:
        return {m.model_id: lvl for lvl, models in self.levels.items() for m in models}

    def depth(self) -> int:
        return max(self.levels) if self.levels else 0


def _field_error(name: str, detail: str, code: str = "BAD-FIELD") -> ManifestError:
    return ManifestError(f"manifest field {name!r}: {detail}", code=code)


def load_manifest(text: str) -> Manifest:
    """Parse and validate a bundle manifest from JSON text."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest is not valid JSON ({exc})")
    if not isinstance(raw, dict):
        raise ManifestError("manifest must be a JSON object")

    root = raw.get("root")
    if not isinstance(root, str) or not root:
        raise _field_error("root", "required and must name a model", "MISSING-ROOT")
    models = raw.get("models")
    if not isinstance(models, list) or not models:
        raise _field_error("models", "required non-empty list")

    entries: list[LevelEntry] = []
    for i, item in enumerate(models):
        if not isinstance(item, dict):
            raise _field_error(f"models[{i}]", "must be an object")
        model_id, file_, level = item.get("id"), item.get("file"), item.get("level")
        if not isinstance(model_id, str) or not model_id:
            raise _field_error(f"models[{i}].id", "required string")
        if not isinstance(file_, str) or not file_:
            raise _field_error(f"models[{i}].file", "required string")
        if not isinstance(level, int) or isinstance(level, bool) or level < 0:
            raise _field_error(f"models[{i}].level", "required non-negative integer")
        parent_hint = None
        if "parent" in item and item["parent"] is not None:
            parent = item["parent"]
            if (
                not isinstance(parent, dict)
                or not isinstance(parent.get("model"), str)
                or not isinstance(parent.get("node"), str)
            ):
                raise _field_error(f"models[{i}].parent", "must hold model and node ids")
            parent_hint = (parent["model"], parent["node"])
        documents = []
        for j, doc in enumerate(item.get("documents", [])):
            if not isinstance(doc, dict) or not isinstance(doc.get("path"), str):
                raise _field_error(f"models[{i}].documents[{j}]", "must hold a path")
            documents.append(
                DocumentRef(
                    path=doc["path"],
                    kind=doc.get("kind", ""),
                    description=doc.get("description", ""),
                )
            )
        entries.append(
            LevelEntry(
                model_id=model_id, file=file_, level=level, parent_hint=parent_hint, documents=documents
            )
        )

    ids = [e.model_id for e in entries]
    dupes = sorted({i for i in ids if ids.count(i) > 1})
    if dupes:
        raise _field_error("models", f"duplicate model ids: {', '.join(dupes)}", "DUPLICATE-MODEL")

    levels = sorted({e.level for e in entries})
    if levels != list(range(len(levels))):
        raise _field_error(
            "models",
            f"levels must be contiguous from 0, got {levels}",
            "NON-CONTIGUOUS-LEVELS",
        )
    top = [e for e in entries if e.level == 0]
    if len(top) != 1 or top[0].model_id != root:
        raise _field_error(
            "root", "exactly one model must sit at level 0 and it must be the root", "MISSING-ROOT"
        )

    entry_map = {e.model_id: e for e in entries}
    for e in entries:
        if e.level == 0 and e.parent_hint is not None:
            raise _field_error(f"models[{e.model_id}].parent", "the root has no parent")
        if e.parent_hint is not None:
            parent = entry_map.get(e.parent_hint[0])
            if parent is None:
                raise _field_error(
                    f"models[{e.model_id}].parent", f"unknown model {e.parent_hint[0]!r}", "BAD-PARENT"
                )
            if parent.level != e.level - 1:
                raise _field_error(
                    f"models[{e.model_id}].parent",
                    f"parent must sit one level up, found level {parent.level}",
                    "BAD-PARENT",
                )

    step = raw.get("referenceStepDays", 30)
    if not isinstance(step, int) or isinstance(step, bool) or step <= 0:
        raise _field_error("referenceStepDays", "must be a positive integer")
    tolerance = raw.get("alignmentToleranceDays", 0)
    if not isinstance(tolerance, int) or isinstance(tolerance, bool) or tolerance < 0:
        raise _field_error("alignmentToleranceDays", "must be a non-negative integer")
    aliases = raw.get("aliases", {})
    if not isinstance(aliases, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in aliases.items()
    ):
        raise _field_error("aliases", "must map names to names")
    templates = raw.get("referenceTemplates", [])
    if not isinstance(templates, list) or not all(isinstance(t, str) for t in templates):
        raise _field_error("referenceTemplates", "must be a list of paths")

    sop_label = raw.get("sopLabel", "SOP")
    if not isinstance(sop_label, str) or not sop_label.strip():
        raise _field_error("sopLabel", "must be a non-empty string")

    return Manifest(
        entries=entries,
        root_model=root,
        sop_label=sop_label,
        reference_step=Duration(step),
        alignment_tolerance=tolerance,
        aliases=aliases,
        reference_templates=templates,
    )


def build_pyramid(
    manifest: Manifest, models: Mapping[str, ProcessModel] | Iterable[ProcessModel]
) -> tuple[Pyramid, list[Finding]]:
    """Place parsed models at their declared levels.

    Parsed models missing from the manifest are flagged as orphans; manifest
    entries without a parsed model are flagged missing. A missing root is
    fatal because nothing can hang together without it.
    """
    if isinstance(models, Mapping):
        model_map = dict(models)
    else:
        model_map = {m.model_id: m for m in models}

    out: list[Finding] = []
    entry_map = manifest.entry_map()
    for model_id in sorted(model_map):
        if model_id not in entry_map:
            out.append(finding("ORPHAN-MODEL", model_id, "parsed model is not listed in the manifest"))
    if manifest.root_model not in model_map:
        raise ManifestError(f"root model {manifest.root_model!r} is missing from the bundle")

    levels: dict[int, list[ProcessModel]] = {}
    documents: dict[str, list[DocumentRef]] = {}
    for entry in manifest.entries:
        model = model_map.get(entry.model_id)
        if model is None:
            out.append(
                finding(
                    "MISSING-MODEL",
                    entry.model_id,
                    f"no parsed model for manifest entry at level {entry.level}",
                )
            )
            continue
        levels.setdefault(entry.level, []).append(model)
        documents[entry.model_id] = list(entry.documents)
    for level in levels:
        levels[level].sort(key=lambda m: m.model_id)

    pyramid = Pyramid(root_model=manifest.root_model, levels=levels, documents=documents)
    return pyramid, sort_findings(out)


def link_levels(pyramid: Pyramid) -> tuple[Pyramid, list[Finding]]:
    """Resolve call activities into vertical parent-child links.

    A valid link spans exactly one level downward. Children reached by more
    than one parent are reported for information only.
    """
    out: list[Finding] = []
    level_of = pyramid.level_map()
    model_map = pyramid.model_map()
    links: list[VerticalLink] = []

    for model_id in sorted(model_map):
        model = model_map[model_id]
        for call_node in sorted(model.call_targets):
            target = model.call_targets[call_node]
            subject = f"{model_id}:{call_node}"
            if not target or target not in model_map:
                out.append(
                    finding("UNRESOLVED-CALL", subject, f"call activity targets unknown model {target!r}")
                )
                continue
            if level_of[target] != level_of[model_id] + 1:
                out.append(
                    finding(
                        "LEVEL-SKIP",
                        subject,
                        f"call to {target!r} spans level {level_of[model_id]} to "
                        f"{level_of[target]}, expected one level down",
                    )
                )
                continue
            links.append(VerticalLink(parent_model=model_id, call_node=call_node, child_model=target))

    parents_of: dict[str, set[str]] = {}
    for link in links:
        parents_of.setdefault(link.child_model, set()).add(link.parent_model)
    for child in sorted(parents_of):
        if len(parents_of[child]) > 1:
            out.append(
                finding(
                    "MULTI-PARENT",
                    child,
                    "called from several parents: " + ", ".join(sorted(parents_of[child])),
                )
            )
    for model_id in sorted(model_map):
        if level_of[model_id] > 0 and model_id not in parents_of:
            out.append(finding("UNLINKED-CHILD", model_id, "no parent call activity reaches this model"))

    pyramid.vertical_links = links
    return pyramid, sort_findings(out)


def check_connectivity(pyramid: Pyramid) -> tuple[list[Finding], int]:
    """Verify every model hangs off the root through vertical links.

    Returns the findings and the maximum connected depth (deepest level
    reachable from the root).
    """
    children: dict[str, list[str]] = {}
    for link in pyramid.vertical_links:
        children.setdefault(link.parent_model, []).append(link.child_model)

    seen = set()
    queue = deque([pyramid.root_model])
    while queue:
        cur = queue.popleft()
        if cur in seen:
            continue
        seen.add(cur)
        queue.extend(children.get(cur, ()))

    level_of = pyramid.level_map()
    out = [
        finding("DISCONNECTED", model_id, f"model at level {level_of[model_id]} is not reachable from the root")
        for model_id in sorted(level_of)
        if model_id not in seen
    ]
    depth = max((level_of[m] for m in seen if m in level_of), default=0)
    return sort_findings(out), depth


def assign_coordinates(pyramid: Pyramid) -> dict[str, tuple[int, int, int]]:
    """Give every model a (depth, position, complexity) coordinate.

    Depth is the declared level; position numbers a depth-first walk of the
    vertical links from the root (ties by model id), with unreachable models
    appended in (level, id) order; complexity counts flow nodes.
    """
    model_map = pyramid.model_map()
    level_of = pyramid.level_map()
    children: dict[str, list[str]] = {}
    for link in pyramid.vertical_links:
        children.setdefault(link.parent_model, []).append(link.child_model)

    order: list[str] = []
    seen: set[str] = set()

    def walk(model_id: str) -> None:
        if model_id in seen:
            return
        seen.add(model_id)
        order.append(model_id)
        for child in sorted(set(children.get(model_id, ()))):
            walk(child)

    if pyramid.root_model in model_map:
        walk(pyramid.root_model)
    for model_id in sorted(model_map, key=lambda m: (level_of[m], m)):
        if model_id not in seen:
            seen.add(model_id)
            order.append(model_id)

    return {
        model_id: (level_of[model_id], position, len(model_map[model_id].nodes))
        for position, model_id in enumerate(order)
    }
