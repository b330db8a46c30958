"""Command-line front end.

Every command loads the bundle named by the manifest, runs its analyses,
and renders one report. Exit codes: 0 clean, 1 at least one error finding
(warnings too under --strict), 2 usage or fatal input failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .bundle import Bundle, load_bundle
from .conformance import (
    ReferenceProcess,
    check_milestone_retention,
    check_vv_links,
    diff,
    load_reference,
    validate_counterparts,
    vv_iterations,
)
from .dependency import (
    DependencyGraph,
    check_temporal,
    cross_check_declared,
    find_redundant,
    graph_to_dot,
    graph_to_json,
    impact,
    infer_edges,
)
from .errors import PyramidError, UnknownSeedError
from .findings import Finding, error_count, finding, merge_findings, summarize
from .ingest import check_wellformed
from .naming import normalize_name
from .pyramid import assign_coordinates, check_connectivity
from .timeline import (
    OffsetTable,
    build_reference_timeline,
    check_alignment,
    check_gq,
    reconcile_declared,
    resolve_offsets,
)

EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_FATAL = 2


@dataclass(frozen=True)
class CommandSpec:
    name: str
    help: str
    flags: tuple[str, ...] = ()


COMMANDS = (
    CommandSpec("validate", "check structure, completeness, and timing consistency"),
    CommandSpec("timeline", "resolve SOP offsets and lay out the reference grid", ("--step",)),
    CommandSpec("deps", "infer and check the milestone dependency graph", ("--dot",)),
    CommandSpec("impact", "trace everything a change at one point can touch", ("--seed",)),
    CommandSpec("conform", "diff bound models against their reference processes"),
    CommandSpec("retention", "compare milestone sets of two bundle snapshots", ("--before", "--after")),
    CommandSpec("export", "emit the dependency graph as DOT and JSON", ("--dot",)),
    CommandSpec("report", "run every analysis and merge the findings", ("--step", "--dot")),
)


@dataclass
class ReportBundle:
    """Everything one command run produced."""

    command: str
    findings: list[Finding]
    payload: dict = field(default_factory=dict)
    artifacts: dict[str, str] = field(default_factory=dict)


def exit_status(findings: list[Finding], strict: bool = False) -> int:
    return EXIT_FINDINGS if error_count(findings, strict) else EXIT_OK


def _finding_obj(f: Finding) -> dict:
    return {"code": f.code, "severity": f.severity, "subject": f.subject, "message": f.message}


def render_report(report: ReportBundle, fmt: str = "text") -> str:
    """Render a report deterministically: same inputs, same bytes."""
    if fmt == "json":
        doc = {
            "command": report.command,
            "findings": [_finding_obj(f) for f in report.findings],
            "summary": summarize(report.findings),
            "artifacts": report.artifacts,
        }
        doc.update(report.payload)
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    lines = [f"procpyramid {report.command}"]
    for severity in ("error", "warning", "info"):
        group = [f for f in report.findings if f.severity == severity]
        lines.append(f"== {severity}s ({len(group)})")
        for f in group:
            lines.append(f"  {f.code}  {f.subject}")
            lines.append(f"      {f.message}")
    counts = summarize(report.findings)["bySeverity"]
    lines.append(
        f"summary: {counts['error']} errors, {counts['warning']} warnings, {counts['info']} info"
    )
    lines.extend(_render_payload_text(report.payload))
    for name, path in sorted(report.artifacts.items()):
        lines.append(f"wrote {name}: {path}")
    return "\n".join(lines) + "\n"


def _render_payload_text(payload: dict) -> list[str]:
    lines: list[str] = []
    if "timeline" in payload and payload["timeline"] is not None:
        section = payload["timeline"]
        offsets, renderings = section["offsets"], section["renderings"]
        if offsets:
            lines.append("")
            lines.append("milestone offsets:")
            width = max(len(label) for label in offsets)
            for label in sorted(offsets, key=lambda k: (offsets[k], k)):
                lines.append(f"  {label.ljust(width)}  {offsets[label]:>6}d  {renderings[label]}")
        grid = section.get("grid")
        if grid:
            lines.append(
                f"grid: {len(grid['boundaries']) - 1} slots of {grid['stepDays']}d "
                f"from {grid['boundaries'][0]}d to {grid['boundaries'][-1]}d"
            )
    if "impact" in payload:
        section = payload["impact"]
        lines.append("")
        lines.append(f"impact of {section['seed']}:")
        lines.append(f"  downstream: {', '.join(section['downstream']) or '(none)'}")
        lines.append(f"  upstream:   {', '.join(section['upstream']) or '(none)'}")
        lines.append(f"  levels crossed: {', '.join(str(l) for l in section['crossedLevels'])}")
    if "conformance" in payload:
        lines.append("")
        for entry in payload["conformance"]:
            ratios = ", ".join(
                f"{name} {entry['aspects'][name]['matchRatio']:.2f}" for name in sorted(entry["aspects"])
            )
            lines.append(f"{entry['model']} vs {entry['reference']}: {entry['verdict']} ({ratios})")
        for link in payload.get("vvLinks", ()):
            lines.append(
                f"vv iterations {link['right']}/{link['left']}: {link['iterations']}"
            )
    if "retention" in payload:
        section = payload["retention"]
        lines.append("")
        lines.append(
            f"retention: {section['before']} before, {section['after']} after, "
            f"{section['dropped']} dropped, {section['addedIntermediate']} added intermediate"
        )
    if "bundle" in payload:
        section = payload["bundle"]
        lines.append("")
        lines.append(
            f"bundle: {section['models']} models, {section['milestones']} milestones, "
            f"connected depth {section['maxConnectedDepth']}"
        )
    return lines


def _timeline_table(bundle: Bundle) -> tuple[OffsetTable, list[Finding]]:
    table, f1 = resolve_offsets(bundle.pyramid, bundle.milestones, bundle.manifest.sop_label)
    f2 = reconcile_declared(table, bundle.milestones)
    f3 = check_alignment(
        bundle.pyramid, table, bundle.milestones, bundle.manifest.alignment_tolerance
    )
    return table, merge_findings(f1, f2, f3)


def _validate_findings(bundle: Bundle) -> tuple[list[Finding], dict]:
    groups = [list(bundle.findings)]
    for model_id in sorted(bundle.models):
        model = bundle.models[model_id]
        groups.append(model.parse_findings)
        groups.append(check_wellformed(model))
    connectivity, depth = check_connectivity(bundle.pyramid)
    groups.append(connectivity)
    _, timing = _timeline_table(bundle)
    groups.append(timing)
    for ms in bundle.milestones:
        groups.append(check_gq(ms))
    payload = {
        "bundle": {
            "models": len(bundle.models),
            "milestones": len(bundle.milestones),
            "maxConnectedDepth": depth,
        }
    }
    return merge_findings(*groups), payload


def _timeline_payload(bundle: Bundle, step: int | None) -> tuple[list[Finding], dict]:
    table, timing = _timeline_table(bundle)
    findings = merge_findings(list(bundle.findings), timing)
    labels = bundle.labels()
    step = step or bundle.manifest.reference_step.days
    section: dict = {
        "offsets": {labels[m]: d for m, d in table.offsets.items()},
        "renderings": {labels[m]: table.render(m) for m in table.offsets},
        "provenance": {labels[m]: p for m, p in table.provenance.items()},
        "grid": None,
    }
    if table.offsets:
        grid = build_reference_timeline(table, step)
        section["grid"] = {
            "stepDays": grid.step,
            "boundaries": grid.boundaries,
            "slots": {labels[m]: slot for m, slot in sorted(grid.assignments.items())},
        }
    return findings, {"timeline": section}


def _deps_graph(bundle: Bundle) -> tuple[DependencyGraph, OffsetTable]:
    graph = infer_edges(bundle.milestones, bundle.manifest.aliases)
    table, _ = resolve_offsets(bundle.pyramid, bundle.milestones, bundle.manifest.sop_label)
    return graph, table

def _deps_payload(bundle: Bundle) -> tuple[list[Finding], dict, DependencyGraph, OffsetTable]:
    graph, table = _deps_graph(bundle)
    findings = merge_findings(
        list(bundle.findings),
        cross_check_declared(graph),
        check_temporal(graph, table),
        find_redundant(bundle.milestones, bundle.manifest.aliases),
    )
    payload = {"dependencies": graph_to_json(graph, table, bundle.pyramid, bundle.labels())}
    return findings, payload, graph, table


def _load_templates(bundle: Bundle) -> list[ReferenceProcess]:
    templates: list[ReferenceProcess] = []
    for rel in bundle.manifest.reference_templates:
        templates.extend(load_reference((bundle.root_dir / rel).read_text(encoding="utf-8")))
    validate_counterparts(templates)
    return templates


def _conform_payload(bundle: Bundle) -> tuple[list[Finding], dict]:
    templates = _load_templates(bundle)
    graph, _ = _deps_graph(bundle)
    extra: list[Finding] = []
    entries = []
    for ref in sorted(templates, key=lambda t: t.ref_id):
        for model_id in sorted(bundle.models):
            model = bundle.models[model_id]
            if not ref.binds(model):
                continue
            report = diff(model, bundle.milestones, ref, bundle.manifest.aliases)
            entries.append(
                {
                    "model": model_id,
                    "reference": ref.ref_id,
                    "verdict": report.verdict,
                    "aspects": {
                        name: {
                            "matched": list(aspect.matched),
                            "missing": list(aspect.missing),
                            "extra": list(aspect.extra),
                            "reordered": [list(p) for p in aspect.reordered],
                            "matchRatio": aspect.match_ratio,
                        }
                        for name, aspect in sorted(report.aspects.items())
                    },
                }
            )
            subject = f"{model_id}/{ref.ref_id}"
            if report.verdict == "major-deviation":
                extra.append(finding("MAJOR-DEVIATION", subject, "half or more of one aspect is unmet"))
            elif report.verdict == "minor-deviation":
                extra.append(finding("MINOR-DEVIATION", subject, "some reference items are unmet"))
    vv = check_vv_links(bundle.pyramid, graph, templates)
    findings = merge_findings(list(bundle.findings), extra, vv)
    links = [
        {"right": s.right_model, "left": s.left_model, "iterations": s.iterations}
        for s in vv_iterations(bundle.pyramid, graph, templates)
    ]
    return findings, {"conformance": entries, "vvLinks": links}


def _resolve_seed(bundle: Bundle, graph: DependencyGraph, seed: str) -> str:
    if seed in set(graph.nodes) or seed in bundle.pyramid.model_map():
        return seed
    matches = [
        ms.milestone_id
        for ms in bundle.milestones
        if normalize_name(ms.name) == normalize_name(seed)
    ]
    if len(matches) == 1:
        return matches[0]
    raise UnknownSeedError(f"seed {seed!r} matches no milestone, model, or unique milestone name")


def _execute(args: argparse.Namespace) -> ReportBundle:
    command = args.command
    if command == "retention":
        before = load_bundle(args.before or args.manifest)
        after = load_bundle(args.after)
        findings = check_milestone_retention(before.milestones, after.milestones)
        payload = {
            "retention": {
                "before": len(before.milestones),
                "after": len(after.milestones),
                "dropped": sum(1 for f in findings if f.code == "MILESTONE-DROPPED"),
                "addedIntermediate": sum(1 for f in findings if f.code == "ADDED-INTERMEDIATE"),
            }
        }
        return ReportBundle(command, findings, payload)

    bundle = load_bundle(args.manifest)
    artifacts: dict[str, str] = {}

    if command == "validate":
        findings, payload = _validate_findings(bundle)
        return ReportBundle(command, findings, payload)

    if command == "timeline":
        findings, payload = _timeline_payload(bundle, args.step)
        return ReportBundle(command, findings, payload)

    if command == "deps":
        findings, payload, graph, table = _deps_payload(bundle)
        if args.dot:
            Path(args.dot).write_text(graph_to_dot(graph, table, bundle.labels()), encoding="utf-8")
            artifacts["dot"] = args.dot
        return ReportBundle(command, findings, payload, artifacts)

    if command == "impact":
        graph, table = _deps_graph(bundle)
        seed = _resolve_seed(bundle, graph, args.seed)
        result = impact(graph, bundle.pyramid, seed)
        payload = {
            "impact": {
                "seed": result.seed,
                "downstream": result.downstream,
                "upstream": result.upstream,
                "crossedLevels": sorted(result.crossed_levels),
            }
        }
        return ReportBundle(command, list(bundle.findings), payload)

    if command == "conform":
        findings, payload = _conform_payload(bundle)
        return ReportBundle(command, findings, payload)

    if command == "export":
        graph, table = _deps_graph(bundle)
        payload = {"dependencies": graph_to_json(graph, table, bundle.pyramid, bundle.labels())}
        if args.dot:
            Path(args.dot).write_text(graph_to_dot(graph, table, bundle.labels()), encoding="utf-8")
            artifacts["dot"] = args.dot
        return ReportBundle(command, list(bundle.findings), payload, artifacts)

    if command == "report":
        v_findings, v_payload = _validate_findings(bundle)
        t_findings, t_payload = _timeline_payload(bundle, args.step)
        d_findings, d_payload, graph, table = _deps_payload(bundle)
        groups = [v_findings, t_findings, d_findings]
        payload = {**v_payload, **t_payload, **d_payload}
        if bundle.manifest.reference_templates:
            c_findings, c_payload = _conform_payload(bundle)
            groups.append(c_findings)
            payload.update(c_payload)
        payload["coordinates"] = {
            model_id: {"depth": depth, "position": position, "complexity": complexity}
            for model_id, (depth, position, complexity) in sorted(
                assign_coordinates(bundle.pyramid).items()
            )
        }
        if args.dot:
            Path(args.dot).write_text(graph_to_dot(graph, table, bundle.labels()), encoding="utf-8")
            artifacts["dot"] = args.dot
        return ReportBundle(command, merge_findings(*groups), payload, artifacts)

    raise PyramidError(f"unknown command {command!r}")


def _positive_days(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number of days") from None
    if value <= 0:
        raise argparse.ArgumentTypeError("must be a positive number of days")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="procpyramid",
        description="Analyze a multi-level process model bundle around its milestones.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for spec in COMMANDS:
        p = sub.add_parser(spec.name, help=spec.help)
        p.add_argument("manifest", help="path to the bundle manifest (JSON)")
        p.add_argument("--json", action="store_true", help="emit the report as JSON")
        p.add_argument("--out", metavar="PATH", help="write the report to a file instead of stdout")
        p.add_argument("--strict", action="store_true", help="treat warnings as errors for the exit code")
        if "--step" in spec.flags:
            p.add_argument("--step", type=_positive_days, metavar="DAYS", help="grid step in days")
        if "--dot" in spec.flags:
            p.add_argument("--dot", metavar="PATH", help="also write the dependency graph as DOT")
        if "--seed" in spec.flags:
            p.add_argument("--seed", required=True, metavar="ID", help="milestone or model to start from")
        if "--before" in spec.flags:
            p.add_argument("--before", metavar="MANIFEST", help="earlier snapshot (defaults to MANIFEST)")
            p.add_argument("--after", required=True, metavar="MANIFEST", help="later snapshot")
    return parser


def run(argv: list[str] | None = None) -> int:
    """Parse arguments, run one command, print its report, return the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_FATAL
    try:
        report = _execute(args)
    except PyramidError as exc:
        print(f"fatal [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_FATAL
    except OSError as exc:
        print(f"fatal [IO]: {exc}", file=sys.stderr)
        return EXIT_FATAL

    text = render_report(report, "json" if args.json else "text")
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return exit_status(report.findings, args.strict)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
