"""Flow-graph analysis shared by model linting and offset resolution."""

from __future__ import annotations

from collections import deque
from typing import Iterable

from .model import ANCHOR_BEFORE_SOP, ELAPSED, FlowNode, ProcessModel

# Sentinel distinguishing "no acyclic path" from "a cycle blocks the path".
CYCLIC = object()


def successors(model: ProcessModel) -> dict[str, list[str]]:
    adj: dict[str, list[str]] = {n.node_id: [] for n in model.nodes}
    for src, dst in model.flows:
        adj[src].append(dst)
    return adj


def predecessors(model: ProcessModel) -> dict[str, list[str]]:
    pred: dict[str, list[str]] = {n.node_id: [] for n in model.nodes}
    for src, dst in model.flows:
        pred[dst].append(src)
    return pred


def reachable(adj: dict[str, list[str]], starts: Iterable[str]) -> set[str]:
    """All nodes reachable from the start set, start set included."""
    seen = set()
    stack = [s for s in starts if s in adj]
    while stack:
        cur = stack.pop()
        if cur in seen:
            continue
        seen.add(cur)
        stack.extend(adj[cur])
    return seen


def node_weight(node: FlowNode) -> int:
    """Days a path spends passing through this node."""
    if node.kind == "task" and node.duration is not None:
        return node.duration.days
    if node.timer is not None and node.timer.mode == ELAPSED:
        return node.timer.amount.days
    return 0


def is_anchor(node: FlowNode) -> bool:
    return node.timer is not None and node.timer.mode == ANCHOR_BEFORE_SOP


def timer_covered_events(model: ProcessModel) -> set[str]:
    """Events that carry a timer or sit downstream of a timer-carrying node."""
    timered = [n.node_id for n in model.nodes if n.timer is not None]
    downstream = reachable(successors(model), timered)
    return {n.node_id for n in model.events() if n.timer is not None or n.node_id in downstream}


def _cone_longest_path(
    model: ProcessModel, src: str, dst: str, allowed: set[str]
) -> int | None | object:
    """Longest weighted path src -> dst restricted to allowed nodes.

    The source contributes no weight; every later node on the path does.
    Returns None when no path exists, CYCLIC when a cycle lies inside the
    src-to-dst cone.
    """
    nodes = model.node_map()
    adj = {k: [v for v in vs if v in allowed] for k, vs in successors(model).items() if k in allowed}
    fwd = reachable(adj, [src])
    back_adj: dict[str, list[str]] = {k: [] for k in adj}
    for k, vs in adj.items():
        for v in vs:
            back_adj[v].append(k)
    cone = fwd & reachable(back_adj, [dst])
    if src not in cone or dst not in cone:
        return None

    indeg = {n: 0 for n in cone}
    for k in cone:
        for v in adj[k]:
            if v in cone:
                indeg[v] += 1
    queue = deque(sorted(n for n, d in indeg.items() if d == 0))
    order = []
    while queue:
        cur = queue.popleft()
        order.append(cur)
        for v in adj[cur]:
            if v in cone:
                indeg[v] -= 1
                if indeg[v] == 0:
                    queue.append(v)
    if len(order) != len(cone):
        return CYCLIC

    dist: dict[str, int] = {src: 0}
    for cur in order:
        if cur not in dist:
            continue
        for v in adj[cur]:
            if v in cone:
                cand = dist[cur] + node_weight(nodes[v])
                if cand > dist.get(v, cand - 1):
                    dist[v] = cand
    return dist.get(dst)


def anchor_candidates(model: ProcessModel, event_id: str) -> tuple[list[tuple[str, int]], bool]:
    """Nearest upstream anchor timers and the SOP offset each one implies.

    Returns (candidates, cyclic): candidates as (anchor node id, offset days)
    sorted by anchor id, cyclic True when a flow cycle prevented at least one
    path computation. An event carrying its own anchor timer is its sole
    candidate with a zero-length path.
    """
    nodes = model.node_map()
    target = nodes[event_id]
    if is_anchor(target):
        return [(event_id, -target.timer.amount.days)], False

    pred = predecessors(model)
    region = {event_id}
    anchors: list[str] = []
    queue = deque([event_id])
    while queue:
        cur = queue.popleft()
        for p in pred.get(cur, ()):
            if p in region:
                continue
            region.add(p)
            if is_anchor(nodes[p]):
                anchors.append(p)
                continue
            queue.append(p)

    cyclic = False
    out: list[tuple[str, int]] = []
    for anchor in sorted(anchors):
        allowed = region - {a for a in anchors if a != anchor}
        dist = _cone_longest_path(model, anchor, event_id, allowed)
        if dist is CYCLIC:
            cyclic = True
            continue
        if dist is None:
            continue
        amount = nodes[anchor].timer.amount.days
        out.append((anchor, -amount + dist))
    return out, cyclic


def segment_nodes(model: ProcessModel, event_id: str) -> set[str]:
    """The process segment owned by an event: upstream nodes reachable
    backwards without crossing another event. Includes the event itself."""
    nodes = model.node_map()
    pred = predecessors(model)
    seg = {event_id}
    stack = [event_id]
    while stack:
        cur = stack.pop()
        for p in pred.get(cur, ()):
            if p in seg or nodes[p].is_event:
                continue
            seg.add(p)
            stack.append(p)
    return seg


def segment_duration(model: ProcessModel, event_id: str) -> int | None:
    """Longest task-time path through the event's segment, in days.

    None when the segment contains no task or a cycle makes the sum
    ill-defined.
    """
    seg = segment_nodes(model, event_id)
    nodes = model.node_map()
    if not any(nodes[n].kind == "task" for n in seg):
        return None

    adj = {k: [v for v in vs if v in seg] for k, vs in successors(model).items() if k in seg}
    indeg = {n: 0 for n in seg}
    for k, vs in adj.items():
        for v in vs:
            indeg[v] += 1
    queue = deque(sorted(n for n, d in indeg.items() if d == 0))
    order = []
    dist: dict[str, int] = {}
    while queue:
        cur = queue.popleft()
        order.append(cur)
        dist.setdefault(cur, node_weight(nodes[cur]))
        for v in adj[cur]:
            cand = dist[cur] + node_weight(nodes[v])
            if cand > dist.get(v, cand - 1):
                dist[v] = cand
            indeg[v] -= 1
            if indeg[v] == 0:
                queue.append(v)
    if len(order) != len(seg):
        return None
    return dist.get(event_id, 0)
