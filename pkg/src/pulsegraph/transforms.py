"""Graph traversal and the rewrite passes applied before device lowering.

Passes never mutate existing nodes: a rewrite returns a (possibly new) root
in the same arena, reusing every untouched subgraph, so shared nodes stay
shared. The pipeline order is fixed by :func:`normalize`; device munchers
may assume its output form.
"""

from __future__ import annotations

import math
from typing import Callable, Iterator, Optional

from .errors import (
    EmptyResultError,
    UnboundVariableError,
    UnknownVariableError,
)
from .graph import (
    ChannelNode,
    Clock,
    Const,
    Cosine,
    Gauss,
    Graph,
    NodeId,
    Num,
    Poly,
    Product,
    PulseNode,
    Sequence,
    Sine,
    Sum,
    Var,
    Zero,
    child_ids,
    duration,
    is_waveform,
    kind_name,
)

#: Relative tolerance for treating two constant parameters as identical.
MERGE_RTOL = 1e-12


# ---------------------------------------------------------------------------
# traversal
# ---------------------------------------------------------------------------

def iter_post_order(graph: Graph, root: NodeId) -> Iterator[NodeId]:
    """Yield each node reachable from root exactly once, children first."""
    seen: set[int] = set()
    stack: list[tuple[NodeId, bool]] = [(root, False)]
    while stack:
        node_id, leaving = stack.pop()
        if leaving:
            yield node_id
            continue
        if node_id.index in seen:
            continue
        seen.add(node_id.index)
        stack.append((node_id, True))
        for child in reversed(child_ids(graph.node(node_id))):
            if child.index not in seen:
                stack.append((child, False))


def visit_depth_first(graph: Graph, root: NodeId,
                      callback: Callable[[NodeId, PulseNode], None]) -> None:
    """Post-order traversal; the callback sees every reachable node once."""
    for node_id in iter_post_order(graph, root):
        callback(node_id, graph.node(node_id))


def collect_vars(graph: Graph, root: NodeId) -> dict[str, list[NodeId]]:
    """Map of variable name to every Var node carrying it, discovery order."""
    table: dict[str, list[NodeId]] = {}
    for node_id in iter_post_order(graph, root):
        node = graph.node(node_id)
        if isinstance(node, Var):
            table.setdefault(node.name, []).append(node_id)
    return table


def detect_clock(graph: Graph, root: NodeId) -> bool:
    """True when any reachable node is a Clock (incl. sine clock edges)."""
    return any(isinstance(graph.node(n), Clock)
               for n in iter_post_order(graph, root))


# ---------------------------------------------------------------------------
# variable substitution
# ---------------------------------------------------------------------------

def substitute(graph: Graph, root: NodeId, bindings: dict[str, float]) -> None:
    """Bind variables in place; the graph structure is untouched.

    Every name in ``bindings`` must occur in the graph (typo guard). Binding
    is a slot update on the Var nodes, so the same graph can be reused with
    different values.
    """
    table = collect_vars(graph, root)
    _apply_bindings(graph, table, bindings)


def _apply_bindings(graph: Graph, table: dict[str, list[NodeId]],
                    bindings: dict[str, float]) -> None:
    for name, value in bindings.items():
        if name not in table:
            raise UnknownVariableError(name)
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"binding for '{name}' must be finite")
        for node_id in table[name]:
            graph.node(node_id).bound = value


def reset_bindings(graph: Graph, root: NodeId) -> None:
    """Clear every reachable Var binding slot."""
    for node_id in iter_post_order(graph, root):
        node = graph.node(node_id)
        if isinstance(node, Var):
            node.bound = None


# ---------------------------------------------------------------------------
# rewrite plumbing
# ---------------------------------------------------------------------------

def _with_children(graph: Graph, node: PulseNode,
                   children: tuple[NodeId, ...]) -> NodeId:
    """New node of the same kind with replaced edges, added to the arena."""
    match node:
        case Const():
            return graph.add(Const(children[0], node.duration))
        case Zero():
            return graph.add(Zero(children[0]))
        case Sine() | Cosine():
            clock = children[2] if node.clock is not None else None
            cls = type(node)
            return graph.add(cls(children[0], children[1], node.duration, clock))
        case Poly():
            return graph.add(Poly(children, node.duration))
        case Gauss():
            return graph.add(Gauss(children[0], node.mean, node.sigma,
                                   node.duration))
        case Sum():
            return graph.add(Sum(children))
        case Product():
            return graph.add(Product(children))
        case Sequence():
            return graph.add(Sequence(children))
        case ChannelNode():
            dur = node.duration
            if isinstance(dur, NodeId):
                dur = children[4]
            return graph.add(ChannelNode(children[0:2], children[2:4], dur))
        case _:  # ToneNode/FramerotNode params are restricted; leaves have no edges
            raise AssertionError(f"cannot rebuild {kind_name(node)}")


def _rewrite(graph: Graph, root: NodeId,
             visit: Callable[[NodeId, Callable[[NodeId], Optional[NodeId]]],
                             Optional[NodeId]]) -> Optional[NodeId]:
    """Memoized bottom-up rewrite; ``visit`` may drop a node by returning None."""
    memo: dict[int, Optional[NodeId]] = {}

    def rebuild(node_id: NodeId) -> Optional[NodeId]:
        if node_id.index in memo:
            return memo[node_id.index]
        result = visit(node_id, rebuild)
        memo[node_id.index] = result
        return result

    return rebuild(root)


def _rebuild_generic(graph: Graph, node_id: NodeId,
                     rebuild: Callable[[NodeId], Optional[NodeId]]) -> NodeId:
    """Rebuild a node from rewritten children, keeping the id when unchanged.

    A child that was dropped entirely falls back to its original form, which
    only arises for degenerate parameter edges.
    """
    node = graph.node(node_id)
    old = child_ids(node)
    if not old:
        return node_id
    new = tuple(rebuild(c) or c for c in old)
    if new == old:
        return node_id
    return _with_children(graph, node, new)


def _try_duration(graph: Graph, node_id: NodeId) -> Optional[float]:
    try:
        return duration(graph, node_id)
    except UnboundVariableError:
        return None


# ---------------------------------------------------------------------------
# passes
# ---------------------------------------------------------------------------

def remove_zero_duration(graph: Graph, root: NodeId) -> NodeId:
    """Drop every waveform node of zero duration; collapse 1-child sequences.

    Raises :class:`EmptyResultError` when the whole graph vanishes.
    """

    def visit(node_id, rebuild):
        node = graph.node(node_id)
        if is_waveform(graph, node_id) and _try_duration(graph, node_id) == 0.0:
            return None
        if isinstance(node, Sequence):
            kept = [c for c in (rebuild(c) for c in node.children)
                    if c is not None]
            if not kept:
                return None
            if len(kept) == 1:
                return kept[0]
            if tuple(kept) == node.children:
                return node_id
            return graph.sequence(*kept)
        return _rebuild_generic(graph, node_id, rebuild)

    result = _rewrite(graph, root, visit)
    if result is None:
        raise EmptyResultError("entire graph has zero duration")
    return result


def _shift_phase_edge(graph: Graph, edge: NodeId, delta: float) -> NodeId:
    """Phase edge advanced by ``delta`` radians, keeping the edge munchable."""
    node = graph.node(edge)
    match node:
        case Num(value=v):
            return graph.num(v + delta)
        case Const(value=v, duration=d):
            return graph.const(_shift_phase_edge(graph, v, delta), d)
        case Sequence(children=children) if all(
                isinstance(graph.node(c), Const) for c in children):
            return graph.sequence(
                *(_shift_phase_edge(graph, c, delta) for c in children))
        case _:
            return graph.sum(edge, graph.num(delta))


def cosine_to_sine(graph: Graph, root: NodeId) -> NodeId:
    """Replace every Cosine with a Sine whose phase leads by pi/2."""

    def visit(node_id, rebuild):
        node = graph.node(node_id)
        if isinstance(node, Cosine):
            freq = rebuild(node.frequency) or node.frequency
            phase = rebuild(node.phase) or node.phase
            phase = _shift_phase_edge(graph, phase, math.pi / 2.0)
            return graph.add(Sine(freq, phase, node.duration, node.clock))
        return _rebuild_generic(graph, node_id, rebuild)

    return _rewrite(graph, root, visit)


def fold_constants(graph: Graph, root: NodeId) -> NodeId:
    """Collapse Sum/Product operands that are literal numbers.

    The Num subset folds into a single leading Num; identity elements
    (0 for Sum, 1 for Product) are then dropped. Evaluation combines
    constants first, so folding is exact.
    """

    def visit(node_id, rebuild):
        node = graph.node(node_id)
        if not isinstance(node, Sum | Product):
            return _rebuild_generic(graph, node_id, rebuild)
        ops = tuple(rebuild(c) or c for c in node.operands)
        is_sum = isinstance(node, Sum)
        unit = 0.0 if is_sum else 1.0
        nums = [graph.node(o).value for o in ops if isinstance(graph.node(o), Num)]
        rest = [o for o in ops if not isinstance(graph.node(o), Num)]
        if not rest:
            acc = nums[0]
            for v in nums[1:]:
                acc = acc + v if is_sum else acc * v
            return graph.num(acc)
        if len(nums) >= 2:
            acc = nums[0]
            for v in nums[1:]:
                acc = acc + v if is_sum else acc * v
            new_ops = ([graph.num(acc)] if acc != unit else []) + rest
        elif len(nums) == 1 and nums[0] == unit:
            new_ops = rest
        else:
            new_ops = list(ops)
        if len(new_ops) == 1:
            return new_ops[0]
        if tuple(new_ops) == ops and tuple(ops) == node.operands:
            return node_id
        return graph.add(Sum(tuple(new_ops)) if is_sum
                         else Product(tuple(new_ops)))

    return _rewrite(graph, root, visit)


def _const_scalar(graph: Graph, const_id: NodeId) -> Optional[float]:
    value = graph.node(graph.node(const_id).value)
    return value.value if isinstance(value, Num) else None


def _mergeable(graph: Graph, a: NodeId, b: NodeId) -> bool:
    ca, cb = graph.node(a), graph.node(b)
    if ca.value == cb.value:  # same parameter node: identical under any binding
        return True
    va, vb = _const_scalar(graph, a), _const_scalar(graph, b)
    if va is None or vb is None:
        return False
    return abs(va - vb) <= MERGE_RTOL * max(abs(va), abs(vb))


def merge_identical_consts(graph: Graph, root: NodeId) -> NodeId:
    """Merge adjacent equal-valued Const children of a Sequence."""

    def visit(node_id, rebuild):
        node = graph.node(node_id)
        if not isinstance(node, Sequence):
            return _rebuild_generic(graph, node_id, rebuild)
        children = [rebuild(c) or c for c in node.children]
        merged: list[NodeId] = []
        for child in children:
            if (merged and isinstance(graph.node(merged[-1]), Const)
                    and isinstance(graph.node(child), Const)
                    and _mergeable(graph, merged[-1], child)):
                prev = graph.node(merged[-1])
                merged[-1] = graph.add(
                    Const(prev.value,
                          prev.duration + graph.node(child).duration))
            else:
                merged.append(child)
        if len(merged) == 1:
            return merged[0]
        if tuple(merged) == node.children:
            return node_id
        return graph.sequence(*merged)

    return _rewrite(graph, root, visit)


#: Pipeline pass order assumed by the device munchers.
PASS_ORDER = (remove_zero_duration, cosine_to_sine, fold_constants,
              merge_identical_consts)


def normalize(graph: Graph, root: NodeId) -> NodeId:
    """Run the fixed pass pipeline once and return the new root."""
    for pass_fn in PASS_ORDER:
        root = pass_fn(graph, root)
    return root
