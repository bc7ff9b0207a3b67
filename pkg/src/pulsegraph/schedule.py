"""Multi-channel schedule construction with automatic zero padding.

A schedule is built through nested sequential/parallel contexts and
finalized into one immutable graph root per channel. Within a sequential
context, items occupy consecutive time slots and channels absent from a
slot are padded with Zero nodes; within a parallel context, items start
simultaneously and shorter branches receive trailing Zero padding.

Pad durations depend on pulse durations. When those are symbolic (Var
durations), padding cannot be computed at finalize time; such pads are
emitted as Zero nodes whose duration is an internal pad variable, and
:meth:`Schedule.bind_parameters` resolves them after each rebinding. Pad
values are nudged by at most a few ulps so that per-channel durations sum
to the schedule total exactly.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Optional, Union

from .errors import (
    DuplicateChannelInParallelError,
    EmptyResultError,
    NoOpenContextError,
    ScheduleError,
    UnbalancedCloseError,
    UnboundVariableError,
)
from .graph import Graph, NodeId, duration
from .transforms import _apply_bindings, collect_vars, normalize

_PAD_PREFIX = "__pad"

# Duration expressions: ('lit', x) | ('node', id) | ('sum', [e..]) |
# ('max', [e..]) | ('pad', total_e, covered_e). Sums resolve left to right,
# matching Sequence duration so resolved values line up bit for bit.
DurExpr = tuple


def resolve_expr(graph: Graph, expr: DurExpr) -> float:
    tag = expr[0]
    if tag == "lit":
        return expr[1]
    if tag == "node":
        return duration(graph, expr[1])
    if tag == "sum":
        total = 0.0
        for e in expr[1]:
            total += resolve_expr(graph, e)
        return total
    if tag == "max":
        return max(resolve_expr(graph, e) for e in expr[1])
    if tag == "pad":
        total = resolve_expr(graph, expr[1])
        covered = resolve_expr(graph, expr[2])
        return _pad_fill(total, covered)
    raise AssertionError(f"unknown duration expression {tag!r}")


def _pad_fill(total: float, covered: float) -> float:
    """Pad length such that covered + pad == total holds exactly in floats."""
    pad = total - covered
    if pad <= 0.0:
        return 0.0
    for _ in range(64):
        got = covered + pad
        if got == total:
            break
        pad = math.nextafter(pad, math.inf if got < total else -math.inf)
        if pad < 0.0:
            return 0.0
    return pad


@dataclass
class _Play:
    channel: str
    root: NodeId


@dataclass
class _Context:
    kind: str  # 'seq' | 'par'
    items: list = field(default_factory=list)
    # channel -> index of the item addressing it (parallel disjointness check)
    chan_item: dict[str, int] = field(default_factory=dict)
    index_in_parent: int = 0


class ScheduleBuilder:
    """Accumulates plays inside nested contexts; one-shot ``finalize``."""

    def __init__(self, graph: Graph, channels: Optional[Iterable[str]] = None):
        self.graph = graph
        self._declared = list(channels) if channels is not None else []
        self._played: list[str] = []
        self._root = _Context("seq")
        self._stack: list[_Context] = []
        self._finalized = False

    def _check_open(self) -> None:
        if self._finalized:
            raise ScheduleError("builder already finalized")

    def _open(self, kind: str) -> None:
        self._check_open()
        parent = self._stack[-1] if self._stack else self._root
        ctx = _Context(kind, index_in_parent=len(parent.items))
        parent.items.append(ctx)
        self._stack.append(ctx)

    def open_sequential(self) -> None:
        self._open("seq")

    def open_parallel(self) -> None:
        self._open("par")

    def close(self) -> None:
        self._check_open()
        if not self._stack:
            raise UnbalancedCloseError("no open context to close")
        self._stack.pop()

    @contextmanager
    def sequential(self):
        self.open_sequential()
        try:
            yield self
        finally:
            self.close()

    @contextmanager
    def parallel(self):
        self.open_parallel()
        try:
            yield self
        finally:
            self.close()

    def play(self, channel: str, root: NodeId) -> None:
        self._check_open()
        if not self._stack:
            raise NoOpenContextError("play requires an open context")
        if not channel:
            raise ScheduleError("channel name must be non-empty")
        self.graph.node(root)  # raises DanglingRefError for foreign handles
        top = self._stack[-1]
        top.items.append(_Play(channel, root))
        # enforce at-most-once-per-parallel through every enclosing context
        item_index = len(top.items) - 1
        for ctx in reversed(self._stack):
            if ctx.kind == "par":
                known = ctx.chan_item.get(channel)
                if known is not None and known != item_index:
                    raise DuplicateChannelInParallelError(
                        f"channel '{channel}' addressed twice in one "
                        "parallel context"
                    )
                ctx.chan_item[channel] = item_index
            item_index = ctx.index_in_parent
        if channel not in self._played:
            self._played.append(channel)

    # -- finalization --------------------------------------------------------

    def finalize(self) -> "Schedule":
        self._check_open()
        if self._stack:
            raise UnbalancedCloseError(
                f"{len(self._stack)} context(s) still open at finalize"
            )
        self._finalized = True
        graph = self.graph
        channels = list(self._declared)
        for ch in self._played:
            if ch not in channels:
                channels.append(ch)

        pad_rules: list[tuple[NodeId, DurExpr]] = []
        pad_counter = [0]

        def make_pad(expr: DurExpr) -> Optional[NodeId]:
            try:
                value = resolve_expr(graph, expr)
            except UnboundVariableError:
                name = f"{_PAD_PREFIX}{pad_counter[0]}"
                pad_counter[0] += 1
                var_id = graph.var(name)
                pad_rules.append((var_id, expr))
                return graph.zero(var_id)
            if value == 0.0:
                return None
            return graph.zero(value)

        def lower(ctx: _Context) -> tuple[dict[str, NodeId], DurExpr]:
            lowered = []
            for item in ctx.items:
                if isinstance(item, _Play):
                    lowered.append(({item.channel: item.root},
                                    ("node", item.root)))
                else:
                    lowered.append(lower(item))
            if not lowered:
                return {}, ("lit", 0.0)
            exprs = [e for _, e in lowered]
            if ctx.kind == "seq":
                ctx_expr: DurExpr = ("sum", exprs)
                addressed = [ch for chans, _ in lowered for ch in chans]
                pieces: dict[str, NodeId] = {}
                for ch in dict.fromkeys(addressed):
                    parts = []
                    for chans, expr in lowered:
                        if ch in chans:
                            parts.append(chans[ch])
                        else:
                            pad = make_pad(expr)
                            if pad is not None:
                                parts.append(pad)
                    pieces[ch] = parts[0] if len(parts) == 1 \
                        else graph.sequence(*parts)
                return pieces, ctx_expr
            ctx_expr = ("max", exprs)
            pieces = {}
            for chans, expr in lowered:
                for ch, piece in chans.items():
                    pad = make_pad(("pad", ctx_expr, expr))
                    pieces[ch] = piece if pad is None \
                        else graph.sequence(piece, pad)
            return pieces, ctx_expr

        pieces, total_expr = lower(self._root)

        roots: dict[str, NodeId] = {}
        for ch in channels:
            piece = pieces.get(ch)
            if piece is None:
                piece = make_pad(total_expr) or graph.zero(0.0)
            try:
                piece = normalize(graph, piece)
            except EmptyResultError:
                piece = graph.zero(0.0)
            roots[ch] = piece

        parameters: dict[str, list[NodeId]] = {}
        for root in roots.values():
            for name, ids in collect_vars(graph, root).items():
                if name.startswith(_PAD_PREFIX):
                    continue
                bucket = parameters.setdefault(name, [])
                for node_id in ids:
                    if node_id not in bucket:
                        bucket.append(node_id)

        schedule = Schedule(graph, roots, total_expr, parameters, pad_rules)
        schedule._resolve_pads()
        return schedule


class Schedule:
    """Immutable multi-channel arrangement; only variable slots can change."""

    def __init__(self, graph: Graph, channels: dict[str, NodeId],
                 total_expr: DurExpr,
                 parameters: dict[str, list[NodeId]],
                 pad_rules: list[tuple[NodeId, DurExpr]]):
        self.graph = graph
        self.channels = MappingProxyType(dict(channels))
        self._total_expr = total_expr
        self.parameters = MappingProxyType(
            {name: tuple(ids) for name, ids in parameters.items()})
        self._pad_rules = tuple(pad_rules)

    @property
    def parameter_names(self) -> tuple[str, ...]:
        return tuple(self.parameters)

    @property
    def total_duration(self) -> float:
        return resolve_expr(self.graph, self._total_expr)

    def channel_duration(self, channel: str) -> float:
        return duration(self.graph, self.channels[channel])

    def bind_parameters(self, bindings: dict[str, float]) -> None:
        """Update variable slots and re-resolve any deferred padding."""
        _apply_bindings(self.graph, self.parameters, bindings)
        self._resolve_pads()

    def _resolve_pads(self) -> None:
        for var_id, expr in self._pad_rules:
            try:
                self.graph.node(var_id).bound = resolve_expr(self.graph, expr)
            except UnboundVariableError:
                self.graph.node(var_id).bound = None

    def reset_bindings(self) -> None:
        for ids in self.parameters.values():
            for node_id in ids:
                self.graph.node(node_id).bound = None
        for var_id, _ in self._pad_rules:
            self.graph.node(var_id).bound = None


def tile(fragment: Schedule, n: int) -> Schedule:
    """Repeat a finalized schedule n times by sharing its channel roots."""
    if not isinstance(n, int) or n < 1:
        raise ValueError(f"tile count must be a positive integer, got {n!r}")
    graph = fragment.graph
    channels = {ch: graph.sequence(*([root] * n))
                for ch, root in fragment.channels.items()}
    total: DurExpr = ("sum", [fragment._total_expr] * n)
    return Schedule(graph, channels, total,
                    {name: list(ids) for name, ids in fragment.parameters.items()},
                    list(fragment._pad_rules))
