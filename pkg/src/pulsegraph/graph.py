"""Pulse graphs: arena-allocated DAGs of pulse nodes with a reference sampler.

A pulse is a rooted DAG. Leaf nodes hold values (:class:`Num`, :class:`Var`)
or primitive waveforms (:class:`Const`, :class:`Zero`, :class:`Sine`,
:class:`Cosine`, :class:`Poly`, :class:`Gauss`); operator nodes combine them
(:class:`Sum`, :class:`Product`, :class:`Sequence`). Nodes live in a
:class:`Graph` arena and refer to each other through :class:`NodeId` handles,
so subgraphs may be shared between several parents (and between schedules).

The sampler defined here (:func:`evaluate_at`, :func:`sample`) is the
semantic ground truth against which every device lowering is checked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Union

import numpy as np

from .errors import (
    BadArityError,
    CycleDetectedError,
    DanglingRefError,
    MixedDurationError,
    NegativeDurationError,
    NotScalarError,
    OutOfRangeError,
    UnboundVariableError,
    UnsupportedNodeError,
)

TWO_PI = 2.0 * math.pi

#: Relative tolerance used when durations are compared for equality.
DURATION_RTOL = 1e-12


@dataclass(frozen=True, slots=True)
class NodeId:
    """Opaque handle into a graph arena."""

    index: int


ParamRef = Union[NodeId, float, int]
DurationLike = Union[float, NodeId]


# ---------------------------------------------------------------------------
# node kinds
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False, slots=True)
class Num:
    value: float


@dataclass(eq=False, slots=True)
class Var:
    """Named symbolic value with an in-place, resettable binding slot."""

    name: str
    bound: Optional[float] = None


@dataclass(frozen=True, eq=False, slots=True)
class Const:
    """Constant-valued segment holding its value for ``duration`` seconds."""

    value: NodeId
    duration: float


@dataclass(frozen=True, eq=False, slots=True)
class Zero:
    """No-op segment. Duration may be a scalar node for late-bound padding."""

    duration: DurationLike


@dataclass(frozen=True, eq=False, slots=True)
class Sine:
    frequency: NodeId
    phase: NodeId
    duration: float
    clock: Optional[NodeId] = None


@dataclass(frozen=True, eq=False, slots=True)
class Cosine:
    frequency: NodeId
    phase: NodeId
    duration: float
    clock: Optional[NodeId] = None


@dataclass(frozen=True, eq=False, slots=True)
class Poly:
    """Polynomial segment: y(t) = sum_i coefficients[i] * t**i."""

    coefficients: tuple[NodeId, ...]
    duration: float


@dataclass(frozen=True, eq=False, slots=True)
class Gauss:
    amplitude: NodeId
    mean: float
    sigma: float
    duration: float


@dataclass(frozen=True, eq=False, slots=True)
class Sum:
    operands: tuple[NodeId, ...]


@dataclass(frozen=True, eq=False, slots=True)
class Product:
    operands: tuple[NodeId, ...]


@dataclass(frozen=True, eq=False, slots=True)
class Sequence:
    children: tuple[NodeId, ...]


@dataclass(frozen=True, eq=False, slots=True)
class Clock:
    """Identity tag whose presence enables phase-continuous evaluation."""

    id: str


# --- signal-generator extension nodes (two-tone channel devices) ------------

@dataclass(frozen=True, eq=False, slots=True)
class Spline:
    """Smooth parameter modulation through equally spaced knots."""

    knots: tuple[float, ...]


@dataclass(frozen=True, eq=False, slots=True)
class Discrete:
    """Stepped parameter modulation over equal slices of the pulse duration."""

    steps: tuple[float, ...]


@dataclass(frozen=True, eq=False, slots=True)
class ToneNode:
    frequency: NodeId
    phase: NodeId
    amplitude: NodeId
    sync_phase: bool = False
    frame_index: Optional[int] = None
    feedback_enable: bool = False


@dataclass(frozen=True, eq=False, slots=True)
class FramerotNode:
    rotation: NodeId
    apply_at_start: bool = False
    apply_at_end: bool = False
    clear_accumulator: bool = False


@dataclass(frozen=True, eq=False, slots=True)
class ChannelNode:
    """Two tones plus two frame rotations forming one channel pulse."""

    tones: tuple[NodeId, NodeId]
    frames: tuple[NodeId, NodeId]
    duration: DurationLike


PulseNode = Union[
    Num, Var, Const, Zero, Sine, Cosine, Poly, Gauss, Sum, Product, Sequence,
    Clock, Spline, Discrete, ToneNode, FramerotNode, ChannelNode,
]

#: Node kinds usable as tone/frame parameter values.
PARAM_VALUE_KINDS = (Num, Var, Spline, Discrete)

#: Node kinds with an intrinsic duration field.
_LEAF_WAVEFORMS = (Const, Zero, Sine, Cosine, Poly, Gauss, ChannelNode)


def kind_name(node: PulseNode) -> str:
    return type(node).__name__


def _check_finite(value: float, what: str) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{what} must be finite, got {value!r}")
    return value


def _check_duration(duration: float) -> float:
    duration = _check_finite(duration, "duration")
    if duration < 0:
        raise NegativeDurationError(f"duration must be >= 0, got {duration}")
    return duration


# ---------------------------------------------------------------------------
# arena
# ---------------------------------------------------------------------------

class Graph:
    """Arena owning the nodes of one or more pulse DAGs.

    Nodes are immutable after insertion except for :class:`Var` binding
    slots; handles returned by the constructor methods stay valid for the
    lifetime of the arena. Construction is bottom-up, so cycles cannot be
    built through this interface.
    """

    __slots__ = ("_nodes",)

    def __init__(self) -> None:
        self._nodes: list[PulseNode] = []

    def __len__(self) -> int:
        return len(self._nodes)

    @property
    def node_count(self) -> int:
        return len(self._nodes)

    def node(self, node_id: NodeId) -> PulseNode:
        try:
            return self._nodes[node_id.index]
        except IndexError:
            raise DanglingRefError(f"no node at index {node_id.index}") from None

    def add(self, node: PulseNode) -> NodeId:
        """Insert a node, checking its edges against the current arena."""
        for child in child_ids(node):
            if not 0 <= child.index < len(self._nodes):
                raise DanglingRefError(
                    f"{kind_name(node)} refers to missing node {child.index}"
                )
        self._check_node(node)
        self._nodes.append(node)
        return NodeId(len(self._nodes) - 1)

    def _check_node(self, node: PulseNode) -> None:
        match node:
            case Num(value=v):
                _check_finite(v, "Num value")
            case Var(name=name):
                if not name:
                    raise ValueError("Var name must be non-empty")
            case Const(duration=d):
                _check_duration(d)
            case Sine(duration=d, clock=c) | Cosine(duration=d, clock=c):
                _check_duration(d)
                if c is not None and not isinstance(self.node(c), Clock):
                    raise BadArityError("clock edge must point at a Clock node")
            case Poly(coefficients=coeffs, duration=d):
                _check_duration(d)
                if not coeffs:
                    raise BadArityError("Poly needs >= 1 coefficient")
            case Gauss(duration=d, sigma=s):
                _check_duration(d)
                if not (s > 0 and math.isfinite(s)):
                    raise NegativeDurationError("Gauss sigma must be > 0")
            case Zero(duration=d):
                if not isinstance(d, NodeId):
                    _check_duration(d)
            case Sum(operands=ops) | Product(operands=ops):
                if len(ops) < 2:
                    raise BadArityError(
                        f"{kind_name(node)} needs >= 2 operands, got {len(ops)}"
                    )
            case Sequence(children=children):
                if not children:
                    raise BadArityError("Sequence needs >= 1 child")
            case Spline(knots=knots):
                if len(knots) < 2:
                    raise BadArityError("Spline needs >= 2 knots")
                for k in knots:
                    _check_finite(k, "Spline knot")
            case Discrete(steps=steps):
                if not steps:
                    raise BadArityError("Discrete needs >= 1 step")
                for s in steps:
                    _check_finite(s, "Discrete step")
            case ToneNode():
                for ref in (node.frequency, node.phase, node.amplitude):
                    if not isinstance(self.node(ref), PARAM_VALUE_KINDS):
                        raise BadArityError(
                            "tone parameters must be Num, Var, Spline or "
                            f"Discrete, got {kind_name(self.node(ref))}"
                        )
                if node.frame_index not in (None, 0, 1):
                    raise ValueError("frame_index must be 0, 1 or None")
            case FramerotNode():
                if not isinstance(self.node(node.rotation), PARAM_VALUE_KINDS):
                    raise BadArityError("frame rotation must be a parameter value")
            case ChannelNode(tones=tones, frames=frames, duration=d):
                if len(tones) != 2 or len(frames) != 2:
                    raise BadArityError("ChannelNode needs exactly 2 tones + 2 frames")
                if not isinstance(d, NodeId):
                    _check_duration(d)

    # -- constructors --------------------------------------------------------

    def _param(self, value: ParamRef) -> NodeId:
        if isinstance(value, NodeId):
            return value
        return self.num(float(value))

    def num(self, value: float) -> NodeId:
        return self.add(Num(_check_finite(value, "Num value")))

    def var(self, name: str, bound: Optional[float] = None) -> NodeId:
        return self.add(Var(name, bound))

    def const(self, value: ParamRef, duration: float) -> NodeId:
        return self.add(Const(self._param(value), float(duration)))

    def zero(self, duration: DurationLike) -> NodeId:
        if not isinstance(duration, NodeId):
            duration = float(duration)
        return self.add(Zero(duration))

    def sine(self, frequency: ParamRef, phase: ParamRef, duration: float,
             clock: Optional[NodeId] = None) -> NodeId:
        return self.add(Sine(self._param(frequency), self._param(phase),
                             float(duration), clock))

    def cosine(self, frequency: ParamRef, phase: ParamRef, duration: float,
               clock: Optional[NodeId] = None) -> NodeId:
        return self.add(Cosine(self._param(frequency), self._param(phase),
                               float(duration), clock))

    def poly(self, coefficients: Iterable[ParamRef], duration: float) -> NodeId:
        coeffs = tuple(self._param(c) for c in coefficients)
        return self.add(Poly(coeffs, float(duration)))

    def gauss(self, amplitude: ParamRef, mean: float, sigma: float,
              duration: float) -> NodeId:
        return self.add(Gauss(self._param(amplitude), float(mean), float(sigma),
                              float(duration)))

    def sum(self, *operands: NodeId) -> NodeId:
        return self.add(Sum(tuple(operands)))

    def product(self, *operands: NodeId) -> NodeId:
        return self.add(Product(tuple(operands)))

    def sequence(self, *children: NodeId) -> NodeId:
        return self.add(Sequence(tuple(children)))

    def clock(self, id: str = "clock") -> NodeId:
        return self.add(Clock(id))

    def spline(self, knots: Iterable[float]) -> NodeId:
        return self.add(Spline(tuple(float(k) for k in knots)))

    def discrete(self, steps: Iterable[float]) -> NodeId:
        return self.add(Discrete(tuple(float(s) for s in steps)))

    def tone(self, frequency: ParamRef, phase: ParamRef, amplitude: ParamRef,
             sync_phase: bool = False, frame_index: Optional[int] = None,
             feedback_enable: bool = False) -> NodeId:
        return self.add(ToneNode(self._param(frequency), self._param(phase),
                                 self._param(amplitude), sync_phase,
                                 frame_index, feedback_enable))

    def framerot(self, rotation: ParamRef, apply_at_start: bool = False,
                 apply_at_end: bool = False,
                 clear_accumulator: bool = False) -> NodeId:
        return self.add(FramerotNode(self._param(rotation), apply_at_start,
                                     apply_at_end, clear_accumulator))

    def channel(self, tones: tuple[NodeId, NodeId],
                frames: tuple[NodeId, NodeId],
                duration: DurationLike) -> NodeId:
        if not isinstance(duration, NodeId):
            duration = float(duration)
        return self.add(ChannelNode(tuple(tones), tuple(frames), duration))


def child_ids(node: PulseNode) -> tuple[NodeId, ...]:
    """Ordered outgoing edges of a node (parameter edges included)."""
    match node:
        case Const(value=v):
            return (v,)
        case Zero(duration=d):
            return (d,) if isinstance(d, NodeId) else ()
        case Sine(frequency=f, phase=p, clock=c) | Cosine(frequency=f, phase=p, clock=c):
            return (f, p, c) if c is not None else (f, p)
        case Poly(coefficients=coeffs):
            return coeffs
        case Gauss(amplitude=a):
            return (a,)
        case Sum(operands=ops) | Product(operands=ops):
            return ops
        case Sequence(children=children):
            return children
        case ToneNode(frequency=f, phase=p, amplitude=a):
            return (f, p, a)
        case FramerotNode(rotation=r):
            return (r,)
        case ChannelNode(tones=tones, frames=frames, duration=d):
            edges = tones + frames
            return edges + (d,) if isinstance(d, NodeId) else edges
        case _:
            return ()


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def validate(graph: Graph, root: NodeId) -> None:
    """Check acyclicity, arity, edge targets and duration signs from ``root``.

    Raises :class:`~pulsegraph.errors.GraphError` subclasses on the first
    violation found; returns ``None`` when the graph is well formed.
    """
    WHITE, GREY, BLACK = 0, 1, 2
    color: dict[int, int] = {}
    stack: list[tuple[NodeId, bool]] = [(root, False)]
    while stack:
        node_id, leaving = stack.pop()
        if leaving:
            color[node_id.index] = BLACK
            continue
        state = color.get(node_id.index, WHITE)
        if state == BLACK:
            continue
        if state == GREY:
            raise CycleDetectedError(f"cycle through node {node_id.index}")
        if not 0 <= node_id.index < len(graph):
            raise DanglingRefError(f"no node at index {node_id.index}")
        node = graph.node(node_id)
        graph._check_node(node)
        color[node_id.index] = GREY
        stack.append((node_id, True))
        for child in child_ids(node):
            if not 0 <= child.index < len(graph):
                raise DanglingRefError(
                    f"{kind_name(node)} refers to missing node {child.index}"
                )
            if color.get(child.index, WHITE) == GREY:
                raise CycleDetectedError(f"cycle through node {child.index}")
            stack.append((child, False))


# ---------------------------------------------------------------------------
# scalar evaluation
# ---------------------------------------------------------------------------

def evaluate_scalar(graph: Graph, node_id: NodeId) -> float:
    """Collapse a durationless value subgraph to a float.

    Accepts Num, bound Var and Sum/Product trees of those. Constant operands
    are combined before the rest, matching the constant-folding pass so that
    folding never changes evaluation results.
    """
    node = graph.node(node_id)
    match node:
        case Num(value=v):
            return v
        case Var(name=name, bound=bound):
            if bound is None:
                raise UnboundVariableError(name)
            return bound
        case Sum(operands=ops):
            return _combine_scalars(graph, ops, 0.0, float.__add__)
        case Product(operands=ops):
            return _combine_scalars(graph, ops, 1.0, float.__mul__)
        case _:
            raise NotScalarError(f"{kind_name(node)} is not a scalar value")


def _combine_scalars(graph: Graph, operands: tuple[NodeId, ...], unit: float,
                     op: Callable[[float, float], float]) -> float:
    nums = []
    rest = []
    for oid in operands:
        (nums if isinstance(graph.node(oid), Num) else rest).append(oid)
    acc = unit
    started = False
    for oid in nums + rest:
        value = evaluate_scalar(graph, oid)
        acc = value if not started else op(acc, value)
        started = True
    return acc


def _resolve_duration_field(graph: Graph, duration: DurationLike) -> float:
    if isinstance(duration, NodeId):
        return evaluate_scalar(graph, duration)
    return duration


# ---------------------------------------------------------------------------
# duration
# ---------------------------------------------------------------------------

def is_waveform(graph: Graph, node_id: NodeId) -> bool:
    """True if the node occupies time (scalars and metadata nodes do not)."""
    node = graph.node(node_id)
    if isinstance(node, _LEAF_WAVEFORMS) or isinstance(node, Sequence):
        return True
    if isinstance(node, Sum | Product):
        return any(is_waveform(graph, o) for o in node.operands)
    return False


def duration(graph: Graph, root: NodeId) -> float:
    """Duration in seconds of the waveform rooted at ``root``.

    Scalars and metadata nodes report 0. Sequences sum their children in
    order; Sum/Product report the common duration of their waveform
    operands and raise :class:`MixedDurationError` on disagreement.
    """
    node = graph.node(root)
    match node:
        case Num() | Var() | Clock() | Spline() | Discrete() | ToneNode() \
                | FramerotNode():
            return 0.0
        case Const(duration=d) | Sine(duration=d) | Cosine(duration=d) \
                | Poly(duration=d) | Gauss(duration=d):
            return d
        case Zero(duration=d) | ChannelNode(duration=d):
            return _resolve_duration_field(graph, d)
        case Sequence(children=children):
            total = 0.0
            for child in children:
                total += duration(graph, child)
            return total
        case Sum(operands=ops) | Product(operands=ops):
            durs = [duration(graph, o) for o in ops if is_waveform(graph, o)]
            if not durs:
                return 0.0
            ref = durs[0]
            for d in durs[1:]:
                if abs(d - ref) > DURATION_RTOL * max(abs(d), abs(ref)):
                    raise MixedDurationError(
                        f"{kind_name(node)} operand durations differ: "
                        f"{ref!r} vs {d!r}"
                    )
            return ref
    raise UnsupportedNodeError(kind_name(node))  # pragma: no cover


# ---------------------------------------------------------------------------
# pointwise evaluation and sampling
# ---------------------------------------------------------------------------

def _param_at(graph: Graph, node_id: NodeId, t: float) -> float:
    """Value of a parameter edge at local time t (scalar or stepped/waveform)."""
    try:
        return evaluate_scalar(graph, node_id)
    except NotScalarError:
        return _eval(graph, node_id, t, 0.0)


def _freq_cycles(graph: Graph, freq_id: NodeId, t: float) -> float:
    """Integral of a frequency edge over [0, t), in cycles, in closed form."""
    try:
        return evaluate_scalar(graph, freq_id) * t
    except NotScalarError:
        pass
    node = graph.node(freq_id)
    match node:
        case Const(value=v):
            return evaluate_scalar(graph, v) * t
        case Sequence(children=children):
            cycles = 0.0
            remaining = t
            for child in children:
                if remaining <= 0.0:
                    break
                d = duration(graph, child)
                span = min(remaining, d)
                cycles += _freq_cycles(graph, child, span)
                remaining -= d
            return cycles
        case Poly(coefficients=coeffs):
            # antiderivative of sum c_i t^i, evaluated by Horner
            acc = 0.0
            for i in reversed(range(len(coeffs))):
                c = evaluate_scalar(graph, coeffs[i])
                acc = acc * t + c / (i + 1)
            return acc * t
        case Zero():
            return 0.0
        case _:
            raise UnsupportedNodeError(
                f"cannot integrate frequency edge of kind {kind_name(node)}"
            )


def _node_cycles(graph: Graph, node_id: NodeId, t: float) -> float:
    """Cycles a timeline node accumulates over its local [0, min(t, dur))."""
    node = graph.node(node_id)
    match node:
        case Sine() | Cosine():
            span = min(t, node.duration)
            return _freq_cycles(graph, node.frequency, span)
        case Sequence(children=children):
            cycles = 0.0
            remaining = t
            for child in children:
                if remaining <= 0.0:
                    break
                d = duration(graph, child)
                cycles += _node_cycles(graph, child, min(remaining, d))
                remaining -= d
            return cycles
        case Sum(operands=ops) | Product(operands=ops):
            return sum(_node_cycles(graph, o, t) for o in ops
                       if is_waveform(graph, o))
        case _:
            return 0.0


def _eval(graph: Graph, node_id: NodeId, t: float, carried_cycles: float) -> float:
    node = graph.node(node_id)
    match node:
        case Num() | Var() | Sum() | Product() if not is_waveform(graph, node_id):
            return evaluate_scalar(graph, node_id)
        case Zero():
            return 0.0
        case Const(value=v):
            return evaluate_scalar(graph, v)
        case Poly(coefficients=coeffs):
            acc = 0.0
            for cid in reversed(coeffs):
                acc = acc * t + evaluate_scalar(graph, cid)
            return acc
        case Gauss(amplitude=a, mean=mean, sigma=sigma):
            amp = evaluate_scalar(graph, a)
            return amp * math.exp(-((t - mean) ** 2) / (2.0 * sigma * sigma))
        case Sine() | Cosine():
            phase = _param_at(graph, node.phase, t)
            if isinstance(node, Cosine):
                phase = phase + math.pi / 2.0
            if node.clock is not None:
                cycles = carried_cycles + _freq_cycles(graph, node.frequency, t)
                return math.sin(TWO_PI * cycles + phase)
            freq = _param_at(graph, node.frequency, t)
            return math.sin(TWO_PI * freq * t + phase)
        case Sum(operands=ops):
            nums = [o for o in ops if isinstance(graph.node(o), Num)]
            rest = [o for o in ops if not isinstance(graph.node(o), Num)]
            total = 0.0
            started = False
            for oid in nums + rest:
                v = _eval(graph, oid, t, carried_cycles)
                total = v if not started else total + v
                started = True
            return total
        case Product(operands=ops):
            nums = [o for o in ops if isinstance(graph.node(o), Num)]
            rest = [o for o in ops if not isinstance(graph.node(o), Num)]
            total = 1.0
            started = False
            for oid in nums + rest:
                v = _eval(graph, oid, t, carried_cycles)
                total = v if not started else total * v
                started = True
            return total
        case Sequence(children=children):
            offset = 0.0
            carried = carried_cycles
            for i, child in enumerate(children):
                d = duration(graph, child)
                if t < offset + d or i == len(children) - 1:
                    return _eval(graph, child, t - offset, carried)
                carried += _node_cycles(graph, child, d)
                offset += d
            raise OutOfRangeError(f"t={t} beyond sequence end")  # pragma: no cover
        case _:
            raise UnsupportedNodeError(
                f"{kind_name(node)} has no sampled meaning; use the device "
                "simulator"
            )


def evaluate_at(graph: Graph, root: NodeId, t: float,
                global_t: Optional[float] = None) -> float:
    """Evaluate the waveform at local time ``t``.

    ``global_t`` positions the node on an enclosing timeline; history outside
    the node is silent, so it does not change the result of a direct call.
    Phase-continuous (clocked) sines accumulate frequency cycles across the
    children of enclosing sequences, computed segment-analytically.
    """
    if global_t is None:
        global_t = t
    if is_waveform(graph, root):
        try:
            total = duration(graph, root)
        except UnboundVariableError:
            total = None
        if total is not None and not 0.0 <= t < total:
            raise OutOfRangeError(f"t={t} outside [0, {total})")
    return _eval(graph, root, t, 0.0)


# ---------------------------------------------------------------------------
# sampled waveforms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SampledWaveform:
    """Uniformly sampled real-valued signal."""

    sample_rate: float
    samples: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.size and not np.all(np.isfinite(samples)):
            raise ValueError("waveform samples must be finite")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.samples)) / self.sample_rate


def sample_count(total_duration: float, sample_rate: float) -> int:
    return int(round(total_duration * sample_rate))


def sample(graph: Graph, root: NodeId, sample_rate: float) -> SampledWaveform:
    """Sample the waveform at a uniform rate; length = round(duration * rate)."""
    total = duration(graph, root)
    if not math.isfinite(total):
        raise ValueError("cannot sample a waveform of non-finite duration")
    n = sample_count(total, sample_rate)
    out = np.empty(n, dtype=np.float64)
    for k in range(n):
        t = k / sample_rate
        if t >= total:  # guard the round-up edge at the final sample
            t = math.nextafter(total, 0.0)
        out[k] = _eval(graph, root, t, 0.0)
    return SampledWaveform(sample_rate, out)


# ---------------------------------------------------------------------------
# structural equality
# ---------------------------------------------------------------------------

def graphs_equal(graph: Graph, a: NodeId, b: NodeId) -> bool:
    """Structural equality of two roots within one arena (Vars match by name)."""
    memo: dict[tuple[int, int], bool] = {}

    def eq(x: NodeId, y: NodeId) -> bool:
        if x.index == y.index:
            return True
        key = (x.index, y.index)
        if key in memo:
            return memo[key]
        na, nb = graph.node(x), graph.node(y)
        if type(na) is not type(nb):
            memo[key] = False
            return False
        memo[key] = True  # assume equal while descending shared diamonds
        result = _fields_equal(na, nb) and all(
            eq(ca, cb) for ca, cb in zip(child_ids(na), child_ids(nb))
        ) and len(child_ids(na)) == len(child_ids(nb))
        memo[key] = result
        return result

    def _fields_equal(na: PulseNode, nb: PulseNode) -> bool:
        match na:
            case Num(value=v):
                return v == nb.value
            case Var(name=name):
                return name == nb.name
            case Const() | Sine() | Cosine() | Poly() | Gauss():
                return na.duration == nb.duration and getattr(na, "mean", None) == getattr(nb, "mean", None) and getattr(na, "sigma", None) == getattr(nb, "sigma", None)
            case Zero(duration=d) | ChannelNode(duration=d):
                dn = nb.duration
                if isinstance(d, NodeId) != isinstance(dn, NodeId):
                    return False
                return True if isinstance(d, NodeId) else d == dn
            case Clock(id=i):
                return i == nb.id
            case Spline(knots=k):
                return k == nb.knots
            case Discrete(steps=s):
                return s == nb.steps
            case ToneNode():
                return (na.sync_phase, na.frame_index, na.feedback_enable) == \
                       (nb.sync_phase, nb.frame_index, nb.feedback_enable)
            case FramerotNode():
                return (na.apply_at_start, na.apply_at_end, na.clear_accumulator) == \
                       (nb.apply_at_start, nb.apply_at_end, nb.clear_accumulator)
            case _:
                return True

    return eq(a, b)
