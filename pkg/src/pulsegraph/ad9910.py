"""AD9910-style DDS backend: template matching and register quantization.

The muncher accepts two shapes: a bare Zero node (padding no-op) and the
single-tone template, an optional amplitude * Sine product whose frequency,
phase and amplitude edges are scalars or step functions (sequences of
constants). Everything else is rejected with a rule trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

from .errors import (
    AmplitudeOutOfRangeError,
    FrequencyOutOfRangeError,
    MultiParamModulationError,
    TooManyStepsError,
)
from .graph import (
    Const,
    Graph,
    NodeId,
    Num,
    Product,
    Sequence,
    Sine,
    Zero,
    duration,
    evaluate_scalar,
    validate,
)
from .errors import NotScalarError
from .munch import Muncher, MunchRule
from .transforms import detect_clock, normalize

#: Tolerance for matching a parameter timeline against the pulse duration.
_TIMELINE_RTOL = 1e-9


@dataclass(frozen=True)
class Ad9910Config:
    sysclk: float = 1e9
    max_frequency: float = 4e8
    ftw_bits: int = 32
    pow_bits: int = 16
    asf_bits: int = 14
    ram_slots: int = 1024

    def __post_init__(self):
        if self.max_frequency > self.sysclk / 2:
            raise ValueError("max_frequency must be <= sysclk/2")


# ---------------------------------------------------------------------------
# device records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstDC:
    """Constant-valued segment. Doubles as a step within StepWaveform, where
    the amplitude field carries the stepped parameter in its own unit."""

    amplitude: float
    duration: float

    def __post_init__(self):
        if not (math.isfinite(self.amplitude) and math.isfinite(self.duration)):
            raise ValueError("ConstDC fields must be finite")
        if self.duration < 0:
            raise ValueError("ConstDC duration must be >= 0")


@dataclass(frozen=True)
class StepWaveform:
    steps: tuple[ConstDC, ...]

    def __post_init__(self):
        if len(self.steps) < 2:
            raise ValueError("StepWaveform needs >= 2 steps")

    @property
    def total_duration(self) -> float:
        total = 0.0
        for step in self.steps:
            total += step.duration
        return total


ScalarOrStep = Union[float, StepWaveform]


@dataclass(frozen=True)
class SingleTone:
    frequency: float
    phase: float
    amplitude: float
    duration: float
    phase_continuous: bool = False


@dataclass(frozen=True)
class DiscreteSine:
    frequency: ScalarOrStep
    phase: ScalarOrStep
    amplitude: ScalarOrStep
    duration: float
    phase_continuous: bool = False

    def __post_init__(self):
        if not any(isinstance(p, StepWaveform)
                   for p in (self.frequency, self.phase, self.amplitude)):
            raise ValueError("DiscreteSine needs at least one StepWaveform")


@dataclass(frozen=True)
class RegisterWords:
    ftw: int
    pow: int
    asf: int

    def __post_init__(self):
        if not 0 <= self.ftw < 2 ** 32:
            raise ValueError("ftw out of 32-bit range")
        if not 0 <= self.pow < 2 ** 16:
            raise ValueError("pow out of 16-bit range")
        if not 0 <= self.asf < 2 ** 14:
            raise ValueError("asf out of 14-bit range")


# ---------------------------------------------------------------------------
# munchers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _MunchContext:
    config: Ad9910Config
    phase_continuous: bool


def _match_zero(graph: Graph, root: NodeId, ctx: _MunchContext):
    node = graph.node(root)
    if not isinstance(node, Zero):
        return None
    return ConstDC(0.0, duration(graph, root))


def _leaf_param(graph: Graph, edge: NodeId, pulse_duration: float,
                ctx: _MunchContext) -> Optional[ScalarOrStep]:
    """Second-layer munch of a parameter edge: step function, then scalar."""
    node = graph.node(edge)
    if isinstance(node, Sequence) and len(node.children) >= 2 and all(
            isinstance(graph.node(c), Const) for c in node.children):
        if len(node.children) > ctx.config.ram_slots:
            raise TooManyStepsError(
                f"{len(node.children)} steps exceed {ctx.config.ram_slots} "
                "RAM slots"
            )
        steps = tuple(
            ConstDC(evaluate_scalar(graph, graph.node(c).value),
                    graph.node(c).duration)
            for c in node.children
        )
        total = 0.0
        for step in steps:
            total += step.duration
        if abs(total - pulse_duration) > _TIMELINE_RTOL * max(
                abs(total), abs(pulse_duration)):
            return None
        return StepWaveform(steps)
    if isinstance(node, Const):
        if abs(node.duration - pulse_duration) > _TIMELINE_RTOL * max(
                abs(node.duration), abs(pulse_duration)):
            return None
        return evaluate_scalar(graph, node.value)
    try:
        return evaluate_scalar(graph, edge)
    except NotScalarError:
        return None


def _check_frequency(value: float, config: Ad9910Config) -> None:
    if not 0.0 <= value <= config.max_frequency:
        raise FrequencyOutOfRangeError(
            f"frequency {value} Hz outside [0, {config.max_frequency}] Hz"
        )


def _check_amplitude(value: float) -> None:
    if abs(value) > 1.0:
        raise AmplitudeOutOfRangeError(f"|amplitude| must be <= 1, got {value}")


def _match_template(graph: Graph, root: NodeId, ctx: _MunchContext):
    node = graph.node(root)
    amp_edge: Optional[NodeId] = None
    if isinstance(node, Product):
        if len(node.operands) != 2:
            return None
        sines = [o for o in node.operands if isinstance(graph.node(o), Sine)]
        if len(sines) != 1:
            return None
        sine_id = sines[0]
        amp_edge = next(o for o in node.operands if o != sine_id)
    elif isinstance(node, Sine):
        sine_id = root
    else:
        return None

    sine = graph.node(sine_id)
    pulse_duration = sine.duration

    freq = _leaf_param(graph, sine.frequency, pulse_duration, ctx)
    phase = _leaf_param(graph, sine.phase, pulse_duration, ctx)
    amp = 1.0 if amp_edge is None else _leaf_param(graph, amp_edge,
                                                   pulse_duration, ctx)
    if freq is None or phase is None or amp is None:
        return None

    if isinstance(freq, StepWaveform):
        for step in freq.steps:
            _check_frequency(step.amplitude, ctx.config)
    else:
        _check_frequency(freq, ctx.config)
    if isinstance(amp, StepWaveform):
        for step in amp.steps:
            _check_amplitude(step.amplitude)
    else:
        _check_amplitude(amp)

    stepped = [p for p in (freq, phase, amp) if isinstance(p, StepWaveform)]
    if not stepped:
        return SingleTone(freq, phase, amp, pulse_duration,
                          ctx.phase_continuous)
    if len(stepped) > 1:
        raise MultiParamModulationError(
            "at most one parameter may be step-modulated per pulse"
        )
    return DiscreteSine(freq, phase, amp, pulse_duration, ctx.phase_continuous)


def build_muncher(config: Ad9910Config, phase_continuous: bool) -> Muncher:
    return Muncher(
        [MunchRule("zero", _match_zero),
         MunchRule("single_tone_template", _match_template)],
        _MunchContext(config, phase_continuous),
    )


def transpile_ad9910(graph: Graph, root: NodeId,
                     config: Optional[Ad9910Config] = None):
    """Lower a pulse graph to ConstDC, SingleTone or DiscreteSine."""
    config = config or Ad9910Config()
    validate(graph, root)
    root = normalize(graph, root)
    phase_continuous = detect_clock(graph, root)
    return build_muncher(config, phase_continuous).munch(graph, root)


# ---------------------------------------------------------------------------
# register quantization
# ---------------------------------------------------------------------------

def quantize_registers(tone: SingleTone,
                       config: Optional[Ad9910Config] = None) -> RegisterWords:
    """Standard DDS word formulas: bit-exact contract for golden tests."""
    config = config or Ad9910Config()
    _check_frequency(tone.frequency, config)
    _check_amplitude(tone.amplitude)
    ftw = round(tone.frequency / config.sysclk * 2 ** config.ftw_bits)
    pow_word = round((tone.phase % (2.0 * math.pi)) / (2.0 * math.pi)
                     * 2 ** config.pow_bits) % 2 ** config.pow_bits
    asf = round(abs(tone.amplitude) * (2 ** config.asf_bits - 1))
    return RegisterWords(ftw, pow_word, asf)
