"""Exception hierarchy for graph construction, evaluation, scheduling and lowering."""


class PulseGraphError(Exception):
    """Base class for all errors raised by this package."""


# --- graph construction / validation ---------------------------------------

class GraphError(PulseGraphError):
    pass


class DanglingRefError(GraphError):
    pass


class CycleDetectedError(GraphError):
    pass


class BadArityError(GraphError):
    pass


class NegativeDurationError(GraphError):
    pass


class MixedDurationError(GraphError):
    """Sum/Product waveform operands with disagreeing durations."""


# --- evaluation -------------------------------------------------------------

class EvaluationError(PulseGraphError):
    pass


class UnboundVariableError(EvaluationError):
    def __init__(self, name: str):
        super().__init__(f"variable '{name}' has no bound value")
        self.name = name


class OutOfRangeError(EvaluationError):
    pass


class NotScalarError(EvaluationError):
    """Node cannot be collapsed to a single scalar value."""


class UnsupportedNodeError(EvaluationError):
    """Node kind has no defined meaning for the requested operation."""


# --- transforms -------------------------------------------------------------

class TransformError(PulseGraphError):
    pass


class EmptyResultError(TransformError):
    """Zero-duration elision removed the entire graph."""


class UnknownVariableError(TransformError):
    def __init__(self, name: str):
        super().__init__(f"no variable named '{name}' in target")
        self.name = name


# --- scheduling -------------------------------------------------------------

class ScheduleError(PulseGraphError):
    pass


class NoOpenContextError(ScheduleError):
    pass


class DuplicateChannelInParallelError(ScheduleError):
    pass


class UnbalancedCloseError(ScheduleError):
    pass


# --- munching / device lowering ---------------------------------------------

class NoMatchError(PulseGraphError):
    """No munch rule accepted the graph root."""

    def __init__(self, root_kind: str, tried: tuple[str, ...]):
        super().__init__(
            f"no rule matched root of kind {root_kind!r}; tried rules: "
            + ", ".join(tried)
        )
        self.root_kind = root_kind
        self.tried = tried


class DeviceError(PulseGraphError):
    pass


class FrequencyOutOfRangeError(DeviceError):
    pass


class AmplitudeOutOfRangeError(DeviceError):
    pass


class TooManyStepsError(DeviceError):
    pass


class MultiParamModulationError(DeviceError):
    """More than one step-modulated parameter on a single pulse."""


class ArityError(DeviceError):
    pass


class ChannelIndexOutOfRangeError(DeviceError):
    pass


class UnmappedChannelError(DeviceError):
    pass


class MixedChannelError(DeviceError):
    pass


class LengthMismatchError(DeviceError):
    pass


class SimulationError(PulseGraphError):
    pass


# --- serialization ----------------------------------------------------------

class ParseError(PulseGraphError):
    def __init__(self, message: str, pointer: str = ""):
        super().__init__(f"{message} (at {pointer or '/'})")
        self.pointer = pointer
