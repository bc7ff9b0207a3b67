"""First-match-wins structural lowering of pulse graphs to device records."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Optional

from .errors import NoMatchError
from .graph import Graph, NodeId, kind_name

#: A matcher inspects the root and returns a device record, or None when the
#: structure does not apply. Errors are reserved for graphs that match
#: structurally but violate device limits.
Matcher = Callable[[Graph, NodeId, Any], Optional[Any]]


@dataclass(frozen=True)
class MunchRule:
    name: str
    matcher: Matcher


class Muncher:
    """Ordered munch rules plus the device config forwarded to each matcher."""

    def __init__(self, rules: list[MunchRule], config: Any = None):
        if not rules:
            raise ValueError("a muncher needs at least one rule")
        self.rules = tuple(rules)
        self.config = config

    def munch(self, graph: Graph, root: NodeId) -> Any:
        """Return the first rule's record; raise NoMatchError on exhaustion."""
        for rule in self.rules:
            record = rule.matcher(graph, root, self.config)
            if record is not None:
                return record
        raise NoMatchError(kind_name(graph.node(root)),
                           tuple(rule.name for rule in self.rules))
