"""Event-heap simulation kernel: clock, scheduler, component registry, seeded RNG streams.

The kernel is strictly single-threaded and deterministic. Components interact
only by scheduling events at each other; dispatch order is lexicographic
(fire_time, seq) where seq is a monotone insertion counter, so ties break FIFO.
External control (pause, step, injection) enters only between dispatches.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field

from .trace import TraceRecord, Tracer

# Delays below this are treated as zero; time is float64 seconds.
EPS = 1e-12

_PENDING, _DONE, _CANCELLED = 0, 1, 2


class SimError(Exception):
    """Base class for simulation errors."""


class UnknownComponentError(SimError):
    pass


class ScheduleError(SimError):
    pass


class HandlerError(SimError):
    """A component's event handler raised; identifies the offender."""

    def __init__(self, component_id: str, event: "Event", cause: BaseException):
        super().__init__(f"handler fault in component {component_id!r}: {cause!r}")
        self.component_id = component_id
        self.event = event


class Event:
    __slots__ = ("fire_time", "seq", "target", "payload", "_state")

    def __init__(self, fire_time: float, seq: int, target: str, payload):
        self.fire_time = fire_time
        self.seq = seq
        self.target = target
        self.payload = payload
        self._state = _PENDING


class EventHandle:
    """Returned by schedule(); permits cancellation of a pending event."""

    __slots__ = ("_event",)

    def __init__(self, event: Event):
        self._event = event

    @property
    def fire_time(self) -> float:
        return self._event.fire_time

    @property
    def pending(self) -> bool:
        return self._event._state == _PENDING


@dataclass(frozen=True)
class DispatchedEvent:
    fire_time: float
    seq: int
    target: str
    payload: object


@dataclass
class RunSummary:
    events: int
    clock: float
    per_component: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Port:
    """A component's attachment to a link or shared medium, wired at build time."""

    index: int
    link_id: str
    peer_id: str
    params: dict
    peer_params: dict


class SduFromAbove:
    """Interlayer handoff: the layer above passed an SDU down."""

    __slots__ = ("sdu",)

    def __init__(self, sdu):
        self.sdu = sdu


class SduFromBelow:
    """Interlayer handoff: the layer below delivered an SDU up."""

    __slots__ = ("sdu",)

    def __init__(self, sdu):
        self.sdu = sdu


class Component:
    """Addressable protocol entity with a private event handler.

    Subclasses override on_event() and may override setup() to schedule their
    initial events, and snapshot() to expose render-ready state.
    """

    kind = "component"

    def __init__(self, cid: str, kernel: "Kernel", params: dict | None = None):
        self.id = cid
        self.kernel = kernel
        self.params = dict(params or {})
        self.above: str | None = None
        self.below: str | None = None
        self.ports: list[Port] = []

    # -- wiring hooks (called by topology instantiation) --------------------

    def on_attach(self, port: Port) -> None:
        self.ports.append(port)

    def setup(self) -> None:
        pass

    # -- event handling ------------------------------------------------------

    def on_event(self, payload) -> None:
        raise NotImplementedError

    def snapshot(self) -> dict:
        return {}

    # -- convenience ----------------------------------------------------------

    @property
    def now(self) -> float:
        return self.kernel.now

    def schedule(self, target: str, delay: float, payload) -> EventHandle:
        return self.kernel.schedule(target, delay, payload)

    def schedule_self(self, delay: float, payload) -> EventHandle:
        return self.kernel.schedule(self.id, delay, payload)

    def send_down(self, sdu) -> None:
        if self.below is None:
            raise SimError(f"{self.id}: no layer below")
        self.kernel.schedule(self.below, 0.0, SduFromAbove(sdu))

    def send_up(self, sdu) -> None:
        if self.above is None:
            raise SimError(f"{self.id}: no layer above")
        self.kernel.schedule(self.above, 0.0, SduFromBelow(sdu))

    def rand(self) -> float:
        return self.kernel.rand(self.id)

    def rng(self) -> random.Random:
        return self.kernel.rng(self.id)

    def trace(self, level: int, kind: str, **fields) -> None:
        self.kernel.trace(level, self.id, kind, **fields)

    def param(self, key: str, default=None):
        return self.params.get(key, default)


class Kernel:
    """The global event heap, simulation clock and component registry."""

    def __init__(self, seed: int = 0, stop_time: float = float("inf"), debug_level: int = 0):
        self.seed = seed
        self.now = 0.0
        self.stop_time = stop_time
        self.tracer = Tracer(debug_level)
        self.components: dict[str, Component] = {}
        self._heap: list[tuple[float, int, Event]] = []
        self._seq = 0
        self._dispatched = 0
        self._per_component: dict[str, int] = {}
        self._rngs: dict[str, random.Random] = {}
        self._pdu_counter = 0

    # -- registry -------------------------------------------------------------

    def register(self, component: Component) -> Component:
        if component.id in self.components:
            raise SimError(f"duplicate component id {component.id!r}")
        self.components[component.id] = component
        return component

    def component(self, cid: str) -> Component:
        try:
            return self.components[cid]
        except KeyError:
            raise UnknownComponentError(f"unknown component {cid!r}") from None

    # -- randomness -----------------------------------------------------------

    def rng(self, stream_id: str) -> random.Random:
        """One independent deterministic stream per id, derived from the master seed."""
        stream = self._rngs.get(stream_id)
        if stream is None:
            stream = random.Random(f"{self.seed}:{stream_id}")
            self._rngs[stream_id] = stream
        return stream

    def rand(self, stream_id: str) -> float:
        return self.rng(stream_id).random()

    # -- tracing ----------------------------------------------------------------

    @property
    def debug_level(self) -> int:
        return self.tracer.debug_level

    @debug_level.setter
    def debug_level(self, level: int) -> None:
        self.tracer.debug_level = int(level)

    def trace(self, level: int, comp: str, kind: str, **fields) -> None:
        self.tracer.emit(TraceRecord(self.now, level, comp, kind, fields))

    def next_pdu_id(self) -> int:
        self._pdu_counter += 1
        return self._pdu_counter

    # -- scheduling --------------------------------------------------------------

    def schedule(self, target: str, delay: float, payload) -> EventHandle:
        if target not in self.components:
            raise UnknownComponentError(f"cannot schedule for unknown component {target!r}")
        if delay < 0:
            raise ScheduleError(f"negative delay {delay!r}")
        if delay < EPS:
            delay = 0.0
        event = Event(self.now + delay, self._seq, target, payload)
        self._seq += 1
        heapq.heappush(self._heap, (event.fire_time, event.seq, event))
        return EventHandle(event)

    def cancel(self, handle: EventHandle) -> bool:
        """Mark a pending event inert; it will be skipped at pop time."""
        event = handle._event
        if event._state != _PENDING:
            return False
        event._state = _CANCELLED
        return True

    def pending(self) -> int:
        return sum(1 for _, _, e in self._heap if e._state == _PENDING)

    def _skim_cancelled(self) -> None:
        while self._heap and self._heap[0][2]._state == _CANCELLED:
            heapq.heappop(self._heap)

    def peek_time(self) -> float | None:
        self._skim_cancelled()
        return self._heap[0][0] if self._heap else None

    # -- execution -----------------------------------------------------------------

    def step(self) -> DispatchedEvent | None:
        """Dispatch the minimum-(fire_time, seq) event, or nothing at exhaustion.

        Events beyond stop_time stay in the heap and the clock does not move.
        """
        self._skim_cancelled()
        if not self._heap:
            return None
        if self._heap[0][0] > self.stop_time:
            return None
        _, _, event = heapq.heappop(self._heap)
        event._state = _DONE
        self.now = event.fire_time
        component = self.components[event.target]
        self.trace(3, event.target, "dispatch", seq=event.seq,
                   payload=type(event.payload).__name__)
        try:
            component.on_event(event.payload)
        except Exception as exc:
            raise HandlerError(event.target, event, exc) from exc
        self._dispatched += 1
        self._per_component[event.target] = self._per_component.get(event.target, 0) + 1
        return DispatchedEvent(event.fire_time, event.seq, event.target, event.payload)

    def run_until(self, stop_time: float | None = None) -> RunSummary:
        if stop_time is not None:
            if stop_time < self.now:
                raise ScheduleError(f"stop_time {stop_time!r} is in the past (now={self.now!r})")
            self.stop_time = stop_time
        count = 0
        while self.step() is not None:
            count += 1
        return RunSummary(count, self.now, dict(self._per_component))
