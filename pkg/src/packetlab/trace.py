"""Trace records: the machine-parseable observation stream everything else consumes.

Line format (stable contract for stats, plots, tests and the UI):

    t=<time> level=<0-3> comp=<id> kind=<tag> <key=value ...>

Times and numeric values are written with ``repr`` so identical runs produce
byte-identical lines. Keys and values never contain spaces.
"""

from __future__ import annotations

from dataclasses import dataclass, field

# Packet color classes, as rendered by the UI.
COLORS = ("data", "ack", "corrupted", "retransmitted", "control")


def format_value(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    s = str(v)
    if " " in s or "=" in s or "\n" in s:
        raise ValueError(f"trace value may not contain spaces or '=': {s!r}")
    return s


def parse_value(s: str):
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


@dataclass
class TraceRecord:
    t: float
    level: int
    comp: str
    kind: str
    fields: dict = field(default_factory=dict)

    def line(self) -> str:
        parts = [
            f"t={repr(self.t)}",
            f"level={self.level}",
            f"comp={self.comp}",
            f"kind={self.kind}",
        ]
        parts.extend(f"{k}={format_value(v)}" for k, v in self.fields.items())
        return " ".join(parts)


def parse_line(line: str) -> TraceRecord:
    """Parse one trace line back into a record (inverse of ``TraceRecord.line``)."""
    fields = {}
    for part in line.split():
        key, _, value = part.partition("=")
        fields[key] = parse_value(value)
    t = fields.pop("t")
    level = fields.pop("level")
    comp = str(fields.pop("comp"))
    kind = str(fields.pop("kind"))
    return TraceRecord(float(t), int(level), comp, kind, fields)


class Tracer:
    """Fan-out point for trace records with debug-level suppression.

    Records with level above the current debug level are discarded at the
    source: they reach no sink and no file. Levels follow the convention
    0 = protocol observations (the substrate of stats and plots),
    1 = protocol state detail, 2 = internal decisions, 3 = kernel verbosity.
    """

    def __init__(self, debug_level: int = 0):
        self.debug_level = debug_level
        self._sinks = []

    @property
    def sinks(self) -> list:
        return self._sinks

    def add_sink(self, sink) -> None:
        self._sinks.append(sink)

    def remove_sink(self, sink) -> None:
        self._sinks.remove(sink)

    def emit(self, record: TraceRecord) -> None:
        if record.level > self.debug_level:
            return
        for sink in self._sinks:
            sink(record)
