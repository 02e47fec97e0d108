"""Cell rate policing with the Generic Cell Rate Algorithm.

Gcra is the pure virtual-scheduling formulation (conforming iff t >= tat - L,
then tat = max(t, tat) + I) and works standalone for property tests. The
policer component applies it inline on a two-port path; nonconforming cells
are dropped or tagged (CLP=1) per config.
"""

from __future__ import annotations

from .kernel import EPS, SduFromAbove, SimError
from .netbase import Delivery, NetComponent, Sdu
from .registry import register

CELL_BITS = 424  # 53-byte ATM cell


class Cell:
    """One ATM cell: a sequence number and the CLP bit."""

    __slots__ = ("seq", "clp", "size_bits", "color")

    def __init__(self, seq: int, clp: int = 0, color: str = "data"):
        self.seq = seq
        self.clp = clp
        self.size_bits = CELL_BITS
        self.color = color


class Gcra:
    """Virtual-scheduling GCRA; tat starts at the first cell's arrival time."""

    def __init__(self, increment: float, limit: float = 0.0):
        if increment <= 0 or limit < 0:
            raise SimError("gcra needs I > 0 and L >= 0")
        self.increment = increment
        self.limit = limit
        self.tat: float | None = None
        self._last_t: float | None = None

    def arrival(self, t: float) -> bool:
        """Conformance verdict for a cell arriving at t; updates state if conforming."""
        if self._last_t is not None and t < self._last_t:
            raise SimError(f"gcra arrivals must be nondecreasing ({t} < {self._last_t})")
        self._last_t = t
        if self.tat is None:
            self.tat = t
        if t < self.tat - self.limit - EPS:
            return False
        self.tat = max(t, self.tat) + self.increment
        return True


@register("atm")
class AtmLayer(NetComponent):
    """Adaptation shim: one SDU becomes one 424-bit cell and back."""

    def on_event(self, payload):
        if isinstance(payload, SduFromAbove):
            sdu = payload.sdu
            cell = Cell(sdu.seq, color=sdu.color)
            pdu = self.transmit(self.ports[0], cell)
            self.trace(1, "send", pdu=pdu.pid, seq=cell.seq)
        elif isinstance(payload, Delivery):
            if payload.pdu.corrupted:
                self.trace(0, "drop", pdu=payload.pdu.pid, reason="corrupted")
                return
            cell = payload.pdu.payload
            if not isinstance(cell, Cell):
                self.trace(2, "ignore", pdu=payload.pdu.pid)
                return
            self.trace(0, "recv", seq=cell.seq, clp=cell.clp)
            if self.above is not None:
                self.send_up(Sdu(seq=cell.seq, size_bits=CELL_BITS,
                                 priority=cell.clp, color=cell.color))
        else:
            raise SimError(f"{self.id}: unexpected payload {payload!r}")


@register("policer")
class Policer(NetComponent):
    """GCRA policer between two links.

    Params: interval (I, s/cell) or pcr (cells/s), limit (L, s),
    action drop|tag. Only the ports[0] -> ports[1] direction is policed."""

    def __init__(self, cid, kernel, params=None):
        super().__init__(cid, kernel, params)
        interval = self.param("interval")
        if interval is None:
            pcr = self.param("pcr")
            if pcr is None:
                raise SimError(f"{self.id}: set interval= or pcr=")
            interval = 1.0 / float(pcr)
        self.action = str(self.param("action", "drop"))
        if self.action not in ("drop", "tag"):
            raise SimError(f"{self.id}: action must be drop or tag")
        self.gcra = Gcra(float(interval), float(self.param("limit", 0.0)))
        self.conformed = 0
        self.dropped = 0
        self.tagged = 0

    def on_event(self, payload):
        if not isinstance(payload, Delivery):
            raise SimError(f"{self.id}: unexpected payload {payload!r}")
        if payload.pdu.corrupted:
            self.trace(0, "drop", pdu=payload.pdu.pid, reason="corrupted")
            return
        inport = self.port_for_link(payload.link_id)
        out = self.ports[1 - inport.index]
        cell = payload.pdu.payload
        if inport.index != 0 or not isinstance(cell, Cell):
            self.forward(out, payload.pdu)  # reverse direction is not policed
            return
        if self.gcra.arrival(self.now):
            self.conformed += 1
            self.trace(0, "cell", seq=cell.seq, verdict="conform",
                       tat=self.gcra.tat)
            self.forward(out, payload.pdu)
        elif self.action == "drop":
            self.dropped += 1
            self.trace(0, "cell", seq=cell.seq, verdict="nonconform", action="drop")
        else:
            self.tagged += 1
            self.trace(0, "cell", seq=cell.seq, verdict="nonconform", action="tag")
            self.transmit(out, Cell(cell.seq, clp=1, color=cell.color))

    def snapshot(self):
        return {"conformed": self.conformed, "dropped": self.dropped,
                "tagged": self.tagged, "tat": self.gcra.tat}
