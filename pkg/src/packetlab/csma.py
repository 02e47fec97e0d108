"""CSMA/CD over a shared bus with position-dependent propagation.

The bus fans a transmitter's leading/trailing edges out to every other
attachment, offset by pairwise propagation distance (station positions are
given in seconds along the cable). Stations keep a local carrier view from
those edges, so carrier sense and collision detection are position-accurate:
a station transmitting when another station's leading edge arrives detects a
collision, jams for jam_bits bit times, then backs off exponentially.

Default constants follow 802.3: slot = 512 bit times, jam = 32 bit times,
16 attempts, backoff exponent capped at 10. All are config-overridable.
"""

from __future__ import annotations

import math
from collections import deque

from .kernel import SduFromAbove, SimError
from .netbase import NetComponent, Pdu
from .registry import register


def backoff_slots(attempt: int, r: float) -> int:
    """Slots to wait after the attempt-th collision: uniform in [0, 2^min(attempt,10) - 1]."""
    if not 1 <= attempt <= 16:
        raise SimError(f"backoff attempt out of range: {attempt}")
    return math.floor(r * (1 << min(attempt, 10)))


class TransmitStart:
    __slots__ = ("src", "pdu")

    def __init__(self, src: str, pdu: Pdu):
        self.src = src
        self.pdu = pdu


class TransmitEnd:
    __slots__ = ("src", "pdu", "success")

    def __init__(self, src: str, pdu: Pdu, success: bool):
        self.src = src
        self.pdu = pdu
        self.success = success


class SignalOn:
    __slots__ = ("src",)

    def __init__(self, src: str):
        self.src = src


class SignalOff:
    __slots__ = ("src",)

    def __init__(self, src: str):
        self.src = src


class BusDelivery:
    __slots__ = ("src", "pdu")

    def __init__(self, src: str, pdu: Pdu):
        self.src = src
        self.pdu = pdu


@register("bus")
class Bus(NetComponent):
    """Shared cable. Stations attach directly (no Link component in between)."""

    is_medium = True

    def __init__(self, cid, kernel, params=None):
        super().__init__(cid, kernel, params)
        self.positions: dict[str, float] = {}
        self.active: dict[str, Pdu] = {}

    def on_attach(self, port):
        super().on_attach(port)
        pos = port.params.get("pos", port.peer_params.get("pos", 0.0))
        self.positions[port.peer_id] = float(pos)

    def _delta(self, a: str, b: str) -> float:
        return abs(self.positions[a] - self.positions[b])

    def on_event(self, payload):
        if isinstance(payload, TransmitStart):
            self.active[payload.src] = payload.pdu
            self.trace(0, "xmit", pdu=payload.pdu.pid, src=payload.src,
                       size=payload.pdu.size_bits, color=payload.pdu.color)
            for port in self.ports:
                if port.peer_id != payload.src:
                    self.schedule(port.peer_id, self._delta(payload.src, port.peer_id),
                                  SignalOn(payload.src))
        elif isinstance(payload, TransmitEnd):
            self.active.pop(payload.src, None)
            self.trace(0, "xmit_end", pdu=payload.pdu.pid, src=payload.src,
                       ok=payload.success)
            for port in self.ports:
                if port.peer_id != payload.src:
                    delta = self._delta(payload.src, port.peer_id)
                    if payload.success:
                        self.schedule(port.peer_id, delta,
                                      BusDelivery(payload.src, payload.pdu))
                    self.schedule(port.peer_id, delta, SignalOff(payload.src))
        else:
            raise SimError(f"{self.id}: unexpected payload {payload!r}")

    def snapshot(self):
        return {"stations": sorted(self.positions), "active": sorted(self.active)}


class _TxEnd:
    __slots__ = ()


class _JamEnd:
    __slots__ = ()


class _BackoffEnd:
    __slots__ = ()


IDLE, DEFER, TX, JAM, BACKOFF = "idle", "defer", "tx", "jam", "backoff"


@register("csma")
class CsmaStation(NetComponent):
    """1-persistent CSMA/CD station; queues SDUs from the layer above."""

    def __init__(self, cid, kernel, params=None):
        super().__init__(cid, kernel, params)
        self.state = IDLE
        self.queue: deque = deque()
        self.attempts = 0          # collisions suffered by the head frame
        self.carrier: set = set()  # foreign sources currently heard
        self._dirty: set = set()   # receptions that overlapped another signal
        self.header_bits = int(self.param("header", 0))
        self._tx_end = None
        self._current: Pdu | None = None

    # medium parameters come from the attachment
    @property
    def bw(self) -> float:
        port = self.ports[0]
        return float(port.peer_params.get("bw", port.params.get("bw", 1e7)))

    @property
    def slot_time(self) -> float:
        return int(self.param("slot_bits", 512)) / self.bw

    @property
    def jam_time(self) -> float:
        return int(self.param("jam_bits", 32)) / self.bw

    @property
    def max_attempts(self) -> int:
        return int(self.param("attempts", 16))

    def addr(self) -> str:
        return str(self.param("addr", self.id.split(".")[0]))

    # -- sending ------------------------------------------------------------

    def csma_try_send(self) -> None:
        """1-persistent: transmit if the carrier is idle, else wait for it."""
        if not self.queue or self.state not in (IDLE, DEFER):
            return
        if self.carrier:
            self.state = DEFER
            return
        sdu = self.queue[0]
        pdu = self.make_pdu(sdu.size_bits + self.header_bits, sdu,
                            "retransmitted" if self.attempts else "data")
        self._current = pdu
        self.state = TX
        self.trace(0, "send", pdu=pdu.pid, attempt=self.attempts + 1, color=pdu.color)
        self.schedule(self.ports[0].link_id, 0.0, TransmitStart(self.id, pdu))
        self._tx_end = self.schedule_self(pdu.size_bits / self.bw, _TxEnd())

    def _on_collision(self):
        self.trace(0, "collision", pdu=self._current.pid, attempt=self.attempts + 1)
        self.kernel.cancel(self._tx_end)
        self._tx_end = None
        self.state = JAM
        self.trace(0, "jam", until=self.now + self.jam_time)
        self.schedule_self(self.jam_time, _JamEnd())

    def _after_jam(self):
        self.schedule(self.ports[0].link_id, 0.0,
                      TransmitEnd(self.id, self._current, False))
        self._current = None
        self.attempts += 1
        if self.attempts >= self.max_attempts:
            sdu = self.queue.popleft()
            self.trace(0, "drop", seq=sdu.seq, reason="attempts_exhausted",
                       attempts=self.attempts)
            self.attempts = 0
            self.state = IDLE
            self.csma_try_send()
            return
        slots = backoff_slots(self.attempts, self.rand())
        self.trace(0, "backoff", attempt=self.attempts, slots=slots)
        self.state = BACKOFF
        self.schedule_self(slots * self.slot_time, _BackoffEnd())

    # -- receiving ------------------------------------------------------------

    def _on_signal_on(self, src: str):
        if self.carrier:
            self._dirty.update(self.carrier)
            self._dirty.add(src)
        self.carrier.add(src)
        if self.state == TX:
            self._on_collision()

    def _on_signal_off(self, src: str):
        self.carrier.discard(src)
        self._dirty.discard(src)
        if not self.carrier and self.state == DEFER:
            self.state = IDLE
            self.csma_try_send()

    def _on_delivery(self, src: str, pdu: Pdu):
        if src in self._dirty:
            self._dirty.discard(src)
            self.trace(0, "drop", pdu=pdu.pid, reason="collision_garble")
            return
        sdu = pdu.payload
        if sdu.dst is not None and sdu.dst != self.addr() and sdu.dst != self.id:
            self.trace(1, "ignore", pdu=pdu.pid, dst=sdu.dst)
            return
        self.trace(0, "recv", pdu=pdu.pid, src=src, size=pdu.size_bits)
        if self.above is not None:
            self.send_up(sdu)

    # -- event plumbing ----------------------------------------------------------

    def on_event(self, payload):
        if isinstance(payload, SduFromAbove):
            self.queue.append(payload.sdu)
            self.csma_try_send()
        elif isinstance(payload, SignalOn):
            self._on_signal_on(payload.src)
        elif isinstance(payload, SignalOff):
            self._on_signal_off(payload.src)
        elif isinstance(payload, BusDelivery):
            self._on_delivery(payload.src, payload.pdu)
        elif isinstance(payload, _TxEnd):
            self.schedule(self.ports[0].link_id, 0.0,
                          TransmitEnd(self.id, self._current, True))
            self._current = None
            self._tx_end = None
            self.queue.popleft()
            self.attempts = 0
            self.state = IDLE
            self.csma_try_send()
        elif isinstance(payload, _JamEnd):
            self._after_jam()
        elif isinstance(payload, _BackoffEnd):
            self.state = IDLE if not self.carrier else DEFER
            self.csma_try_send()
        else:
            raise SimError(f"{self.id}: unexpected payload {payload!r}")

    def snapshot(self):
        return {"state": self.state, "queued": len(self.queue),
                "attempts": self.attempts, "carrier": sorted(self.carrier)}
