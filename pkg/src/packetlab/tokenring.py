"""Token ring MAC: one-bit station delay, reservations, priority stack, token upkeep.

The ring is a medium with attachments ordered by link declaration; each link's
delay param is the propagation time from that station to the next around the
loop. A repeating station holds a PDU for exactly one bit time (1/bandwidth),
so an idle token's rotation time is sum(segment delays) + N/bandwidth.

Priority discipline: a passing station writes its queued frame's priority into
the reservation field; the transmitter, on stripping its frame, issues the next
token at the reserved priority, recording the displaced priority inside the
token. The station the raise benefits (the one that captures the raised token)
pushes that displaced value and restores it when its own transmission ends.

Token upkeep is a single configured monitor station that regenerates one token
when it has seen no traffic for 2x the expected rotation time.
"""

from __future__ import annotations

from .kernel import SduFromAbove, SimError
from .netbase import NetComponent, Pdu
from .registry import register


class Token:
    __slots__ = ("priority", "reservation", "old_priority")

    def __init__(self, priority: int = 0, reservation: int = 0,
                 old_priority: int | None = None):
        self.priority = priority
        self.reservation = reservation
        self.old_priority = old_priority


class RingFrame:
    __slots__ = ("src", "dst", "sdu", "priority", "reservation")

    def __init__(self, src: str, dst, sdu, priority: int):
        self.src = src
        self.dst = dst
        self.sdu = sdu
        self.priority = priority
        self.reservation = 0


class RingTx:
    """Station hands a PDU to the medium for the next hop."""

    __slots__ = ("src", "pdu")

    def __init__(self, src: str, pdu: Pdu):
        self.src = src
        self.pdu = pdu


class RingRx:
    __slots__ = ("pdu",)

    def __init__(self, pdu: Pdu):
        self.pdu = pdu


class _Release:
    __slots__ = ()


class _MonitorCheck:
    __slots__ = ()


@register("ring")
class Ring(NetComponent):
    """The loop itself: forwards each PDU to the next attachment in order."""

    is_medium = True

    def __init__(self, cid, kernel, params=None):
        super().__init__(cid, kernel, params)
        self.order: list[str] = []
        self.segment_delay: dict[str, float] = {}

    def on_attach(self, port):
        super().on_attach(port)
        self.order.append(port.peer_id)
        self.segment_delay[port.peer_id] = float(port.params.get("delay", 0.0))

    def on_event(self, payload):
        if not isinstance(payload, RingTx):
            raise SimError(f"{self.id}: unexpected payload {payload!r}")
        idx = self.order.index(payload.src)
        nxt = self.order[(idx + 1) % len(self.order)]
        self.schedule(nxt, self.segment_delay[payload.src], RingRx(payload.pdu))

    def snapshot(self):
        return {"order": list(self.order)}


@register("ringstation")
class RingStation(NetComponent):
    """Params: priority (of generated frames, unless the SDU carries one),
    monitor=1 marks the token issuer/watchdog, rotation (s, expected token
    rotation for the watchdog), lose_token_at (s, drop the next token seen
    after this instant, once; fault injection for regeneration demos)."""

    def __init__(self, cid, kernel, params=None):
        super().__init__(cid, kernel, params)
        self.queue: list = []
        self.stack: list[int] = []
        self.holding = False
        self.captured_priority = 0
        self._pushed = False
        self._frame_pdu: Pdu | None = None
        self._tx_start = 0.0
        self._returned = False
        self.is_monitor = bool(self.param("monitor", 0))
        self._lose_at = self.param("lose_token_at")
        self._lost_done = False
        self._last_seen = 0.0

    @property
    def bw(self) -> float:
        port = self.ports[0]
        return float(port.peer_params.get("bw", port.params.get("bw", 4e6)))

    @property
    def bit_time(self) -> float:
        return 1.0 / self.bw

    @property
    def rotation(self) -> float:
        return float(self.param("rotation", 1e-3))

    def setup(self):
        if self.is_monitor:
            self._issue_token(Token(0, 0, None), regen=False)
            self.schedule_self(2.0 * self.rotation, _MonitorCheck())

    # -- token handling -----------------------------------------------------

    def _issue_token(self, token: Token, regen: bool):
        pdu = self.make_pdu(1, token, "control")
        self.trace(0, "token_issue", pid=pdu.pid, prio=token.priority,
                   res=token.reservation,
                   old=-1 if token.old_priority is None else token.old_priority,
                   regen=regen)
        self.schedule(self.ports[0].link_id, 0.0, RingTx(self.id, pdu))

    def _pending_priority(self):
        if not self.queue:
            return None
        return max(s.priority for s in self.queue)

    def _take_frame(self, min_priority: int):
        best = max((s for s in self.queue if s.priority >= min_priority),
                   default=None, key=lambda s: s.priority)
        self.queue.remove(best)
        return best

    def _on_token(self, pdu: Pdu):
        token: Token = pdu.payload
        if (self._lose_at is not None and not self._lost_done
                and self.now >= float(self._lose_at)):
            self._lost_done = True
            self.trace(0, "token_drop", pid=pdu.pid, reason="injected")
            return
        want = self._pending_priority()
        if want is not None and want >= token.priority and not self.holding:
            self.trace(0, "token_capture", pid=pdu.pid, prio=token.priority)
            self.holding = True
            self.captured_priority = token.priority
            if token.old_priority is not None:
                self.stack.append(token.old_priority)
                self._pushed = True
                self.trace(0, "stack_push", value=token.old_priority)
            sdu = self._take_frame(token.priority)
            frame = RingFrame(self.id, sdu.dst, sdu, sdu.priority)
            self._frame_pdu = self.make_pdu(sdu.size_bits, frame, sdu.color)
            self._tx_start = self.now
            self._returned = False
            self.trace(0, "frame_send", pid=self._frame_pdu.pid, seq=sdu.seq,
                       prio=frame.priority, dst=sdu.dst or "*")
            self.schedule(self.ports[0].link_id, 0.0, RingTx(self.id, self._frame_pdu))
        else:
            if want is not None and want > token.reservation:
                token.reservation = want
                self.trace(1, "reserve", value=want, on="token")
            self.trace(2, "token_pass", pid=pdu.pid, prio=token.priority,
                       res=token.reservation)
            self.schedule(self.ports[0].link_id, self.bit_time, RingTx(self.id, pdu))

    # -- frame handling ------------------------------------------------------

    def _on_frame(self, pdu: Pdu):
        frame: RingFrame = pdu.payload
        if frame.src == self.id:
            # our frame came all the way around: strip it and release the token
            self._returned = True
            self.trace(0, "frame_strip", pid=pdu.pid, res=frame.reservation)
            release_at = max(self._tx_start + pdu.size_bits / self.bw, self.now)
            self.schedule_self(release_at - self.now, _Release())
            return
        if frame.dst is None or frame.dst == self.id or frame.dst == self.id.split(".")[0]:
            self.trace(0, "frame_copy", pid=pdu.pid, src=frame.src)
            if self.above is not None:
                self.send_up(frame.sdu)
        want = self._pending_priority()
        if want is not None and want > frame.reservation:
            frame.reservation = want
            self.trace(1, "reserve", value=want, on="frame")
        self.schedule(self.ports[0].link_id, self.bit_time, RingTx(self.id, pdu))

    def _release(self):
        frame: RingFrame = self._frame_pdu.payload
        reservation = frame.reservation
        self._frame_pdu = None
        self.holding = False
        if self._pushed:
            base = self.stack.pop()
            self.trace(0, "stack_pop", value=base)
            self._pushed = False
        else:
            base = self.captured_priority
        if reservation > base:
            self._issue_token(Token(reservation, 0, base), regen=False)
        else:
            self._issue_token(Token(base, 0, None), regen=False)

    # -- monitor ----------------------------------------------------------------

    def _monitor_check(self):
        if self.now - self._last_seen >= 2.0 * self.rotation:
            self.trace(0, "token_regen", at=self.now)
            self._issue_token(Token(0, 0, None), regen=True)
            self._last_seen = self.now
        self.schedule_self(2.0 * self.rotation, _MonitorCheck())

    # -- event plumbing ------------------------------------------------------------

    def on_event(self, payload):
        if isinstance(payload, SduFromAbove):
            self.queue.append(payload.sdu)
        elif isinstance(payload, RingRx):
            self._last_seen = self.now
            if isinstance(payload.pdu.payload, Token):
                self._on_token(payload.pdu)
            else:
                self._on_frame(payload.pdu)
        elif isinstance(payload, _Release):
            self._release()
        elif isinstance(payload, _MonitorCheck):
            self._monitor_check()
        else:
            raise SimError(f"{self.id}: unexpected payload {payload!r}")

    def snapshot(self):
        return {"queued": len(self.queue), "stack": list(self.stack),
                "holding": self.holding, "monitor": self.is_monitor}
