"""Sliding-window datalink with Go-Back-N error control.

One component plays both roles: SDUs from above are numbered and transmitted
under a window of W outstanding frames (sequence numbers mod M); arriving data
frames are delivered strictly in order with cumulative ACKs. A single timer
guards the oldest outstanding frame; on expiry the whole window is resent.

M >= W+1 is required for correctness. Smaller moduli are allowed on purpose
(with a warning trace) so the classic ambiguity can be demonstrated.
"""

from __future__ import annotations

from collections import deque

from .kernel import SduFromAbove, SimError
from .netbase import Delivery, NetComponent
from .registry import register


class Frame:
    """Datalink PDU body: data (carries an SDU) or a cumulative ACK."""

    __slots__ = ("ftype", "seq", "sdu", "size_bits", "color")

    def __init__(self, ftype: str, seq: int, sdu=None, size_bits: int = 8,
                 color: str = "data"):
        self.ftype = ftype
        self.seq = seq
        self.sdu = sdu
        self.size_bits = size_bits
        self.color = color


class _Timeout:
    __slots__ = ()


@register("gbn")
class GoBackN(NetComponent):
    """Params: window, modulus, timeout (s, default 3*(Tf+2Tp)), header and
    ack_size (bits)."""

    def __init__(self, cid, kernel, params=None):
        super().__init__(cid, kernel, params)
        self.window = int(self.param("window", 4))
        self.modulus = int(self.param("modulus", 8))
        if self.window < 1 or self.modulus < 2:
            raise SimError(f"{self.id}: need window >= 1 and modulus >= 2")
        self.header_bits = int(self.param("header", 0))
        self.ack_bits = int(self.param("ack_size", 8))
        # sender side; sequence counters are absolute, wire numbers are mod M
        self.base = 0
        self.next_seq = 0
        self.buffer: dict[int, Frame] = {}
        self.app_queue: deque = deque()
        self._timer = None
        # receiver side
        self.expected = 0
        self._got_any = False

    def setup(self):
        if self.modulus < self.window + 1:
            self.trace(0, "warn", what="modulus_lt_window_plus_1",
                       window=self.window, modulus=self.modulus)

    # -- sender ---------------------------------------------------------------

    def outstanding(self) -> int:
        return self.next_seq - self.base

    def gbn_send(self, sdu) -> bool:
        """Transmit one SDU if the window has room; False = refused."""
        if self.outstanding() >= self.window:
            return False
        frame = Frame("data", self.next_seq % self.modulus, sdu,
                      sdu.size_bits + self.header_bits)
        self.buffer[self.next_seq] = frame
        self.next_seq += 1
        self._send_frame(frame)
        if self._timer is None:
            self._arm_timer(frame)
        return True

    def _send_frame(self, frame: Frame):
        pdu = self.transmit(self.ports[0], frame)
        self.trace(0, "send", type="data", seq=frame.seq, pdu=pdu.pid,
                   color=frame.color)

    def _frame_time(self, size_bits: int) -> float:
        port = self.ports[0]
        bw = float(port.params.get("bw", 1e6))
        return size_bits / bw

    def _arm_timer(self, frame: Frame):
        timeout = self.param("timeout")
        if timeout is None:
            prop = float(self.ports[0].params.get("delay", 0.0))
            timeout = 3.0 * (self._frame_time(frame.size_bits) + 2.0 * prop)
        self._timer = self.schedule_self(float(timeout), _Timeout())
        self.trace(1, "timer_arm", timeout=float(timeout))

    def _cancel_timer(self):
        if self._timer is not None:
            self.kernel.cancel(self._timer)
            self._timer = None

    def _on_timeout(self):
        if self.base == self.next_seq:
            return
        self.trace(0, "timeout", outstanding=self.outstanding())
        first = None
        for k in range(self.base, self.next_seq):
            frame = self.buffer[k]
            frame.color = "retransmitted"
            if first is None:
                first = frame
            self._send_frame(frame)
        self._timer = None
        self._arm_timer(first)

    def gbn_on_ack(self, ackno: int):
        """Cumulative: slides base past the newest outstanding frame mod-matching ackno."""
        for k in range(self.next_seq - 1, self.base - 1, -1):
            if k % self.modulus == ackno:
                for freed in range(self.base, k + 1):
                    del self.buffer[freed]
                self.base = k + 1
                self._cancel_timer()
                if self.base != self.next_seq:
                    self._arm_timer(self.buffer[self.base])
                self._pump()
                return
        self.trace(1, "ack_stale", seq=ackno)

    def _pump(self):
        while self.app_queue and self.gbn_send(self.app_queue[0]):
            self.app_queue.popleft()

    # -- receiver -------------------------------------------------------------

    def _on_data(self, frame: Frame, pid: int):
        if frame.seq == self.expected:
            self.trace(0, "recv", type="data", seq=frame.seq, pdu=pid, ok=True)
            self._got_any = True
            self.expected = (self.expected + 1) % self.modulus
            self.send_up(frame.sdu)
            self._send_ack(frame.seq)
        else:
            self.trace(0, "recv", type="data", seq=frame.seq, pdu=pid, ok=False,
                       reason="out_of_order")
            if self._got_any:
                self._send_ack((self.expected - 1) % self.modulus)

    def _send_ack(self, seq: int):
        ack = Frame("ack", seq, size_bits=self.ack_bits, color="ack")
        pdu = self.transmit(self.ports[0], ack)
        self.trace(0, "send", type="ack", seq=seq, pdu=pdu.pid)

    # -- event plumbing ---------------------------------------------------------

    def on_event(self, payload):
        if isinstance(payload, SduFromAbove):
            if not self.gbn_send(payload.sdu):
                self.app_queue.append(payload.sdu)
                self.trace(1, "window_full", queued=len(self.app_queue))
        elif isinstance(payload, Delivery):
            if payload.pdu.corrupted:
                self.trace(0, "drop", pdu=payload.pdu.pid, reason="corrupted")
                return
            frame = payload.pdu.payload
            if frame.ftype == "data":
                self._on_data(frame, payload.pdu.pid)
            else:
                self.trace(0, "recv", type="ack", seq=frame.seq, pdu=payload.pdu.pid)
                self.gbn_on_ack(frame.seq)
        elif isinstance(payload, _Timeout):
            self._on_timeout()
        else:
            raise SimError(f"{self.id}: unexpected payload {payload!r}")

    def snapshot(self):
        return {"base": self.base, "next_seq": self.next_seq,
                "window": self.window, "modulus": self.modulus,
                "queued": len(self.app_queue), "expected": self.expected}
