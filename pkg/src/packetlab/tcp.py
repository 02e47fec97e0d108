"""TCP congestion control: slow start, congestion avoidance, fast retransmit,
fast recovery (Reno), with a Tahoe mode behind a flag.

cwnd is byte-counted; the receiver ACKs every segment and buffers out-of-order
data. The RTO is a fixed initial value with binary backoff so traces are exactly
reproducible; Jacobson SRTT estimation sits behind the jacobson flag. Plot
samples for the cwnd and sequence-number charts ride the trace channel as
kind=plot records (series cwnd / sent_seq / ack_seq / recv_seq).
"""

from __future__ import annotations

from .kernel import SduFromAbove, SimError
from .netbase import Delivery, NetComponent, Sdu, deterministic_blob
from .registry import register

SLOW_START = "slow_start"
CONG_AVOID = "congestion_avoidance"
FAST_RECOVERY = "fast_recovery"


class TcpSegment:
    """One segment: seq/ack in byte sequence space, payload as real bytes."""

    __slots__ = ("seq", "ack", "payload", "size_bits", "color")

    def __init__(self, seq: int, ack: int, payload: bytes,
                 header_bytes: int, color: str = "data"):
        self.seq = seq
        self.ack = ack
        self.payload = payload
        self.size_bits = (len(payload) + header_bytes) * 8
        self.color = color

    @property
    def end(self) -> int:
        return self.seq + len(self.payload)


class _Rto:
    __slots__ = ()


@register("tcp")
class TcpLayer(NetComponent):
    """Params: mss, rwnd, ssthresh, rto, rto_cap, header (bytes),
    tahoe (0/1), jacobson (0/1)."""

    def __init__(self, cid, kernel, params=None):
        super().__init__(cid, kernel, params)
        self.mss = int(self.param("mss", 1460))
        self.rwnd = int(self.param("rwnd", 65535))
        self.header = int(self.param("header", 40))
        self.tahoe = bool(int(self.param("tahoe", 0)))
        self.jacobson = bool(int(self.param("jacobson", 0)))
        self.rto_base = float(self.param("rto", 1.0))
        self.rto_cap = float(self.param("rto_cap", 64.0))
        # sender
        self.buffer = bytearray()
        self.snd_una = 0
        self.snd_nxt = 0
        self.snd_max = 0  # highest byte ever sent; snd_nxt rolls back on RTO
        self.cwnd = float(self.param("cwnd", self.mss))
        self.ssthresh = float(self.param("ssthresh", 65535))
        self.dup_ack_count = 0
        self.mode = SLOW_START
        self.rto_current = self.rto_base
        self._timer = None
        self._sent_at: dict[int, tuple[float, bool]] = {}  # end -> (t, retransmitted)
        self.srtt = None
        self.rttvar = None
        # receiver
        self.rcv_nxt = 0
        self.ooo: dict[int, bytes] = {}
        self._deliver_seq = 0

    def setup(self):
        self.trace(0, "plot", series="cwnd", value=round(self.cwnd, 3))

    # -- sending ---------------------------------------------------------------

    def _window(self) -> float:
        return min(self.cwnd, float(self.rwnd))

    def _flight(self) -> int:
        return self.snd_nxt - self.snd_una

    def tcp_try_send(self) -> int:
        """Transmit while the window permits; returns segments sent."""
        sent = 0
        while self.snd_nxt < len(self.buffer):
            size = min(self.mss, len(self.buffer) - self.snd_nxt)
            if self._flight() + size > self._window():
                break
            payload = bytes(self.buffer[self.snd_nxt:self.snd_nxt + size])
            color = "data" if self.snd_nxt >= self.snd_max else "retransmitted"
            self._send_segment(self.snd_nxt, payload, color)
            self.snd_nxt += size
            self._sent_at[self.snd_nxt] = (self.now, self.snd_nxt <= self.snd_max)
            self.snd_max = max(self.snd_max, self.snd_nxt)
            sent += 1
        if sent and self._timer is None:
            self._arm_rto()
        return sent

    def _send_segment(self, seq: int, payload: bytes, color: str):
        seg = TcpSegment(seq, self.rcv_nxt, payload, self.header, color)
        self.transmit(self.ports[0], seg)
        self.trace(0, "plot", series="sent_seq", value=seq)
        self.trace(1, "send", seq=seq, len=len(payload), color=color)

    def _retransmit_una(self, color: str = "retransmitted"):
        size = min(self.mss, self._flight())
        payload = bytes(self.buffer[self.snd_una:self.snd_una + size])
        self._send_segment(self.snd_una, payload, color)
        end = self.snd_una + size
        self._sent_at[end] = (self.now, True)

    def _set_cwnd(self, value: float):
        if value != self.cwnd:
            self.cwnd = value
            self.trace(0, "plot", series="cwnd", value=round(self.cwnd, 3))

    def _set_mode(self, mode: str):
        if mode != self.mode:
            self.mode = mode
            self.trace(1, "mode", mode=mode)

    # -- timer ----------------------------------------------------------------

    def _arm_rto(self):
        self._cancel_rto()
        self._timer = self.schedule_self(self.rto_current, _Rto())

    def _cancel_rto(self):
        if self._timer is not None:
            self.kernel.cancel(self._timer)
            self._timer = None

    def tcp_on_rto(self):
        if self._flight() == 0:
            return
        flight = self._flight()
        self.ssthresh = max(flight / 2, 2 * self.mss)
        self._set_cwnd(float(self.mss))
        self._set_mode(SLOW_START)
        self.dup_ack_count = 0
        self._sent_at.clear()
        self._retransmit_una()
        # go-back restart: everything beyond the retransmitted segment
        # will be resent as the window reopens
        self.snd_nxt = self.snd_una + min(self.mss, flight)
        self.trace(0, "rto", rto=self.rto_current, ssthresh=round(self.ssthresh, 3),
                   seq=self.snd_una)
        self.rto_current = min(self.rto_current * 2, self.rto_cap)
        self._arm_rto()

    # -- ACK processing ------------------------------------------------------------

    def tcp_on_ack(self, ackno: int, has_payload: bool = False):
        if not has_payload:
            self.trace(0, "plot", series="ack_seq", value=ackno)
        if ackno < self.snd_una or ackno > self.snd_max:
            self.trace(1, "ack_ignored", ack=ackno, una=self.snd_una,
                       nxt=self.snd_max)
            return
        if ackno == self.snd_una:
            if has_payload or self._flight() == 0:
                return
            self.dup_ack_count += 1
            if self.mode == FAST_RECOVERY:
                self._set_cwnd(self.cwnd + self.mss)  # inflation
                self.tcp_try_send()
            elif self.dup_ack_count == 3:
                self._fast_retransmit()
            return
        # new data acknowledged
        self._take_rtt_sample(ackno)
        self.snd_una = ackno
        self.snd_nxt = max(self.snd_nxt, ackno)
        self.dup_ack_count = 0
        if self.mode == FAST_RECOVERY:
            self._set_cwnd(self.ssthresh)  # deflation
            self._set_mode(CONG_AVOID)
        elif self.cwnd < self.ssthresh:
            self._set_mode(SLOW_START)
            self._set_cwnd(self.cwnd + self.mss)
        else:
            self._set_mode(CONG_AVOID)
            self._set_cwnd(self.cwnd + self.mss * self.mss / self.cwnd)
        if not self.jacobson:
            self.rto_current = self.rto_base  # backoff ends with forward progress
        self._cancel_rto()
        if self._flight() > 0:
            self._arm_rto()
        self.tcp_try_send()

    def _fast_retransmit(self):
        self.ssthresh = max(self._flight() / 2, 2 * self.mss)
        self._retransmit_una()
        if self.tahoe:
            self._set_cwnd(float(self.mss))
            self._set_mode(SLOW_START)
            self.trace(0, "fast_retx", seq=self.snd_una,
                       ssthresh=round(self.ssthresh, 3), variant="tahoe")
        else:
            self._set_cwnd(self.ssthresh + 3 * self.mss)
            self._set_mode(FAST_RECOVERY)
            self.trace(0, "fast_retx", seq=self.snd_una,
                       ssthresh=round(self.ssthresh, 3), variant="reno")

    def _take_rtt_sample(self, ackno: int):
        for end in sorted(k for k in self._sent_at if k <= ackno):
            t, retx = self._sent_at.pop(end)
            if self.jacobson and not retx and end == ackno:
                sample = self.now - t
                if self.srtt is None:
                    self.srtt, self.rttvar = sample, sample / 2
                else:
                    self.rttvar = 0.75 * self.rttvar + 0.25 * abs(self.srtt - sample)
                    self.srtt = 0.875 * self.srtt + 0.125 * sample
                self.rto_current = min(max(self.srtt + 4 * self.rttvar, 0.2),
                                       self.rto_cap)

    # -- receiving ---------------------------------------------------------------

    def _on_data(self, seg: TcpSegment):
        self.trace(0, "plot", series="recv_seq", value=seg.seq)
        if seg.seq == self.rcv_nxt:
            chunk = bytearray(seg.payload)
            self.rcv_nxt = seg.end
            while self.rcv_nxt in self.ooo:
                nxt = self.ooo.pop(self.rcv_nxt)
                chunk.extend(nxt)
                self.rcv_nxt += len(nxt)
            self._deliver(bytes(chunk))
        elif seg.seq > self.rcv_nxt:
            self.ooo[seg.seq] = seg.payload
            self.trace(1, "buffered", seq=seg.seq, expecting=self.rcv_nxt)
        else:
            self.trace(1, "old_data", seq=seg.seq)
        ack = TcpSegment(self.snd_nxt, self.rcv_nxt, b"", self.header, "ack")
        self.transmit(self.ports[0], ack)
        self.trace(1, "send", ack=self.rcv_nxt, color="ack")

    def _deliver(self, data: bytes):
        if self.above is not None:
            self.send_up(Sdu(seq=self._deliver_seq, size_bits=len(data) * 8,
                             data=data))
        self._deliver_seq += 1

    # -- event plumbing -------------------------------------------------------------

    def on_event(self, payload):
        if isinstance(payload, SduFromAbove):
            sdu = payload.sdu
            nbytes = sdu.size_bits // 8
            data = sdu.data if isinstance(sdu.data, (bytes, bytearray)) \
                else deterministic_blob(nbytes)
            self.buffer.extend(data)
            self.tcp_try_send()
        elif isinstance(payload, Delivery):
            if payload.pdu.corrupted:
                self.trace(0, "drop", pdu=payload.pdu.pid, reason="corrupted")
                return
            seg = payload.pdu.payload
            if not isinstance(seg, TcpSegment):
                self.trace(2, "ignore", pdu=payload.pdu.pid)
                return
            self.tcp_on_ack(seg.ack, has_payload=len(seg.payload) > 0)
            if seg.payload:
                self._on_data(seg)
        elif isinstance(payload, _Rto):
            self._timer = None
            self.tcp_on_rto()
        else:
            raise SimError(f"{self.id}: unexpected payload {payload!r}")

    def snapshot(self):
        return {"cwnd": round(self.cwnd, 3), "ssthresh": round(self.ssthresh, 3),
                "mode": self.mode, "snd_una": self.snd_una,
                "snd_nxt": self.snd_nxt, "rcv_nxt": self.rcv_nxt,
                "buffered": len(self.buffer) - self.snd_nxt,
                "dup_acks": self.dup_ack_count, "rto": self.rto_current}
