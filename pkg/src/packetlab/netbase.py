"""Shared substrate under every lab: links, PDUs, traffic sources and sinks.

A Link is itself a kernel component. Endpoints hand it a TransmitRequest at
transmission start; the link applies failure/loss/corruption and schedules a
Delivery at the far end exactly size/bandwidth + prop_delay after serialization
begins (FIFO output queue per direction). PDUs already in flight when a link
goes down still arrive.
"""

from __future__ import annotations

from dataclasses import dataclass

from .kernel import Component, Port, SduFromAbove, SduFromBelow, SimError
from .registry import register


@dataclass
class Sdu:
    """Service data unit handed between adjacent layers."""

    seq: int
    size_bits: int
    data: bytes | None = None
    dst: str | None = None
    color: str = "data"
    priority: int = 0


class Pdu:
    """Envelope carried on a link; payload is the layer-specific body."""

    __slots__ = ("pid", "size_bits", "payload", "color", "corrupted")

    def __init__(self, pid: int, size_bits: int, payload, color: str = "data",
                 corrupted: bool = False):
        if size_bits <= 0:
            raise SimError(f"pdu size must be positive, got {size_bits}")
        self.pid = pid
        self.size_bits = size_bits
        self.payload = payload
        self.color = color
        self.corrupted = corrupted

    def as_corrupted(self) -> "Pdu":
        return Pdu(self.pid, self.size_bits, self.payload, self.color, corrupted=True)


class TransmitRequest:
    __slots__ = ("from_id", "pdu")

    def __init__(self, from_id: str, pdu: Pdu):
        self.from_id = from_id
        self.pdu = pdu


class Delivery:
    __slots__ = ("pdu", "link_id", "from_id")

    def __init__(self, pdu: Pdu, link_id: str, from_id: str):
        self.pdu = pdu
        self.link_id = link_id
        self.from_id = from_id


class InjectSend:
    """Harness-injected application payload ('send this now')."""

    __slots__ = ("size_bits", "data")

    def __init__(self, size_bits: int | None = None, data: bytes | None = None):
        self.size_bits = size_bits
        self.data = data


class NetComponent(Component):
    """Component with link attachment helpers."""

    def make_pdu(self, size_bits: int, payload, color: str = "data") -> Pdu:
        return Pdu(self.kernel.next_pdu_id(), size_bits, payload, color)

    def transmit(self, port: Port, message, *, size_bits: int | None = None,
                 color: str | None = None) -> Pdu:
        """Wrap a protocol message in a fresh PDU and start transmission."""
        pdu = self.make_pdu(size_bits if size_bits is not None else message.size_bits,
                            message,
                            color if color is not None else getattr(message, "color", "data"))
        self.kernel.schedule(port.link_id, 0.0, TransmitRequest(self.id, pdu))
        return pdu

    def forward(self, port: Port, pdu: Pdu) -> None:
        """Send an existing PDU onward, preserving its identity and flags."""
        self.kernel.schedule(port.link_id, 0.0, TransmitRequest(self.id, pdu))

    def port_to(self, peer_id: str) -> Port:
        for port in self.ports:
            if port.peer_id == peer_id:
                return port
        raise SimError(f"{self.id}: no port to {peer_id!r}")

    def port_for_link(self, link_id: str) -> Port:
        for port in self.ports:
            if port.link_id == link_id:
                return port
        raise SimError(f"{self.id}: no port on link {link_id!r}")


class _LinkAdmin:
    __slots__ = ("up",)

    def __init__(self, up: bool):
        self.up = up


def _parse_drop_list(value) -> set:
    if value in (None, ""):
        return set()
    if isinstance(value, (int, float)):
        return {int(value)}
    return {int(tok) for tok in str(value).split(",") if tok}


class Link(Component):
    """Point-to-point link with bandwidth, propagation delay and error models.

    Params: bw (bits/s), delay (s), ber (per-bit), loss (per-PDU drop),
    corrupt (per-PDU corruption, combines with ber), queue (max PDUs awaiting
    serialization; unset = unbounded), duplex=full|half, fail_at / repair_at
    (self-scheduled state flips), drop_fwd / drop_rev (scripted drops by
    per-direction PDU count, e.g. "12" or "12,40"; fwd = from first endpoint).
    """

    def __init__(self, cid, kernel, params=None, *, endpoint_a: str, endpoint_b: str):
        super().__init__(cid, kernel, params)
        self.endpoint_a = endpoint_a
        self.endpoint_b = endpoint_b
        self.bw = float(self.param("bw", 1e6))
        self.prop_delay = float(self.param("delay", 0.0))
        self.ber = float(self.param("ber", 0.0))
        self.loss = float(self.param("loss", 0.0))
        self.corrupt = float(self.param("corrupt", 0.0))
        self.queue_limit = self.param("queue")
        self.half_duplex = self.param("duplex", "full") == "half"
        self.up = True
        self._busy_until = {"fwd": 0.0, "rev": 0.0}
        self._queued_starts = {"fwd": [], "rev": []}
        self._count = {"fwd": 0, "rev": 0}
        self._scripted = {"fwd": _parse_drop_list(self.param("drop_fwd")),
                          "rev": _parse_drop_list(self.param("drop_rev"))}

    def setup(self):
        fail_at = self.param("fail_at")
        if fail_at is not None:
            self.schedule_self(float(fail_at) - self.now, _LinkAdmin(False))
        repair_at = self.param("repair_at")
        if repair_at is not None:
            self.schedule_self(float(repair_at) - self.now, _LinkAdmin(True))

    def set_up(self, up: bool) -> None:
        if up == self.up:
            return
        self.up = up
        self.trace(0, "link_up" if up else "link_down")

    def other_end(self, from_id: str) -> str:
        if from_id == self.endpoint_a:
            return self.endpoint_b
        if from_id == self.endpoint_b:
            return self.endpoint_a
        raise SimError(f"{self.id}: {from_id!r} is not an endpoint")

    def corruption_probability(self, size_bits: int) -> float:
        p_clean = (1.0 - self.ber) ** size_bits * (1.0 - self.corrupt)
        return 1.0 - p_clean

    def on_event(self, payload):
        if isinstance(payload, TransmitRequest):
            self._start_transmission(payload.from_id, payload.pdu)
        elif isinstance(payload, _LinkAdmin):
            self.set_up(payload.up)
        else:
            raise SimError(f"{self.id}: unexpected payload {payload!r}")

    def _start_transmission(self, from_id: str, pdu: Pdu):
        to_id = self.other_end(from_id)
        key = "fwd" if from_id == self.endpoint_a else "rev"
        busy_key = "fwd" if self.half_duplex else key
        self._count[key] += 1

        if not self.up:
            self.trace(0, "drop", pdu=pdu.pid, reason="link_down", src=from_id)
            return
        if self._count[key] in self._scripted[key]:
            self.trace(0, "drop", pdu=pdu.pid, reason="scripted", src=from_id)
            return
        if self.loss > 0 and self.rand() < self.loss:
            self.trace(0, "drop", pdu=pdu.pid, reason="loss", src=from_id)
            return

        start = max(self.now, self._busy_until[busy_key])
        if self.queue_limit is not None:
            waiting = [s for s in self._queued_starts[busy_key] if s > self.now]
            self._queued_starts[busy_key] = waiting
            if start > self.now and len(waiting) >= int(self.queue_limit):
                self.trace(0, "drop", pdu=pdu.pid, reason="overflow", src=from_id)
                return
            if start > self.now:
                self._queued_starts[busy_key].append(start)

        p = self.corruption_probability(pdu.size_bits)
        delivered = pdu
        if p > 0 and self.rand() < p:
            delivered = pdu.as_corrupted()

        tx_time = pdu.size_bits / self.bw
        self._busy_until[busy_key] = start + tx_time
        arrive = start + tx_time + self.prop_delay
        self.kernel.schedule(to_id, arrive - self.now, Delivery(delivered, self.id, from_id))
        self.trace(0, "xmit", pdu=pdu.pid, src=from_id, dst=to_id, size=pdu.size_bits,
                   color=pdu.color, start=start, arrive=arrive, corrupt=delivered.corrupted)

    def snapshot(self):
        return {"up": self.up, "bw": self.bw, "delay": self.prop_delay,
                "a": self.endpoint_a, "b": self.endpoint_b}


class _SourceTick:
    __slots__ = ("index",)

    def __init__(self, index: int):
        self.index = index


def deterministic_blob(n: int) -> bytes:
    """Fixed synthetic payload bytes (stand-in for a loaded image)."""
    return bytes((i * 31 + 7) % 256 for i in range(n))


@register("source")
class TrafficSource(NetComponent):
    """Application-layer workload driver.

    Patterns: periodic (rate SDUs/s), poisson (rate), burst (burst_size SDUs
    back-to-back every burst_gap s, spacing s apart inside the burst), and
    blob (a bytes=N payload pushed at start in mss-sized SDUs). Params:
    size (bits per SDU), count (max SDUs), start (s), dst, priority.
    """

    def __init__(self, cid, kernel, params=None):
        super().__init__(cid, kernel, params)
        self.pattern = self.param("pattern", "periodic")
        self.rate = float(self.param("rate", 1.0))
        self.size_bits = int(self.param("size", 8000))
        self.count = self.param("count")
        self.start = float(self.param("start", 0.0))
        self.dst = self.param("dst")
        self.sent = 0
        self.received = 0

    def setup(self):
        if self.pattern == "blob":
            self.schedule_self(self.start, _SourceTick(0))
        elif self.pattern in ("periodic", "poisson", "burst"):
            self.schedule_self(self.start, _SourceTick(0))
        else:
            raise SimError(f"{self.id}: unknown pattern {self.pattern!r}")

    def _emit(self, size_bits: int, data: bytes | None = None):
        sdu = Sdu(self.sent, size_bits, data=data, dst=self.dst,
                  color=str(self.param("color", "data")),
                  priority=int(self.param("priority", 0)))
        self.sent += 1
        self.trace(1, "generate", seq=sdu.seq, size=size_bits)
        self.send_down(sdu)

    def _push_blob(self, data: bytes):
        mss = int(self.param("mss", 1460))
        for off in range(0, len(data), mss):
            chunk = data[off:off + mss]
            self._emit(len(chunk) * 8, chunk)

    def on_event(self, payload):
        if isinstance(payload, SduFromBelow):
            # broadcast media hand every frame back up; count and move on
            self.received += 1
            self.trace(1, "app_recv", seq=payload.sdu.seq)
            return
        if isinstance(payload, InjectSend):
            if payload.data is not None:
                self._push_blob(payload.data)
            elif payload.size_bits:
                self._push_blob(deterministic_blob(max(1, payload.size_bits // 8)))
            else:
                self._emit(self.size_bits)
            return
        if isinstance(payload, _BurstCell):
            self._emit(self.size_bits)
            return
        if not isinstance(payload, _SourceTick):
            raise SimError(f"{self.id}: unexpected payload {payload!r}")

        if self.pattern == "blob":
            self._push_blob(deterministic_blob(int(self.param("bytes", 65536))))
            return

        if self.count is not None and self.sent >= int(self.count):
            return
        if self.pattern == "burst":
            size = int(self.param("burst_size", 5))
            spacing = float(self.param("spacing", 0.0))
            gap = float(self.param("burst_gap", 1.0))
            for i in range(size):
                self.schedule_self(i * spacing, _BurstCell())
            self.schedule_self(gap, _SourceTick(payload.index + 1))
            return
        self._emit(self.size_bits)
        index = payload.index + 1
        if self.pattern == "periodic":
            next_t = self.start + index / self.rate
            self.schedule_self(next_t - self.now, _SourceTick(index))
        else:  # poisson
            self.schedule_self(self.rng().expovariate(self.rate), _SourceTick(index))

    def snapshot(self):
        return {"sent": self.sent, "pattern": self.pattern}


class _BurstCell:
    __slots__ = ()


@register("sink")
class TrafficSink(NetComponent):
    """Terminal consumer: counts SDUs, keeps the delivered byte stream in order."""

    def __init__(self, cid, kernel, params=None):
        super().__init__(cid, kernel, params)
        self.received = []
        self.byte_stream = bytearray()

    def _consume(self, sdu: Sdu):
        self.received.append(sdu)
        if sdu.data is not None:
            self.byte_stream.extend(sdu.data)
        self.trace(0, "deliver", seq=sdu.seq, size=sdu.size_bits)

    def on_event(self, payload):
        if isinstance(payload, (SduFromBelow, SduFromAbove)):
            self._consume(payload.sdu)
        elif isinstance(payload, Delivery):
            if payload.pdu.corrupted:
                self.trace(0, "drop", pdu=payload.pdu.pid, reason="corrupted")
                return
            self._consume(payload.pdu.payload)
        else:
            raise SimError(f"{self.id}: unexpected payload {payload!r}")

    def snapshot(self):
        return {"received": len(self.received), "bytes": len(self.byte_stream)}


class PassthroughLayer(NetComponent):
    """Transparent vertical layer: SDUs pass through unchanged."""

    def on_event(self, payload):
        if isinstance(payload, SduFromAbove):
            self.send_down(payload.sdu)
        elif isinstance(payload, SduFromBelow):
            self.send_up(payload.sdu)
        else:
            raise SimError(f"{self.id}: unexpected payload {payload!r}")


register("relay", PassthroughLayer)
register("datalink", PassthroughLayer)


@register("phy")
class PhyLayer(NetComponent):
    """Bottom-of-stack adapter: wraps messages from above into PDUs on port 0.

    Corruption is detected here; a corrupted PDU never reaches the layer above.
    """

    def on_event(self, payload):
        if isinstance(payload, SduFromAbove):
            self.transmit(self.ports[0], payload.sdu)
        elif isinstance(payload, Delivery):
            if payload.pdu.corrupted:
                self.trace(0, "drop", pdu=payload.pdu.pid, reason="corrupted")
            else:
                self.send_up(payload.pdu.payload)
        else:
            raise SimError(f"{self.id}: unexpected payload {payload!r}")


class _ForwardDelay:
    __slots__ = ("pdu", "out_port")

    def __init__(self, pdu, out_port):
        self.pdu = pdu
        self.out_port = out_port


@register("repeater")
class Repeater(NetComponent):
    """Two-port store-and-forward relay (the 'network cloud' node).

    Optional proc (s) adds per-PDU processing latency. A finite ingress
    buffer is modeled with the queue= param on the egress link.
    """

    def on_event(self, payload):
        if isinstance(payload, Delivery):
            out = [p for p in self.ports if p.link_id != payload.link_id]
            if len(out) != 1:
                raise SimError(f"{self.id}: repeater needs exactly 2 ports")
            proc = float(self.param("proc", 0.0))
            if proc > 0:
                self.schedule_self(proc, _ForwardDelay(payload.pdu, out[0]))
            else:
                self.forward(out[0], payload.pdu)
        elif isinstance(payload, _ForwardDelay):
            self.forward(payload.out_port, payload.pdu)
        else:
            raise SimError(f"{self.id}: unexpected payload {payload!r}")


@register("hub")
@register("lan")
class Hub(NetComponent):
    """LAN segment as a hub: repeats every arriving PDU to all other ports."""

    def on_event(self, payload):
        if not isinstance(payload, Delivery):
            raise SimError(f"{self.id}: unexpected payload {payload!r}")
        for port in self.ports:
            if port.link_id != payload.link_id:
                self.forward(port, payload.pdu)
