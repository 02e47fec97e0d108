"""IP-style fragmentation at MTU boundaries with destination reassembly.

Offsets count 8-byte units; headers are a fixed 20 bytes with no options.
fragment() and ReassemblyTable are pure pieces used by the ip and router
components; routers re-fragment at each hop but never reassemble.
"""

from __future__ import annotations

from .kernel import SduFromAbove, SimError
from .netbase import Delivery, NetComponent, Sdu, deterministic_blob
from .registry import register

HEADER_LEN = 20
MAX_TOTAL = 65535


class Datagram:
    """One IP datagram or fragment; payload carried as real bytes."""

    __slots__ = ("ident", "offset", "more_fragments", "src", "dst", "payload",
                 "seq", "color")

    def __init__(self, ident: int, src: str, dst, payload: bytes,
                 offset: int = 0, more_fragments: bool = False,
                 seq: int = 0, color: str = "data"):
        if offset * 8 + len(payload) > MAX_TOTAL - HEADER_LEN:
            raise SimError("datagram exceeds the 16-bit length field")
        self.ident = ident & 0xFFFF
        self.offset = offset
        self.more_fragments = more_fragments
        self.src = src
        self.dst = dst
        self.payload = payload
        self.seq = seq
        self.color = color

    @property
    def total_len(self) -> int:
        return HEADER_LEN + len(self.payload)

    @property
    def size_bits(self) -> int:
        return self.total_len * 8

    def key(self):
        return (self.src, self.dst, self.ident)


def fragment(d: Datagram, mtu: int) -> list[Datagram]:
    """Split d to fit mtu; non-final payloads are the largest multiple of 8."""
    if mtu < HEADER_LEN + 8:
        raise SimError(f"mtu {mtu} cannot carry any payload")
    if d.total_len <= mtu:
        return [d]
    unit = (mtu - HEADER_LEN) // 8 * 8
    out = []
    for i in range(0, len(d.payload), unit):
        piece = d.payload[i:i + unit]
        last = i + unit >= len(d.payload)
        out.append(Datagram(d.ident, d.src, d.dst, piece,
                            offset=d.offset + i // 8,
                            more_fragments=d.more_fragments if last else True,
                            seq=d.seq, color=d.color))
    return out


class _Buffer:
    __slots__ = ("ranges", "total", "first_time", "fragments")

    def __init__(self, now: float):
        self.ranges: list[tuple[int, int, bytes]] = []
        self.total: int | None = None
        self.first_time = now
        self.fragments = 0


class ReassemblyTable:
    """Collects fragments per (src, dst, id); duplicates are idempotent."""

    def __init__(self):
        self.buffers: dict[tuple, _Buffer] = {}

    def add(self, frag: Datagram, now: float = 0.0):
        """Record one fragment; return the whole datagram when coverage completes."""
        buf = self.buffers.setdefault(frag.key(), _Buffer(now))
        buf.fragments += 1
        start = frag.offset * 8
        span = (start, start + len(frag.payload), frag.payload)
        if span[:2] not in [(a, b) for a, b, _ in buf.ranges]:
            buf.ranges.append(span)
        if not frag.more_fragments:
            buf.total = start + len(frag.payload)
        if buf.total is None:
            return None
        covered = 0
        payload = bytearray(buf.total)
        for a, b, data in sorted(buf.ranges):
            if a > covered:
                return None
            take = data[max(0, covered - a):]
            payload[covered:covered + len(take)] = take
            covered = max(covered, b)
        if covered < buf.total:
            return None
        del self.buffers[frag.key()]
        return Datagram(frag.ident, frag.src, frag.dst, bytes(payload),
                        seq=frag.seq, color=frag.color)

    def discard(self, key) -> bool:
        return self.buffers.pop(key, None) is not None


class _ReassemblyExpiry:
    __slots__ = ("key",)

    def __init__(self, key):
        self.key = key


@register("ip")
class IpLayer(NetComponent):
    """Host network layer: fragments on send, reassembles what is addressed here.

    Params: addr (default node name), timer (reassembly deadline, s), dst."""

    def __init__(self, cid, kernel, params=None):
        super().__init__(cid, kernel, params)
        self.timer = float(self.param("timer", 15.0))
        self.table = ReassemblyTable()
        self._next_id = 0
        self.sent = 0
        self.completed = 0
        self.timed_out = 0

    def addr(self) -> str:
        return str(self.param("addr", self.id.split(".")[0]))

    def egress_mtu(self, port) -> int:
        return int(float(port.params.get("mtu", 1500)))

    def on_event(self, payload):
        if isinstance(payload, SduFromAbove):
            self._send(payload.sdu)
        elif isinstance(payload, Delivery):
            if payload.pdu.corrupted:
                self.trace(0, "drop", pdu=payload.pdu.pid, reason="corrupted")
                return
            self._receive(payload.pdu.payload)
        elif isinstance(payload, _ReassemblyExpiry):
            if self.table.discard(payload.key):
                self.timed_out += 1
                self.trace(0, "drop", reason="reassembly_timeout",
                           id=payload.key[2], src=payload.key[0])
        else:
            raise SimError(f"{self.id}: unexpected payload {payload!r}")

    def _send(self, sdu: Sdu):
        nbytes = sdu.size_bits // 8
        data = sdu.data if isinstance(sdu.data, (bytes, bytearray)) else deterministic_blob(nbytes)
        d = Datagram(self._next_id, self.addr(), sdu.dst, bytes(data),
                     seq=sdu.seq, color=sdu.color)
        self._next_id = (self._next_id + 1) & 0xFFFF
        port = self.ports[0]
        frags = fragment(d, self.egress_mtu(port))
        self.sent += 1
        self.trace(0, "dgram", id=d.ident, len=len(d.payload), frags=len(frags))
        for f in frags:
            pdu = self.transmit(port, f)
            self.trace(0, "frag", pdu=pdu.pid, id=f.ident, offset=f.offset,
                       len=len(f.payload), mf=f.more_fragments)

    def _receive(self, frag):
        if not isinstance(frag, Datagram):
            self.trace(2, "ignore")
            return
        if frag.dst is not None and frag.dst != self.addr():
            self.trace(1, "ignore", id=frag.ident, dst=frag.dst)
            return
        fresh = frag.key() not in self.table.buffers
        buf = self.table.buffers.get(frag.key())
        first_time = self.now if buf is None else buf.first_time
        nfrags = 1 if buf is None else buf.fragments + 1
        done = self.table.add(frag, self.now)
        if done is not None:
            self.completed += 1
            self.trace(0, "reassembled", id=done.ident, len=len(done.payload),
                       src=done.src, frags=nfrags, latency=self.now - first_time)
            if self.above is not None:
                self.send_up(Sdu(seq=done.seq, size_bits=len(done.payload) * 8,
                                 data=done.payload, dst=done.dst, color=done.color))
        elif fresh:
            self.schedule_self(self.timer, _ReassemblyExpiry(frag.key()))

    def snapshot(self):
        return {"sent": self.sent, "completed": self.completed,
                "timed_out": self.timed_out,
                "pending": len(self.table.buffers)}


@register("router")
class Router(NetComponent):
    """Forwards datagrams, re-fragmenting to each egress link's mtu.

    Two ports forward to the opposite side; more need route_<dst>=<port> params."""

    def on_event(self, payload):
        if isinstance(payload, Delivery):
            if payload.pdu.corrupted:
                self.trace(0, "drop", pdu=payload.pdu.pid, reason="corrupted")
                return
            frag = payload.pdu.payload
            if not isinstance(frag, Datagram):
                self.trace(2, "ignore", pdu=payload.pdu.pid)
                return
            inport = self.port_for_link(payload.link_id)
            out = self._route(inport, frag)
            if out is None:
                self.trace(0, "drop", pdu=payload.pdu.pid, reason="no_route",
                           dst=frag.dst)
                return
            mtu = int(float(out.params.get("mtu", 1500)))
            try:
                frags = fragment(frag, mtu)
            except SimError:
                self.trace(0, "drop", pdu=payload.pdu.pid, reason="mtu_too_small",
                           mtu=mtu)
                return
            for f in frags:
                pdu = self.transmit(out, f)
                if len(frags) > 1:
                    self.trace(0, "frag", pdu=pdu.pid, id=f.ident,
                               offset=f.offset, len=len(f.payload),
                               mf=f.more_fragments)
        else:
            raise SimError(f"{self.id}: unexpected payload {payload!r}")

    def _route(self, inport, frag):
        if len(self.ports) == 2:
            return self.ports[1 - inport.index]
        hop = self.param(f"route_{frag.dst}")
        if hop is None:
            return None
        return self.ports[int(hop)]
