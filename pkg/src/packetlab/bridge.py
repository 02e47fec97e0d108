"""Transparent bridging: promiscuous learning, filtering database, spanning tree.

LAN segments are hub components; bridges and hosts attach to them with links.
Bridges flood unknown/broadcast destinations on forwarding ports, filter frames
whose destination lies on the arrival port, and run a distance-vector spanning
tree: config vectors (root_id, root_cost, sender_id, sender_port) compared
lexicographically, hello-timer driven, with timeout-based expiry of stored port
information driving re-election when a bridge goes silent.

Bridge ids are a single integer (priority << 16) | bid, so the numerically
lowest id wins the root election.
"""

from __future__ import annotations

from .kernel import SduFromAbove, SimError
from .netbase import Delivery, NetComponent
from .registry import register

ROOT, DESIGNATED, BLOCKED = "root", "designated", "blocked"


class EthFrame:
    """LAN frame: station addresses around an SDU. dst None = broadcast."""

    __slots__ = ("src", "dst", "sdu", "size_bits", "color")

    def __init__(self, src: str, dst, sdu, header_bits: int = 0):
        self.src = src
        self.dst = dst
        self.sdu = sdu
        self.size_bits = sdu.size_bits + header_bits
        self.color = sdu.color


class Bpdu:
    __slots__ = ("root", "cost", "sender", "port", "size_bits", "color")

    def __init__(self, root: int, cost: int, sender: int, port: int,
                 size_bits: int = 512):
        self.root = root
        self.cost = cost
        self.sender = sender
        self.port = port
        self.size_bits = size_bits
        self.color = "control"

    def vector(self):
        return (self.root, self.cost, self.sender, self.port)


@register("host")
class Host(NetComponent):
    """LAN station: stamps its address on outgoing SDUs, accepts its own/broadcast."""

    def __init__(self, cid, kernel, params=None):
        super().__init__(cid, kernel, params)
        self.header_bits = int(self.param("header", 0))

    def addr(self) -> str:
        return str(self.param("addr", self.id.split(".")[0]))

    def on_event(self, payload):
        if isinstance(payload, SduFromAbove):
            frame = EthFrame(self.addr(), payload.sdu.dst, payload.sdu, self.header_bits)
            pdu = self.transmit(self.ports[0], frame)
            self.trace(0, "send", pdu=pdu.pid, src=frame.src, dst=frame.dst or "*",
                       seq=payload.sdu.seq)
        elif isinstance(payload, Delivery):
            if payload.pdu.corrupted:
                self.trace(0, "drop", pdu=payload.pdu.pid, reason="corrupted")
                return
            frame = payload.pdu.payload
            if not isinstance(frame, EthFrame):
                self.trace(2, "ignore", pdu=payload.pdu.pid)
                return
            if frame.src == self.addr():
                return
            if frame.dst is None or frame.dst == self.addr():
                self.trace(0, "recv", pdu=payload.pdu.pid, src=frame.src,
                           seq=frame.sdu.seq)
                if self.above is not None:
                    self.send_up(frame.sdu)
        else:
            raise SimError(f"{self.id}: unexpected payload {payload!r}")


class _Hello:
    __slots__ = ()


@register("bridge")
class Bridge(NetComponent):
    """Params: bid (required, small integer), priority, hello (s), max_age (s),
    aging (s, filtering database), port_cost, bpdu_bits."""

    def __init__(self, cid, kernel, params=None):
        super().__init__(cid, kernel, params)
        bid = self.param("bid")
        if bid is None:
            raise SimError(f"{self.id}: bridge needs a bid= parameter")
        self.my_id = (int(self.param("priority", 0)) << 16) | int(bid)
        self.hello = float(self.param("hello", 2.0))
        self.max_age = float(self.param("max_age", 6.0))
        self.aging = float(self.param("aging", 300.0))
        self.port_cost = int(self.param("port_cost", 1))
        self.fdb: dict[str, list] = {}          # addr -> [port_index, learned_at]
        self.stored: dict[int, tuple] = {}      # port -> (vector, heard_at)
        self.roles: dict[int, str] = {}
        self.root_id = self.my_id
        self.root_cost = 0
        self.root_port: int | None = None

    def setup(self):
        for port in self.ports:
            self.roles[port.index] = DESIGNATED
            self.trace(0, "stp_role", port=port.index, role=DESIGNATED)
        self.trace(0, "stp_root", root=self.root_id, cost=0)
        self._send_hellos()
        self.schedule_self(self.hello, _Hello())

    # -- spanning tree --------------------------------------------------------

    def _send_hellos(self):
        for port in self.ports:
            if self.roles.get(port.index) == DESIGNATED:
                bpdu = Bpdu(self.root_id, self.root_cost, self.my_id, port.index,
                            int(self.param("bpdu_bits", 512)))
                self.transmit(port, bpdu)
                self.trace(1, "bpdu_send", port=port.index, root=bpdu.root,
                           cost=bpdu.cost)

    def stp_on_bpdu(self, port_index: int, bpdu: Bpdu):
        incoming = (bpdu.vector(), self.now)
        held = self.stored.get(port_index)
        if (held is None or bpdu.vector() < held[0]
                or bpdu.sender == held[0][2]):
            self.stored[port_index] = incoming
            self._recompute()

    def _valid_stored(self):
        return {p: v for p, (v, heard) in self.stored.items()
                if self.now - heard < self.max_age}

    def _recompute(self):
        stored = self._valid_stored()
        # best way to the root through each port that has heard anything
        candidates = [(v[0], v[1] + self.port_cost, v[2], v[3], p)
                      for p, v in stored.items()]
        best = min(candidates) if candidates else None
        old = (self.root_id, self.root_cost, dict(self.roles))

        if best is None or self.my_id <= best[0]:
            self.root_id = self.my_id
            self.root_cost = 0
            self.root_port = None
        else:
            self.root_id = best[0]
            self.root_cost = best[1]
            self.root_port = best[4]

        for port in self.ports:
            p = port.index
            if p == self.root_port:
                role = ROOT
            else:
                mine = (self.root_id, self.root_cost, self.my_id)
                theirs = stored.get(p)
                if theirs is None or mine < (theirs[0], theirs[1], theirs[2]):
                    role = DESIGNATED
                else:
                    role = BLOCKED
            if self.roles.get(p) != role:
                self.roles[p] = role
                self.trace(0, "stp_role", port=p, role=role)

        if (self.root_id, self.root_cost) != old[:2]:
            self.trace(0, "stp_root", root=self.root_id, cost=self.root_cost)

    def _forwarding(self, port_index: int) -> bool:
        return self.roles.get(port_index) in (ROOT, DESIGNATED)

    # -- filtering database ------------------------------------------------------

    def _learn(self, addr: str, port_index: int):
        entry = self.fdb.get(addr)
        if entry is None:
            self.fdb[addr] = [port_index, self.now]
            self.trace(0, "fdb", addr=addr, port=port_index, op="learn")
        elif entry[0] != port_index:
            self.fdb[addr] = [port_index, self.now]
            self.trace(0, "fdb", addr=addr, port=port_index, op="move")
        else:
            entry[1] = self.now
            self.trace(2, "fdb", addr=addr, port=port_index, op="refresh")

    def _lookup(self, addr: str):
        entry = self.fdb.get(addr)
        if entry is None:
            return None
        if self.now - entry[1] >= self.aging:
            del self.fdb[addr]
            self.trace(0, "fdb", addr=addr, port=entry[0], op="expire")
            return None
        return entry[0]

    def _age_sweep(self):
        for addr in list(self.fdb):
            self._lookup(addr)

    # -- data plane ----------------------------------------------------------------

    def bridge_on_frame(self, port_index: int, pdu):
        frame: EthFrame = pdu.payload
        if not self._forwarding(port_index):
            self.trace(1, "discard", pdu=pdu.pid, reason="blocked_port",
                       port=port_index)
            return
        self._learn(frame.src, port_index)
        out = self._lookup(frame.dst) if frame.dst is not None else None
        if out is None:
            # unknown or broadcast: flood every other forwarding port
            for port in self.ports:
                if port.index != port_index and self._forwarding(port.index):
                    self.forward(port, pdu)
            self.trace(0, "flood", pdu=pdu.pid, dst=frame.dst or "*",
                       inport=port_index)
        elif out == port_index:
            self.trace(0, "filter", pdu=pdu.pid, dst=frame.dst, port=port_index)
        elif self._forwarding(out):
            self.forward(self.ports[out], pdu)
            self.trace(0, "relay", pdu=pdu.pid, dst=frame.dst,
                       inport=port_index, outport=out)

    # -- event plumbing ----------------------------------------------------------

    def on_event(self, payload):
        if isinstance(payload, Delivery):
            if payload.pdu.corrupted:
                self.trace(0, "drop", pdu=payload.pdu.pid, reason="corrupted")
                return
            port = self.port_for_link(payload.link_id)
            body = payload.pdu.payload
            if isinstance(body, Bpdu):
                self.stp_on_bpdu(port.index, body)
            elif isinstance(body, EthFrame):
                self.bridge_on_frame(port.index, payload.pdu)
            else:
                self.trace(2, "ignore", pdu=payload.pdu.pid)
        elif isinstance(payload, _Hello):
            self._age_sweep()
            self._recompute()   # expire stale port info, maybe re-elect
            self._send_hellos()
            self.schedule_self(self.hello, _Hello())
        else:
            raise SimError(f"{self.id}: unexpected payload {payload!r}")

    def snapshot(self):
        return {"id": self.my_id, "root": self.root_id, "cost": self.root_cost,
                "roles": {p: r for p, r in sorted(self.roles.items())},
                "fdb": {a: {"port": e[0], "age": round(self.now - e[1], 6)}
                        for a, e in sorted(self.fdb.items())}}
