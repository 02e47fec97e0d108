"""Simplified hierarchical ATM routing: Hellos, acknowledged PTSE flooding,
peer group leader election, and two-level topology aggregation.

Each node floods link-state records (PTSEs) inside its peer group; a Hello
exchange that reveals a different group id marks the link as a border and caps
its state at one_way for inside purposes. The elected leader (max (priority,
node_id)) instantiates a logical group node and floods parent-scope PTSEs
describing aggregated border links; parent-scope records ride inside links and
echoed border links so both leaders converge. Internal PTSEs never leave the
group.
"""

from __future__ import annotations

import heapq

from .kernel import SimError
from .netbase import Delivery, NetComponent
from .registry import register

DOWN, ONE_WAY, TWO_WAY = "down", "one_way", "two_way"
INSIDE, PARENT = "inside", "parent"


class Ptse:
    """One topology state element: (origin, pid) versioned by seq."""

    __slots__ = ("origin", "pid", "seq", "scope", "payload")

    def __init__(self, origin: str, pid: str, seq: int, scope: str, payload: dict):
        self.origin = origin
        self.pid = pid
        self.seq = seq
        self.scope = scope
        self.payload = payload

    @property
    def withdrawn(self) -> bool:
        return bool(self.payload.get("withdrawn"))

    def key(self):
        return (self.origin, self.pid)

    def instance(self):
        return (self.origin, self.pid, self.seq)


class HelloMsg:
    __slots__ = ("node", "group", "echo", "size_bits", "color")

    def __init__(self, node: str, group: str, echo):
        self.node = node
        self.group = group
        self.echo = echo
        self.size_bits = 512
        self.color = "control"


class PtspMsg:
    __slots__ = ("ptse", "size_bits", "color")

    def __init__(self, ptse: Ptse):
        self.ptse = ptse
        self.size_bits = 1024
        self.color = "control"


class AckMsg:
    __slots__ = ("origin", "pid", "seq", "size_bits", "color")

    def __init__(self, origin: str, pid: str, seq: int):
        self.origin = origin
        self.pid = pid
        self.seq = seq
        self.size_bits = 256
        self.color = "control"


class _PortState:
    __slots__ = ("state", "neighbor", "group", "border", "echoed", "last")

    def __init__(self):
        self.state = DOWN
        self.neighbor = None
        self.group = None
        self.border = False
        self.echoed = False
        self.last = None


class _HelloTick:
    __slots__ = ()


class _RetxTick:
    __slots__ = ()


@register("pnni")
class PnniNode(NetComponent):
    """Params: group (required), prio, hello (s), dead (intervals),
    retx (s), agg_delay (s before the leader first aggregates)."""

    def __init__(self, cid, kernel, params=None):
        super().__init__(cid, kernel, params)
        group = self.param("group")
        if group is None:
            raise SimError(f"{self.id}: pnni needs a group= parameter")
        self.group = str(group)
        self.node_id = self.id
        self.prio = int(self.param("prio", 0))
        self.hello = float(self.param("hello", 1.0))
        self.dead = float(self.param("dead", 3.0))
        self.retx = float(self.param("retx", 2.0))
        self.agg_delay = float(self.param("agg_delay", 3.0 * self.hello))
        self.db: dict[tuple, Ptse] = {}
        self.parent_db: dict[tuple, Ptse] = {}
        self.port_state: dict[int, _PortState] = {}
        self.leader: str | None = None
        self._own_seq: dict[tuple, int] = {}
        self._sent: set[tuple] = set()            # (port, origin, pid, seq)
        self._pending: dict[tuple, float] = {}    # (port, origin, pid, seq) -> deadline
        self._parent_originated: dict[str, dict] = {}

    # -- lifecycle ------------------------------------------------------------

    def setup(self):
        for port in self.ports:
            self.port_state[port.index] = _PortState()
        self._originate(INSIDE, self.node_id, "node",
                        {"type": "node", "prio": self.prio})
        self._recompute_leader()
        self.schedule_self(0.0, _HelloTick())
        self.schedule_self(self.retx, _RetxTick())

    def lgn_id(self) -> str:
        return f"lg:{self.group}"

    # -- hello protocol ----------------------------------------------------------

    def _send_hellos(self):
        for port in self.ports:
            ps = self.port_state[port.index]
            self.transmit(port, HelloMsg(self.node_id, self.group, ps.neighbor))

    def _hello_received(self, port, msg: HelloMsg):
        ps = self.port_state[port.index]
        ps.neighbor = msg.node
        ps.group = msg.group
        ps.last = self.now
        ps.border = msg.group != self.group
        was_echoed = ps.echoed
        ps.echoed = msg.echo == self.node_id
        # inside links climb to two_way; border links cap at one_way
        if ps.border:
            new = ONE_WAY
        else:
            new = TWO_WAY if ps.echoed else ONE_WAY
        if new != ps.state:
            ps.state = new
            self.trace(0, "hello_state", port=port.index, neighbor=msg.node,
                       state=new, border=ps.border)
            if new == TWO_WAY:
                metric = int(float(port.params.get("metric", 1)))
                self._originate(INSIDE, self.node_id, f"link:{msg.node}",
                                {"type": "link", "remote": msg.node,
                                 "metric": metric})
                self._sync(port, INSIDE)
                self._sync(port, PARENT)
        if ps.border and ps.echoed and not was_echoed:
            metric = int(float(port.params.get("metric", 1)))
            self._originate(INSIDE, self.node_id, f"border:{msg.group}",
                            {"type": "border", "remote_group": msg.group,
                             "remote": msg.node, "metric": metric})
            self._sync(port, PARENT)

    def _check_silence(self):
        deadline = self.dead * self.hello
        for port in self.ports:
            ps = self.port_state[port.index]
            if ps.state == DOWN or ps.last is None:
                continue
            if self.now - ps.last > deadline:
                old_border, old_group = ps.border, ps.group
                neighbor = ps.neighbor
                self.port_state[port.index] = _PortState()
                self.trace(0, "hello_state", port=port.index,
                           neighbor=neighbor, state=DOWN, border=old_border)
                self._pending = {k: v for k, v in self._pending.items()
                                 if k[0] != port.index}
                if old_border:
                    self._withdraw(INSIDE, self.node_id, f"border:{old_group}")
                else:
                    self._withdraw(INSIDE, self.node_id, f"link:{neighbor}")

    # -- PTSE origination and flooding ------------------------------------------

    def _db_for(self, scope: str) -> dict:
        return self.db if scope == INSIDE else self.parent_db

    def _next_seq(self, scope: str, origin: str, pid: str) -> int:
        cur = self._db_for(scope).get((origin, pid))
        known = cur.seq if cur is not None else 0
        mine = self._own_seq.get((origin, pid), 0)
        seq = max(known, mine) + 1
        self._own_seq[(origin, pid)] = seq
        return seq

    def _originate(self, scope: str, origin: str, pid: str, payload: dict):
        ptse = Ptse(origin, pid, self._next_seq(scope, origin, pid), scope, payload)
        self._install(ptse)
        self.trace(0, "ptse", op="originate", origin=origin, id=pid,
                   seq=ptse.seq, scope=scope)
        self._flood(ptse)

    def _withdraw(self, scope: str, origin: str, pid: str):
        if (origin, pid) not in self._db_for(scope):
            return
        self._originate(scope, origin, pid, {"withdrawn": True})

    def _install(self, ptse: Ptse):
        self._db_for(ptse.scope)[ptse.key()] = ptse
        if ptse.scope == INSIDE:
            self._recompute_leader()
        else:
            nodes, links = self._hierarchy_counts()
            self.trace(0, "hierarchy", nodes=nodes, links=links)

    def _usable_ports(self, scope: str):
        out = []
        for port in self.ports:
            ps = self.port_state[port.index]
            if ps.state == TWO_WAY and not ps.border:
                out.append(port)
            elif scope == PARENT and ps.border and ps.echoed:
                out.append(port)
        return out

    def _flood(self, ptse: Ptse, exclude: int | None = None):
        for port in self._usable_ports(ptse.scope):
            if port.index == exclude:
                continue
            self._send_ptse(port, ptse)

    def _send_ptse(self, port, ptse: Ptse):
        token = (port.index,) + ptse.instance()
        if token in self._sent:
            return
        self._sent.add(token)
        self._pending[token] = self.now + self.retx
        self.transmit(port, PtspMsg(ptse))
        self.trace(1, "flood", origin=ptse.origin, id=ptse.pid, seq=ptse.seq,
                   port=port.index)

    def _sync(self, port, scope: str):
        for ptse in self._db_for(scope).values():
            self._send_ptse(port, ptse)

    def _ptsp_received(self, port, ptse: Ptse):
        self.transmit(port, AckMsg(*ptse.instance()))
        cur = self._db_for(ptse.scope).get(ptse.key())
        if cur is not None and ptse.seq <= cur.seq:
            self.trace(2, "ptse_dup", origin=ptse.origin, id=ptse.pid,
                       seq=ptse.seq)
            return
        self._install(ptse)
        op = "withdraw" if ptse.withdrawn else "install"
        self.trace(0, "ptse", op=op, origin=ptse.origin, id=ptse.pid,
                   seq=ptse.seq, scope=ptse.scope)
        self._flood(ptse, exclude=port.index)

    def _ack_received(self, port, ack: AckMsg):
        self._pending.pop((port.index, ack.origin, ack.pid, ack.seq), None)

    def _retransmit_due(self):
        for token, deadline in list(self._pending.items()):
            if deadline > self.now:
                continue
            port_index, origin, pid, seq = token
            scope_db = self.db if (origin, pid) in self.db else self.parent_db
            ptse = scope_db.get((origin, pid))
            if ptse is None or ptse.seq != seq:
                del self._pending[token]
                continue
            self._pending[token] = self.now + self.retx
            self.transmit(self.ports[port_index], PtspMsg(ptse))
            self.trace(1, "flood_retx", origin=origin, id=pid, seq=seq,
                       port=port_index)

    # -- election and aggregation ---------------------------------------------------

    def _members(self):
        """Announced members still reachable over non-withdrawn links."""
        known = {self.node_id: self.prio}
        for (origin, pid), ptse in self.db.items():
            if pid == "node" and not ptse.withdrawn:
                known[origin] = ptse.payload["prio"]
        edges = self._graph()
        seen = {self.node_id}
        stack = [self.node_id]
        while stack:
            for nxt, _ in edges.get(stack.pop(), ()):
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return {n: p for n, p in known.items() if n in seen}

    def _recompute_leader(self):
        members = self._members()
        leader = max(members, key=lambda n: (members[n], n))
        if leader != self.leader:
            self.leader = leader
            self.trace(0, "leader", leader=leader, group=self.group)

    def _graph(self):
        # an edge counts only when both endpoints still advertise it, so a
        # stale half from an unreachable node cannot keep it alive
        half: dict[tuple, float] = {}
        for ptse in self.db.values():
            if ptse.withdrawn or ptse.payload.get("type") != "link":
                continue
            half[(ptse.origin, ptse.payload["remote"])] = ptse.payload["metric"]
        edges: dict[str, list] = {}
        for (a, b), m in half.items():
            if (b, a) in half:
                edges.setdefault(a, []).append((b, m))
        return edges

    def _shortest(self, src: str, dst: str):
        if src == dst:
            return 0
        edges = self._graph()
        dist = {src: 0}
        queue = [(0, src)]
        while queue:
            d, node = heapq.heappop(queue)
            if node == dst:
                return d
            if d > dist.get(node, float("inf")):
                continue
            for nxt, m in edges.get(node, ()):
                nd = d + m
                if nd < dist.get(nxt, float("inf")):
                    dist[nxt] = nd
                    heapq.heappush(queue, (nd, nxt))
        return None

    def _borders(self):
        """remote_group -> list of (border node, link metric)."""
        out: dict[str, list] = {}
        for ptse in self.db.values():
            if ptse.withdrawn or ptse.payload.get("type") != "border":
                continue
            out.setdefault(ptse.payload["remote_group"], []).append(
                (ptse.origin, ptse.payload["metric"]))
        return out

    def _aggregate(self):
        """Desired parent-scope payloads for this group's logical node."""
        desired = {"node": {"type": "lgnode", "group": self.group}}
        borders = self._borders()
        border_nodes = sorted({b for group in borders.values() for b, _ in group})
        for remote_group, attach in sorted(borders.items()):
            best = None
            for node, _metric in attach:
                if len(border_nodes) == 1:
                    cost = 0
                else:
                    paths = [self._shortest(other, node)
                             for other in border_nodes if other != node]
                    costs = [p for p in paths if p is not None]
                    cost = min(costs) if costs else None
                if cost is not None and (best is None or cost < best):
                    best = cost
            if best is not None:
                desired[f"link:lg:{remote_group}"] = {
                    "type": "link", "remote": f"lg:{remote_group}",
                    "metric": best}
        return desired

    def _leader_duties(self):
        if self.now < self.agg_delay:
            return
        lgn = self.lgn_id()
        if self.leader != self.node_id:
            for pid in list(self._parent_originated):
                self._withdraw(PARENT, lgn, pid)
            self._parent_originated.clear()
            return
        desired = self._aggregate()
        for pid, payload in desired.items():
            cur = self.parent_db.get((lgn, pid))
            if cur is None or cur.withdrawn or cur.payload != payload:
                self._originate(PARENT, lgn, pid, payload)
            self._parent_originated[pid] = payload
        for pid in list(self._parent_originated):
            if pid not in desired:
                self._withdraw(PARENT, lgn, pid)
                del self._parent_originated[pid]

    def _hierarchy_counts(self):
        nodes = set()
        links = set()
        for (origin, pid), ptse in self.parent_db.items():
            if ptse.withdrawn:
                continue
            if ptse.payload.get("type") == "lgnode":
                nodes.add(origin)
            elif ptse.payload.get("type") == "link":
                links.add(frozenset((origin, ptse.payload["remote"])))
        return len(nodes), len(links)

    # -- event plumbing ---------------------------------------------------------

    def on_event(self, payload):
        if isinstance(payload, Delivery):
            if payload.pdu.corrupted:
                self.trace(0, "drop", pdu=payload.pdu.pid, reason="corrupted")
                return
            port = self.port_for_link(payload.link_id)
            body = payload.pdu.payload
            if isinstance(body, HelloMsg):
                self._hello_received(port, body)
            elif isinstance(body, PtspMsg):
                self._ptsp_received(port, body.ptse)
            elif isinstance(body, AckMsg):
                self._ack_received(port, body)
            else:
                self.trace(2, "ignore", pdu=payload.pdu.pid)
        elif isinstance(payload, _HelloTick):
            self._check_silence()
            self._send_hellos()
            self._recompute_leader()
            self._leader_duties()
            self.schedule_self(self.hello, _HelloTick())
        elif isinstance(payload, _RetxTick):
            self._retransmit_due()
            self.schedule_self(self.retx, _RetxTick())
        else:
            raise SimError(f"{self.id}: unexpected payload {payload!r}")

    def snapshot(self):
        nodes, links = self._hierarchy_counts()
        return {
            "group": self.group, "leader": self.leader,
            "ports": {p.index: {"state": self.port_state[p.index].state,
                                "border": self.port_state[p.index].border,
                                "neighbor": self.port_state[p.index].neighbor}
                      for p in self.ports},
            "db": {f"{o}/{p}": (v.seq, v.withdrawn or v.payload)
                   for (o, p), v in sorted(self.db.items())},
            "parent_db": {f"{o}/{p}": (v.seq, v.withdrawn or v.payload)
                          for (o, p), v in sorted(self.parent_db.items())},
            "hierarchy": {"nodes": nodes, "links": links},
        }
