"""Network configuration files: a flat line-oriented grammar and its loader.

Grammar (one declaration per line, ``#`` starts a comment):

    node <id> <kind>[,<kind>...] [key=value ...]
    link <endpointA> <endpointB> bw=<bits/s> delay=<s> [ber=<p>] [key=value ...]
    param <component-id> <key>=<value>

A node with a comma-separated kind stack instantiates one component per kind,
named ``<id>.<kind>``, wired top-to-bottom (leftmost kind is the top layer).
A bare node id used as a link endpoint resolves to the node's bottom component.
All units are SI (bits/s, seconds); numbers may use scientific notation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import registry
from .kernel import Component, Kernel, Port, SimError


@dataclass(frozen=True)
class ParseError:
    line: int
    col: int
    message: str

    def __str__(self):
        return f"line {self.line}:{self.col}: {self.message}"


@dataclass
class NodeDecl:
    id: str
    kinds: list
    params: dict = field(default_factory=dict)
    line: int = 0

    def __eq__(self, other):
        return (isinstance(other, NodeDecl)
                and (self.id, self.kinds, self.params) == (other.id, other.kinds, other.params))


@dataclass
class LinkDecl:
    a: str
    b: str
    params: dict = field(default_factory=dict)
    line: int = 0

    def __eq__(self, other):
        return (isinstance(other, LinkDecl)
                and (self.a, self.b, self.params) == (other.a, other.b, other.params))


@dataclass
class Topology:
    nodes: list = field(default_factory=list)
    links: list = field(default_factory=list)
    params: list = field(default_factory=list)  # (component_id, key, value)

    def component_ids(self) -> list:
        """All component ids the declarations will produce, in declaration order."""
        ids = []
        for node in self.nodes:
            if len(node.kinds) == 1:
                ids.append(node.id)
            else:
                ids.extend(f"{node.id}.{kind}" for kind in node.kinds)
        return ids

    def bottom_component(self, node_id: str) -> str | None:
        for node in self.nodes:
            if node.id == node_id:
                return node_id if len(node.kinds) == 1 else f"{node_id}.{node.kinds[-1]}"
        return None

    def resolve_endpoint(self, endpoint: str) -> str | None:
        """Map a link endpoint to a component id, or None if undeclared."""
        ids = set(self.component_ids())
        if endpoint in ids:
            return endpoint
        return self.bottom_component(endpoint)


@dataclass
class ParseResult:
    topology: Topology
    errors: list

    @property
    def ok(self) -> bool:
        return not self.errors


def parse_value(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def format_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _split_kv(tokens, lineno, col_of, errors):
    params = {}
    for tok in tokens:
        key, sep, value = tok.partition("=")
        if not sep or not key:
            errors.append(ParseError(lineno, col_of(tok), f"expected key=value, got {tok!r}"))
            continue
        params[key] = parse_value(value)
    return params


def parse(text: str) -> ParseResult:
    """Parse a config document. Total: collects errors instead of raising."""
    topo = Topology()
    errors = []
    seen_node_ids = set()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        tokens = line.split()

        def col_of(tok, _raw=raw):
            pos = _raw.find(tok)
            return pos + 1 if pos >= 0 else 1

        head = tokens[0]
        if head == "node":
            if len(tokens) < 3:
                errors.append(ParseError(lineno, 1, "node needs: node <id> <kind> [k=v ...]"))
                continue
            nid, kindspec = tokens[1], tokens[2]
            kinds = [k for k in kindspec.split(",") if k]
            if nid in seen_node_ids:
                errors.append(ParseError(lineno, col_of(nid), f"duplicate node id {nid!r}"))
                continue
            if len(kinds) != len(set(kinds)):
                errors.append(ParseError(lineno, col_of(kindspec),
                                         f"duplicate kind in stack {kindspec!r}"))
                continue
            seen_node_ids.add(nid)
            params = _split_kv(tokens[3:], lineno, col_of, errors)
            topo.nodes.append(NodeDecl(nid, kinds, params, lineno))
        elif head == "link":
            if len(tokens) < 3:
                errors.append(ParseError(lineno, 1, "link needs: link <idA> <idB> [k=v ...]"))
                continue
            params = _split_kv(tokens[3:], lineno, col_of, errors)
            topo.links.append(LinkDecl(tokens[1], tokens[2], params, lineno))
        elif head == "param":
            if len(tokens) != 3 or "=" not in tokens[2]:
                errors.append(ParseError(lineno, 1, "param needs: param <id> <key>=<value>"))
                continue
            key, _, value = tokens[2].partition("=")
            topo.params.append((tokens[1], key, parse_value(value)))
        else:
            errors.append(ParseError(lineno, col_of(head), f"unknown declaration {head!r}"))

    errors.extend(_validate(topo))
    errors.sort(key=lambda e: (e.line, e.col))
    return ParseResult(topo, errors)


def _validate(topo: Topology) -> list:
    errors = []
    ids = set(topo.component_ids())
    node_ids = {n.id for n in topo.nodes}
    for link in topo.links:
        for endpoint in (link.a, link.b):
            if endpoint not in ids and endpoint not in node_ids:
                errors.append(ParseError(link.line, 1,
                                         f"link endpoint {endpoint!r} is not declared"))
        bw = link.params.get("bw")
        if bw is not None and bw <= 0:
            errors.append(ParseError(link.line, 1, f"bandwidth must be > 0, got {bw!r}"))
        delay = link.params.get("delay")
        if delay is not None and delay < 0:
            errors.append(ParseError(link.line, 1, f"delay must be >= 0, got {delay!r}"))
        ber = link.params.get("ber")
        if ber is not None and not (0 <= ber <= 1):
            errors.append(ParseError(link.line, 1, f"ber must be in [0,1], got {ber!r}"))
    for comp_id, key, _ in topo.params:
        if comp_id not in ids and comp_id not in node_ids:
            errors.append(ParseError(0, 1, f"param target {comp_id!r} is not declared"))
    return errors


def serialize(topo: Topology) -> str:
    """Emit config text that parses back to an equal Topology."""
    lines = []
    for node in topo.nodes:
        parts = ["node", node.id, ",".join(node.kinds)]
        parts += [f"{k}={format_value(v)}" for k, v in node.params.items()]
        lines.append(" ".join(parts))
    for link in topo.links:
        parts = ["link", link.a, link.b]
        parts += [f"{k}={format_value(v)}" for k, v in link.params.items()]
        lines.append(" ".join(parts))
    for comp_id, key, value in topo.params:
        lines.append(f"param {comp_id} {key}={format_value(value)}")
    return "\n".join(lines) + ("\n" if lines else "")


def instantiate(topo: Topology, kernel: Kernel) -> dict:
    """Build and register one component per declaration, wired per links.

    Unknown kinds fail before any registration. Returns {component_id: Component}.
    """
    param_overrides: dict[str, dict] = {}
    for comp_id, key, value in topo.params:
        param_overrides.setdefault(comp_id, {})[key] = value

    for node in topo.nodes:
        for kind in node.kinds:
            if not registry.known(kind):
                raise SimError(f"unknown component kind {kind!r} (node {node.id!r})")

    components: dict[str, Component] = {}
    for node in topo.nodes:
        stack_ids = (
            [node.id] if len(node.kinds) == 1
            else [f"{node.id}.{kind}" for kind in node.kinds]
        )
        for cid, kind in zip(stack_ids, node.kinds):
            params = dict(node.params)
            params.update(param_overrides.get(node.id, {}) if cid != node.id else {})
            params.update(param_overrides.get(cid, {}))
            comp = registry.get(kind)(cid, kernel, params)
            comp.kind = kind
            kernel.register(comp)
            components[cid] = comp
        for upper, lower in zip(stack_ids, stack_ids[1:]):
            components[upper].below = lower
            components[lower].above = upper

    from .netbase import Link  # late import to avoid a cycle

    link_ids = set()
    for i, decl in enumerate(topo.links):
        a = topo.resolve_endpoint(decl.a)
        b = topo.resolve_endpoint(decl.b)
        if a is None or b is None:
            raise SimError(f"link endpoint {decl.a if a is None else decl.b!r} is not declared")
        ca, cb = components[a], components[b]
        a_medium = getattr(type(ca), "is_medium", False)
        b_medium = getattr(type(cb), "is_medium", False)
        if a_medium and b_medium:
            raise SimError(f"cannot link two shared media ({a!r}, {b!r})")
        if a_medium or b_medium:
            medium, station = (ca, cb) if a_medium else (cb, ca)
            medium.on_attach(Port(len(medium.ports), medium.id, station.id,
                                  dict(decl.params), dict(station.params)))
            station.on_attach(Port(len(station.ports), medium.id, medium.id,
                                   dict(decl.params), dict(medium.params)))
        else:
            link_id = f"{a}--{b}"
            if link_id in link_ids:
                link_id = f"{a}--{b}~{i}"
            link_ids.add(link_id)
            link_params = dict(decl.params)
            link_params.update(param_overrides.get(link_id, {}))
            link = Link(link_id, kernel, link_params, endpoint_a=a, endpoint_b=b)
            kernel.register(link)
            components[link_id] = link
            ca.on_attach(Port(len(ca.ports), link_id, b, dict(decl.params), dict(cb.params)))
            cb.on_attach(Port(len(cb.ports), link_id, a, dict(decl.params), dict(ca.params)))

    for comp in components.values():
        comp.setup()
    return components


def load(text: str, kernel: Kernel) -> dict:
    """Parse + instantiate; raises SimError with joined diagnostics on bad config."""
    result = parse(text)
    if not result.ok:
        raise SimError("config errors:\n" + "\n".join(str(e) for e in result.errors))
    return instantiate(result.topology, kernel)
