"""Config grammar: parse/serialize round-trip, error reporting, instantiation."""

from hypothesis import given, settings, strategies as st

import pytest

from packetlab.config import (LinkDecl, NodeDecl, Topology, instantiate, load,
                              parse, serialize)
from packetlab.kernel import Kernel, SimError


idents = st.from_regex(r"[a-z][a-z0-9_]{0,7}", fullmatch=True)
# Strings that would parse back as numbers break value round-trips by design.
str_values = idents.filter(lambda s: s not in {"inf", "nan", "infinity"})
values = st.one_of(st.integers(-10**9, 10**9),
                   st.floats(allow_nan=False, allow_infinity=False),
                   str_values)
param_dicts = st.dictionaries(idents, values, max_size=3)
free_link_keys = idents.filter(lambda s: s not in {"bw", "delay", "ber"})


@st.composite
def link_params(draw):
    params = draw(st.dictionaries(free_link_keys, values, max_size=2))
    if draw(st.booleans()):
        params["bw"] = draw(st.floats(min_value=1e-6, max_value=1e12))
    if draw(st.booleans()):
        params["delay"] = draw(st.floats(min_value=0, max_value=1e6))
    if draw(st.booleans()):
        params["ber"] = draw(st.floats(min_value=0, max_value=1))
    return params


@st.composite
def topologies(draw):
    names = draw(st.lists(idents, unique=True, min_size=1, max_size=5))
    nodes = []
    for nid in names:
        kinds = draw(st.lists(idents, unique=True, min_size=1, max_size=3))
        nodes.append(NodeDecl(nid, kinds, draw(param_dicts)))
    links = [LinkDecl(draw(st.sampled_from(names)), draw(st.sampled_from(names)),
                      draw(link_params()))
             for _ in range(draw(st.integers(0, 4)))]
    gparams = [(draw(st.sampled_from(names)), draw(idents), draw(values))
               for _ in range(draw(st.integers(0, 3)))]
    return Topology(nodes, links, gparams)


@settings(max_examples=200, deadline=None)
@given(topologies())
def test_serialize_parse_round_trip(topo):
    result = parse(serialize(topo))
    assert result.ok, [str(e) for e in result.errors]
    assert result.topology == topo


def test_parse_comments_and_blanks():
    text = """
    # a comment line
    node a sink   # trailing comment

    node b sink
    link a b bw=1e6 delay=0.001
    """
    result = parse(text)
    assert result.ok
    assert [n.id for n in result.topology.nodes] == ["a", "b"]
    assert result.topology.links[0].params == {"bw": 1e6, "delay": 0.001}


def test_parse_collects_all_errors_with_positions():
    text = "node a sink\nfrob x\nnode a sink\nlink a ghost\nlink a a bw=-5\n"
    result = parse(text)
    assert not result.ok
    msgs = [str(e) for e in result.errors]
    assert any("unknown declaration 'frob'" in m and m.startswith("line 2:") for m in msgs)
    assert any("duplicate node id 'a'" in m and m.startswith("line 3:") for m in msgs)
    assert any("'ghost' is not declared" in m and m.startswith("line 4:") for m in msgs)
    assert any("bandwidth must be > 0" in m and m.startswith("line 5:") for m in msgs)
    # parse is total: valid declarations are still collected
    assert len(result.topology.nodes) == 1
    assert len(result.topology.links) == 2


def test_parse_rejects_bad_link_numbers():
    result = parse("node a sink\nnode b sink\nlink a b bw=1e6 delay=-1 ber=1.5\n")
    msgs = [str(e) for e in result.errors]
    assert any("delay must be >= 0" in m for m in msgs)
    assert any("ber must be in [0,1]" in m for m in msgs)


def test_parse_rejects_duplicate_kind_in_stack():
    result = parse("node a sink,sink\n")
    assert any("duplicate kind" in str(e) for e in result.errors)


def test_param_target_must_exist():
    result = parse("node a sink\nparam ghost rate=3\n")
    assert any("param target 'ghost'" in str(e) for e in result.errors)


def test_instantiate_stack_wiring_and_link():
    text = ("node a source,relay,phy rate=10 size=1000\n"
            "node b sink,relay,phy\n"
            "link a b bw=1e6 delay=1e-3\n"
            "param a.source start=0.5\n")
    kernel = Kernel(seed=1)
    comps = load(text, kernel)
    assert set(comps) == {"a.source", "a.relay", "a.phy",
                          "b.phy", "b.relay", "b.sink", "a.phy--b.phy"}
    assert comps["a.source"].below == "a.relay"
    assert comps["a.relay"].above == "a.source"
    assert comps["a.relay"].below == "a.phy"
    assert comps["a.phy"].above == "a.relay"
    assert comps["a.phy"].ports[0].peer_id == "b.phy"
    assert comps["a.source"].param("start") == 0.5
    assert comps["a.source"].param("rate") == 10

    kernel.run_until(1.0)
    # emissions at 0.5..1.0 step 0.1; each takes 2 ms to cross
    assert comps["a.source"].sent == 6
    assert len(comps["b.sink"].received) == 5


def test_instantiate_single_kind_keeps_bare_id():
    kernel = Kernel()
    comps = load("node x sink\n", kernel)
    assert list(comps) == ["x"]
    assert comps["x"].kind == "sink"


def test_instantiate_duplicate_links_get_distinct_ids():
    text = ("node a sink\nnode b sink\n"
            "link a b bw=1e6\nlink a b bw=2e6\n")
    kernel = Kernel()
    comps = load(text, kernel)
    links = [c for cid, c in comps.items() if "--" in cid]
    assert len(links) == 2
    assert {l.bw for l in links} == {1e6, 2e6}
    # both endpoints carry two ports, one per link
    assert len(comps["a"].ports) == 2


def test_instantiate_unknown_kind_fails_before_registration():
    kernel = Kernel()
    with pytest.raises(SimError, match="unknown component kind"):
        load("node a sink\nnode b mystery\n", kernel)
    assert kernel.components == {}


def test_instantiate_empty_topology():
    kernel = Kernel()
    assert instantiate(Topology(), kernel) == {}


def test_node_param_override_precedence():
    text = ("node n source,sink rate=5\n"
            "param n rate=7\n"
            "param n.source rate=9\n")
    kernel = Kernel()
    comps = load(text, kernel)
    assert comps["n.source"].param("rate") == 9
    assert comps["n.sink"].param("rate") == 7


def test_load_raises_with_joined_diagnostics():
    kernel = Kernel()
    with pytest.raises(SimError) as err:
        load("node a sink\nlink a ghost\nfrob\n", kernel)
    text = str(err.value)
    assert "line 2" in text and "line 3" in text
