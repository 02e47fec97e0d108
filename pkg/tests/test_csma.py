"""CSMA/CD: carrier sense, collision geometry, backoff distribution, invariants."""

import math

import pytest

from packetlab.config import load
from packetlab.csma import backoff_slots
from packetlab.kernel import Kernel, SimError


def test_backoff_slot_ranges():
    assert {backoff_slots(1, r / 100) for r in range(100)} == {0, 1}
    assert backoff_slots(12, 0.0) == 0
    assert backoff_slots(12, 0.999999) == 1023
    assert backoff_slots(3, 0.5) == 4  # floor(0.5 * 8)
    with pytest.raises(SimError):
        backoff_slots(0, 0.5)
    with pytest.raises(SimError):
        backoff_slots(17, 0.5)


def build_bus(n_stations, seed=0, extra="", positions=None, rate=None, count=1):
    lines = ["node bus0 bus bw=1e7"]
    positions = positions or [i * 5e-6 for i in range(n_stations)]
    for i in range(n_stations):
        src = f"rate={rate}" if rate else "rate=1"
        lines.append(f"node s{i} source,csma {src} count={count} size=8000")
        lines.append(f"link s{i} bus0 pos={positions[i]!r}")
    text = "\n".join(lines) + "\n" + extra
    kernel = Kernel(seed=seed)
    records = []
    kernel.tracer.add_sink(records.append)
    comps = load(text, kernel)
    return kernel, comps, records


def test_single_station_transmits_immediately_without_collision():
    kernel, comps, records = build_bus(2, count=0)
    # only s0 has traffic: give it one frame by hand
    from packetlab.netbase import InjectSend
    kernel.schedule("s0.source", 0.0, InjectSend())
    kernel.run_until(1.0)
    collisions = [r for r in records if r.kind == "collision"]
    sends = [r for r in records if r.kind == "send" and r.comp == "s0.csma"]
    recvs = [r for r in records if r.kind == "recv" and r.comp == "s1.csma"]
    assert collisions == []
    assert len(sends) == 1
    assert len(recvs) == 1


def test_two_simultaneous_starts_always_collide_within_geometry_bound():
    d = 5e-6
    kernel, comps, records = build_bus(2, positions=[0.0, d])
    kernel.run_until(0.1)
    collisions = [r for r in records if r.kind == "collision"]
    assert {r.comp for r in collisions[:2]} == {"s0.csma", "s1.csma"}
    # both leading edges meet the other transmitter after exactly d
    assert all(r.t <= 2 * d + 1e-15 for r in collisions[:2])
    assert collisions[0].t == pytest.approx(d)
    assert collisions[1].t == pytest.approx(d)


def test_second_attempt_collision_probability_is_half():
    # both stations start together; after the first guaranteed collision the
    # 1-slot backoff draws collide again iff the two slots are equal: p = 1/2.
    trials = 10_000
    second = 0
    for seed in range(trials):
        kernel, comps, records = build_bus(2, seed=seed)
        kernel.run_until(0.05)
        per_station = [r for r in records
                       if r.kind == "collision" and r.comp == "s0.csma"]
        assert len(per_station) >= 1
        if any(r.fields["attempt"] == 2 for r in per_station):
            second += 1
    assert abs(second / trials - 0.5) < 0.02


def test_no_overlapping_successful_transmissions():
    # saturated four-station bus: every successfully received frame must occupy
    # a private interval in every receiver's carrier view
    kernel, comps, records = build_bus(4, seed=3, rate=200, count=50)
    kernel.run_until(2.0)
    starts = {r.fields["pdu"]: r.t for r in records
              if r.kind == "xmit" and r.comp == "bus0"}
    ends = {r.fields["pdu"]: r.t for r in records
            if r.kind == "xmit_end" and r.comp == "bus0" and r.fields["ok"]}
    received = {r.fields["pdu"] for r in records if r.kind == "recv"}
    assert received, "expected successful traffic"
    ok = sorted((starts[p], ends[p]) for p in ends if p in received)
    for (s1, e1), (s2, e2) in zip(ok, ok[1:]):
        assert s2 >= e1 - 1e-15, f"overlap: ({s1},{e1}) vs ({s2},{e2})"
    # collisions happened and were resolved
    assert any(r.kind == "collision" for r in records)


def test_sixteen_attempts_exhausted_drops_frame():
    # station 1 jams forever (huge frames at zero spacing), station 0 keeps
    # colliding on a zero-length cable until its attempt budget is gone
    kernel, comps, records = build_bus(2, seed=1, positions=[0.0, 0.0],
                                       rate=100000, count=4000)
    kernel.run_until(5.0)
    drops = [r for r in records if r.kind == "drop"
             and r.fields.get("reason") == "attempts_exhausted"]
    assert drops, "expected at least one exhausted frame"
    assert all(r.fields["attempts"] == 16 for r in drops)


def test_deferred_station_waits_for_idle():
    # station 1 starts mid-way through station 0's transmission: it must defer,
    # then send after the channel clears (1-persistent)
    kernel, comps, records = build_bus(2, positions=[0.0, 1e-6], count=0)
    from packetlab.netbase import InjectSend
    kernel.schedule("s0.source", 0.0, InjectSend())
    kernel.schedule("s1.source", 3e-4, InjectSend())  # 8000 bits @ 1e7 = 8e-4
    kernel.run_until(0.1)
    assert not [r for r in records if r.kind == "collision"]
    sends = sorted((r.t, r.comp) for r in records if r.kind == "send")
    assert sends[0] == (0.0, "s0.csma")
    # s1 transmits right when s0's trailing edge passes it: 8e-4 + 1e-6
    assert sends[1][1] == "s1.csma"
    assert sends[1][0] == pytest.approx(8e-4 + 1e-6)
