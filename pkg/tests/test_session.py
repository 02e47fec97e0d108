"""Run-state transitions, command quantization, and script record/replay."""

import pytest

from packetlab.config import load
from packetlab.kernel import Kernel, SimError
from packetlab.session import (DONE, PAUSED, RUNNING, Session, load_script,
                               replay, save_script)

LAB = """
node a source,gbn link=a.gbn--b.gbn
node b sink,gbn
link a b bw=1e6 delay=0.01 loss=0.02
param a.source pattern=periodic
param a.source rate=40
param a.source size=8000
param a.source count=200
param a.gbn window=4
param a.gbn modulus=8
param b.gbn window=4
param b.gbn modulus=8
"""


def make_session(seed=0, record=False, debug=1):
    kernel = Kernel(seed=seed, debug_level=debug)
    lines = []
    kernel.tracer.add_sink(lambda r: lines.append(r.line()))
    load(LAB, kernel)
    session = Session(kernel, config_name="lab.cfg", record=record)
    return session, lines


def test_step_only_acts_while_paused():
    session, lines = make_session()
    assert session.state == PAUSED
    for _ in range(3):
        assert session.execute({"op": "step"})["stepped"] is True
    assert session.dispatch_count == 3
    session.execute({"op": "run"})
    result = session.execute({"op": "step"})
    assert result["stepped"] is False
    assert session.dispatch_count == 3  # no dispatch happened while running


def test_run_is_idempotent_and_pause_stops_dispatch():
    session, lines = make_session()
    session.execute({"op": "run"})
    session.execute({"op": "run"})
    assert session.state == RUNNING
    session.execute({"op": "pause"})
    assert session.state == PAUSED
    count = session.dispatch_count
    session.execute({"op": "pause"})
    assert session.dispatch_count == count


def test_run_to_stop_time_then_done_at_exhaustion():
    session, lines = make_session()
    session.execute({"op": "set_stop_time", "t": 1.0})
    session.run_to_completion()
    assert session.state == PAUSED  # events remain past the gate
    assert session.kernel.now <= 1.0
    session.execute({"op": "set_stop_time", "t": 1e9})
    session.run_to_completion()
    assert session.state == DONE
    assert session.kernel.peek_time() is None


def test_stop_time_in_past_rejected():
    session, lines = make_session()
    session.execute({"op": "set_stop_time", "t": 1.0})
    session.run_to_completion()
    result = session.execute({"op": "set_stop_time", "t": 0.1})
    assert result["ok"] is False and "past" in result["error"]


def test_unknown_op_and_bad_link_err_without_crash():
    session, lines = make_session()
    assert session.execute({"op": "warp"})["ok"] is False
    result = session.execute({"op": "fail_link", "link": "a.gbn"})
    assert result["ok"] is False and "not a link" in result["error"]


def test_fail_and_repair_link_trace_state_changes():
    session, lines = make_session()
    session.execute({"op": "set_stop_time", "t": 0.5})
    session.run_to_completion()
    assert session.execute({"op": "fail_link", "link": "a.gbn--b.gbn"})["up"] is False
    assert session.execute({"op": "repair_link", "link": "a.gbn--b.gbn"})["up"] is True
    assert any("kind=link_down" in ln for ln in lines)
    assert any("kind=link_up" in ln for ln in lines)


def test_inject_send_behaves_like_source_event():
    session, lines = make_session()
    session.execute({"op": "inject_send", "comp": "a.source",
                     "size_bits": 8000})
    session.execute({"op": "set_stop_time", "t": 0.25})
    session.run_to_completion()
    # injected payload rides the normal data path to the sink
    assert any("comp=b.sink kind=deliver" in ln for ln in lines)


def test_snapshot_is_side_effect_free_and_complete():
    session, lines = make_session()
    snap = session.execute({"op": "snapshot"})["snapshot"]
    assert snap["status"]["sim_time"] == 0.0
    assert snap["status"]["run_state"] == PAUSED
    assert set(snap["components"]) == {"a.source", "a.gbn", "b.gbn", "b.sink",
                                       "a.gbn--b.gbn"}
    assert snap["links"]["a.gbn--b.gbn"]["a"] == "a.gbn"
    again = session.execute({"op": "snapshot"})["snapshot"]
    assert again == snap


def test_set_debug_changes_emitted_levels():
    session, lines = make_session(debug=0)
    session.execute({"op": "set_debug", "level": 3})
    session.execute({"op": "set_stop_time", "t": 0.2})
    session.run_to_completion()
    assert any("level=3" in ln for ln in lines)
    assert session.execute({"op": "set_debug", "level": 9})["ok"] is False


def scripted_run(record=False, script=None):
    session, lines = make_session(seed=11, record=record, debug=1)
    if script is not None:
        replay(session, script)
        return session, lines
    session.execute({"op": "set_stop_time", "t": 4.0})
    session.execute({"op": "run"})
    while session.state == RUNNING:
        if session.dispatch_count == 40:
            session.execute({"op": "fail_link", "link": "a.gbn--b.gbn"})
        if session.dispatch_count == 90:
            session.execute({"op": "repair_link", "link": "a.gbn--b.gbn"})
        if session.dispatch_count == 120:
            session.execute({"op": "inject_send", "comp": "a.source",
                             "size_bits": 4096})
        session._dispatch_one()
    return session, lines


def test_recorded_script_replays_to_identical_trace(tmp_path):
    original, lines_a = scripted_run(record=True)
    assert original.recording is not None and len(original.recording) >= 5
    path = tmp_path / "commands.jsonl"
    save_script(original.recording, path)
    replayed, lines_b = scripted_run(script=load_script(path))
    assert lines_a == lines_b
    assert replayed.dispatch_count == original.dispatch_count


def test_replay_stalls_on_malformed_script():
    session, lines = make_session()
    with pytest.raises(SimError, match="stalled"):
        replay(session, [(50, {"op": "fail_link", "link": "a.gbn--b.gbn"})])


def test_wall_clock_delay_never_changes_the_trace():
    naps = []
    session, lines = make_session(seed=5)
    session._sleep = naps.append
    session.execute({"op": "set_delay", "ms": 2.5})
    session.execute({"op": "set_stop_time", "t": 1.0})
    # loop() honors pacing; drive it synchronously via a bounded closure
    session.execute({"op": "run"})
    while session.state == RUNNING:
        session._drain()
        if session._dispatch_one() and session.delay_ms:
            session._sleep(session.delay_ms / 1000.0)
    paced = list(lines)
    assert naps and all(n == 0.0025 for n in naps)

    quick, quick_lines = make_session(seed=5)
    quick.execute({"op": "set_stop_time", "t": 1.0})
    quick.run_to_completion()
    assert quick_lines == paced
