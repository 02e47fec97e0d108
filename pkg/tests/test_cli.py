"""End-to-end runs through the command line entry point."""

import json

from packetlab.cli import main
from packetlab.trace import parse_line

GBN_LAB = """
node a source,gbn link=a.gbn--b.gbn
node b sink,gbn
link a b bw=1e6 delay=0.01 loss=0.05
param a.source pattern=periodic
param a.source rate=40
param a.source size=8000
param a.source count=100
param a.gbn window=4
param a.gbn modulus=8
param b.gbn window=4
param b.gbn modulus=8
"""

TCP_LAB = """
node snd source,tcp
node rcv sink,tcp
link snd rcv bw=1e6 delay=0.05 drop_fwd=8
param snd.source pattern=blob
param snd.source bytes=30000
param snd.tcp mss=1000
param rcv.tcp mss=1000
"""


def write_cfg(tmp_path, text, name="lab.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def run(tmp_path, text, *extra, sub="out"):
    cfg = write_cfg(tmp_path, text)
    out = tmp_path / sub
    code = main(["--config", cfg, "--out", str(out), *extra])
    return code, out


def test_same_seed_twice_is_byte_identical(tmp_path):
    code1, out1 = run(tmp_path, GBN_LAB, "--stop", "5", "--seed", "3")
    code2, out2 = run(tmp_path, GBN_LAB, "--stop", "5", "--seed", "3",
                      sub="out2")
    assert code1 == code2 == 0
    a = (out1 / "trace.log").read_bytes()
    assert a == (out2 / "trace.log").read_bytes()
    assert a  # the run actually produced records
    assert (out1 / "stats.txt").read_text() == (out2 / "stats.txt").read_text()


def test_delay_throttle_never_changes_results(tmp_path):
    code1, out1 = run(tmp_path, GBN_LAB, "--stop", "0.5")
    code2, out2 = run(tmp_path, GBN_LAB, "--stop", "0.5", "--delay", "1",
                      sub="out2")
    assert code1 == code2 == 0
    assert (out1 / "trace.log").read_bytes() == (out2 / "trace.log").read_bytes()


def test_debug_zero_is_subset_of_debug_three(tmp_path):
    _, out0 = run(tmp_path, GBN_LAB, "--stop", "2", "--debug", "0")
    _, out3 = run(tmp_path, GBN_LAB, "--stop", "2", "--debug", "3", sub="out3")
    lines0 = (out0 / "trace.log").read_text().splitlines()
    lines3 = (out3 / "trace.log").read_text().splitlines()
    level0_of_3 = [ln for ln in lines3 if parse_line(ln).level == 0]
    assert level0_of_3 == lines0
    assert len(lines3) > len(lines0)


def test_tcp_lab_emits_cwnd_and_sequence_plots(tmp_path):
    code, out = run(tmp_path, TCP_LAB, "--stop", "6")
    assert code == 0
    plots = out / "plots"
    cwnd_csvs = list(plots.glob("*cwnd*.csv"))
    assert cwnd_csvs and any(p.read_text().strip() for p in cwnd_csvs)
    for tag in ("sent_seq", "ack_seq", "recv_seq"):
        assert any(p.read_text().strip() for p in plots.glob(f"*{tag}*.csv"))
    assert (plots / "cwnd.svg").exists()
    assert (plots / "sequence.svg").exists()
    assert (plots / "spacetime.svg").exists()


def test_stats_counters_recount_from_trace_file(tmp_path):
    from packetlab.stats import StatsCollector

    code, out = run(tmp_path, GBN_LAB, "--stop", "5")
    assert code == 0
    recount = StatsCollector()
    with (out / "trace.log").open() as fh:
        recount.consume_lines(fh)
    reported = (out / "stats.txt").read_text().splitlines()
    line = next(ln for ln in reported if ln.startswith("comp=a.gbn"))
    assert f"sent={recount.counters['a.gbn']['sent']}" in line


def test_bad_config_exits_2_with_diagnostics(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "node a source,gbn\nlink a nosuch\n")
    code = main(["--config", cfg, "--out", str(tmp_path / "o")])
    assert code == 2
    err = capsys.readouterr().err
    assert "line" in err


def test_missing_config_exits_2(tmp_path, capsys):
    code = main(["--config", str(tmp_path / "absent.cfg"),
                 "--out", str(tmp_path / "o")])
    assert code == 2
    assert "cannot read config" in capsys.readouterr().err


def test_record_then_replay_reproduces_trace(tmp_path):
    cfg = write_cfg(tmp_path, GBN_LAB)
    script = tmp_path / "cmds.jsonl"
    code = main(["--config", cfg, "--out", str(tmp_path / "rec"),
                 "--stop", "3", "--seed", "9", "--record", str(script)])
    assert code == 0
    entries = [json.loads(ln) for ln in script.read_text().splitlines()]
    assert entries[0] == [0, {"op": "set_stop_time", "t": 3.0}]
    assert entries[1] == [0, {"op": "run"}]
    # no --stop on replay: the triple (seed, config, script) must suffice
    code = main(["--config", cfg, "--out", str(tmp_path / "rep"),
                 "--seed", "9", "--replay", str(script)])
    assert code == 0
    assert ((tmp_path / "rec" / "trace.log").read_bytes()
            == (tmp_path / "rep" / "trace.log").read_bytes())
