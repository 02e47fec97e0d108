"""Per-component counters and derived metrics computed from trace records."""

from collections import Counter, defaultdict

from .trace import TraceRecord, parse_line

SENT_KINDS = {"send", "frame_send", "dgram"}
RECV_KINDS = {"recv", "frame_copy", "reassembled", "deliver"}
DROP_KINDS = {"drop", "token_drop"}


class StatsCollector:
    """Folds level-0 trace records into counters and plot series."""

    def __init__(self):
        self.counters: dict[str, Counter] = defaultdict(Counter)
        self.drop_reasons: dict[str, Counter] = defaultdict(Counter)
        self.series: dict[str, list] = defaultdict(list)
        self.bits_received: Counter = Counter()
        self.bits_offered: Counter = Counter()
        self.records = 0
        self.last_t = 0.0

    def consume(self, record: TraceRecord):
        if record.level > 0:
            return
        self.records += 1
        self.last_t = max(self.last_t, record.t)
        comp, kind, f = record.comp, record.kind, record.fields
        c = self.counters[comp]
        if kind == "plot":
            self.series[f"{comp}:{f['series']}"].append((record.t, f["value"]))
            return
        if kind in SENT_KINDS:
            c["sent"] += 1
            if f.get("color") == "retransmitted":
                c["retransmitted"] += 1
        elif kind in RECV_KINDS:
            c["received"] += 1
            if "size" in f:
                self.bits_received[comp] += f["size"]
        elif kind in DROP_KINDS:
            c["dropped"] += 1
            self.drop_reasons[comp][f.get("reason", "unknown")] += 1
        elif kind == "collision":
            c["collisions"] += 1
        elif kind in ("fast_retx", "rto"):
            c["retransmitted"] += 1
            c[kind] += 1
        elif kind == "cell":
            c["conform" if f["verdict"] == "conform" else "nonconform"] += 1
        elif kind == "xmit":
            c["xmit"] += 1
            if "size" in f:
                self.bits_offered[comp] += f["size"]
        else:
            c[kind] += 1

    def consume_lines(self, lines):
        for line in lines:
            line = line.strip()
            if line:
                self.consume(parse_line(line))

    def report(self, duration: float | None = None,
               bandwidth: dict[str, float] | None = None) -> str:
        """Human-readable stats text; counters are pure trace counts."""
        span = duration if duration is not None else self.last_t
        lines = [f"duration={span!r} records={self.records}"]
        for comp in sorted(set(self.counters) | set(self.series_components())):
            c = self.counters[comp]
            parts = [f"comp={comp}"]
            for key in ("sent", "received", "dropped", "retransmitted",
                        "collisions", "conform", "nonconform", "xmit"):
                if c[key]:
                    parts.append(f"{key}={c[key]}")
            for key in sorted(k for k in c if c[k] and k not in (
                    "sent", "received", "dropped", "retransmitted",
                    "collisions", "conform", "nonconform", "xmit")):
                parts.append(f"{key}={c[key]}")
            offered = c["xmit"] + c["dropped"]
            if c["dropped"] and offered:
                parts.append(f"loss_rate={c['dropped'] / offered:.4f}")
            if self.bits_received[comp] and span > 0:
                parts.append(
                    f"throughput_bps={self.bits_received[comp] / span:.1f}")
            if bandwidth and comp in bandwidth and span > 0:
                util = self.bits_offered[comp] / (bandwidth[comp] * span)
                parts.append(f"utilization={util:.4f}")
            if self.drop_reasons[comp]:
                reasons = ",".join(f"{k}:{v}" for k, v in
                                   sorted(self.drop_reasons[comp].items()))
                parts.append(f"drop_reasons={reasons}")
            lines.append(" ".join(parts))
        for name in sorted(self.series):
            lines.append(f"series={name} points={len(self.series[name])}")
        return "\n".join(lines) + "\n"

    def series_components(self):
        return {name.split(":", 1)[0] for name in self.series}
