"""CSV series files and SVG renderings of the standard plots."""

import csv
from pathlib import Path

SERIES_COLORS = {
    "sent_seq": "#cc0000",   # red
    "ack_seq": "#d4a017",    # gold
    "recv_seq": "#5c3317",   # dark brown
    "cwnd": "#1f5fa8",
}
LINE_COLORS = {
    "data": "#1f5fa8",
    "ack": "#d4a017",
    "retransmitted": "#cc0000",
    "corrupted": "#999999",
    "control": "#2e8b57",
}
WIDTH, HEIGHT = 640, 400
MARGIN = 48

STANDARD_SERIES = ("cwnd", "sent_seq", "ack_seq", "recv_seq")


def collect_series(records) -> dict[str, list]:
    """Group level-0 plot points into named (t, value) series."""
    series: dict[str, list] = {}
    for r in records:
        if r.level == 0 and r.kind == "plot":
            key = f"{r.comp}:{r.fields['series']}"
            series.setdefault(key, []).append((r.t, r.fields["value"]))
    return series


def collect_spacetime(records) -> list[dict]:
    """Pair frame send/recv records by pdu id into space-time segments."""
    sends: dict = {}
    segments = []
    for r in records:
        if r.level > 0:
            continue
        pid = r.fields.get("pdu")
        if pid is None:
            continue
        if r.kind in ("send", "frame_send"):
            sends[pid] = r
        elif r.kind in ("recv", "frame_copy") and pid in sends:
            s = sends.pop(pid)
            segments.append({
                "t0": s.t, "from": s.comp, "t1": r.t, "to": r.comp,
                "seq": s.fields.get("seq"),
                "color": s.fields.get("color",
                                      "ack" if s.fields.get("type") == "ack"
                                      else "data"),
                "ok": r.fields.get("ok", True),
            })
    for pid, s in sends.items():
        segments.append({
            "t0": s.t, "from": s.comp, "t1": None, "to": None,
            "seq": s.fields.get("seq"),
            "color": s.fields.get("color",
                                  "ack" if s.fields.get("type") == "ack"
                                  else "data"),
            "ok": False,
        })
    segments.sort(key=lambda seg: (seg["t0"], str(seg["from"])))
    return segments


def _safe(name: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "._-" else "_" for ch in name)


def write_series_csv(series: dict, outdir: Path) -> list[Path]:
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    names = sorted(series) if series else list(STANDARD_SERIES)
    for name in names:
        path = outdir / f"{_safe(name)}.csv"
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            for t, v in series.get(name, ()):
                writer.writerow([repr(t), v])
        written.append(path)
    return written


def _scale(points, lo_pad=0.0):
    ts = [p[0] for p in points]
    vs = [p[1] for p in points]
    t0, t1 = min(ts), max(ts)
    v0, v1 = min(vs + [lo_pad]), max(vs)
    if t1 <= t0:
        t1 = t0 + 1.0
    if v1 <= v0:
        v1 = v0 + 1.0
    sx = (WIDTH - 2 * MARGIN) / (t1 - t0)
    sy = (HEIGHT - 2 * MARGIN) / (v1 - v0)

    def to_xy(t, v):
        return (MARGIN + (t - t0) * sx, HEIGHT - MARGIN - (v - v0) * sy)

    return to_xy, (t0, t1, v0, v1)


def _axes(bounds=None, xlabel="time (s)", ylabel="") -> list[str]:
    parts = [
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" '
        f'y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" '
        f'y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<text x="{WIDTH // 2}" y="{HEIGHT - 10}" font-size="12" '
        f'text-anchor="middle">{xlabel}</text>',
        f'<text x="14" y="{HEIGHT // 2}" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 14 {HEIGHT // 2})">{ylabel}</text>',
    ]
    if bounds:
        t0, t1, v0, v1 = bounds
        for i in range(5):
            fx = t0 + (t1 - t0) * i / 4
            fy = v0 + (v1 - v0) * i / 4
            x = MARGIN + (WIDTH - 2 * MARGIN) * i / 4
            y = HEIGHT - MARGIN - (HEIGHT - 2 * MARGIN) * i / 4
            parts.append(f'<text x="{x:.1f}" y="{HEIGHT - MARGIN + 16}" '
                         f'font-size="10" text-anchor="middle">{fx:.4g}</text>')
            parts.append(f'<text x="{MARGIN - 6}" y="{y + 3:.1f}" '
                         f'font-size="10" text-anchor="end">{fy:.4g}</text>')
    return parts


def _svg(parts: list[str]) -> str:
    body = "\n".join(parts)
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
            f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">\n{body}\n</svg>\n')


def render_cwnd(series: dict) -> str:
    """Step plot of every cwnd series over time."""
    cwnd = {k: v for k, v in series.items()
            if k.split(":", 1)[-1] == "cwnd" and v}
    points = [p for pts in cwnd.values() for p in pts]
    if not points:
        return _svg(_axes(ylabel="cwnd (bytes)"))
    to_xy, bounds = _scale(points, lo_pad=0.0)
    parts = _axes(bounds, ylabel="cwnd (bytes)")
    for name in sorted(cwnd):
        pts = cwnd[name]
        path = []
        prev_y = None
        for t, v in pts:
            x, y = to_xy(t, v)
            if prev_y is None:
                path.append(f"M{x:.1f},{y:.1f}")
            else:
                path.append(f"H{x:.1f}")
                path.append(f"V{y:.1f}")
            prev_y = y
        parts.append(f'<path d="{" ".join(path)}" fill="none" '
                     f'stroke="{SERIES_COLORS["cwnd"]}" stroke-width="1.5"/>')
    return _svg(parts)


def render_sequence(series: dict) -> str:
    """Dot plot overlaying the sent, ack, and received sequence series."""
    by_tag: dict[str, list] = {}
    for name, pts in series.items():
        tag = name.split(":", 1)[-1]
        if tag in ("sent_seq", "ack_seq", "recv_seq"):
            by_tag.setdefault(tag, []).extend(pts)
    points = [p for pts in by_tag.values() for p in pts]
    if not points:
        return _svg(_axes(ylabel="sequence number"))
    to_xy, bounds = _scale(points)
    parts = _axes(bounds, ylabel="sequence number")
    for tag in ("sent_seq", "ack_seq", "recv_seq"):
        for t, v in by_tag.get(tag, ()):
            x, y = to_xy(t, v)
            parts.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="2" '
                         f'fill="{SERIES_COLORS[tag]}"/>')
    return _svg(parts)


def render_spacetime(segments: list) -> str:
    """Station timelines with one slanted line per frame or ACK."""
    stations = sorted({seg["from"] for seg in segments} |
                      {seg["to"] for seg in segments if seg["to"]})
    if not stations or not segments:
        return _svg(_axes(ylabel="station"))
    ts = [seg["t0"] for seg in segments]
    ts += [seg["t1"] for seg in segments if seg["t1"] is not None]
    t0, t1 = min(ts), max(ts)
    if t1 <= t0:
        t1 = t0 + 1.0
    sx = (WIDTH - 2 * MARGIN) / (t1 - t0)
    rows = {s: MARGIN + (HEIGHT - 2 * MARGIN) * (i + 0.5) / len(stations)
            for i, s in enumerate(stations)}
    parts = _axes((t0, t1, 0, 1), ylabel="station")
    for s, y in rows.items():
        parts.append(f'<line x1="{MARGIN}" y1="{y:.1f}" x2="{WIDTH - MARGIN}" '
                     f'y2="{y:.1f}" stroke="#ccc"/>')
        parts.append(f'<text x="{MARGIN - 6}" y="{y + 3:.1f}" font-size="10" '
                     f'text-anchor="end">{s}</text>')
    for seg in segments:
        x0 = MARGIN + (seg["t0"] - t0) * sx
        y0 = rows[seg["from"]]
        color = LINE_COLORS.get(seg["color"], "#444")
        if seg["t1"] is None:
            # lost in transit: stub ending in a cross
            parts.append(f'<line x1="{x0:.1f}" y1="{y0:.1f}" '
                         f'x2="{x0 + 10:.1f}" y2="{y0:.1f}" stroke="{color}" '
                         f'stroke-dasharray="3,2"/>')
            parts.append(f'<text x="{x0 + 12:.1f}" y="{y0 + 3:.1f}" '
                         f'font-size="10" fill="{color}">x</text>')
            continue
        x1 = MARGIN + (seg["t1"] - t0) * sx
        y1 = rows[seg["to"]]
        dash = '' if seg["ok"] else ' stroke-dasharray="3,2"'
        parts.append(f'<line x1="{x0:.1f}" y1="{y0:.1f}" x2="{x1:.1f}" '
                     f'y2="{y1:.1f}" stroke="{color}"{dash}/>')
        if seg["seq"] is not None:
            parts.append(f'<text x="{x0:.1f}" y="{y0 - 4:.1f}" font-size="9" '
                         f'fill="{color}">{seg["seq"]}</text>')
    return _svg(parts)


def write_plots(records, outdir) -> list[Path]:
    """Write one CSV per plot series and the three standard SVG plots."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    records = list(records)
    series = collect_series(records)
    written = write_series_csv(series, outdir)
    for name, text in (("cwnd.svg", render_cwnd(series)),
                       ("sequence.svg", render_sequence(series)),
                       ("spacetime.svg",
                        render_spacetime(collect_spacetime(records)))):
        path = outdir / name
        path.write_text(text)
        written.append(path)
    return written
