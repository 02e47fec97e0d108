/** The rendered state: a pure fold of (snapshot, trace records) into view buffers. */

import type { TraceRecord } from "./trace.js";
import { parseTrace } from "./trace.js";
import type { Snapshot, StatusFrame } from "./protocol.js";
import { seriesColor } from "./colors.js";
import { layoutNodes, type Point } from "./layout.js";

export interface PlotPoint {
  t: number;
  v: number;
}

export interface PlotSeries {
  comp: string;
  series: string;
  color: string;
  points: PlotPoint[];
}

export interface FdbEntry {
  port: number;
  since: number;
}

export interface BridgeView {
  fdb: Map<string, FdbEntry>;
  roles: Map<number, string>;
  root: string | number | null;
  rootCost: number;
}

export interface LinkView {
  id: string;
  a: string;
  b: string;
  up: boolean;
  medium: boolean;
}

export interface Flight {
  pdu: number;
  link: string;
  src: string;
  dst: string;
  start: number;
  arrive: number;
  color: string;
  corrupt: boolean;
}

export interface FlightPos {
  flight: Flight;
  from: Point;
  to: Point;
  frac: number;
}

export interface PnniView {
  leaders: Map<string, { group: string; leader: string }>;
  hierarchy: { nodes: number; links: number } | null;
}

const EPS = 1e-9;
const FLIGHT_KEEP = 512;

/** Strip the layer suffix: "a.gbn" renders as node "a". */
export function nodeOf(comp: string): string {
  const dot = comp.indexOf(".");
  return dot < 0 ? comp : comp.slice(0, dot);
}

export class ViewModel {
  status: StatusFrame | null = null;
  simTime = 0;
  plots = new Map<string, PlotSeries>();
  bridges = new Map<string, BridgeView>();
  pnni: PnniView = { leaders: new Map(), hierarchy: null };
  flights: Flight[] = [];
  counters = { records: 0, delivered: 0, dropped: 0, collisions: 0 };
  lastError = "";
  gapDetected = false;
  onGap: (() => void) | null = null;

  private nodes = new Set<string>();
  private links = new Map<string, LinkView>();
  private positionsCache: Map<string, Point> | null = null;
  private presetPositions: Record<string, Point> = {};

  reset(): void {
    this.status = null;
    this.simTime = 0;
    this.plots.clear();
    this.bridges.clear();
    this.pnni = { leaders: new Map(), hierarchy: null };
    this.flights = [];
    this.counters = { records: 0, delivered: 0, dropped: 0, collisions: 0 };
    this.lastError = "";
    this.gapDetected = false;
    this.nodes.clear();
    this.links.clear();
    this.positionsCache = null;
  }

  applyStatus(status: StatusFrame): void {
    this.status = status;
    if (status.sim_time > this.simTime) this.simTime = status.sim_time;
  }

  /** Rebuild topology from a server snapshot; view state restarts from it. */
  applySnapshot(snap: Snapshot): void {
    this.reset();
    this.applyStatus(snap.status);
    for (const cid of Object.keys(snap.components)) {
      if (snap.links[cid]) continue; // links render as edges, not nodes
      this.addNode(nodeOf(cid));
    }
    for (const [cid, info] of Object.entries(snap.links)) {
      if (info.stations) {
        // shared medium: a hub-like vertex with a spoke per station
        this.addNode(cid);
        for (const st of info.stations) {
          this.addNode(nodeOf(st));
          this.addLink(`${cid}~${st}`, cid, nodeOf(st), info.up, true);
        }
      } else if (info.a && info.b) {
        this.addNode(nodeOf(info.a));
        this.addNode(nodeOf(info.b));
        this.addLink(cid, nodeOf(info.a), nodeOf(info.b), info.up, false);
      }
    }
  }

  /** Fold one trace record into the view; false means a stream gap was seen. */
  applyRecord(r: TraceRecord): boolean {
    if (r.t < this.simTime - EPS) {
      this.gapDetected = true;
      if (this.onGap) this.onGap();
      return false;
    }
    this.simTime = Math.max(this.simTime, r.t);
    this.counters.records++;
    if (r.level !== 0) return true;
    switch (r.kind) {
      case "plot":
        this.addPlotPoint(r);
        break;
      case "fdb":
        this.applyFdb(r);
        break;
      case "stp_role": {
        const b = this.bridge(r.comp);
        b.roles.set(Number(r.fields["port"]), String(r.fields["role"]));
        break;
      }
      case "stp_root": {
        const b = this.bridge(r.comp);
        b.root = r.fields["root"] ?? null;
        b.rootCost = Number(r.fields["cost"] ?? 0);
        break;
      }
      case "leader":
        this.pnni.leaders.set(r.comp, {
          group: String(r.fields["group"]),
          leader: String(r.fields["leader"]),
        });
        break;
      case "hierarchy":
        this.pnni.hierarchy = {
          nodes: Number(r.fields["nodes"]),
          links: Number(r.fields["links"]),
        };
        break;
      case "xmit":
        this.applyXmit(r);
        break;
      case "link_up":
      case "link_down": {
        const link = this.links.get(r.comp);
        if (link) link.up = r.kind === "link_up";
        break;
      }
      case "deliver":
      case "recv":
      case "frame_copy":
      case "reassembled":
        this.counters.delivered++;
        break;
      case "drop":
      case "token_drop":
        this.counters.dropped++;
        break;
      case "collision":
        this.counters.collisions++;
        break;
    }
    return true;
  }

  /** Offline mode: render a whole trace.log file. */
  loadTraceText(text: string): void {
    this.reset();
    for (const r of parseTrace(text)) this.applyRecord(r);
  }

  topologyNodes(): string[] {
    return [...this.nodes].sort();
  }

  topologyLinks(): LinkView[] {
    return [...this.links.values()].sort((a, b) => a.id.localeCompare(b.id));
  }

  /** Deterministic node coordinates; cached until the topology changes. */
  positions(width = 800, height = 500): Map<string, Point> {
    if (!this.positionsCache) {
      const edges: Array<[string, string]> = [...this.links.values()].map(
        (l) => [l.a, l.b],
      );
      this.positionsCache = layoutNodes(
        this.topologyNodes(),
        edges,
        width,
        height,
        this.presetPositions,
      );
    }
    return this.positionsCache;
  }

  /** Packets in flight at simulation time t, with positions along their link. */
  packetsAt(t: number, width = 800, height = 500): FlightPos[] {
    const pos = this.positions(width, height);
    const out: FlightPos[] = [];
    for (const f of this.flights) {
      if (t < f.start - EPS || t > f.arrive + EPS) continue;
      const from = pos.get(nodeOf(f.src));
      const to = pos.get(nodeOf(f.dst));
      if (!from || !to) continue;
      const span = Math.max(f.arrive - f.start, EPS);
      out.push({ flight: f, from, to, frac: (t - f.start) / span });
    }
    return out;
  }

  /** Per-group leader once every member of the group agrees, else null. */
  groupLeaders(): Map<string, string | null> {
    const votes = new Map<string, Set<string>>();
    for (const { group, leader } of this.pnni.leaders.values()) {
      if (!votes.has(group)) votes.set(group, new Set());
      votes.get(group)!.add(leader);
    }
    const out = new Map<string, string | null>();
    for (const [group, set] of [...votes.entries()].sort()) {
      out.set(group, set.size === 1 ? [...set][0] : null);
    }
    return out;
  }

  seriesList(): PlotSeries[] {
    return [...this.plots.values()].sort((a, b) =>
      `${a.comp}:${a.series}`.localeCompare(`${b.comp}:${b.series}`),
    );
  }

  private addNode(id: string): void {
    if (!this.nodes.has(id)) {
      this.nodes.add(id);
      this.positionsCache = null;
    }
  }

  private addLink(
    id: string,
    a: string,
    b: string,
    up: boolean,
    medium: boolean,
  ): void {
    if (!this.links.has(id)) {
      this.links.set(id, { id, a, b, up, medium });
      this.positionsCache = null;
    }
  }

  private bridge(comp: string): BridgeView {
    let b = this.bridges.get(comp);
    if (!b) {
      b = { fdb: new Map(), roles: new Map(), root: null, rootCost: 0 };
      this.bridges.set(comp, b);
    }
    return b;
  }

  private addPlotPoint(r: TraceRecord): void {
    const series = String(r.fields["series"]);
    const key = `${r.comp}:${series}`;
    let s = this.plots.get(key);
    if (!s) {
      s = { comp: r.comp, series, color: seriesColor(series), points: [] };
      this.plots.set(key, s);
    }
    s.points.push({ t: r.t, v: Number(r.fields["value"]) });
  }

  private applyFdb(r: TraceRecord): void {
    const b = this.bridge(r.comp);
    const addr = String(r.fields["addr"]);
    const op = String(r.fields["op"]);
    if (op === "learn" || op === "move") {
      b.fdb.set(addr, { port: Number(r.fields["port"]), since: r.t });
    } else if (op === "expire") {
      b.fdb.delete(addr);
    }
  }

  private applyXmit(r: TraceRecord): void {
    const src = String(r.fields["src"] ?? "");
    const dst = String(r.fields["dst"] ?? "");
    if (src && dst) {
      // infer topology on the fly so plain trace files render a network
      this.addNode(nodeOf(src));
      this.addNode(nodeOf(dst));
      if (!this.links.has(r.comp)) {
        this.addLink(r.comp, nodeOf(src), nodeOf(dst), true, false);
      }
      this.flights.push({
        pdu: Number(r.fields["pdu"] ?? -1),
        link: r.comp,
        src,
        dst,
        start: Number(r.fields["start"] ?? r.t),
        arrive: Number(r.fields["arrive"] ?? r.t),
        color: String(r.fields["color"] ?? "data"),
        corrupt: Number(r.fields["corrupt"] ?? 0) !== 0,
      });
      if (this.flights.length > FLIGHT_KEEP) {
        this.flights.splice(0, this.flights.length - FLIGHT_KEEP);
      }
    }
  }
}
