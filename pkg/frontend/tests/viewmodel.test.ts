import { describe, expect, it } from "vitest";
import { readFileSync } from "node:fs";
import { parseTrace, type TraceRecord } from "../src/trace.js";
import { ViewModel, nodeOf } from "../src/viewmodel.js";
import type { Snapshot } from "../src/protocol.js";

function fixture(name: string): string {
  return readFileSync(new URL(`./fixtures/${name}`, import.meta.url), "utf8");
}

const tcpText = fixture("tcp_trace.log");
const bridgeText = fixture("bridge_trace.log");
const pnniText = fixture("pnni_trace.log");

/** Independent fold of plot records, the oracle for the golden test. */
function expectedSeries(records: TraceRecord[]): Map<string, Array<[number, number]>> {
  const out = new Map<string, Array<[number, number]>>();
  for (const r of records) {
    if (r.level !== 0 || r.kind !== "plot") continue;
    const key = `${r.comp}:${r.fields["series"]}`;
    if (!out.has(key)) out.set(key, []);
    out.get(key)!.push([r.t, Number(r.fields["value"])]);
  }
  return out;
}

/** Independent fold of fdb records into final per-bridge tables. */
function expectedTables(records: TraceRecord[]): Map<string, Map<string, number>> {
  const out = new Map<string, Map<string, number>>();
  for (const r of records) {
    if (r.level !== 0 || r.kind !== "fdb") continue;
    if (!out.has(r.comp)) out.set(r.comp, new Map());
    const table = out.get(r.comp)!;
    const op = String(r.fields["op"]);
    if (op === "learn" || op === "move") {
      table.set(String(r.fields["addr"]), Number(r.fields["port"]));
    } else if (op === "expire") {
      table.delete(String(r.fields["addr"]));
    }
  }
  return out;
}

describe("golden render of a recorded TCP-lab trace", () => {
  const vm = new ViewModel();
  vm.loadTraceText(tcpText);
  const records = parseTrace(tcpText);
  const expected = expectedSeries(records);

  it("reproduces the cwnd series point for point", () => {
    const keys = [...expected.keys()].filter((k) => k.endsWith(":cwnd"));
    expect(keys.length).toBeGreaterThan(0);
    for (const key of keys) {
      const series = vm.plots.get(key);
      expect(series, key).toBeDefined();
      expect(series!.points.map((p) => [p.t, p.v])).toEqual(expected.get(key));
      expect(series!.color).toBe("#1f5fa8");
    }
  });

  it("reproduces the three sequence series with red/gold/dark-brown", () => {
    const wanted: Array<[string, string]> = [
      ["sent_seq", "#cc0000"],
      ["ack_seq", "#d4a017"],
      ["recv_seq", "#5c3317"],
    ];
    for (const [name, color] of wanted) {
      const keys = [...expected.keys()].filter((k) => k.endsWith(`:${name}`));
      expect(keys.length, name).toBeGreaterThan(0);
      for (const key of keys) {
        const series = vm.plots.get(key)!;
        expect(series.points.map((p) => [p.t, p.v])).toEqual(expected.get(key));
        expect(series.color).toBe(color);
      }
    }
  });

  it("has exactly the trace's series, nothing invented", () => {
    expect([...vm.plots.keys()].sort()).toEqual([...expected.keys()].sort());
  });

  it("ends with no bridge tables for a bridgeless lab", () => {
    expect(vm.bridges.size).toBe(0);
  });

  it("ends at the trace's last timestamp", () => {
    expect(vm.simTime).toBe(records[records.length - 1].t);
  });
});

describe("golden render of a recorded bridging-lab trace", () => {
  const vm = new ViewModel();
  vm.loadTraceText(bridgeText);
  const records = parseTrace(bridgeText);

  it("final filtering tables equal the trace-derived expectation", () => {
    const expected = expectedTables(records);
    expect(expected.size).toBeGreaterThan(0);
    const nonEmpty = (m: Map<string, Map<string, number>>) =>
      [...m.keys()].filter((c) => m.get(c)!.size > 0).sort();
    expect(
      [...vm.bridges.keys()].filter((c) => vm.bridges.get(c)!.fdb.size > 0).sort(),
    ).toEqual(nonEmpty(expected));
    for (const [comp, table] of expected) {
      const got = vm.bridges.get(comp)!;
      const flat = new Map([...got.fdb].map(([addr, e]) => [addr, e.port]));
      expect(flat).toEqual(table);
    }
  });

  it("tracks spanning-tree roles and the elected root", () => {
    const roots = new Map<string, string | number>();
    const roles = new Map<string, Map<number, string>>();
    for (const r of records) {
      if (r.kind === "stp_root") roots.set(r.comp, r.fields["root"]!);
      if (r.kind === "stp_role") {
        if (!roles.has(r.comp)) roles.set(r.comp, new Map());
        roles.get(r.comp)!.set(Number(r.fields["port"]), String(r.fields["role"]));
      }
    }
    for (const [comp, root] of roots) {
      expect(vm.bridges.get(comp)!.root).toBe(root);
    }
    for (const [comp, m] of roles) {
      expect(vm.bridges.get(comp)!.roles).toEqual(m);
    }
  });
});

describe("routing-hierarchy view from a recorded trace", () => {
  const vm = new ViewModel();
  vm.loadTraceText(pnniText);

  it("shows each group's converged leader", () => {
    const leaders = vm.groupLeaders();
    expect(leaders.get("A")).toBe("a3");
    expect(leaders.get("B")).toBe("b4");
  });

  it("shows the aggregated parent level", () => {
    expect(vm.pnni.hierarchy).toEqual({ nodes: 2, links: 1 });
  });
});

describe("view purity and live-session behavior", () => {
  const snapshot: Snapshot = {
    status: {
      filename: "lab.cfg",
      stop_time: 10,
      delay: 0,
      debug_level: 0,
      sim_time: 0,
      run_state: "paused",
    },
    components: {
      "a.gbn": { kind: "GbnLayer", state: {} },
      "b.gbn": { kind: "GbnLayer", state: {} },
      "a.gbn--b.gbn": { kind: "Link", state: {} },
    },
    links: { "a.gbn--b.gbn": { a: "a.gbn", b: "b.gbn", up: true } },
  };
  const records: TraceRecord[] = [
    {
      t: 0.25,
      level: 0,
      comp: "a.gbn--b.gbn",
      kind: "xmit",
      fields: { pdu: 1, src: "a.gbn", dst: "b.gbn", size: 8000, color: "data", start: 0.25, arrive: 0.75, corrupt: 0 },
    },
    { t: 0.5, level: 0, comp: "a.gbn", kind: "plot", fields: { series: "sent_seq", value: 3 } },
    { t: 0.9, level: 0, comp: "b.gbn", kind: "deliver", fields: { seq: 0, size: 8000 } },
  ];

  function render(): ViewModel {
    const vm = new ViewModel();
    vm.applySnapshot(snapshot);
    for (const r of records) vm.applyRecord(r);
    return vm;
  }

  function serialize(vm: ViewModel): string {
    return JSON.stringify({
      nodes: vm.topologyNodes(),
      links: vm.topologyLinks(),
      plots: vm.seriesList(),
      counters: vm.counters,
      positions: [...vm.positions().entries()],
      simTime: vm.simTime,
    });
  }

  it("same snapshot + same records render the same view", () => {
    expect(serialize(render())).toBe(serialize(render()));
  });

  it("derives node identity from the component's stack prefix", () => {
    expect(nodeOf("a.gbn")).toBe("a");
    expect(nodeOf("plain")).toBe("plain");
    const vm = render();
    expect(vm.topologyNodes()).toEqual(["a", "b"]);
    expect(vm.topologyLinks().map((l) => l.id)).toEqual(["a.gbn--b.gbn"]);
  });

  it("animates in-flight packets between the trace timestamps", () => {
    const vm = render();
    const mid = vm.packetsAt(0.5);
    expect(mid.length).toBe(1);
    expect(mid[0].frac).toBeCloseTo(0.5, 9);
    expect(mid[0].flight.color).toBe("data");
    expect(vm.packetsAt(0.9).length).toBe(0);
  });

  it("link failure records flip the drawn link state", () => {
    const vm = render();
    expect(vm.topologyLinks()[0].up).toBe(true);
    vm.applyRecord({ t: 1.0, level: 0, comp: "a.gbn--b.gbn", kind: "link_down", fields: {} });
    expect(vm.topologyLinks()[0].up).toBe(false);
    vm.applyRecord({ t: 1.5, level: 0, comp: "a.gbn--b.gbn", kind: "link_up", fields: {} });
    expect(vm.topologyLinks()[0].up).toBe(true);
  });

  it("flags a stream gap when time regresses and calls back once asked", () => {
    const vm = render();
    let gaps = 0;
    vm.onGap = () => gaps++;
    const stale: TraceRecord = { t: 0.1, level: 0, comp: "a.gbn", kind: "plot", fields: { series: "sent_seq", value: 9 } };
    expect(vm.applyRecord(stale)).toBe(false);
    expect(gaps).toBe(1);
    expect(vm.gapDetected).toBe(true);
    // the stale record must not have polluted the buffers
    const s = vm.plots.get("a.gbn:sent_seq")!;
    expect(s.points.map((p) => p.v)).toEqual([3]);
  });

  it("renders media as a shared vertex with one spoke per station", () => {
    const vm = new ViewModel();
    vm.applySnapshot({
      status: snapshot.status,
      components: {
        "s1.csma": { kind: "CsmaStation", state: {} },
        "s2.csma": { kind: "CsmaStation", state: {} },
        bus0: { kind: "Bus", state: {} },
      },
      links: { bus0: { stations: ["s1.csma", "s2.csma"], up: true } },
    });
    expect(vm.topologyNodes()).toEqual(["bus0", "s1", "s2"]);
    const links = vm.topologyLinks();
    expect(links.length).toBe(2);
    expect(links.every((l) => l.medium)).toBe(true);
  });
});
