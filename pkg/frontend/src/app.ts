/** Browser entry point: wires sockets, DOM panes, and the animation loop. */

import { Client } from "./client.js";
import { ControlPanel } from "./controls.js";
import { packetColor } from "./colors.js";
import { ViewModel, nodeOf } from "./viewmodel.js";
import { axes, boundsOf, dotCircles, stepPath, WIDTH, HEIGHT } from "./plotsvg.js";

const TOPO_W = 800;
const TOPO_H = 500;

class App {
  vm = new ViewModel();
  client: Client | null = null;
  panel: ControlPanel | null = null;
  displayTime = 0;
  offline = false;

  private root: HTMLElement;
  private topoSvg!: SVGSVGElement;
  private statusBar!: HTMLElement;
  private errorBar!: HTMLElement;
  private cwndSvg!: SVGSVGElement;
  private seqSvg!: SVGSVGElement;
  private tablesDiv!: HTMLElement;
  private pnniDiv!: HTMLElement;
  private scrubber!: HTMLInputElement;
  private dirty = true;

  constructor(root: HTMLElement) {
    this.root = root;
    this.buildDom();
    this.bindKeys();
    const tick = () => {
      this.frame();
      requestAnimationFrame(tick);
    };
    requestAnimationFrame(tick);
  }

  private el<K extends keyof HTMLElementTagNameMap>(
    tag: K,
    cls?: string,
    text?: string,
  ): HTMLElementTagNameMap[K] {
    const e = document.createElement(tag);
    if (cls) e.className = cls;
    if (text !== undefined) e.textContent = text;
    return e;
  }

  private buildDom(): void {
    const menu = this.el("div", "menu");
    const wsInput = this.el("input") as HTMLInputElement;
    wsInput.value = `ws://${location.hostname || "127.0.0.1"}:8765`;
    wsInput.size = 28;
    const connectBtn = this.el("button", "", "connect");
    connectBtn.onclick = () => this.connect(wsInput.value);
    const fileInput = this.el("input") as HTMLInputElement;
    fileInput.type = "file";
    fileInput.onchange = () => {
      const f = fileInput.files?.[0];
      if (!f) return;
      void f.text().then((text) => this.loadOffline(text));
    };

    const runBtn = this.el("button", "", "run");
    runBtn.onclick = () => this.panel?.run();
    const pauseBtn = this.el("button", "", "pause");
    pauseBtn.onclick = () => this.panel?.pause();
    const stepBtn = this.el("button", "", "step");
    stepBtn.onclick = () => this.panel?.step();

    const delay = this.el("input") as HTMLInputElement;
    delay.type = "range";
    delay.min = "0";
    delay.max = "500";
    delay.value = "0";
    delay.title = "animation delay (ms per event)";
    delay.oninput = () => this.panel?.setDelay(Number(delay.value));

    const stopTime = this.el("input") as HTMLInputElement;
    stopTime.size = 6;
    stopTime.placeholder = "stop t";
    stopTime.onchange = () => this.panel?.setStopTime(Number(stopTime.value));

    const debugSel = this.el("select") as HTMLSelectElement;
    for (let i = 0; i <= 3; i++) {
      const o = this.el("option", "", `debug ${i}`) as HTMLOptionElement;
      o.value = String(i);
      debugSel.appendChild(o);
    }
    debugSel.onchange = () => this.panel?.setDebug(Number(debugSel.value));

    menu.append(
      wsInput,
      connectBtn,
      this.el("span", "", " or trace file: "),
      fileInput,
      this.el("span", "sep"),
      runBtn,
      pauseBtn,
      stepBtn,
      this.el("span", "", " delay "),
      delay,
      stopTime,
      debugSel,
    );

    this.statusBar = this.el("div", "status", "not connected");
    this.errorBar = this.el("div", "errors");

    this.topoSvg = document.createElementNS(
      "http://www.w3.org/2000/svg",
      "svg",
    );
    this.topoSvg.setAttribute("viewBox", `0 0 ${TOPO_W} ${TOPO_H}`);
    this.topoSvg.setAttribute("class", "topo");

    this.scrubber = this.el("input") as HTMLInputElement;
    this.scrubber.type = "range";
    this.scrubber.min = "0";
    this.scrubber.max = "1000";
    this.scrubber.value = "1000";
    this.scrubber.className = "scrubber";
    this.scrubber.oninput = () => {
      this.displayTime = (Number(this.scrubber.value) / 1000) * this.vm.simTime;
      this.dirty = true;
    };

    this.cwndSvg = document.createElementNS(
      "http://www.w3.org/2000/svg",
      "svg",
    );
    this.cwndSvg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
    this.seqSvg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
    this.seqSvg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);

    this.tablesDiv = this.el("div", "tables");
    this.pnniDiv = this.el("div", "pnni");

    const plots = this.el("div", "plots");
    plots.append(this.cwndSvg, this.seqSvg);
    const main = this.el("div", "main");
    main.append(this.topoSvg, plots);

    this.root.append(
      menu,
      this.statusBar,
      this.errorBar,
      main,
      this.scrubber,
      this.tablesDiv,
      this.pnniDiv,
    );
  }

  private bindKeys(): void {
    document.addEventListener("keydown", (evt) => {
      if (evt.target instanceof HTMLInputElement) return;
      if (this.panel?.onKeyDown({ key: evt.key, repeat: evt.repeat })) {
        evt.preventDefault();
      }
    });
  }

  connect(url: string): void {
    const ws = new WebSocket(url);
    this.offline = false;
    this.vm.reset();
    const client = new Client({ send: (d) => ws.send(d), close: () => ws.close() }, this.vm);
    client.onError = (m) => this.showError(m);
    ws.onmessage = (evt) => {
      client.handleMessage(String(evt.data));
      this.dirty = true;
    };
    ws.onclose = () => {
      client.handleClose();
      this.statusBar.textContent = "disconnected";
    };
    ws.onerror = () => this.showError(`websocket error for ${url}`);
    this.client = client;
    this.panel = new ControlPanel(client.send);
  }

  loadOffline(text: string): void {
    this.offline = true;
    this.client = null;
    this.panel = null;
    this.vm.loadTraceText(text);
    this.displayTime = this.vm.simTime;
    this.dirty = true;
  }

  private showError(message: string): void {
    // err responses surface here, never as modal dialogs
    const line = this.el("div", "err-line", message);
    this.errorBar.prepend(line);
    while (this.errorBar.childElementCount > 4) {
      this.errorBar.lastElementChild?.remove();
    }
  }

  private frame(): void {
    if (!this.offline) this.displayTime = this.vm.simTime;
    if (!this.dirty) return;
    this.dirty = false;
    this.renderStatus();
    this.renderTopology();
    this.renderPlots();
    this.renderTables();
    this.renderPnni();
  }

  private renderStatus(): void {
    const s = this.vm.status;
    const c = this.vm.counters;
    const head = this.offline
      ? `offline trace t=${this.vm.simTime.toFixed(6)}`
      : s
        ? `${s.filename || "(no config)"}  t=${s.sim_time.toFixed(6)}  ` +
          `${s.run_state}  stop=${s.stop_time ?? "∞"}  delay=${s.delay}ms  debug=${s.debug_level}`
        : "not connected";
    this.statusBar.textContent =
      `${head}  |  records=${c.records} delivered=${c.delivered} ` +
      `dropped=${c.dropped} collisions=${c.collisions}`;
  }

  private renderTopology(): void {
    const pos = this.vm.positions(TOPO_W, TOPO_H);
    const parts: string[] = [];
    for (const link of this.vm.topologyLinks()) {
      const a = pos.get(link.a);
      const b = pos.get(link.b);
      if (!a || !b) continue;
      const stroke = link.up ? "#888" : "#cc0000";
      const dash = link.medium ? ' stroke-dasharray="4 3"' : "";
      parts.push(
        `<line x1="${a.x.toFixed(1)}" y1="${a.y.toFixed(1)}" x2="${b.x.toFixed(1)}" y2="${b.y.toFixed(1)}" stroke="${stroke}" stroke-width="2"${dash} data-link="${link.id}"/>`,
      );
    }
    for (const p of this.vm.packetsAt(this.displayTime, TOPO_W, TOPO_H)) {
      const x = p.from.x + (p.to.x - p.from.x) * p.frac;
      const y = p.from.y + (p.to.y - p.from.y) * p.frac;
      parts.push(
        `<circle cx="${x.toFixed(1)}" cy="${y.toFixed(1)}" r="6" fill="${packetColor(p.flight.color)}"/>`,
      );
    }
    for (const id of this.vm.topologyNodes()) {
      const p = pos.get(id)!;
      parts.push(
        `<circle cx="${p.x.toFixed(1)}" cy="${p.y.toFixed(1)}" r="16" fill="#e8eef7" stroke="#1f5fa8" stroke-width="2" data-node="${id}"/>`,
        `<text x="${p.x.toFixed(1)}" y="${(p.y + 30).toFixed(1)}" font-size="12" text-anchor="middle">${id}</text>`,
      );
    }
    this.topoSvg.innerHTML = parts.join("");
    this.topoSvg.querySelectorAll("line[data-link]").forEach((line) => {
      (line as SVGElement).addEventListener("click", () => {
        const id = line.getAttribute("data-link")!;
        const up = this.vm.topologyLinks().find((l) => l.id === id)?.up;
        if (up) this.panel?.failLink(id);
        else this.panel?.repairLink(id);
      });
    });
    this.topoSvg.querySelectorAll("circle[data-node]").forEach((node) => {
      (node as SVGElement).addEventListener("click", () => {
        const id = node.getAttribute("data-node")!;
        const size = prompt(`inject send at ${id}: size in bits`, "8000");
        if (size) this.panel?.injectSend(id, Number(size));
      });
    });
  }

  private renderPlots(): void {
    const all = this.vm.seriesList();
    const cwnd = all.filter((s) => s.series === "cwnd");
    const seqs = all.filter((s) =>
      ["sent_seq", "ack_seq", "recv_seq"].includes(s.series),
    );
    const cb = boundsOf(cwnd, 0);
    let svg = axes(cb, "time (s)", "cwnd (bytes)");
    if (cb) {
      for (const s of cwnd) {
        svg += `<path d="${stepPath(s, cb)}" fill="none" stroke="${s.color}" stroke-width="1.5"/>`;
      }
    }
    this.cwndSvg.innerHTML = svg;

    const sb = boundsOf(seqs);
    let seqSvg = axes(sb, "time (s)", "sequence number");
    if (sb) for (const s of seqs) seqSvg += dotCircles(s, sb);
    this.seqSvg.innerHTML = seqSvg;
  }

  private renderTables(): void {
    const parts: string[] = [];
    for (const [comp, b] of [...this.vm.bridges.entries()].sort()) {
      const rows = [...b.fdb.entries()]
        .sort()
        .map(
          ([addr, e]) =>
            `<tr><td>${addr}</td><td>${e.port}</td><td>${e.since.toFixed(4)}</td></tr>`,
        )
        .join("");
      const roles = [...b.roles.entries()]
        .sort((x, y) => x[0] - y[0])
        .map(([p, role]) => `port ${p}: ${role}`)
        .join(", ");
      parts.push(
        `<div class="bridge"><h3>${comp}</h3>` +
          `<p>root=${b.root ?? "?"} cost=${b.rootCost} ${roles}</p>` +
          `<table><tr><th>address</th><th>port</th><th>learned at</th></tr>${rows}</table></div>`,
      );
    }
    this.tablesDiv.innerHTML = parts.join("");
  }

  private renderPnni(): void {
    if (this.vm.pnni.leaders.size === 0) {
      this.pnniDiv.innerHTML = "";
      return;
    }
    const groups = [...this.vm.groupLeaders().entries()]
      .map(([g, leader]) => `<li>group ${g}: leader ${leader ?? "(electing)"}</li>`)
      .join("");
    const h = this.vm.pnni.hierarchy;
    const agg = h
      ? `<p>parent level: ${h.nodes} logical nodes, ${h.links} logical links</p>`
      : "";
    this.pnniDiv.innerHTML = `<h3>routing hierarchy</h3><ul>${groups}</ul>${agg}`;
  }
}

const mount = document.getElementById("app");
if (mount) new App(mount);

export { App, nodeOf };
