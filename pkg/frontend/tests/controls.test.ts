import { beforeEach, describe, expect, it } from "vitest";
import { ControlPanel } from "../src/controls.js";
import type { Command } from "../src/protocol.js";

let sent: Command[];
let panel: ControlPanel;

beforeEach(() => {
  sent = [];
  panel = new ControlPanel((cmd) => sent.push(cmd));
});

describe("space-bar stepping", () => {
  it("issues exactly one step Command per press", () => {
    panel.onKeyDown({ key: " " });
    expect(sent).toEqual([{ op: "step" }]);
    panel.onKeyDown({ key: " " });
    expect(sent).toEqual([{ op: "step" }, { op: "step" }]);
  });

  it("ignores auto-repeat while the key is held", () => {
    panel.onKeyDown({ key: " " });
    panel.onKeyDown({ key: " ", repeat: true });
    panel.onKeyDown({ key: " ", repeat: true });
    expect(sent).toEqual([{ op: "step" }]);
    panel.onKeyDown({ key: " " }); // released and pressed again
    expect(sent.length).toBe(2);
  });

  it("leaves unrelated keys alone", () => {
    expect(panel.onKeyDown({ key: "x" })).toBe(false);
    expect(sent).toEqual([]);
  });
});

describe("control mappings", () => {
  it("maps every menu action to its documented Command", () => {
    panel.run();
    panel.pause();
    panel.setDelay(120);
    panel.setStopTime(42.5);
    panel.setDebug(2);
    panel.failLink("a.gbn--b.gbn");
    panel.repairLink("a.gbn--b.gbn");
    panel.injectSend("a.source", 8000, "68656c6c6f");
    panel.snapshot();
    expect(sent).toEqual([
      { op: "run" },
      { op: "pause" },
      { op: "set_delay", ms: 120 },
      { op: "set_stop_time", t: 42.5 },
      { op: "set_debug", level: 2 },
      { op: "fail_link", link: "a.gbn--b.gbn" },
      { op: "repair_link", link: "a.gbn--b.gbn" },
      { op: "inject_send", comp: "a.source", size_bits: 8000, data: "68656c6c6f" },
      { op: "snapshot" },
    ]);
  });
});
