/** Maps UI gestures to protocol Commands; owns the keyboard bindings. */

import type { Command } from "./protocol.js";

export type CommandSender = (cmd: Command) => void;

/** The subset of KeyboardEvent the bindings need (testable without a DOM). */
export interface KeyPress {
  key: string;
  repeat?: boolean;
}

export class ControlPanel {
  constructor(private send: CommandSender) {}

  run(): void {
    this.send({ op: "run" });
  }

  pause(): void {
    this.send({ op: "pause" });
  }

  step(): void {
    this.send({ op: "step" });
  }

  setDelay(ms: number): void {
    this.send({ op: "set_delay", ms });
  }

  setStopTime(t: number): void {
    this.send({ op: "set_stop_time", t });
  }

  setDebug(level: number): void {
    this.send({ op: "set_debug", level });
  }

  injectSend(comp: string, sizeBits: number, data?: string): void {
    const cmd: Command = { op: "inject_send", comp, size_bits: sizeBits };
    if (data !== undefined) cmd["data"] = data;
    this.send(cmd);
  }

  failLink(link: string): void {
    this.send({ op: "fail_link", link });
  }

  repairLink(link: string): void {
    this.send({ op: "repair_link", link });
  }

  snapshot(): void {
    this.send({ op: "snapshot" });
  }

  /**
   * Keyboard bindings. Space steps the simulation: exactly one step Command
   * per physical press, so key auto-repeat while held is ignored.
   */
  onKeyDown(evt: KeyPress): boolean {
    if (evt.repeat) return false;
    switch (evt.key) {
      case " ":
        this.step();
        return true;
      case "r":
        this.run();
        return true;
      case "p":
        this.pause();
        return true;
      default:
        return false;
    }
  }
}
