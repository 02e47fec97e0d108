/** Live-session client: correlates Commands with replies, feeds the ViewModel. */

import {
  PROTO_VERSION,
  encodeCommand,
  parseServerMsg,
  type Command,
  type OkMsg,
  type Snapshot,
} from "./protocol.js";
import { ViewModel } from "./viewmodel.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
}

interface Pending {
  resolve: (result: Record<string, unknown>) => void;
  reject: (err: Error) => void;
}

export class Client {
  helloSeen = false;
  onError: (message: string) => void = () => {};

  private nextId = 1;
  private pending = new Map<number, Pending>();

  constructor(
    private socket: SocketLike,
    public vm: ViewModel,
  ) {
    // a stream gap means we missed records: resync from a fresh snapshot
    vm.onGap = () => {
      void this.refreshSnapshot();
    };
  }

  /** Send one Command; resolves with the ok payload, rejects on err. */
  request(cmd: Command): Promise<Record<string, unknown>> {
    const id = this.nextId++;
    return new Promise((resolve, reject) => {
      this.pending.set(id, { resolve, reject });
      this.socket.send(encodeCommand(id, cmd));
    });
  }

  /** Fire-and-forget sender for the control panel. */
  send = (cmd: Command): void => {
    this.request(cmd).catch((err: Error) => this.onError(err.message));
  };

  async refreshSnapshot(): Promise<void> {
    const result = await this.request({ op: "snapshot" });
    this.vm.applySnapshot(result["snapshot"] as unknown as Snapshot);
  }

  /** Feed one line/frame received from the server. */
  handleMessage(data: string): void {
    let msg;
    try {
      msg = parseServerMsg(data);
    } catch {
      this.onError(`unparseable server message: ${data.slice(0, 80)}`);
      return;
    }
    switch (msg.type) {
      case "hello":
        if (msg.proto_version !== PROTO_VERSION) {
          this.onError(
            `protocol version mismatch: server ${msg.proto_version}, client ${PROTO_VERSION}`,
          );
        }
        this.helloSeen = true;
        this.vm.applyStatus(msg.status);
        break;
      case "status":
        this.vm.applyStatus(msg);
        break;
      case "trace":
        this.vm.applyRecord({
          t: msg.t,
          level: msg.level,
          comp: msg.comp,
          kind: msg.kind,
          fields: msg.fields,
        });
        break;
      case "ok": {
        const p = this.takePending(msg.id);
        if (p) {
          const { type: _type, id: _id, ...rest } = msg as OkMsg;
          p.resolve(rest);
        }
        break;
      }
      case "err": {
        const p = this.takePending(msg.id);
        if (p) p.reject(new Error(msg.error));
        else this.onError(msg.error);
        break;
      }
    }
  }

  handleClose(): void {
    for (const p of this.pending.values()) {
      p.reject(new Error("connection closed"));
    }
    this.pending.clear();
    this.helloSeen = false;
  }

  private takePending(id: number | string | null): Pending | undefined {
    if (typeof id !== "number") return undefined;
    const p = this.pending.get(id);
    this.pending.delete(id);
    return p;
  }
}
