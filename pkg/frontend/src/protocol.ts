/** Control-protocol messages: line-delimited JSON over a WebSocket (proto_version 1). */

import type { FieldValue } from "./trace.js";

export const PROTO_VERSION = 1;

export type RunState = "paused" | "running" | "done";

export interface StatusFrame {
  filename: string;
  stop_time: number | null; // null = run unbounded

  delay: number;
  debug_level: number;
  sim_time: number;
  run_state: RunState;
}

export interface HelloMsg {
  type: "hello";
  proto_version: number;
  status: StatusFrame;
}

export interface StatusMsg extends StatusFrame {
  type: "status";
}

export interface TraceMsg {
  type: "trace";
  t: number;
  level: number;
  comp: string;
  kind: string;
  fields: Record<string, FieldValue>;
}

export interface OkMsg {
  type: "ok";
  id: number | string | null;
  [extra: string]: unknown;
}

export interface ErrMsg {
  type: "err";
  id: number | string | null;
  error: string;
}

export type ServerMsg = HelloMsg | StatusMsg | TraceMsg | OkMsg | ErrMsg;

export type Op =
  | "load"
  | "run"
  | "pause"
  | "resume"
  | "step"
  | "set_delay"
  | "set_stop_time"
  | "set_debug"
  | "inject_send"
  | "fail_link"
  | "repair_link"
  | "snapshot";

export interface Command {
  op: Op;
  [arg: string]: unknown;
}

export interface LinkInfo {
  a?: string;
  b?: string;
  stations?: string[];
  up: boolean;
}

export interface Snapshot {
  status: StatusFrame;
  components: Record<string, { kind: string; state: unknown }>;
  links: Record<string, LinkInfo>;
}

export function parseServerMsg(data: string): ServerMsg {
  const msg = JSON.parse(data);
  if (typeof msg !== "object" || msg === null || typeof msg.type !== "string") {
    throw new Error("malformed server message");
  }
  return msg as ServerMsg;
}

export function encodeCommand(id: number, cmd: Command): string {
  return JSON.stringify({ type: "cmd", id, ...cmd });
}
