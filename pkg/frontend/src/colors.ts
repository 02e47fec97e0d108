/** Color classes shared with the batch plots; keep in sync with the Python side. */

export const SERIES_COLORS: Record<string, string> = {
  sent_seq: "#cc0000", // red
  ack_seq: "#d4a017", // gold
  recv_seq: "#5c3317", // dark brown
  cwnd: "#1f5fa8",
};

export const PACKET_COLORS: Record<string, string> = {
  data: "#1f5fa8",
  ack: "#d4a017",
  retransmitted: "#cc0000",
  corrupted: "#999999",
  control: "#2e8b57",
};

export function seriesColor(series: string): string {
  return SERIES_COLORS[series] ?? "#444444";
}

export function packetColor(cls: string): string {
  return PACKET_COLORS[cls] ?? "#444444";
}
