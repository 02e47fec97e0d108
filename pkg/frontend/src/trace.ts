/** Trace records: parsing the simulator's line format and the live JSON frames. */

export type FieldValue = number | string;

export interface TraceRecord {
  t: number;
  level: number;
  comp: string;
  kind: string;
  fields: Record<string, FieldValue>;
}

/** Numbers parse as numbers, everything else stays a string. */
export function parseValue(s: string): FieldValue {
  if (s !== "" && !isNaN(Number(s))) return Number(s);
  return s;
}

/** Parse one `t=... level=... comp=... kind=... k=v ...` trace line. */
export function parseLine(line: string): TraceRecord {
  const fields: Record<string, FieldValue> = {};
  for (const part of line.trim().split(/\s+/)) {
    const eq = part.indexOf("=");
    if (eq < 0) continue;
    fields[part.slice(0, eq)] = parseValue(part.slice(eq + 1));
  }
  const t = Number(fields["t"]);
  const level = Number(fields["level"]);
  const comp = String(fields["comp"]);
  const kind = String(fields["kind"]);
  delete fields["t"];
  delete fields["level"];
  delete fields["comp"];
  delete fields["kind"];
  return { t, level, comp, kind, fields };
}

/** Parse a whole trace file, skipping blank lines. */
export function parseTrace(text: string): TraceRecord[] {
  const records: TraceRecord[] = [];
  for (const line of text.split("\n")) {
    if (line.trim() === "") continue;
    records.push(parseLine(line));
  }
  return records;
}
