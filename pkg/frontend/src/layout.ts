/** Deterministic node placement: same topology in, same coordinates out. */

export interface Point {
  x: number;
  y: number;
}

/** FNV-1a, for seeding placement from a node id. */
function hash32(s: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < s.length; i++) {
    h ^= s.charCodeAt(i);
    h = Math.imul(h, 0x01000193);
  }
  return h >>> 0;
}

function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/**
 * Place nodes on a circle in sorted-id order, then relax a few spring steps.
 * Preset coordinates (from config, when given) are kept fixed.
 */
export function layoutNodes(
  ids: string[],
  edges: Array<[string, string]>,
  width = 800,
  height = 500,
  preset: Record<string, Point> = {},
): Map<string, Point> {
  const sorted = [...new Set(ids)].sort();
  const cx = width / 2;
  const cy = height / 2;
  const r = Math.min(width, height) / 2 - 60;
  const pos = new Map<string, Point>();
  sorted.forEach((id, i) => {
    if (preset[id]) {
      pos.set(id, { ...preset[id] });
      return;
    }
    const jitter = mulberry32(hash32(id));
    const angle = (2 * Math.PI * i) / Math.max(sorted.length, 1);
    pos.set(id, {
      x: cx + r * Math.cos(angle) + (jitter() - 0.5) * 8,
      y: cy + r * Math.sin(angle) + (jitter() - 0.5) * 8,
    });
  });

  // a few force iterations: springs on edges, repulsion between all pairs
  for (let iter = 0; iter < 40; iter++) {
    const force = new Map<string, Point>();
    for (const id of sorted) force.set(id, { x: 0, y: 0 });
    for (let i = 0; i < sorted.length; i++) {
      for (let j = i + 1; j < sorted.length; j++) {
        const a = pos.get(sorted[i])!;
        const b = pos.get(sorted[j])!;
        const dx = a.x - b.x;
        const dy = a.y - b.y;
        const d2 = Math.max(dx * dx + dy * dy, 1);
        const push = 12000 / d2;
        const d = Math.sqrt(d2);
        force.get(sorted[i])!.x += (dx / d) * push;
        force.get(sorted[i])!.y += (dy / d) * push;
        force.get(sorted[j])!.x -= (dx / d) * push;
        force.get(sorted[j])!.y -= (dy / d) * push;
      }
    }
    for (const [a, b] of edges) {
      const pa = pos.get(a);
      const pb = pos.get(b);
      if (!pa || !pb) continue;
      const dx = pb.x - pa.x;
      const dy = pb.y - pa.y;
      const d = Math.max(Math.sqrt(dx * dx + dy * dy), 1);
      const pull = (d - 140) * 0.02;
      force.get(a)!.x += (dx / d) * pull;
      force.get(a)!.y += (dy / d) * pull;
      force.get(b)!.x -= (dx / d) * pull;
      force.get(b)!.y -= (dy / d) * pull;
    }
    for (const id of sorted) {
      if (preset[id]) continue;
      const p = pos.get(id)!;
      const f = force.get(id)!;
      p.x = Math.min(width - 40, Math.max(40, p.x + f.x));
      p.y = Math.min(height - 40, Math.max(40, p.y + f.y));
    }
  }
  return pos;
}
