// Operator replay: step through an engine trajectory file or a session event
// log, frame by frame, showing fog growth, replanned markers and blocked
// moves.

export interface ReplayFrame {
  index: number;
  center: { row: number; col: number };
  action: string | null;
  blocked: boolean;
  replanned: boolean;
  // cells revealed up to and including this frame (from Observed windows when
  // present, otherwise the field-of-view extent around visited positions)
  revealed: Map<string, string>;
}

export interface ReplayModel {
  mapId: string;
  frames: ReplayFrame[];
  summary: string;
}

export class ReplayParseError extends Error {}

const key = (r: number, c: number) => `${r},${c}`;

function mergeWindow(revealed: Map<string, string>, center: { row: number; col: number }, radius: number, window: string[]): void {
  for (let r = 0; r < window.length; r += 1) {
    for (let c = 0; c < window[r].length; c += 1) {
      const ch = window[r][c];
      if (ch === '?') continue;
      const k = key(center.row - radius + r, center.col - radius + c);
      if (ch === 'G' || !revealed.has(k)) revealed.set(k, ch);
    }
  }
}

function markExtent(revealed: Map<string, string>, center: { row: number; col: number }, radius: number): void {
  for (let r = center.row - radius; r <= center.row + radius; r += 1) {
    for (let c = center.col - radius; c <= center.col + radius; c += 1) {
      const k = key(r, c);
      if (!revealed.has(k)) revealed.set(k, '.');
    }
  }
}

/** Parse an engine trajectory log (line-delimited JSON records). */
export function parseTrajectory(text: string): ReplayModel {
  const lines = text.split('\n').filter((l) => l.trim().length > 0);
  if (lines.length === 0) throw new ReplayParseError('empty trajectory file');
  let meta: Record<string, unknown> | null = null;
  const frames: ReplayFrame[] = [];
  const revealed = new Map<string, string>();
  let fov = 2;
  for (const line of lines) {
    let rec: Record<string, unknown>;
    try {
      rec = JSON.parse(line);
    } catch {
      throw new ReplayParseError(`bad record: ${line.slice(0, 60)}`);
    }
    if (rec.kind === 'meta') {
      meta = rec;
      fov = Number(rec.fov_radius ?? 2);
      const [row, col] = (rec.start as [number, number]) ?? [0, 0];
      markExtent(revealed, { row, col }, fov);
      frames.push({
        index: -1,
        center: { row, col },
        action: null,
        blocked: false,
        replanned: false,
        revealed: new Map(revealed),
      });
    } else if (rec.kind === 'step') {
      const center = { row: Number(rec.row), col: Number(rec.col) };
      markExtent(revealed, center, fov);
      frames.push({
        index: Number(rec.i),
        center,
        action: (rec.action as string | null) ?? null,
        blocked: Boolean(rec.blocked),
        replanned: Boolean(rec.replanned),
        revealed: new Map(revealed),
      });
    } else {
      throw new ReplayParseError(`unknown record kind: ${String(rec.kind)}`);
    }
  }
  if (meta === null) throw new ReplayParseError('trajectory file has no meta record');
  return {
    mapId: String(meta.map_id ?? '?'),
    frames,
    summary: `success=${meta.success} length=${meta.length} replans=${meta.replans} budget=${meta.budget}`,
  };
}

/** Parse a session event log fetched via the operator endpoint. */
export function parseSessionLog(records: Array<Record<string, unknown>>): ReplayModel {
  if (!records.length) throw new ReplayParseError('empty session log');
  const meta = records[0];
  if (meta.kind !== 'meta') throw new ReplayParseError('first record is not meta');
  const frames: ReplayFrame[] = [];
  const revealed = new Map<string, string>();
  let stepIndex = -1;
  let lastAction: string | null = null;
  let lastBlocked = false;
  let pathLength: number | null = null;
  for (const rec of records.slice(1)) {
    if (rec.kind !== 'event') continue;
    const payload = (rec.payload ?? {}) as Record<string, unknown>;
    const event = rec.event as string;
    if (event === 'Acted') {
      lastAction = String(payload.action ?? '');
      lastBlocked = Boolean(payload.blocked);
    } else if (event === 'Observed') {
      const center = payload.center as { row: number; col: number };
      mergeWindow(revealed, center, Number(payload.radius), payload.window as string[]);
      frames.push({
        index: stepIndex,
        center,
        action: lastAction,
        blocked: lastBlocked,
        replanned: false,
        revealed: new Map(revealed),
      });
      stepIndex += 1;
      lastAction = null;
      lastBlocked = false;
    } else if (event === 'Completed') {
      pathLength = Number(payload.path_length);
    }
  }
  if (!frames.length) throw new ReplayParseError('session log holds no observations');
  return {
    mapId: String(meta.map_id ?? '?'),
    frames,
    summary: pathLength === null ? 'session incomplete' : `path_length=${pathLength}`,
  };
}

export function frameToText(frame: ReplayFrame): string {
  let minRow = frame.center.row;
  let maxRow = frame.center.row;
  let minCol = frame.center.col;
  let maxCol = frame.center.col;
  for (const k of frame.revealed.keys()) {
    const [r, c] = k.split(',').map(Number);
    minRow = Math.min(minRow, r);
    maxRow = Math.max(maxRow, r);
    minCol = Math.min(minCol, c);
    maxCol = Math.max(maxCol, c);
  }
  const lines: string[] = [];
  for (let r = minRow; r <= maxRow; r += 1) {
    let line = '';
    for (let c = minCol; c <= maxCol; c += 1) {
      if (r === frame.center.row && c === frame.center.col) {
        line += '@';
      } else {
        line += frame.revealed.get(key(r, c)) ?? '?';
      }
    }
    lines.push(line);
  }
  return lines.join('\n');
}
