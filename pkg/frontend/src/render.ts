// Pure render models: plain data the DOM layer paints 1:1. Keeping rendering
// as data makes every screen assertable in tests without a browser.

import type { NavigateState } from './model.js';
import { cellAt } from './model.js';
import type { ExplainPayload, RatePayload } from './types.js';

export interface GridCell {
  row: number;
  col: number;
  ch: string; // '#', '.', 'G', '?', '@' (avatar), 'S'
  revealed: boolean;
  avatar: boolean;
}

export interface NavigateRender {
  instruction: string;
  explanationText: string | null;
  grid: GridCell[][];
  steps: number;
  budget: number;
  done: boolean;
  pathLength: number | null;
  banner: string;
  inputLocked: boolean;
}

// The board extent is exactly what the service has revealed so far; the
// client has no idea how large the map really is.
export function renderNavigate(state: NavigateState): NavigateRender {
  let minRow = state.center.row - state.radius;
  let maxRow = state.center.row + state.radius;
  let minCol = state.center.col - state.radius;
  let maxCol = state.center.col + state.radius;
  for (const k of state.revealed.keys()) {
    const [r, c] = k.split(',').map(Number);
    minRow = Math.min(minRow, r);
    maxRow = Math.max(maxRow, r);
    minCol = Math.min(minCol, c);
    maxCol = Math.max(maxCol, c);
  }
  const grid: GridCell[][] = [];
  for (let r = minRow; r <= maxRow; r += 1) {
    const line: GridCell[] = [];
    for (let c = minCol; c <= maxCol; c += 1) {
      const ch = cellAt(state, r, c);
      const avatar = r === state.center.row && c === state.center.col;
      line.push({ row: r, col: c, ch: avatar ? '@' : ch, revealed: ch !== '?', avatar });
    }
    grid.push(line);
  }
  return {
    instruction: state.instruction,
    explanationText: state.explanationText,
    grid,
    steps: state.steps,
    budget: state.budget,
    done: state.done,
    pathLength: state.pathLength,
    banner: state.banner,
    inputLocked: state.pending || state.done,
  };
}

export interface StaticMapRender {
  instruction: string;
  grid: GridCell[][];
}

function layoutToGrid(layout: string[], highlight?: { row: number; col: number; radius: number }): GridCell[][] {
  return layout.map((line, r) =>
    Array.from(line).map((ch, c) => ({
      row: r,
      col: c,
      ch,
      revealed: true,
      avatar:
        highlight !== undefined &&
        Math.abs(r - highlight.row) <= highlight.radius &&
        Math.abs(c - highlight.col) <= highlight.radius,
    })),
  );
}

export interface ExplainRender extends StaticMapRender {
  maxChars: number;
  highlightRadius: number;
}

// The avatar flag marks the partner's starting field of view.
export function renderExplain(payload: ExplainPayload): ExplainRender {
  return {
    instruction: payload.instruction,
    grid: layoutToGrid(payload.layout, { ...payload.start, radius: payload.fov_radius }),
    maxChars: payload.max_chars,
    highlightRadius: payload.fov_radius,
  };
}

export interface RateRender extends StaticMapRender {
  explanationText: string;
  scaleMin: number;
  scaleMax: number;
}

export function renderRate(payload: RatePayload): RateRender {
  return {
    instruction: payload.instruction,
    grid: layoutToGrid(payload.layout),
    explanationText: payload.explanation_text,
    scaleMin: payload.scale.min,
    scaleMax: payload.scale.max,
  };
}

export function gridToText(grid: GridCell[][]): string {
  return grid.map((line) => line.map((c) => c.ch).join('')).join('\n');
}
