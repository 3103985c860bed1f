// Navigate-mode view state: a pure fog-of-war model fed exclusively by the
// windows the service reveals. The client never learns map dimensions or any
// cell outside those windows.

import type { ActionResponse, CellPoint, NavigatePayload, WindowPayload } from './types.js';

export const UNKNOWN = '?';

export type CellChar = '#' | '.' | 'G' | '?';

export interface NavigateState {
  revealed: Map<string, CellChar>; // union of everything the service showed
  center: CellPoint;
  radius: number;
  steps: number;
  budget: number;
  done: boolean;
  pathLength: number | null;
  lastBlocked: boolean;
  instruction: string;
  explanationText: string | null;
  pending: boolean; // a request is in flight; input is locked
  banner: string;
}

const key = (row: number, col: number) => `${row},${col}`;

function mergeWindow(revealed: Map<string, CellChar>, payload: WindowPayload): void {
  const { center, radius, window } = payload;
  for (let r = 0; r < window.length; r += 1) {
    const line = window[r];
    for (let c = 0; c < line.length; c += 1) {
      const ch = line[c] as CellChar;
      if (ch === UNKNOWN) continue;
      const row = center.row - radius + r;
      const col = center.col - radius + c;
      const k = key(row, col);
      // the goal marking is permanent; otherwise first sighting wins
      if (ch === 'G' || !revealed.has(k)) {
        revealed.set(k, ch);
      }
    }
  }
}

// Rebuild the view after a reload: the server's event log is the source of
// truth for what has been revealed, so no map content survives client-side.
export function navigateStateFromView(view: {
  instruction: string;
  budget: number;
  steps: number;
  done: boolean;
  path_length: number | null;
  center?: CellPoint;
  radius?: number;
  revealed: Array<{ row: number; col: number; ch: string }>;
  explanation_text?: string;
}): NavigateState {
  const revealed = new Map<string, CellChar>();
  for (const cell of view.revealed) {
    revealed.set(key(cell.row, cell.col), cell.ch as CellChar);
  }
  return {
    revealed,
    center: view.center ?? { row: 0, col: 0 },
    radius: view.radius ?? 2,
    steps: view.steps,
    budget: view.budget,
    done: view.done,
    pathLength: view.path_length,
    lastBlocked: false,
    instruction: view.instruction,
    explanationText: view.explanation_text ?? null,
    pending: false,
    banner: view.done ? `Treasure found in ${view.path_length} steps!` : '',
  };
}

export function initialNavigateState(payload: NavigatePayload): NavigateState {
  const revealed = new Map<string, CellChar>();
  mergeWindow(revealed, payload);
  return {
    revealed,
    center: payload.center,
    radius: payload.radius,
    steps: payload.steps,
    budget: payload.budget,
    done: payload.done,
    pathLength: null,
    lastBlocked: false,
    instruction: payload.instruction,
    explanationText: payload.explanation_text ?? null,
    pending: false,
    banner: '',
  };
}

export function applyActionResponse(state: NavigateState, resp: ActionResponse): NavigateState {
  const revealed = new Map(state.revealed);
  mergeWindow(revealed, resp);
  return {
    ...state,
    revealed,
    center: resp.center,
    radius: resp.radius,
    steps: resp.steps,
    done: resp.done,
    pathLength: resp.path_length,
    lastBlocked: resp.blocked,
    pending: false,
    banner: resp.done
      ? `Treasure found in ${resp.path_length} steps!`
      : resp.blocked
        ? 'Bumped into a wall (that still costs a step).'
        : '',
  };
}

export function revealedCellCount(state: NavigateState): number {
  return state.revealed.size;
}

export function cellAt(state: NavigateState, row: number, col: number): CellChar {
  return state.revealed.get(key(row, col)) ?? UNKNOWN;
}

// Keyboard mapping: one action per keypress; anything else is ignored.
export function actionForKey(keyName: string): string | null {
  switch (keyName) {
    case 'ArrowUp':
    case 'w':
      return 'up';
    case 'ArrowDown':
    case 's':
      return 'down';
    case 'ArrowLeft':
    case 'a':
      return 'left';
    case 'ArrowRight':
    case 'd':
      return 'right';
    default:
      return null;
  }
}
