// Payload shapes of the wayfinder service API (the UI's only data source).

export type Mode = 'Explain' | 'Rate' | 'Navigate';

export interface CellPoint {
  row: number;
  col: number;
}

export interface WindowPayload {
  center: CellPoint;
  radius: number;
  window: string[]; // (2r+1) strings of '#', '.', '?', 'G'
  steps: number;
}

export interface NavigatePayload extends WindowPayload {
  mode: 'Navigate';
  map_id: string;
  instruction: string;
  budget: number;
  fov_radius: number;
  done: boolean;
  explanation_text?: string;
}

export interface ActionResponse extends WindowPayload {
  blocked: boolean;
  done: boolean;
  path_length: number | null;
}

export interface ExplainPayload {
  mode: 'Explain';
  map_id: string;
  instruction: string;
  layout: string[];
  start: CellPoint;
  fov_radius: number;
  max_chars: number;
}

export interface RatePayload {
  mode: 'Rate';
  map_id: string;
  instruction: string;
  layout: string[];
  explanation_text: string;
  scale: { min: number; max: number };
}

export type SessionPayload = NavigatePayload | ExplainPayload | RatePayload;

export interface CreateSessionResponse {
  session_id: string;
  payload: SessionPayload;
}

export interface MapSummary {
  id: string;
  width: number;
  height: number;
  pair_id: string | null;
}

export interface ApiErrorBody {
  code: string;
  message: string;
}

// Participant-safe resume payload: the union of everything already revealed.
export interface NavigateView {
  mode: 'Navigate';
  map_id: string;
  instruction: string;
  budget: number;
  fov_radius: number;
  steps: number;
  done: boolean;
  closed: boolean;
  path_length: number | null;
  center?: CellPoint;
  radius?: number;
  revealed: Array<{ row: number; col: number; ch: string }>;
  explanation_text?: string;
}
