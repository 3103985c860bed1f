// Screen controllers: glue between the API client and the pure view models.
// One in-flight request per session; at most one keypress queued behind it.

import { ApiClient, ApiError, freshIdempotencyKey } from './api.js';
import { actionForKey, applyActionResponse, initialNavigateState, navigateStateFromView } from './model.js';
import type { NavigateState } from './model.js';
import { renderNavigate } from './render.js';
import type { NavigateRender } from './render.js';
import type { NavigatePayload, NavigateView } from './types.js';

export class NavigateScreen {
  private queuedAction: string | null = null;
  private listeners: Array<(render: NavigateRender) => void> = [];

  constructor(
    private api: ApiClient,
    readonly sessionId: string,
    public state: NavigateState,
  ) {}

  static async create(api: ApiClient, mapId: string, opts: { explanation_id?: string; quality_condition?: string; participant?: string } = {}): Promise<NavigateScreen> {
    const resp = await api.createSession({ mode: 'Navigate', map_id: mapId, ...opts });
    return new NavigateScreen(api, resp.session_id, initialNavigateState(resp.payload as NavigatePayload));
  }

  /** Resume after a reload: the revealed view comes from the server log. */
  static async resume(api: ApiClient, sessionId: string): Promise<NavigateScreen> {
    const view = await api.fetchSessionView<NavigateView>(sessionId);
    return new NavigateScreen(api, sessionId, navigateStateFromView(view));
  }

  onRender(listener: (render: NavigateRender) => void): void {
    this.listeners.push(listener);
  }

  render(): NavigateRender {
    return renderNavigate(this.state);
  }

  private emit(): void {
    const r = this.render();
    for (const fn of this.listeners) fn(r);
  }

  /** Keyboard entry point: returns true when the key maps to a move. */
  async handleKey(keyName: string): Promise<boolean> {
    const action = actionForKey(keyName);
    if (action === null) return false;
    await this.move(action);
    return true;
  }

  async move(action: string): Promise<void> {
    if (this.state.done) return;
    if (this.state.pending) {
      this.queuedAction = action; // replaces any earlier queued press
      return;
    }
    this.state = { ...this.state, pending: true };
    this.emit();
    try {
      const resp = await this.api.postAction(this.sessionId, action, freshIdempotencyKey());
      this.state = applyActionResponse(this.state, resp);
    } catch (err) {
      this.state = {
        ...this.state,
        pending: false,
        banner: err instanceof ApiError ? `${err.code}: ${err.message}` : String(err),
      };
    }
    this.emit();
    const queued = this.queuedAction;
    this.queuedAction = null;
    if (queued !== null && !this.state.done) {
      await this.move(queued);
    }
  }
}

export class RateScreen {
  submitted = false;
  banner = '';
  private key = freshIdempotencyKey(); // one intent, one key: retries are safe

  constructor(
    private api: ApiClient,
    private sessionId: string,
  ) {}

  async submit(score: number): Promise<boolean> {
    if (this.submitted) return false;
    try {
      await this.api.postRating(this.sessionId, score, this.key);
      this.submitted = true;
      this.banner = 'Rating recorded, thank you!';
      return true;
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.submitted = true; // the server already has it
        this.banner = 'Rating already recorded.';
        return true;
      }
      this.banner = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
      return false;
    }
  }
}

export class ExplainScreen {
  submitted = false;
  banner = '';
  private key = freshIdempotencyKey();

  constructor(
    private api: ApiClient,
    private sessionId: string,
    public maxChars: number = 2000,
  ) {}

  /** Client-side gate: empty submits are blocked, long ones warned about. */
  validate(text: string): string | null {
    if (text.trim().length === 0) return 'Please write a message first.';
    if (text.length > this.maxChars) return `Message exceeds ${this.maxChars} characters.`;
    return null;
  }

  async submit(text: string): Promise<boolean> {
    const problem = this.validate(text);
    if (problem !== null) {
      this.banner = problem;
      return false;
    }
    if (this.submitted) return false;
    try {
      await this.api.postExplanation(this.sessionId, text, this.key);
      this.submitted = true;
      this.banner = 'Message sent to your partner!';
      return true;
    } catch (err) {
      this.banner = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
      return false;
    }
  }
}
