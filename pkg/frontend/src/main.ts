// Bootstrap: pick the task from query parameters and mount the right screen.
//   /?mode=Navigate&map=corridor5[&condition=Good][&participant=p1]
//   /?mode=Explain&map=corridor5
//   /?mode=Rate&map=corridor5&explanation=<id>
//   /?mode=Replay&token=<admin token>  (operator: paste a trajectory file)

import { ApiClient } from './api.js';
import { bindExplain, bindNavigate, bindRate, paintGrid } from './dom.js';
import { renderExplain, renderRate } from './render.js';
import { frameToText, parseSessionLog, parseTrajectory } from './replay.js';
import type { ReplayModel } from './replay.js';
import { ExplainScreen, NavigateScreen, RateScreen } from './screens.js';
import type { ExplainPayload, RatePayload } from './types.js';

const api = new ApiClient('');

async function mount(): Promise<void> {
  const root = document.getElementById('app');
  if (!root) return;
  const params = new URLSearchParams(window.location.search);
  const mode = params.get('mode') ?? 'Navigate';
  const mapId = params.get('map') ?? (await api.listMaps())[0]?.id;
  if (!mapId && mode !== 'Replay') {
    root.textContent = 'No maps available.';
    return;
  }

  try {
    if (mode === 'Navigate') {
      const resumeId = params.get('session');
      const screen = resumeId
        ? await NavigateScreen.resume(api, resumeId)
        : await NavigateScreen.create(api, mapId, {
            explanation_id: params.get('explanation') ?? undefined,
            quality_condition: params.get('condition') ?? undefined,
            participant: params.get('participant') ?? undefined,
          });
      history.replaceState(null, '', `?mode=Navigate&session=${screen.sessionId}`);
      bindNavigate(root, screen);
    } else if (mode === 'Explain') {
      const resp = await api.createSession({ mode: 'Explain', map_id: mapId });
      const payload = resp.payload as ExplainPayload;
      const screen = new ExplainScreen(api, resp.session_id, payload.max_chars);
      bindExplain(root, renderExplain(payload), async (text) => {
        const ok = await screen.submit(text);
        (root.querySelector('[data-role=banner]') as HTMLElement).textContent = screen.banner;
        return ok;
      });
    } else if (mode === 'Rate') {
      const explanationId = params.get('explanation');
      if (!explanationId) {
        root.textContent = 'Rate mode needs ?explanation=<id>.';
        return;
      }
      const resp = await api.createSession({ mode: 'Rate', map_id: mapId, explanation_id: explanationId });
      const payload = resp.payload as RatePayload;
      const screen = new RateScreen(api, resp.session_id);
      bindRate(root, renderRate(payload), async (score) => {
        const ok = await screen.submit(score);
        (root.querySelector('[data-role=banner]') as HTMLElement).textContent = screen.banner;
        return ok;
      });
    } else if (mode === 'Replay') {
      mountReplay(root, params.get('token') ?? '');
    } else {
      root.textContent = `Unknown mode: ${mode}`;
    }
  } catch (err) {
    root.textContent = `Failed to start session: ${String(err)}`;
  }
}

function mountReplay(root: HTMLElement, adminToken: string): void {
  root.innerHTML = `
    <p class="instruction">Operator replay: paste a trajectory log or load a session by id.</p>
    <textarea data-role="paste" rows="6" placeholder="trajectory JSONL"></textarea>
    <div>
      <input data-role="sid" placeholder="session id" />
      <button data-role="load">Load session</button>
      <button data-role="parse">Parse pasted log</button>
    </div>
    <div data-role="viewer" hidden>
      <p data-role="frameinfo"></p>
      <pre class="frame" data-role="frame"></pre>
      <button data-role="prev">&larr; prev</button>
      <button data-role="next">next &rarr;</button>
      <p data-role="summary"></p>
    </div>
    <p class="banner" data-role="banner"></p>`;

  const banner = root.querySelector('[data-role=banner]') as HTMLElement;
  const viewer = root.querySelector('[data-role=viewer]') as HTMLElement;
  let model: ReplayModel | null = null;
  let index = 0;

  const show = () => {
    if (!model) return;
    viewer.hidden = false;
    const frame = model.frames[index];
    const marks = [frame.blocked ? 'blocked' : '', frame.replanned ? 'replanned' : '']
      .filter(Boolean)
      .join(' ');
    (root.querySelector('[data-role=frameinfo]') as HTMLElement).textContent =
      `frame ${index} / ${model.frames.length - 1}` +
      (frame.action ? ` action=${frame.action}` : ' (start)') +
      (marks ? ` [${marks}]` : '');
    (root.querySelector('[data-role=frame]') as HTMLElement).textContent = frameToText(frame);
    (root.querySelector('[data-role=summary]') as HTMLElement).textContent = model.summary;
  };

  (root.querySelector('[data-role=parse]') as HTMLButtonElement).addEventListener('click', () => {
    try {
      model = parseTrajectory((root.querySelector('[data-role=paste]') as HTMLTextAreaElement).value);
      index = 0;
      banner.textContent = '';
      show();
    } catch (err) {
      viewer.hidden = true;
      banner.textContent = String(err);
    }
  });
  (root.querySelector('[data-role=load]') as HTMLButtonElement).addEventListener('click', () => {
    const sid = (root.querySelector('[data-role=sid]') as HTMLInputElement).value.trim();
    void api
      .fetchSessionLog(sid, adminToken)
      .then((resp) => {
        model = parseSessionLog(resp.records as Array<Record<string, unknown>>);
        index = 0;
        banner.textContent = '';
        show();
      })
      .catch((err) => {
        viewer.hidden = true;
        banner.textContent = String(err);
      });
  });
  (root.querySelector('[data-role=prev]') as HTMLButtonElement).addEventListener('click', () => {
    if (model && index > 0) {
      index -= 1;
      show();
    }
  });
  (root.querySelector('[data-role=next]') as HTMLButtonElement).addEventListener('click', () => {
    if (model && index < model.frames.length - 1) {
      index += 1;
      show();
    }
  });
}

void mount();
export { paintGrid };
