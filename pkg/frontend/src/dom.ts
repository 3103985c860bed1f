// Thin DOM bindings: paint render models into elements, wire inputs. All
// logic lives in model/render/screens; this file only touches the document.

import type { NavigateScreen } from './screens.js';
import type { ExplainRender, GridCell, NavigateRender, RateRender } from './render.js';

export function paintGrid(container: HTMLElement, grid: GridCell[][]): void {
  container.textContent = '';
  container.style.setProperty('--cols', String(grid[0]?.length ?? 0));
  for (const line of grid) {
    for (const cell of line) {
      const div = document.createElement('div');
      div.className = 'cell';
      if (cell.avatar) div.classList.add('avatar');
      if (!cell.revealed) div.classList.add('fog');
      if (cell.ch === '#') div.classList.add('wall');
      if (cell.ch === 'G') div.classList.add('goal');
      if (cell.ch === 'S') div.classList.add('start');
      div.textContent = cell.ch === '.' ? '' : cell.ch;
      container.appendChild(div);
    }
  }
}

export function bindNavigate(root: HTMLElement, screen: NavigateScreen): void {
  root.innerHTML = `
    <p class="instruction" data-role="instruction"></p>
    <p class="explanation" data-role="explanation" hidden></p>
    <div class="grid" data-role="grid"></div>
    <p data-role="status"></p>
    <p class="banner" data-role="banner"></p>
    <div class="pad">
      <button data-action="up">&uarr;</button>
      <div>
        <button data-action="left">&larr;</button>
        <button data-action="down">&darr;</button>
        <button data-action="right">&rarr;</button>
      </div>
    </div>`;

  const paint = (render: NavigateRender) => {
    (root.querySelector('[data-role=instruction]') as HTMLElement).textContent = render.instruction;
    const expl = root.querySelector('[data-role=explanation]') as HTMLElement;
    expl.hidden = render.explanationText === null;
    expl.textContent = render.explanationText ?? '';
    paintGrid(root.querySelector('[data-role=grid]') as HTMLElement, render.grid);
    (root.querySelector('[data-role=status]') as HTMLElement).textContent = render.done
      ? `Done! Path length: ${render.pathLength}`
      : `Steps: ${render.steps} / ${render.budget}`;
    (root.querySelector('[data-role=banner]') as HTMLElement).textContent = render.banner;
    for (const btn of root.querySelectorAll<HTMLButtonElement>('button[data-action]')) {
      btn.disabled = render.inputLocked;
    }
  };

  screen.onRender(paint);
  paint(screen.render());

  document.addEventListener('keydown', (ev) => {
    void screen.handleKey(ev.key).then((handled) => {
      if (handled) ev.preventDefault();
    });
  });
  for (const btn of root.querySelectorAll<HTMLButtonElement>('button[data-action]')) {
    btn.addEventListener('click', () => void screen.move(btn.dataset.action as string));
  }
}

export function bindExplain(
  root: HTMLElement,
  render: ExplainRender,
  onSubmit: (text: string) => Promise<boolean>,
): void {
  root.innerHTML = `
    <p class="instruction" data-role="instruction"></p>
    <div class="grid" data-role="grid"></div>
    <textarea data-role="text" rows="4" placeholder="Write your message"></textarea>
    <p class="hint" data-role="hint"></p>
    <button data-role="submit">Send message</button>
    <p class="banner" data-role="banner"></p>`;
  (root.querySelector('[data-role=instruction]') as HTMLElement).textContent = render.instruction;
  paintGrid(root.querySelector('[data-role=grid]') as HTMLElement, render.grid);
  const text = root.querySelector('[data-role=text]') as HTMLTextAreaElement;
  const hint = root.querySelector('[data-role=hint]') as HTMLElement;
  const submit = root.querySelector('[data-role=submit]') as HTMLButtonElement;
  text.addEventListener('input', () => {
    hint.textContent =
      text.value.length > render.maxChars
        ? `Message exceeds ${render.maxChars} characters.`
        : `${text.value.length} / ${render.maxChars}`;
  });
  submit.addEventListener('click', () => {
    submit.disabled = true;
    void onSubmit(text.value).then((ok) => {
      submit.disabled = ok; // re-enable only on failure
    });
  });
}

export function bindRate(
  root: HTMLElement,
  render: RateRender,
  onSubmit: (score: number) => Promise<boolean>,
): void {
  root.innerHTML = `
    <p class="instruction" data-role="instruction"></p>
    <div class="grid" data-role="grid"></div>
    <blockquote data-role="message"></blockquote>
    <input type="range" data-role="slider" />
    <p data-role="value"></p>
    <button data-role="submit">Submit rating</button>
    <p class="banner" data-role="banner"></p>`;
  (root.querySelector('[data-role=instruction]') as HTMLElement).textContent = render.instruction;
  paintGrid(root.querySelector('[data-role=grid]') as HTMLElement, render.grid);
  (root.querySelector('[data-role=message]') as HTMLElement).textContent = render.explanationText;
  const slider = root.querySelector('[data-role=slider]') as HTMLInputElement;
  slider.min = String(render.scaleMin);
  slider.max = String(render.scaleMax);
  slider.value = String(Math.round((render.scaleMin + render.scaleMax) / 2));
  const value = root.querySelector('[data-role=value]') as HTMLElement;
  value.textContent = slider.value;
  slider.addEventListener('input', () => {
    value.textContent = slider.value;
  });
  const submit = root.querySelector('[data-role=submit]') as HTMLButtonElement;
  submit.addEventListener('click', () => {
    submit.disabled = true;
    slider.disabled = true;
    void onSubmit(Number(slider.value)).then((ok) => {
      if (!ok) {
        submit.disabled = false;
        slider.disabled = false;
      }
    });
  });
}
