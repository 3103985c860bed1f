// Test harness: boots the real Python service (the UI's only backend) on a
// random port and records every JSON payload that crosses the wire.

import { type ChildProcess, execFile, spawn } from 'node:child_process';
import { mkdtempSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join, resolve } from 'node:path';
import { promisify } from 'node:util';

import { ApiClient, type FetchLike } from '../src/api.js';

const execFileAsync = promisify(execFile);

export const REPO_ROOT = resolve(__dirname, '..', '..');
export const MAPS_DIR = join(REPO_ROOT, 'maps');

export const CORRIDOR5 = ['#####', '#S..#', '###.#', '#G..#', '#####'];

export interface TestService {
  baseUrl: string;
  child: ChildProcess;
  stop: () => void;
}

const CORPUS_LINES = [
  { id: 'g1', map_id: 'corridor5', text: 'go right twice then down twice then left twice', condition: 'Good' },
  { id: 'm1', map_id: 'corridor5', text: 'head toward the bottom left', condition: 'Medium' },
  { id: 'b1', map_id: 'corridor5', text: 'good luck', condition: 'Bad' },
];

export async function startService(): Promise<TestService> {
  const work = mkdtempSync(join(tmpdir(), 'wayfinder-ui-'));
  const corpus = join(work, 'corpus.jsonl');
  writeFileSync(corpus, CORPUS_LINES.map((r) => JSON.stringify(r)).join('\n') + '\n');

  for (let attempt = 0; attempt < 3; attempt += 1) {
    const port = 21000 + Math.floor(Math.random() * 20000);
    const child = spawn(
      'python3',
      [
        '-m',
        'wayfinder.cli',
        'serve',
        '--maps',
        MAPS_DIR,
        '--corpus',
        corpus,
        '--store',
        join(work, 'store'),
        '--host',
        '127.0.0.1',
        '--port',
        String(port),
      ],
      { stdio: ['ignore', 'pipe', 'pipe'], env: { ...process.env, WAYFINDER_ADMIN_TOKEN: 'test-admin' } },
    );
    const baseUrl = `http://127.0.0.1:${port}`;
    const deadline = Date.now() + 15000;
    while (Date.now() < deadline) {
      if (child.exitCode !== null) break; // port clash or crash: retry
      try {
        const resp = await fetch(`${baseUrl}/healthz`);
        if (resp.ok) {
          return { baseUrl, child, stop: () => child.kill('SIGTERM') };
        }
      } catch {
        // not up yet
      }
      await new Promise((r) => setTimeout(r, 150));
    }
    child.kill('SIGTERM');
  }
  throw new Error('could not start the wayfinder service');
}

export interface RecordedExchange {
  method: string;
  path: string;
  status: number;
  body: unknown;
}

/** An ApiClient whose every request/response is captured for inspection. */
export function recordingClient(baseUrl: string): { client: ApiClient; log: RecordedExchange[] } {
  const log: RecordedExchange[] = [];
  const fetchFn: FetchLike = async (input, init) => {
    const resp = await fetch(input, init);
    const text = await resp.text();
    log.push({
      method: init?.method ?? 'GET',
      path: input.replace(baseUrl, ''),
      status: resp.status,
      body: text ? JSON.parse(text) : null,
    });
    return new Response(text, { status: resp.status, headers: { 'Content-Type': 'application/json' } });
  };
  return { client: new ApiClient(baseUrl, fetchFn), log };
}

/** Run a wayfinder CLI subcommand against the installed package. */
export async function runCli(args: string[]): Promise<{ code: number; stdout: string }> {
  try {
    const { stdout } = await execFileAsync('python3', ['-m', 'wayfinder.cli', ...args]);
    return { code: 0, stdout };
  } catch (err) {
    const e = err as { code?: number; stdout?: string };
    return { code: e.code ?? 1, stdout: e.stdout ?? '' };
  }
}

/** The engine's view of a local window on corridor5, for fog cross-checks. */
export function expectedWindow(center: { row: number; col: number }, radius: number): string[] {
  const goal = { row: 3, col: 1 };
  const rows: string[] = [];
  for (let r = center.row - radius; r <= center.row + radius; r += 1) {
    let line = '';
    for (let c = center.col - radius; c <= center.col + radius; c += 1) {
      if (r < 0 || r >= CORRIDOR5.length || c < 0 || c >= CORRIDOR5[0].length) {
        line += '?';
      } else if (r === goal.row && c === goal.col) {
        line += 'G';
      } else {
        const ch = CORRIDOR5[r][c];
        line += ch === 'S' || ch === 'G' ? '.' : ch;
      }
    }
    rows.push(line);
  }
  return rows;
}
