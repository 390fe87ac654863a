// Session view state, derived solely from API responses. Mutations are
// serialized: a second submit while one is in flight queues behind it.

import { ApiClient, SessionData, TurnData } from "./api.js";

export type TurnRenderState = "loading" | "chart" | "error";

export interface SessionView {
  session: SessionData | null;
  turns: TurnData[];
  pending: boolean;
  lastError: string | null;
}

export function emptyView(): SessionView {
  return { session: null, turns: [], pending: false, lastError: null };
}

export function viewFromSession(session: SessionData): SessionView {
  return { session, turns: [...session.turns], pending: false, lastError: null };
}

export function turnState(turn: TurnData, modelName: string): TurnRenderState {
  const result = turn.results[modelName];
  if (!result) return "loading";
  return result.error ? "error" : "chart";
}

export class SessionController {
  private view: SessionView = emptyView();
  private queue: Promise<unknown> = Promise.resolve();
  private listeners: ((view: SessionView) => void)[] = [];

  constructor(private readonly api: ApiClient) {}

  snapshot(): SessionView {
    return this.view;
  }

  onChange(listener: (view: SessionView) => void): void {
    this.listeners.push(listener);
  }

  private update(mutate: (view: SessionView) => SessionView): void {
    this.view = mutate(this.view);
    for (const listener of this.listeners) listener(this.view);
  }

  async start(dataset: string, models: string[]): Promise<void> {
    const session = await this.api.createSession(dataset, models);
    this.update(() => viewFromSession(session));
  }

  async restore(sessionId: string): Promise<void> {
    const session = await this.api.getSession(sessionId);
    this.update(() => viewFromSession(session));
  }

  /** Submit the query box; the first submit sets the base query, later ones
   * refine. Rapid double-submits are queued, never interleaved. */
  submit(text: string): Promise<TurnData> {
    const trimmed = text.trim();
    if (!trimmed) {
      return Promise.reject(new Error("empty query"));
    }
    const run = this.queue.then(async () => {
      const session = this.view.session;
      if (!session) throw new Error("no session");
      this.update((v) => ({ ...v, pending: true, lastError: null }));
      try {
        const first = this.view.turns.length === 0;
        const turn = first
          ? await this.api.postQuery(session.session_id, trimmed)
          : await this.api.refine(session.session_id, trimmed);
        this.update((v) => ({ ...v, turns: [...v.turns, turn], pending: false }));
        return turn;
      } catch (err) {
        const message = err instanceof Error ? err.message : String(err);
        this.update((v) => ({ ...v, pending: false, lastError: message }));
        throw err;
      }
    });
    this.queue = run.catch(() => undefined); // keep the chain alive after errors
    return run;
  }
}
