// Session state store: the single source of truth behind the UI.
//
// Mask edits are debounced into PUT /mask calls with last-write-wins
// sequencing: at most one sync in flight, later edits supersede pending ones,
// and a no-op edit (net-zero drag) never reaches the server. After every
// acknowledged update `serverPrimitives` mirrors the server's mask exactly.

import { ApiClient, ApiError, PreviewPayload, ResultPayload } from './api';
import { PrimitiveSpec, clonePrimitive, primitivesEqual, validatePrimitive } from './primitives';

export type Busy = 'idle' | 'syncing' | 'inpainting';

export interface UiState {
  sessionId: string | null;
  meshText: string | null;
  primitives: PrimitiveSpec[];
  serverPrimitives: PrimitiveSpec[];
  selection: number;
  prompt: string;
  seed: number;
  preview: PreviewPayload | null;
  result: ResultPayload | null;
  busy: Busy;
  dirty: boolean;
  error: string | null;
}

export interface StoreOptions {
  debounceMs?: number;
  pollMs?: number;
  pollAttempts?: number;
}

type Listener = (state: UiState) => void;

export class SessionStore {
  readonly state: UiState = {
    sessionId: null,
    meshText: null,
    primitives: [],
    serverPrimitives: [],
    selection: -1,
    prompt: '',
    seed: 0,
    preview: null,
    result: null,
    busy: 'idle',
    dirty: false,
    error: null,
  };

  private listeners: Listener[] = [];
  private debounceMs: number;
  private pollMs: number;
  private pollAttempts: number;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private syncing = false;
  private needsResync = false;
  private inpaintEpoch = 0;
  putCount = 0; // observable for tests and the status bar

  constructor(private api: ApiClient, opts: StoreOptions = {}) {
    this.debounceMs = opts.debounceMs ?? 250;
    this.pollMs = opts.pollMs ?? 500;
    this.pollAttempts = opts.pollAttempts ?? 240;
  }

  subscribe(fn: Listener): () => void {
    this.listeners.push(fn);
    fn(this.state);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== fn);
    };
  }

  private emit(): void {
    for (const fn of this.listeners) fn(this.state);
  }

  private setError(err: unknown): void {
    this.state.error = err instanceof Error ? err.message : String(err);
    this.emit();
  }

  // -- session lifecycle ----------------------------------------------------

  async createSession(meshBytes: Uint8Array): Promise<string> {
    this.state.error = null;
    const { session_id } = await this.api.createSession(meshBytes);
    this.state.sessionId = session_id;
    this.state.meshText = await this.api.getMeshText(session_id);
    this.state.primitives = [];
    this.state.serverPrimitives = [];
    this.state.preview = null;
    this.state.result = null;
    this.state.selection = -1;
    this.state.dirty = false;
    this.emit();
    return session_id;
  }

  /** Rebuild the whole UI state from the server (page reload). */
  async restore(sessionId: string): Promise<void> {
    const st = await this.api.getState(sessionId);
    this.state.sessionId = sessionId;
    this.state.meshText = await this.api.getMeshText(sessionId);
    this.state.primitives = st.primitives.map(clonePrimitive);
    this.state.serverPrimitives = st.primitives.map(clonePrimitive);
    this.state.prompt = st.prompt;
    this.state.seed = st.seed;
    this.state.selection = this.state.primitives.length ? 0 : -1;
    this.state.preview = st.has_mask ? await this.api.getPreview(sessionId) : null;
    this.state.result = st.has_result ? await this.api.getResult(sessionId) : null;
    this.state.dirty = false;
    this.state.error = null;
    this.emit();
  }

  // -- mask editing -----------------------------------------------------------

  setPrompt(prompt: string): void {
    this.state.prompt = prompt;
    this.emit();
  }

  setSeed(seed: number): void {
    this.state.seed = seed;
    this.emit();
  }

  select(index: number): void {
    this.state.selection = index;
    this.emit();
  }

  addPrimitive(p: PrimitiveSpec): void {
    this.updatePrimitives([...this.state.primitives, p]);
    this.state.selection = this.state.primitives.length - 1;
    this.emit();
  }

  removePrimitive(index: number): void {
    const next = this.state.primitives.filter((_, i) => i !== index);
    this.state.selection = Math.min(this.state.selection, next.length - 1);
    this.updatePrimitives(next);
  }

  /** Replace the primitive list (gizmo edits land here). A list identical to
   *  the current one is ignored, so net-zero drags issue no server call. */
  updatePrimitives(next: PrimitiveSpec[]): void {
    if (primitivesEqual(next, this.state.primitives)) return;
    const bad = next.map(validatePrimitive).find((m) => m !== null);
    if (bad) {
      this.setError(bad);
      return;
    }
    this.state.primitives = next.map(clonePrimitive);
    this.state.dirty = !primitivesEqual(this.state.primitives, this.state.serverPrimitives);
    this.emit();
    if (this.state.dirty) this.scheduleSync();
  }

  private scheduleSync(): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.sync();
    }, this.debounceMs);
  }

  /** Force any pending mask sync to run now. */
  async flush(): Promise<void> {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    await this.sync();
  }

  private async sync(): Promise<void> {
    if (!this.state.sessionId) return;
    if (this.syncing) {
      this.needsResync = true;
      return;
    }
    const snapshot = this.state.primitives.map(clonePrimitive);
    if (primitivesEqual(snapshot, this.state.serverPrimitives)) {
      this.state.dirty = false;
      this.emit();
      return;
    }
    this.syncing = true;
    this.state.busy = 'syncing';
    this.emit();
    try {
      this.putCount += 1;
      const preview = snapshot.length
        ? await this.api.putMask(this.state.sessionId, snapshot)
        : await this.api.clearMask(this.state.sessionId);
      this.state.serverPrimitives = snapshot;
      this.state.preview = preview;
      this.state.error = null;
    } catch (err) {
      // server rejected the mask: stay dirty and surface the error
      this.setError(err);
    } finally {
      this.syncing = false;
      this.state.busy = 'idle';
      this.state.dirty = !primitivesEqual(this.state.primitives, this.state.serverPrimitives);
      this.emit();
    }
    if (this.needsResync) {
      this.needsResync = false;
      await this.sync();
    }
  }

  // -- inpainting -------------------------------------------------------------

  canSubmit(): boolean {
    return Boolean(
      this.state.sessionId &&
      this.state.prompt.trim().length > 0 &&
      this.state.serverPrimitives.length > 0 &&
      this.state.busy === 'idle',
    );
  }

  async submitInpaint(): Promise<void> {
    if (!this.canSubmit() || !this.state.sessionId) return;
    await this.flush();
    const sid = this.state.sessionId;
    const epoch = ++this.inpaintEpoch;
    this.state.busy = 'inpainting';
    this.state.error = null;
    this.emit();
    try {
      const { result_id } = await this.api.inpaint(sid, this.state.prompt, this.state.seed);
      const result = await this.pollResult(sid, result_id);
      if (epoch === this.inpaintEpoch) {
        this.state.result = result; // only the latest submission may land
      }
    } catch (err) {
      this.setError(err);
    } finally {
      if (epoch === this.inpaintEpoch) {
        this.state.busy = 'idle';
        this.emit();
      }
    }
  }

  private async pollResult(sid: string, resultId: number): Promise<ResultPayload> {
    for (let attempt = 0; attempt < this.pollAttempts; attempt++) {
      try {
        const result = await this.api.getResult(sid);
        if (result.result_id >= resultId) return result;
      } catch (err) {
        if (!(err instanceof ApiError && err.status === 404)) throw err;
      }
      await new Promise((resolve) => setTimeout(resolve, this.pollMs));
    }
    throw new Error('inpaint result did not arrive in time');
  }
}
