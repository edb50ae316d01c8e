// Typed client for the edit-service HTTP API. All UI traffic goes through
// this module; the fetch implementation is injectable for tests.

import type { PrimitiveSpec } from './primitives';

export interface SessionState {
  session_id: string;
  num_vertices: number;
  num_faces: number;
  primitives: PrimitiveSpec[];
  prompt: string;
  seed: number;
  has_mask: boolean;
  has_result: boolean;
  result_id: number | null;
  busy: boolean;
}

export interface PreviewPayload {
  masked: string; // base64 PNG
  mask: string;
  coverage: number[];
}

export interface CameraPoseJson {
  azimuth: number;
  elevation: number;
  distance: number;
  fov: number;
}

export interface ResultPayload {
  result_id: number;
  grid: string;
  views: string[];
  poses: CameraPoseJson[];
  preservation: number | null;
  timing: Record<string, number>;
  backend: Record<string, unknown>;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string = '',
    private fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + path, init);
    const body = await resp.json().catch(() => ({}));
    if (!resp.ok) {
      throw new ApiError(resp.status, (body as { error?: string }).error ?? resp.statusText);
    }
    return body as T;
  }

  health(): Promise<{ status: string }> {
    return this.request('/api/health');
  }

  createSession(meshBytes: Uint8Array | ArrayBuffer): Promise<{ session_id: string }> {
    return this.request('/api/session', {
      method: 'POST',
      headers: { 'content-type': 'application/octet-stream' },
      body: meshBytes instanceof Uint8Array
        ? meshBytes.slice().buffer as ArrayBuffer
        : meshBytes,
    });
  }

  getState(sid: string): Promise<SessionState> {
    return this.request(`/api/session/${sid}`);
  }

  async getMeshText(sid: string): Promise<string> {
    const resp = await this.fetchImpl(`${this.baseUrl}/api/session/${sid}/mesh`);
    if (!resp.ok) throw new ApiError(resp.status, 'mesh fetch failed');
    return resp.text();
  }

  putMask(sid: string, primitives: PrimitiveSpec[]): Promise<PreviewPayload> {
    return this.request(`/api/session/${sid}/mask`, {
      method: 'PUT',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ primitives }),
    });
  }

  clearMask(sid: string): Promise<PreviewPayload> {
    return this.request(`/api/session/${sid}/mask`, { method: 'DELETE' });
  }

  getPreview(sid: string): Promise<PreviewPayload> {
    return this.request(`/api/session/${sid}/preview`);
  }

  inpaint(sid: string, prompt: string, seed: number): Promise<{ result_id: number }> {
    return this.request(`/api/session/${sid}/inpaint`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ prompt, seed }),
    });
  }

  getResult(sid: string): Promise<ResultPayload> {
    return this.request(`/api/session/${sid}/result`);
  }
}
