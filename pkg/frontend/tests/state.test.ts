import { afterEach, beforeEach, describe, expect, it, vi } from 'vitest';

import { ApiClient } from '../src/api';
import { defaultPrimitive } from '../src/primitives';
import { SessionStore } from '../src/state';
import { FakeServer } from './fake-server';

const MESH = new TextEncoder().encode('v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n');

function makeStore(server: FakeServer, debounceMs = 50) {
  const api = new ApiClient('', server.fetch);
  return new SessionStore(api, { debounceMs, pollMs: 1, pollAttempts: 10 });
}

describe('session store', () => {
  let server: FakeServer;

  beforeEach(() => {
    server = new FakeServer();
    vi.useFakeTimers();
  });

  afterEach(() => {
    vi.useRealTimers();
  });

  async function createReady(store: SessionStore) {
    await store.createSession(MESH);
    store.addPrimitive(defaultPrimitive('ellipsoid'));
    await store.flush();
  }

  it('create session loads the mesh and empty mask', async () => {
    const store = makeStore(server);
    await store.createSession(MESH);
    expect(store.state.sessionId).toBe('fake-1');
    expect(store.state.meshText).toContain('v 0 0 0');
    expect(store.state.primitives).toEqual([]);
  });

  it('adding a primitive syncs once and fills the preview', async () => {
    const store = makeStore(server);
    await createReady(store);
    expect(server.callCount(/PUT .*\/mask/)).toBe(1);
    expect(store.state.preview?.coverage).toHaveLength(4);
    expect(store.state.dirty).toBe(false);
    expect(store.state.serverPrimitives).toEqual(store.state.primitives);
  });

  it('debounce folds rapid edits into a single PUT', async () => {
    const store = makeStore(server, 100);
    await store.createSession(MESH);
    const p = defaultPrimitive('box');
    for (let k = 1; k <= 5; k++) {
      store.updatePrimitives([{ ...p, center: [k * 0.01, 0, 0] }]);
      vi.advanceTimersByTime(30); // under the debounce window
    }
    await vi.advanceTimersByTimeAsync(200);
    expect(server.callCount(/PUT .*\/mask/)).toBe(1);
    expect(store.state.serverPrimitives[0].center[0]).toBeCloseTo(0.05);
  });

  it('net-zero edit issues no server call', async () => {
    const store = makeStore(server);
    await createReady(store);
    const before = server.callCount(/PUT .*\/mask/);
    store.updatePrimitives(store.state.primitives.map((p) => ({ ...p })));
    await store.flush();
    expect(server.callCount(/PUT .*\/mask/)).toBe(before);
  });

  it('deleting the last primitive clears the mask server-side', async () => {
    const store = makeStore(server);
    await createReady(store);
    store.removePrimitive(0);
    await store.flush();
    expect(server.callCount(/DELETE .*\/mask/)).toBe(1);
    expect(store.state.preview?.coverage.reduce((a, b) => a + b, 0)).toBe(0);
    expect(server.sessions.get('fake-1')!.state.has_mask).toBe(false);
  });

  it('a server rejection leaves local state dirty with an error', async () => {
    const store = makeStore(server);
    await createReady(store);
    // bypass client-side validation to exercise the server error path
    store.state.primitives = [{ ...defaultPrimitive('box'), size: [-1, 1, 1] }];
    store.state.dirty = true;
    await store.flush();
    expect(store.state.error).toMatch(/positive/);
    expect(store.state.dirty).toBe(true);
  });

  it('client-side validation blocks bad primitives before any call', async () => {
    const store = makeStore(server);
    await store.createSession(MESH);
    store.updatePrimitives([{ ...defaultPrimitive('box'), size: [0, 0.1, 0.1] }]);
    expect(store.state.error).toMatch(/positive/);
    expect(store.state.primitives).toEqual([]);
    expect(server.callCount(/PUT/)).toBe(0);
  });

  it('inpaint requires prompt and mask', async () => {
    const store = makeStore(server);
    await store.createSession(MESH);
    expect(store.canSubmit()).toBe(false);
    store.setPrompt('a hat');
    expect(store.canSubmit()).toBe(false); // still no mask
    store.addPrimitive(defaultPrimitive('ellipsoid'));
    await store.flush();
    expect(store.canSubmit()).toBe(true);
    store.setPrompt('  ');
    expect(store.canSubmit()).toBe(false); // empty prompt disables submit
  });

  it('submit stores the result and busy flag clears', async () => {
    const store = makeStore(server);
    await createReady(store);
    store.setPrompt('a red hat');
    store.setSeed(5);
    await store.submitInpaint();
    expect(store.state.result?.result_id).toBe(1);
    expect(store.state.result?.preservation).toBe(0);
    expect(store.state.result?.views).toHaveLength(4);
    expect(store.state.busy).toBe('idle');
    expect(server.sessions.get('fake-1')!.state.prompt).toBe('a red hat');
  });

  it('only the latest submission lands', async () => {
    const store = makeStore(server);
    await createReady(store);
    store.setPrompt('first');
    const first = store.submitInpaint();
    store.setPrompt('second');
    const second = store.submitInpaint();
    await Promise.all([first, second]);
    expect(store.state.result?.result_id).toBe(server.sessions.get('fake-1')!.state.result_id);
  });

  it('restore rebuilds state from the server alone', async () => {
    const store = makeStore(server);
    await createReady(store);
    store.setPrompt('a woolly hat');
    await store.submitInpaint();

    const fresh = makeStore(server);
    await fresh.restore('fake-1');
    expect(fresh.state.primitives).toEqual(store.state.primitives);
    expect(fresh.state.prompt).toBe('a woolly hat');
    expect(fresh.state.preview?.mask).toBe(store.state.preview?.mask);
    expect(fresh.state.result?.result_id).toBe(store.state.result?.result_id);
    expect(fresh.state.dirty).toBe(false);
  });

  it('restore of unknown session fails loudly', async () => {
    const store = makeStore(server);
    await expect(store.restore('missing')).rejects.toThrow(/no session/);
  });
});
