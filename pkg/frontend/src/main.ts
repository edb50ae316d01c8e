// Page wiring: upload, primitive palette, live previews, inpaint, results.

import { ApiClient } from './api';
import { defaultPrimitive, PrimitiveKind } from './primitives';
import { SessionStore } from './state';
import { GizmoMode, Viewport } from './viewport';

const api = new ApiClient('');
const store = new SessionStore(api);
const viewport = new Viewport(document.getElementById('viewport')!);

const el = {
  upload: document.getElementById('upload') as HTMLInputElement,
  sessionLabel: document.getElementById('session-label')!,
  primList: document.getElementById('prim-list')!,
  prompt: document.getElementById('prompt') as HTMLTextAreaElement,
  seed: document.getElementById('seed') as HTMLInputElement,
  submit: document.getElementById('submit') as HTMLButtonElement,
  status: document.getElementById('status')!,
  previewMasked: document.getElementById('preview-masked') as HTMLImageElement,
  previewMask: document.getElementById('preview-mask') as HTMLImageElement,
  coverage: document.getElementById('coverage')!,
  resultPanel: document.getElementById('result-panel')!,
  resultGrid: document.getElementById('result-grid') as HTMLImageElement,
  resultViews: document.getElementById('result-views')!,
  preservation: document.getElementById('preservation')!,
};

viewport.onEdit = (primitives) => store.updatePrimitives(primitives);
viewport.onSelect = (index) => store.select(index);

el.upload.addEventListener('change', async () => {
  const file = el.upload.files?.[0];
  if (!file) return;
  try {
    const bytes = new Uint8Array(await file.arrayBuffer());
    const sid = await store.createSession(bytes);
    location.hash = sid;
  } catch (err) {
    el.status.textContent = `upload failed: ${(err as Error).message}`;
  }
});

for (const kind of ['ellipsoid', 'box', 'cylinder'] as PrimitiveKind[]) {
  document.getElementById(`add-${kind}`)!.addEventListener('click', () => {
    store.addPrimitive(defaultPrimitive(kind));
  });
}

for (const mode of ['translate', 'rotate', 'scale'] as GizmoMode[]) {
  document.getElementById(`mode-${mode}`)!.addEventListener('click', () => {
    viewport.setGizmoMode(mode);
  });
}
window.addEventListener('keydown', (ev) => {
  if (ev.target instanceof HTMLTextAreaElement || ev.target instanceof HTMLInputElement) return;
  if (ev.key === 'g') viewport.setGizmoMode('translate');
  if (ev.key === 'r') viewport.setGizmoMode('rotate');
  if (ev.key === 's') viewport.setGizmoMode('scale');
});

el.prompt.addEventListener('input', () => store.setPrompt(el.prompt.value));
el.seed.addEventListener('input', () => store.setSeed(Number(el.seed.value) || 0));
el.submit.addEventListener('click', () => void store.submitInpaint());

function renderPrimList(): void {
  el.primList.innerHTML = '';
  store.state.primitives.forEach((p, i) => {
    const row = document.createElement('div');
    row.className = 'prim-row' + (i === store.state.selection ? ' selected' : '');
    const label = document.createElement('span');
    label.textContent = `${i}: ${p.kind}`;
    label.addEventListener('click', () => store.select(i));
    const del = document.createElement('button');
    del.textContent = 'x';
    del.title = 'delete primitive';
    del.addEventListener('click', () => store.removePrimitive(i));
    row.append(label, del);
    el.primList.appendChild(row);
  });
}

const AZIMUTH_LABELS = ['azimuth 0°', 'azimuth 90°', 'azimuth 180°', 'azimuth 270°'];

store.subscribe((state) => {
  el.sessionLabel.textContent = state.sessionId ?? 'no session';
  renderPrimList();
  viewport.setPrimitives(state.primitives, state.selection);
  if (state.meshText) viewport.loadObjText(state.meshText);

  if (state.preview) {
    el.previewMasked.src = `data:image/png;base64,${state.preview.masked}`;
    el.previewMask.src = `data:image/png;base64,${state.preview.mask}`;
    el.coverage.textContent = 'mask coverage per view: '
      + state.preview.coverage.map((c) => (100 * c).toFixed(1) + '%').join(' / ');
  } else {
    el.previewMasked.removeAttribute('src');
    el.previewMask.removeAttribute('src');
    el.coverage.textContent = '';
  }

  if (state.result) {
    el.resultPanel.classList.remove('hidden');
    el.resultGrid.src = `data:image/png;base64,${state.result.grid}`;
    el.resultViews.innerHTML = '';
    state.result.views.forEach((view, k) => {
      const cell = document.createElement('figure');
      const img = document.createElement('img');
      img.src = `data:image/png;base64,${view}`;
      const cap = document.createElement('figcaption');
      const deg = (state.result!.poses[k].azimuth * 180) / Math.PI;
      cap.textContent = `${AZIMUTH_LABELS[k]} (${deg.toFixed(1)}°)`;
      cell.append(img, cap);
      el.resultViews.appendChild(cell);
    });
    el.preservation.textContent = state.result.preservation === null
      ? 'unmasked preservation: n/a'
      : `unmasked preservation: ${state.result.preservation.toExponential(3)}`;
  } else {
    el.resultPanel.classList.add('hidden');
  }

  el.submit.disabled = !store.canSubmit();
  el.status.textContent = state.error
    ? `error: ${state.error}${state.dirty ? ' (mask out of sync)' : ''}`
    : state.busy === 'inpainting' ? 'inpainting…'
    : state.busy === 'syncing' ? 'updating mask…'
    : state.dirty ? 'mask edit pending…' : 'ready';
});

// restore a session from the URL hash after reload
const fromHash = location.hash.replace(/^#/, '');
if (fromHash) {
  store.restore(fromHash).catch((err) => {
    el.status.textContent = `restore failed: ${(err as Error).message}`;
    location.hash = '';
  });
}
