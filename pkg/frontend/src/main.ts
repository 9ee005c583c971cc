/**
 * Browser bootstrap: binds a SearchSession to the page and keeps the
 * DOM in sync by re-rendering after every state change.
 */

import { ApiClient, SEARCHABLE_REGIONS, TEXTURE_CLASSES, type Region, type TextureClass } from './api.js';
import { SearchSession } from './session.js';
import { pickedLab } from './lab.js';

function isRegion(value: string): value is Region {
  return (SEARCHABLE_REGIONS as readonly string[]).includes(value);
}

function isTexture(value: string): value is TextureClass {
  return (TEXTURE_CLASSES as readonly string[]).includes(value);
}

function start(): void {
  const root = document.getElementById('app');
  if (!root) throw new Error('missing #app element');

  const client = new ApiClient((path, init) => fetch(path, init));
  const session = new SearchSession(client);

  const repaint = (): void => {
    root.innerHTML = session.render();
  };

  const submit = (): void => {
    void session.submit().then(async () => {
      repaint();
      await session.loadThumbnails();
      repaint();
    });
    repaint();
  };

  root.addEventListener('change', (ev) => {
    const el = ev.target as HTMLElement;
    if (el instanceof HTMLSelectElement) {
      const colorRegion = el.dataset['colorSelect'];
      if (colorRegion !== undefined && isRegion(colorRegion)) {
        if (el.value === '') session.setColor(colorRegion, { kind: 'none' });
        else if (!el.value.startsWith('custom:')) {
          session.setColor(colorRegion, { kind: 'named', name: el.value });
        }
        repaint();
        return;
      }
      const textureRegion = el.dataset['texture'];
      if (textureRegion !== undefined && isRegion(textureRegion)) {
        session.setTexture(textureRegion, isTexture(el.value) ? el.value : null);
        repaint();
        return;
      }
      if (el.dataset['preset'] !== undefined) {
        session.setPreset(el.value);
        repaint();
        return;
      }
    }
    if (el instanceof HTMLInputElement) {
      const pickerRegion = el.dataset['colorPicker'];
      if (pickerRegion !== undefined && isRegion(pickerRegion)) {
        session.setColor(pickerRegion, { kind: 'explicit', lab: pickedLab(el.value) });
        repaint();
        return;
      }
      if (el.dataset['topk'] !== undefined) {
        const v = Number(el.value);
        if (Number.isInteger(v) && v >= 1 && v <= 500) session.setTopK(v);
        repaint();
      }
    }
  });

  root.addEventListener('click', (ev) => {
    const el = (ev.target as HTMLElement).closest('[data-action]');
    if (!(el instanceof HTMLElement)) return;
    const action = el.dataset['action'];
    if (action === 'submit' || action === 'retry') {
      ev.preventDefault();
      submit();
    } else if (action === 'clear') {
      const region = el.dataset['region'];
      if (region !== undefined && isRegion(region)) {
        session.clearTerm(region);
        repaint();
      }
    }
  });

  root.addEventListener('submit', (ev) => {
    ev.preventDefault();
    submit();
  });

  repaint();
  void session.start().then(repaint);
}

start();
