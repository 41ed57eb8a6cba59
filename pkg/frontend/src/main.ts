import { AnnotatorApi } from './api.js';
import { mountAnnotator } from './ui.js';

const root = document.getElementById('app');
if (!root) throw new Error('missing #app element');

const params = new URLSearchParams(window.location.search);
const presetWorker = params.get('worker');

if (presetWorker) {
  void start(presetWorker);
} else {
  root.innerHTML = `
    <form class="worker-form">
      <label>Worker id: <input name="worker" required autofocus /></label>
      <button type="submit">Start annotating</button>
    </form>`;
  root.querySelector('form')!.addEventListener('submit', (event) => {
    event.preventDefault();
    const input = root.querySelector('input[name=worker]') as HTMLInputElement;
    if (input.value.trim()) void start(input.value.trim());
  });
}

async function start(worker: string): Promise<void> {
  const session = mountAnnotator(root!, new AnnotatorApi(''), worker);
  await session.start();
}
