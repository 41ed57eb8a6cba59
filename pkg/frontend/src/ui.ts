import { AnnotatorApi } from './api.js';
import { AnnotationSession } from './session.js';
import type { Point } from './types.js';

const INSTRUCTIONS =
  'Drag a square over the image that CONTAINS the named entity and is as ' +
  'aesthetically pleasing as possible. Do not just draw a tight box around ' +
  'the entity: compose a picture someone would want to keep. ' +
  'Enter submits, Esc clears.';

/**
 * Mount the annotator into a root element and wire mouse/keyboard handling.
 * Returns the session driving it (handy for tests).
 */
export function mountAnnotator(
  root: HTMLElement,
  api: AnnotatorApi,
  worker: string,
): AnnotationSession {
  root.innerHTML = `
    <div class="annotator">
      <p class="instructions">${INSTRUCTIONS}</p>
      <p class="prompt">Entity: <strong class="entity"></strong>
        <span class="progress"></span></p>
      <div class="frame" draggable="false">
        <img class="photo" alt="" draggable="false" />
        <div class="marquee" hidden></div>
      </div>
      <p class="error" hidden></p>
      <p class="controls">
        <button class="submit" type="button">Submit crop</button>
        <button class="clear" type="button">Clear</button>
      </p>
    </div>`;

  const frame = root.querySelector('.frame') as HTMLElement;
  const photo = root.querySelector('.photo') as HTMLImageElement;
  const marquee = root.querySelector('.marquee') as HTMLElement;
  const entityLabel = root.querySelector('.entity') as HTMLElement;
  const progress = root.querySelector('.progress') as HTMLElement;
  const errorLine = root.querySelector('.error') as HTMLElement;
  const submitButton = root.querySelector('.submit') as HTMLButtonElement;
  const clearButton = root.querySelector('.clear') as HTMLButtonElement;

  const session = new AnnotationSession(api, worker, render);

  function render(): void {
    if (session.phase === 'done') {
      frame.hidden = true;
      entityLabel.textContent = '';
      progress.textContent = `all tasks done, ${session.submitted} crops submitted. Thank you!`;
    } else if (session.task) {
      frame.hidden = false;
      const bounds = session.displayBounds();
      photo.src = api.imageUrl(session.task);
      photo.width = Math.round(bounds.width);
      photo.height = Math.round(bounds.height);
      frame.style.width = `${Math.round(bounds.width)}px`;
      frame.style.height = `${Math.round(bounds.height)}px`;
      entityLabel.textContent = session.task.entity;
      progress.textContent = ` (aspect ${session.task.aspect}, ${session.submitted} done)`;
    }

    const sel = session.selection;
    marquee.hidden = sel === null;
    if (sel) {
      marquee.style.left = `${sel.x}px`;
      marquee.style.top = `${sel.y}px`;
      marquee.style.width = `${sel.size}px`;
      marquee.style.height = `${sel.size}px`;
    }

    errorLine.hidden = session.error === null;
    errorLine.textContent = session.error ?? '';
    submitButton.disabled = !session.canSubmit();
  }

  function framePoint(event: MouseEvent): Point {
    const box = frame.getBoundingClientRect();
    return { x: event.clientX - box.left, y: event.clientY - box.top };
  }

  frame.addEventListener('mousedown', (event) => {
    event.preventDefault();
    session.beginDrag(framePoint(event));
  });
  // track on the window so dragging past the edge keeps clamping
  window.addEventListener('mousemove', (event) => {
    session.updateDrag(framePoint(event));
  });
  window.addEventListener('mouseup', () => {
    session.endDrag();
  });

  document.addEventListener('keydown', (event) => {
    if (event.key === 'Enter') {
      event.preventDefault();
      void session.submit();
    } else if (event.key === 'Escape') {
      session.clear();
    }
  });

  submitButton.addEventListener('click', () => void session.submit());
  clearButton.addEventListener('click', () => session.clear());

  render();
  return session;
}
