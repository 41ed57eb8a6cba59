import { ApiError, AnnotatorApi } from './api.js';
import { dragSelect, toOriginalCrop } from './selection.js';
import type { AnnotationTask, Bounds, DisplaySelection, Point } from './types.js';

export type SessionPhase = 'idle' | 'annotating' | 'submitting' | 'done';

/**
 * One worker's annotation session: the current task, the in-progress square
 * selection in display coordinates, and the submit flow. Holds no DOM; the
 * UI layer re-renders on every onChange callback.
 *
 * Failed submissions keep the selection so the worker can correct or retry;
 * the server's 422 reason is surfaced verbatim in `error`.
 */
export class AnnotationSession {
  phase: SessionPhase = 'idle';
  task: AnnotationTask | null = null;
  selection: DisplaySelection | null = null;
  error: string | null = null;
  submitted = 0;

  private dragStart: Point | null = null;

  constructor(
    private readonly api: AnnotatorApi,
    readonly worker: string,
    private readonly onChange: () => void = () => {},
  ) {}

  /** Displayed image size: original size times the server's display scale. */
  displayBounds(): Bounds {
    if (!this.task) return { width: 0, height: 0 };
    return {
      width: this.task.image_w * this.task.display_scale,
      height: this.task.image_h * this.task.display_scale,
    };
  }

  async start(): Promise<void> {
    await this.loadNext();
  }

  private async loadNext(): Promise<void> {
    this.selection = null;
    this.dragStart = null;
    try {
      this.task = await this.api.nextTask(this.worker);
      this.phase = this.task ? 'annotating' : 'done';
      this.error = null;
    } catch (err) {
      this.task = null;
      this.phase = 'idle';
      this.error = describe(err);
    }
    this.onChange();
  }

  beginDrag(point: Point): void {
    if (this.phase !== 'annotating') return;
    this.dragStart = point;
    this.selection = dragSelect(point, point, this.displayBounds());
    this.onChange();
  }

  updateDrag(point: Point): void {
    if (!this.dragStart) return;
    this.selection = dragSelect(this.dragStart, point, this.displayBounds());
    this.onChange();
  }

  endDrag(): void {
    this.dragStart = null;
    // zero-size selections cannot be submitted; drop them
    if (this.selection && this.selection.size < 1) this.selection = null;
    this.onChange();
  }

  clear(): void {
    this.selection = null;
    this.dragStart = null;
    this.error = null;
    this.onChange();
  }

  /** True when there is a selection worth submitting. */
  canSubmit(): boolean {
    return (
      this.phase === 'annotating' && this.selection !== null && this.selection.size >= 1
    );
  }

  async submit(): Promise<void> {
    if (!this.canSubmit() || !this.task || !this.selection) return;
    const crop = toOriginalCrop(this.selection, this.task.display_scale, {
      width: this.task.image_w,
      height: this.task.image_h,
    });
    this.phase = 'submitting';
    this.error = null;
    this.onChange();
    try {
      await this.api.submitAnnotation(this.task.task_id, this.worker, crop);
      this.submitted += 1;
      await this.loadNext();
    } catch (err) {
      // keep the selection for correction or retry
      this.phase = 'annotating';
      this.error = describe(err);
      this.onChange();
    }
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return err.message;
  return 'cannot reach the annotation server; your selection is kept, try again';
}
