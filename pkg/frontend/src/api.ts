import type { AnnotationTask, CropRect } from './types.js';

/** HTTP-level rejection; status 422 carries the server's validation reason. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

/** Thin client for the annotation service endpoints. */
export class AnnotatorApi {
  constructor(private readonly baseUrl: string = '') {}

  /** Next open task for the worker, or null when none is left (204). */
  async nextTask(worker: string): Promise<AnnotationTask | null> {
    const resp = await fetch(
      `${this.baseUrl}/api/tasks/next?worker=${encodeURIComponent(worker)}`,
    );
    if (resp.status === 204) return null;
    if (!resp.ok) throw new ApiError(resp.status, await errorText(resp));
    return (await resp.json()) as AnnotationTask;
  }

  /** Submit a crop in original-image coordinates; resolves to the stored sequence number. */
  async submitAnnotation(taskId: string, worker: string, crop: CropRect): Promise<number> {
    const resp = await fetch(`${this.baseUrl}/api/annotations`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ task_id: taskId, worker, crop }),
    });
    if (!resp.ok) throw new ApiError(resp.status, await errorText(resp));
    const body = (await resp.json()) as { seq: number };
    return body.seq;
  }

  imageUrl(task: AnnotationTask): string {
    return `${this.baseUrl}${task.image_url}`;
  }
}

async function errorText(resp: Response): Promise<string> {
  try {
    const body = (await resp.json()) as { error?: string };
    if (body.error) return body.error;
  } catch {
    // non-JSON body, fall through
  }
  return `request failed with status ${resp.status}`;
}
