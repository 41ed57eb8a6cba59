/** Task payload served by GET /api/tasks/next. */
export interface AnnotationTask {
  task_id: string;
  image_url: string;
  image_w: number;
  image_h: number;
  display_scale: number;
  entity: string;
  aspect: string;
}

/**
 * In-progress selection in display (on-screen) pixels. Squares only: a single
 * side length makes non-square selections unrepresentable.
 */
export interface DisplaySelection {
  x: number;
  y: number;
  size: number;
}

/** Crop rectangle in original-image pixels, as the server stores it. */
export interface CropRect {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface Point {
  x: number;
  y: number;
}

export interface Bounds {
  width: number;
  height: number;
}
