import type { Bounds, CropRect, DisplaySelection, Point } from './types.js';

/**
 * Square selection from a drag gesture.
 *
 * The side is the larger of the two drag deltas, anchored at the start point
 * and extending in the drag direction (dragging up or left grows the square
 * up or left). The side shrinks as needed so the square never leaves the
 * image bounds.
 */
export function dragSelect(start: Point, current: Point, bounds: Bounds): DisplaySelection {
  const dx = current.x - start.x;
  const dy = current.y - start.y;
  let side = Math.max(Math.abs(dx), Math.abs(dy));

  const availX = dx < 0 ? start.x : bounds.width - start.x;
  const availY = dy < 0 ? start.y : bounds.height - start.y;
  side = Math.max(0, Math.min(side, availX, availY));

  return {
    x: dx < 0 ? start.x - side : start.x,
    y: dy < 0 ? start.y - side : start.y,
    size: side,
  };
}

/**
 * Convert a display-space selection to original-image pixels.
 *
 * Every field is divided by the display scale and rounded to the nearest
 * integer; the height is then forced equal to the width so rounding can never
 * produce an off-by-one aspect. Independent rounding of the corner can land
 * one pixel past the frame, so the corner is clamped back in.
 */
export function toOriginalCrop(
  sel: DisplaySelection,
  displayScale: number,
  image: Bounds,
): CropRect {
  const w = Math.min(Math.round(sel.size / displayScale), image.width, image.height);
  const x = clamp(Math.round(sel.x / displayScale), 0, image.width - w);
  const y = clamp(Math.round(sel.y / displayScale), 0, image.height - w);
  return { x, y, w, h: w };
}

function clamp(value: number, lo: number, hi: number): number {
  return Math.min(Math.max(value, lo), hi);
}
