/**
 * Bird's-eye trajectory view: fit the route into the canvas, build a draw
 * plan from route + ego trail + events. The plan is pure data so it can be
 * unit-tested without a canvas; render.ts executes it.
 */

import type { Point, RouteMessage } from "./protocol.js";
import { PREFERENCE_NAMES, type PreferenceName } from "./protocol.js";

export const PREFERENCE_COLORS: Record<PreferenceName, string> = {
  agg: "#d62728",
  comfort: "#2ca02c",
  speed: "#1f77b4",
  eff: "#9467bd",
};

export const ROUTE_COLORS = {
  barrier: "#888888",
  center: "#cccccc",
  goal: "#e6b800",
  start: "#333333",
  collision: "#d62728",
  invasion: "#e377c2",
} as const;

/** Index of the largest weight; ties go to the earliest slider. */
export function dominantPreference(lambda: readonly number[]): number {
  let best = 0;
  for (let i = 1; i < lambda.length; i++) {
    if (lambda[i] > lambda[best]) best = i;
  }
  return best;
}

export interface Bounds {
  minX: number;
  maxX: number;
  minY: number;
  maxY: number;
}

export function boundsOfRoute(route: RouteMessage): Bounds {
  const xs: number[] = [];
  const ys: number[] = [];
  for (const poly of [route.center, route.left, route.right]) {
    for (const [x, y] of poly) {
      xs.push(x);
      ys.push(y);
    }
  }
  return {
    minX: Math.min(...xs),
    maxX: Math.max(...xs),
    minY: Math.min(...ys),
    maxY: Math.max(...ys),
  };
}

/** Point reached by walking `s` along a polyline (clamped to its ends). */
export function pointAtArcLength(poly: readonly Point[], s: number): Point {
  if (poly.length === 0) throw new RangeError("empty polyline");
  if (s <= 0) return [...poly[0]] as Point;
  let remaining = s;
  for (let i = 1; i < poly.length; i++) {
    const [x0, y0] = poly[i - 1];
    const [x1, y1] = poly[i];
    const len = Math.hypot(x1 - x0, y1 - y0);
    if (remaining <= len && len > 0) {
      const f = remaining / len;
      return [x0 + f * (x1 - x0), y0 + f * (y1 - y0)];
    }
    remaining -= len;
  }
  return [...poly[poly.length - 1]] as Point;
}

/**
 * World -> canvas mapping: uniform scale fitting the bounds (plus margin)
 * into width x height, centered, with the y axis flipped so world "up" is
 * screen "up".
 */
export class ViewTransform {
  readonly scale: number;
  private readonly cx: number;
  private readonly cy: number;
  private readonly width: number;
  private readonly height: number;

  constructor(bounds: Bounds, width: number, height: number, margin = 20) {
    const spanX = Math.max(bounds.maxX - bounds.minX, 1e-6);
    const spanY = Math.max(bounds.maxY - bounds.minY, 1e-6);
    const usableW = Math.max(width - 2 * margin, 1);
    const usableH = Math.max(height - 2 * margin, 1);
    this.scale = Math.min(usableW / spanX, usableH / spanY);
    this.cx = (bounds.minX + bounds.maxX) / 2;
    this.cy = (bounds.minY + bounds.maxY) / 2;
    this.width = width;
    this.height = height;
  }

  toCanvas([x, y]: Point): Point {
    return [
      this.width / 2 + (x - this.cx) * this.scale,
      this.height / 2 - (y - this.cy) * this.scale,
    ];
  }
}

export interface TrailPoint {
  x: number;
  y: number;
  /** Dominant preference index at this step. */
  dominant: number;
}

export interface TrailSegment {
  dominant: number;
  points: Point[];
}

/**
 * Split the trail into constant-color segments. A switch at step i colors
 * the line arriving at point i with the new preference, so the on-screen
 * color changes exactly at the switch step; consecutive segments share the
 * boundary point to keep the line unbroken.
 */
export function buildTrailSegments(trail: readonly TrailPoint[]): TrailSegment[] {
  const segments: TrailSegment[] = [];
  for (const p of trail) {
    const last = segments[segments.length - 1];
    if (last !== undefined && last.dominant === p.dominant) {
      last.points.push([p.x, p.y]);
    } else {
      const boundary = last?.points[last.points.length - 1];
      segments.push({
        dominant: p.dominant,
        points: boundary ? [boundary, [p.x, p.y]] : [[p.x, p.y]],
      });
    }
  }
  return segments;
}

export interface EventGlyph {
  x: number;
  y: number;
  kind: "collision" | "invasion";
}

/** Map a frame's event names to glyphs at the frame's pose. */
export function eventGlyphs(events: readonly string[], x: number, y: number): EventGlyph[] {
  const out: EventGlyph[] = [];
  if (events.some((e) => e.startsWith("collision"))) out.push({ x, y, kind: "collision" });
  if (events.includes("lane_invasion")) out.push({ x, y, kind: "invasion" });
  return out;
}

export type DrawOp =
  | { kind: "polyline"; points: Point[]; color: string; width: number; dash?: number[] }
  | { kind: "marker"; shape: "start" | "goal" | "collision" | "invasion"; at: Point; color: string };

/**
 * Assemble the full draw plan in paint order: barriers, centerline,
 * start/goal markers, the preference-colored trail, then event glyphs.
 * With no frames yet the plan is route-only.
 */
export function renderPlan(
  route: RouteMessage,
  trail: readonly TrailPoint[],
  glyphs: readonly EventGlyph[],
  view: ViewTransform,
): DrawOp[] {
  const ops: DrawOp[] = [];
  for (const poly of [route.left, route.right]) {
    ops.push({
      kind: "polyline",
      points: poly.map((p) => view.toCanvas(p)),
      color: ROUTE_COLORS.barrier,
      width: 2,
    });
  }
  ops.push({
    kind: "polyline",
    points: route.center.map((p) => view.toCanvas(p)),
    color: ROUTE_COLORS.center,
    width: 1,
    dash: [6, 6],
  });
  ops.push({
    kind: "marker",
    shape: "start",
    at: view.toCanvas(route.center[0]),
    color: ROUTE_COLORS.start,
  });
  ops.push({
    kind: "marker",
    shape: "goal",
    at: view.toCanvas(pointAtArcLength(route.center, route.goal_s)),
    color: ROUTE_COLORS.goal,
  });
  for (const segment of buildTrailSegments(trail)) {
    if (segment.points.length < 2) continue;
    ops.push({
      kind: "polyline",
      points: segment.points.map((p) => view.toCanvas(p)),
      color: PREFERENCE_COLORS[PREFERENCE_NAMES[segment.dominant]],
      width: 3,
    });
  }
  for (const glyph of glyphs) {
    ops.push({
      kind: "marker",
      shape: glyph.kind,
      at: view.toCanvas([glyph.x, glyph.y]),
      color: glyph.kind === "collision" ? ROUTE_COLORS.collision : ROUTE_COLORS.invasion,
    });
  }
  return ops;
}
