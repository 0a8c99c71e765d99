/**
 * Canvas executors for the trajectory draw plan and the metric strips.
 * They target a minimal 2D-context interface so tests can substitute a
 * recording stub for a real canvas.
 */

import type { DrawOp } from "./trajectory.js";

export interface Canvas2D {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  rect(x: number, y: number, w: number, h: number): void;
  stroke(): void;
  fill(): void;
  setLineDash(segments: number[]): void;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
}

const MARKER_RADIUS = 6;

function drawMarker(ctx: Canvas2D, op: Extract<DrawOp, { kind: "marker" }>): void {
  const [x, y] = op.at;
  const r = MARKER_RADIUS;
  ctx.beginPath();
  switch (op.shape) {
    case "start":
      ctx.moveTo(x - r, y - r);
      ctx.lineTo(x + r, y + r);
      ctx.moveTo(x - r, y + r);
      ctx.lineTo(x + r, y - r);
      ctx.strokeStyle = op.color;
      ctx.lineWidth = 2;
      ctx.stroke();
      break;
    case "goal":
      ctx.arc(x, y, r, 0, 2 * Math.PI);
      ctx.fillStyle = op.color;
      ctx.fill();
      ctx.strokeStyle = op.color;
      ctx.lineWidth = 1;
      ctx.stroke();
      break;
    case "collision":
      ctx.arc(x, y, r - 2, 0, 2 * Math.PI);
      ctx.fillStyle = op.color;
      ctx.fill();
      break;
    case "invasion":
      ctx.rect(x - 3, y - 3, 6, 6);
      ctx.strokeStyle = op.color;
      ctx.lineWidth = 1.5;
      ctx.stroke();
      break;
  }
}

export function drawPlan(ctx: Canvas2D, ops: readonly DrawOp[], width: number, height: number): void {
  ctx.clearRect(0, 0, width, height);
  for (const op of ops) {
    if (op.kind === "polyline") {
      if (op.points.length < 2) continue;
      ctx.beginPath();
      ctx.setLineDash(op.dash ?? []);
      ctx.moveTo(op.points[0][0], op.points[0][1]);
      for (let i = 1; i < op.points.length; i++) {
        ctx.lineTo(op.points[i][0], op.points[i][1]);
      }
      ctx.strokeStyle = op.color;
      ctx.lineWidth = op.width;
      ctx.stroke();
      ctx.setLineDash([]);
    } else {
      drawMarker(ctx, op);
    }
  }
}

/** Draw one strip as a polyline auto-scaled to its own value range. */
export function drawStrip(
  ctx: Canvas2D,
  values: readonly number[],
  width: number,
  height: number,
  color: string,
): void {
  ctx.clearRect(0, 0, width, height);
  if (values.length < 2) return;
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  const span = hi - lo || 1;
  const pad = 4;
  ctx.beginPath();
  ctx.setLineDash([]);
  values.forEach((v, i) => {
    const x = (i / (values.length - 1)) * (width - 2 * pad) + pad;
    const y = height - pad - ((v - lo) / span) * (height - 2 * pad);
    if (i === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  });
  ctx.strokeStyle = color;
  ctx.lineWidth = 1.5;
  ctx.stroke();
}
