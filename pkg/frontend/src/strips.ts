/**
 * Rolling metric strips: velocity, |acceleration|, jerk magnitude,
 * steering, and throttle, each kept raw and exponentially smoothed so the
 * display can toggle between the two.
 */

import type { FrameMessage } from "./protocol.js";
import { DEFAULT_BETA, ExponentialSmoother } from "./smoothing.js";

export const STRIP_METRICS = [
  "velocity",
  "acceleration",
  "jerk",
  "steering",
  "throttle",
] as const;
export type StripMetric = (typeof STRIP_METRICS)[number];

/** Extract one sample per strip from a telemetry frame. */
export function stripSample(frame: FrameMessage): Record<StripMetric, number> {
  return {
    velocity: frame.v,
    acceleration: Math.hypot(frame.a_long, frame.a_lat),
    jerk: Math.hypot(frame.jerk[0], frame.jerk[1]),
    steering: frame.steer,
    throttle: frame.throttle,
  };
}

export interface StripPoint {
  /** Monotone sample index; keeps the x-axis advancing across episodes. */
  t: number;
  /** Step within the episode the sample came from (label only). */
  step: number;
  raw: number;
  smoothed: number;
}

export class MetricStrip {
  readonly metric: StripMetric;
  readonly capacity: number;
  smoothingEnabled = true;
  private readonly smoother: ExponentialSmoother;
  private readonly buffer: StripPoint[] = [];
  private counter = 0;

  constructor(metric: StripMetric, opts: { beta?: number; capacity?: number } = {}) {
    const capacity = opts.capacity ?? 600;
    if (!Number.isInteger(capacity) || capacity < 1) {
      throw new RangeError(`capacity must be a positive integer, got ${capacity}`);
    }
    this.metric = metric;
    this.capacity = capacity;
    this.smoother = new ExponentialSmoother(opts.beta ?? DEFAULT_BETA);
  }

  get beta(): number {
    return this.smoother.beta;
  }

  push(raw: number, step: number): StripPoint {
    const point: StripPoint = {
      t: this.counter++,
      step,
      raw,
      smoothed: this.smoother.push(raw),
    };
    this.buffer.push(point);
    if (this.buffer.length > this.capacity) this.buffer.shift();
    return point;
  }

  get points(): readonly StripPoint[] {
    return this.buffer;
  }

  /** Values to draw, honoring the smoothing toggle. */
  displayed(): number[] {
    return this.buffer.map((p) => (this.smoothingEnabled ? p.smoothed : p.raw));
  }
}

export class StripSet {
  readonly strips: Record<StripMetric, MetricStrip>;

  constructor(opts: { beta?: number; capacity?: number } = {}) {
    this.strips = Object.fromEntries(
      STRIP_METRICS.map((m) => [m, new MetricStrip(m, opts)]),
    ) as Record<StripMetric, MetricStrip>;
  }

  pushFrame(frame: FrameMessage): void {
    const sample = stripSample(frame);
    for (const metric of STRIP_METRICS) {
      this.strips[metric].push(sample[metric], frame.step);
    }
  }
}
