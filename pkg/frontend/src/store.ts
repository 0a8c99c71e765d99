/**
 * Single state store for the dashboard: every incoming message and user
 * event funnels through here, keeping rendering a pure function of state.
 *
 * Frames are applied in step order and application is idempotent: a frame
 * at or behind the last applied (episode, step) changes nothing. A route
 * message starts a new episode and clears the trail; metric strips keep
 * running across episodes on a monotone sample axis.
 */

import type { FrameMessage, RouteMessage, ServerMessage } from "./protocol.js";
import { StripSet } from "./strips.js";
import {
  dominantPreference,
  eventGlyphs,
  type EventGlyph,
  type TrailPoint,
} from "./trajectory.js";

export class DashboardStore {
  route: RouteMessage | null = null;
  episode = 0;
  lastStep = 0;
  trail: TrailPoint[] = [];
  glyphs: EventGlyph[] = [];
  readonly strips: StripSet;
  /** Latest preference weights reported by the stream. */
  lambda: number[] | null = null;
  lastFrame: FrameMessage | null = null;
  lastError: string | null = null;
  framesApplied = 0;

  constructor(opts: { beta?: number; capacity?: number } = {}) {
    this.strips = new StripSet(opts);
  }

  /** Apply one validated server message; returns true if state changed. */
  apply(message: ServerMessage): boolean {
    switch (message.type) {
      case "route":
        return this.applyRoute(message);
      case "frame":
        return this.applyFrame(message);
      case "error":
        this.lastError = message.reason;
        return true;
    }
  }

  private applyRoute(message: RouteMessage): boolean {
    if (message.episode < this.episode) return false;
    this.route = message;
    this.episode = message.episode;
    this.lastStep = 0;
    this.trail = [];
    this.glyphs = [];
    return true;
  }

  private applyFrame(frame: FrameMessage): boolean {
    if (frame.episode < this.episode) return false;
    if (frame.episode > this.episode) {
      // Missed the route announcement (late join); resync to the stream.
      this.episode = frame.episode;
      this.lastStep = 0;
      this.trail = [];
      this.glyphs = [];
    } else if (frame.step <= this.lastStep) {
      return false;
    }
    this.lastStep = frame.step;
    const [x, y] = frame.pose;
    this.trail.push({ x, y, dominant: dominantPreference(frame.lambda) });
    this.glyphs.push(...eventGlyphs(frame.events, x, y));
    this.strips.pushFrame(frame);
    this.lambda = [...frame.lambda];
    this.lastFrame = frame;
    this.framesApplied++;
    return true;
  }
}
