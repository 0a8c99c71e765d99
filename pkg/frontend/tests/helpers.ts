import type { FrameMessage, RouteMessage } from "../src/protocol.js";
import type { SocketLike } from "../src/client.js";

export function makeRoute(over: Partial<RouteMessage> = {}): RouteMessage {
  return {
    type: "route",
    episode: 1,
    scenario: 1,
    center: [[0, 0], [10, 0], [20, 0]],
    left: [[0, 2], [10, 2], [20, 2]],
    right: [[0, -2], [10, -2], [20, -2]],
    goal_s: 18,
    ...over,
  };
}

export function makeFrame(over: Partial<FrameMessage> = {}): FrameMessage {
  return {
    type: "frame",
    episode: 1,
    step: 1,
    pose: [0, 0, 0],
    v: 1,
    a_long: 0.5,
    a_lat: 0.2,
    jerk: [0.1, -0.1],
    steer: 0.05,
    throttle: 0.4,
    brake: 0,
    lambda: [0.25, 0.25, 0.25, 0.25],
    reward_vector: [1, 0, 0, 0, 0],
    events: [],
    termination: null,
    progress: 0.5,
    route_completion: 0.025,
    d_lat: 0.1,
    v_limit: 8.333,
    ...over,
  };
}

/** In-memory socket for driving the client without a server. */
export class FakeSocket implements SocketLike {
  sent: string[] = [];
  closed = false;
  onopen: (() => void) | null = null;
  onmessage: ((event: { data: unknown }) => void) | null = null;
  onclose: (() => void) | null = null;
  onerror: (() => void) | null = null;

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.closed = true;
    this.onclose?.();
  }

  /** Simulate the server accepting the connection. */
  open(): void {
    this.onopen?.();
  }

  /** Simulate an incoming server message. */
  receive(message: unknown): void {
    const data = typeof message === "string" ? message : JSON.stringify(message);
    this.onmessage?.({ data });
  }
}

/** Small deterministic generator for property-style loops. */
export function lcg(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (1664525 * state + 1013904223) >>> 0;
    return state / 2 ** 32;
  };
}
