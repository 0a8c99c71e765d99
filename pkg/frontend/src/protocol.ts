/**
 * Wire protocol spoken by the telemetry server.
 *
 * Server -> client: `route` (sent on connect and at every episode start),
 * `frame` (one per environment step), `error`. Client -> server (controller
 * role only): `set_preference`, `reset`. Everything is JSON text.
 */

export const PREFERENCE_NAMES = ["agg", "comfort", "speed", "eff"] as const;
export type PreferenceName = (typeof PREFERENCE_NAMES)[number];
export const N_PREFS = PREFERENCE_NAMES.length;

/** Reward vector components carried in every frame, core first. */
export const REWARD_NAMES = ["core", "agg", "comfort", "speed", "eff"] as const;

/** Server-side acceptance tolerance on an outgoing preference's sum. */
export const OUTGOING_SUM_TOL = 1e-6;
/** Frames round weights to 6 decimals, so incoming sums drift a little more. */
export const INCOMING_SUM_TOL = 1e-4;

export type Point = [number, number];

export interface RouteMessage {
  type: "route";
  episode: number;
  scenario: number;
  center: Point[];
  left: Point[];
  right: Point[];
  goal_s: number;
}

export interface FrameMessage {
  type: "frame";
  episode: number;
  step: number;
  /** [x, y, heading] */
  pose: [number, number, number];
  v: number;
  a_long: number;
  a_lat: number;
  /** [longitudinal, lateral] */
  jerk: [number, number];
  steer: number;
  throttle: number;
  brake: number;
  lambda: [number, number, number, number];
  reward_vector: [number, number, number, number, number];
  events: string[];
  termination: string | null;
  progress: number;
  route_completion: number;
  d_lat: number;
  v_limit: number;
}

export interface ErrorMessage {
  type: "error";
  reason: string;
}

export type ServerMessage = RouteMessage | FrameMessage | ErrorMessage;

export interface SetPreferenceCommand {
  type: "set_preference";
  lambda: number[];
}

export interface ResetCommand {
  type: "reset";
  scenario?: number;
}

export type ClientCommand = SetPreferenceCommand | ResetCommand;

export class ProtocolError extends Error {
  override name = "ProtocolError";
}

function isFiniteNumber(x: unknown): x is number {
  return typeof x === "number" && Number.isFinite(x);
}

function isNumberArray(x: unknown, length?: number): x is number[] {
  return (
    Array.isArray(x) &&
    (length === undefined || x.length === length) &&
    x.every(isFiniteNumber)
  );
}

function isPointList(x: unknown): x is Point[] {
  return Array.isArray(x) && x.every((p) => isNumberArray(p, 2));
}

/**
 * True when `lambda` is a valid preference vector: 4 finite weights in
 * [0, 1] summing to 1 within `sumTol`.
 */
export function isSimplex(lambda: unknown, sumTol = OUTGOING_SUM_TOL): lambda is number[] {
  if (!isNumberArray(lambda, N_PREFS)) return false;
  const eps = 1e-9;
  if (lambda.some((w) => w < -eps || w > 1 + eps)) return false;
  const sum = lambda.reduce((a, b) => a + b, 0);
  return Math.abs(sum - 1) <= sumTol;
}

function checkRoute(raw: Record<string, unknown>): RouteMessage {
  if (!isFiniteNumber(raw.episode) || !isFiniteNumber(raw.scenario)) {
    throw new ProtocolError("route: episode and scenario must be numbers");
  }
  for (const key of ["center", "left", "right"] as const) {
    if (!isPointList(raw[key]) || (raw[key] as Point[]).length < 2) {
      throw new ProtocolError(`route: ${key} must be a polyline of [x, y] points`);
    }
  }
  if (!isFiniteNumber(raw.goal_s)) {
    throw new ProtocolError("route: goal_s must be a number");
  }
  return raw as unknown as RouteMessage;
}

const FRAME_SCALARS = [
  "episode", "step", "v", "a_long", "a_lat", "steer", "throttle", "brake",
  "progress", "route_completion", "d_lat", "v_limit",
] as const;

function checkFrame(raw: Record<string, unknown>): FrameMessage {
  for (const key of FRAME_SCALARS) {
    if (!isFiniteNumber(raw[key])) {
      throw new ProtocolError(`frame: ${key} must be a finite number`);
    }
  }
  if (!isNumberArray(raw.pose, 3)) {
    throw new ProtocolError("frame: pose must be [x, y, heading]");
  }
  if (!isNumberArray(raw.jerk, 2)) {
    throw new ProtocolError("frame: jerk must be [longitudinal, lateral]");
  }
  if (!isSimplex(raw.lambda, INCOMING_SUM_TOL)) {
    throw new ProtocolError("frame: lambda must be a 4-weight simplex vector");
  }
  if (!isNumberArray(raw.reward_vector, REWARD_NAMES.length)) {
    throw new ProtocolError("frame: reward_vector must have 5 components");
  }
  if (!Array.isArray(raw.events) || raw.events.some((e) => typeof e !== "string")) {
    throw new ProtocolError("frame: events must be a list of strings");
  }
  if (raw.termination !== null && typeof raw.termination !== "string") {
    throw new ProtocolError("frame: termination must be a string or null");
  }
  return raw as unknown as FrameMessage;
}

function checkError(raw: Record<string, unknown>): ErrorMessage {
  if (typeof raw.reason !== "string") {
    throw new ProtocolError("error: reason must be a string");
  }
  return raw as unknown as ErrorMessage;
}

/**
 * Parse and schema-validate one server message. Throws ProtocolError on
 * malformed input; the caller decides whether to surface or drop it.
 */
export function parseServerMessage(text: string): ServerMessage {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    throw new ProtocolError("not valid JSON");
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new ProtocolError("message must be a JSON object");
  }
  const obj = raw as Record<string, unknown>;
  switch (obj.type) {
    case "route":
      return checkRoute(obj);
    case "frame":
      return checkFrame(obj);
    case "error":
      return checkError(obj);
    default:
      throw new ProtocolError(`unknown message type: ${String(obj.type)}`);
  }
}

/** Build a set_preference command, refusing weights off the simplex. */
export function setPreferenceCommand(lambda: number[]): SetPreferenceCommand {
  if (!isSimplex(lambda)) {
    throw new ProtocolError("preference weights must be 4 values in [0, 1] summing to 1");
  }
  return { type: "set_preference", lambda: [...lambda] };
}

export function resetCommand(scenario?: number): ResetCommand {
  if (scenario !== undefined) {
    if (!Number.isInteger(scenario) || scenario < 1 || scenario > 7) {
      throw new ProtocolError("scenario must be an integer in 1..7");
    }
    return { type: "reset", scenario };
  }
  return { type: "reset" };
}
