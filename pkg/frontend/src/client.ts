/**
 * WebSocket client for the telemetry stream.
 *
 * Slider interactions are debounced so one settled interaction emits
 * exactly one set_preference message (the last value wins). While
 * disconnected the change is queued locally and flagged; it is delivered
 * as soon as the socket opens. The socket implementation is injectable so
 * tests can drive the client without a browser.
 */

import {
  parseServerMessage,
  resetCommand,
  setPreferenceCommand,
  type ProtocolError,
  type ServerMessage,
} from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((event: { data: unknown }) => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export type ClientStatus = "idle" | "connecting" | "open" | "closed";
export type Role = "controller" | "viewer";

export interface ClientOptions {
  role?: Role;
  /** Debounce window for slider changes; 0 sends synchronously. */
  debounceMs?: number;
  socketFactory?: SocketFactory;
}

function defaultFactory(url: string): SocketLike {
  const ctor = (globalThis as { WebSocket?: new (url: string) => unknown }).WebSocket;
  if (ctor === undefined) {
    throw new Error("no WebSocket implementation available; pass socketFactory");
  }
  return new ctor(url) as SocketLike;
}

export class SteerClient {
  readonly url: string;
  readonly role: Role;
  readonly debounceMs: number;

  onMessage: ((message: ServerMessage) => void) | null = null;
  onStatus: ((status: ClientStatus) => void) | null = null;
  /** Called when an incoming message fails schema validation. */
  onBadMessage: ((error: ProtocolError) => void) | null = null;

  /** Messages actually written to the socket, for interaction accounting. */
  sentCount = 0;

  private readonly factory: SocketFactory;
  private socket: SocketLike | null = null;
  private statusValue: ClientStatus = "idle";
  private timer: ReturnType<typeof setTimeout> | null = null;
  private pendingLambda: number[] | null = null;

  constructor(serverUrl: string, opts: ClientOptions = {}) {
    this.role = opts.role ?? "controller";
    this.url = `${serverUrl.replace(/\/+$/, "")}/ws?role=${this.role}`;
    this.debounceMs = opts.debounceMs ?? 150;
    this.factory = opts.socketFactory ?? defaultFactory;
  }

  get status(): ClientStatus {
    return this.statusValue;
  }

  get connected(): boolean {
    return this.statusValue === "open";
  }

  /** The change waiting to be sent (debouncing or disconnected), if any. */
  get queuedPreference(): number[] | null {
    return this.pendingLambda === null ? null : [...this.pendingLambda];
  }

  connect(): void {
    if (this.socket !== null) return;
    const socket = this.factory(this.url);
    this.socket = socket;
    this.setStatus("connecting");
    socket.onopen = () => {
      this.setStatus("open");
      // Deliver the change that was queued while disconnected.
      if (this.pendingLambda !== null && this.timer === null) this.sendPending();
    };
    socket.onmessage = (event) => {
      let message: ServerMessage;
      try {
        message = parseServerMessage(String(event.data));
      } catch (error) {
        this.onBadMessage?.(error as ProtocolError);
        return;
      }
      this.onMessage?.(message);
    };
    socket.onclose = () => {
      this.socket = null;
      this.setStatus("closed");
    };
    socket.onerror = () => {
      // The close handler does the bookkeeping; nothing extra to do.
    };
  }

  close(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    this.socket?.close();
    this.socket = null;
    this.setStatus("closed");
  }

  /**
   * Record a slider interaction. Throws if the weights are off the
   * simplex; otherwise (re)starts the debounce window. Only the last
   * value of a burst is sent.
   */
  setPreference(lambda: number[]): void {
    // Validate eagerly so an invalid vector can never be queued.
    this.pendingLambda = setPreferenceCommand(lambda).lambda;
    if (this.timer !== null) clearTimeout(this.timer);
    if (this.debounceMs === 0) {
      this.timer = null;
      this.sendPending();
      return;
    }
    this.timer = setTimeout(() => {
      this.timer = null;
      this.sendPending();
    }, this.debounceMs);
  }

  /** Settle a pending slider interaction immediately (e.g. pointer-up). */
  flushPreference(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    this.sendPending();
  }

  /** Ask the server to restart the episode; requires an open socket. */
  reset(scenario?: number): void {
    if (this.socket === null || !this.connected) {
      throw new Error("not connected");
    }
    this.socket.send(JSON.stringify(resetCommand(scenario)));
    this.sentCount++;
  }

  private sendPending(): void {
    if (this.pendingLambda === null) return;
    if (this.socket === null || !this.connected) return; // stays queued
    this.socket.send(JSON.stringify(setPreferenceCommand(this.pendingLambda)));
    this.sentCount++;
    this.pendingLambda = null;
  }

  private setStatus(status: ClientStatus): void {
    if (status === this.statusValue) return;
    this.statusValue = status;
    this.onStatus?.(status);
  }
}
