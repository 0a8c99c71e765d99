/**
 * Dashboard entry point: wires the state store, the slider panel, and the
 * canvases to a SteerClient. All state changes flow through one store and
 * rendering happens on animation frames, so the page stays a single-
 * threaded event loop over incoming frames and user events.
 */

import { SteerClient, type Role } from "./client.js";
import {
  initialSliderState,
  setLock,
  setWeight,
  withWeights,
  type SliderState,
} from "./preferences.js";
import { PREFERENCE_NAMES } from "./protocol.js";
import { drawPlan, drawStrip, type Canvas2D } from "./render.js";
import { DashboardStore } from "./store.js";
import { STRIP_METRICS, type StripMetric } from "./strips.js";
import {
  boundsOfRoute,
  renderPlan,
  PREFERENCE_COLORS,
  ViewTransform,
} from "./trajectory.js";

const SLIDER_SCALE = 1000;

const STRIP_LABELS: Record<StripMetric, string> = {
  velocity: "velocity [m/s]",
  acceleration: "|acceleration| [m/s²]",
  jerk: "|jerk| [m/s³]",
  steering: "steering",
  throttle: "throttle",
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function main(): void {
  const params = new URLSearchParams(window.location.search);
  const server = params.get("server") ?? "ws://127.0.0.1:8765";
  const role = (params.get("role") === "viewer" ? "viewer" : "controller") as Role;

  const store = new DashboardStore();
  let sliders: SliderState = initialSliderState();
  let followStream = true; // mirror stream weights until the user interacts

  const client = new SteerClient(server, { role });

  // -- header ---------------------------------------------------------------
  const header = el("header");
  const title = el("h1", "", "preference steering");
  const roleBadge = el("span", "badge", role);
  const statusBadge = el("span", "badge", "idle");
  const queuedBadge = el("span", "badge queued", "change queued");
  queuedBadge.style.display = "none";
  const episodeLabel = el("span", "meta", "");
  header.append(title, roleBadge, statusBadge, queuedBadge, episodeLabel);

  // -- slider panel -----------------------------------------------------------
  const panel = el("section", "sliders");
  const rows = PREFERENCE_NAMES.map((name, id) => {
    const row = el("div", "slider-row");
    const label = el("label", "name", name);
    label.style.color = PREFERENCE_COLORS[name];
    const range = el("input") as HTMLInputElement;
    range.type = "range";
    range.min = "0";
    range.max = String(SLIDER_SCALE);
    range.step = "1";
    const value = el("span", "value", "0.250");
    const lock = el("input") as HTMLInputElement;
    lock.type = "checkbox";
    lock.title = "lock";
    row.append(label, range, value, lock);
    panel.append(row);

    range.addEventListener("input", () => {
      followStream = false;
      sliders = setWeight(sliders, id, Number(range.value) / SLIDER_SCALE);
      refreshSliders();
      client.setPreference([...sliders.weights]);
      refreshHeader();
    });
    range.addEventListener("change", () => client.flushPreference());
    lock.addEventListener("change", () => {
      sliders = setLock(sliders, id, lock.checked);
      refreshSliders();
    });
    return { range, value, lock };
  });

  function refreshSliders(): void {
    rows.forEach((row, id) => {
      row.range.value = String(Math.round(sliders.weights[id] * SLIDER_SCALE));
      row.range.disabled = sliders.locked[id];
      row.value.textContent = sliders.weights[id].toFixed(3);
      row.lock.checked = sliders.locked[id];
    });
  }

  const resetRow = el("div", "reset-row");
  const scenarioSelect = el("select") as HTMLSelectElement;
  for (let s = 1; s <= 7; s++) {
    const option = el("option", "", `scenario ${s}`) as HTMLOptionElement;
    option.value = String(s);
    scenarioSelect.append(option);
  }
  const resetButton = el("button", "", "reset episode") as HTMLButtonElement;
  resetButton.addEventListener("click", () => {
    try {
      client.reset(Number(scenarioSelect.value));
    } catch {
      /* disconnected; the status badge already says so */
    }
  });
  resetRow.append(scenarioSelect, resetButton);
  panel.append(resetRow);

  // -- canvases ---------------------------------------------------------------
  const mapCanvas = el("canvas") as HTMLCanvasElement;
  mapCanvas.width = 640;
  mapCanvas.height = 640;
  const stripsBox = el("section", "strips");
  const smoothToggle = el("input") as HTMLInputElement;
  smoothToggle.type = "checkbox";
  smoothToggle.checked = true;
  const toggleLabel = el("label", "toggle", " smoothing (β = 0.6)");
  toggleLabel.prepend(smoothToggle);
  stripsBox.append(toggleLabel);
  smoothToggle.addEventListener("change", () => {
    for (const metric of STRIP_METRICS) {
      store.strips.strips[metric].smoothingEnabled = smoothToggle.checked;
    }
  });
  const stripCanvases = STRIP_METRICS.map((metric) => {
    const wrap = el("div", "strip");
    wrap.append(el("span", "strip-label", STRIP_LABELS[metric]));
    const canvas = el("canvas") as HTMLCanvasElement;
    canvas.width = 640;
    canvas.height = 70;
    wrap.append(canvas);
    stripsBox.append(wrap);
    return { metric, canvas };
  });

  document.body.append(header, panel, mapCanvas, stripsBox);

  // -- client wiring ------------------------------------------------------------
  client.onStatus = (status) => {
    statusBadge.textContent = status;
    refreshHeader();
  };
  client.onMessage = (message) => {
    store.apply(message);
    if (message.type === "frame" && followStream) {
      sliders = withWeights(sliders, message.lambda);
      refreshSliders();
    }
    refreshHeader();
  };

  function refreshHeader(): void {
    queuedBadge.style.display =
      client.queuedPreference !== null && !client.connected ? "" : "none";
    if (store.route !== null) {
      episodeLabel.textContent =
        `scenario ${store.route.scenario} · episode ${store.episode}` +
        ` · step ${store.lastStep}` +
        (store.lastError !== null ? ` · server: ${store.lastError}` : "");
    }
  }

  // -- render loop --------------------------------------------------------------
  const mapCtx = mapCanvas.getContext("2d") as unknown as Canvas2D;
  function paint(): void {
    if (store.route !== null && mapCtx) {
      const view = new ViewTransform(
        boundsOfRoute(store.route),
        mapCanvas.width,
        mapCanvas.height,
      );
      drawPlan(
        mapCtx,
        renderPlan(store.route, store.trail, store.glyphs, view),
        mapCanvas.width,
        mapCanvas.height,
      );
    }
    for (const { metric, canvas } of stripCanvases) {
      const ctx = canvas.getContext("2d") as unknown as Canvas2D;
      if (ctx) {
        drawStrip(ctx, store.strips.strips[metric].displayed(),
                  canvas.width, canvas.height, "#1f77b4");
      }
    }
    window.requestAnimationFrame(paint);
  }

  refreshSliders();
  client.connect();
  window.requestAnimationFrame(paint);
}

main();
