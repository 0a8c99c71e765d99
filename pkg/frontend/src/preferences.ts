/**
 * Slider-panel state for the 4 preference weights.
 *
 * The displayed weights always form a simplex: non-negative and summing to
 * 1 after every interaction. Dragging one slider rescales the remaining
 * unlocked sliders proportionally (ratios preserved); locked sliders keep
 * their value exactly, so the dragged slider is clamped to the mass the
 * locks leave free.
 */

import { N_PREFS } from "./protocol.js";

export interface SliderState {
  /** Current weights, one per preference, in simplex order. */
  readonly weights: readonly number[];
  /** Lock flags; a locked slider is never changed by renormalization. */
  readonly locked: readonly boolean[];
  /** Index of the most recently dragged slider, if any. */
  readonly active: number | null;
}

export function initialSliderState(): SliderState {
  return {
    weights: Array(N_PREFS).fill(1 / N_PREFS),
    locked: Array(N_PREFS).fill(false),
    active: null,
  };
}

function checkIndex(id: number): void {
  if (!Number.isInteger(id) || id < 0 || id >= N_PREFS) {
    throw new RangeError(`slider id must be 0..${N_PREFS - 1}, got ${id}`);
  }
}

/**
 * Drag slider `id` to `value` and renormalize.
 *
 * The dragged value is clamped to [0, free] where `free` is the mass not
 * claimed by locked sliders. The other unlocked sliders share the rest
 * proportionally to their current weights (equally when they are all
 * zero). Dragging a locked slider is a no-op. Returns a new state; the
 * input is never mutated.
 */
export function setWeight(state: SliderState, id: number, value: number): SliderState {
  checkIndex(id);
  if (state.locked[id]) return state;
  if (!Number.isFinite(value)) {
    throw new RangeError(`slider value must be finite, got ${value}`);
  }

  const lockedSum = state.weights.reduce(
    (acc, w, i) => (state.locked[i] ? acc + w : acc),
    0,
  );
  const free = Math.max(0, 1 - lockedSum);
  const others = [...Array(N_PREFS).keys()].filter((i) => i !== id && !state.locked[i]);

  // With every other slider locked the dragged one has exactly one legal
  // value; otherwise clamp the drag into the unlocked mass.
  const v = others.length === 0 ? free : Math.min(Math.max(value, 0), free);
  const rest = free - v;
  const restCurrent = others.reduce((acc, i) => acc + state.weights[i], 0);

  const weights = [...state.weights];
  weights[id] = v;
  for (const i of others) {
    weights[i] = restCurrent > 0 ? (state.weights[i] / restCurrent) * rest : rest / others.length;
  }
  // Fold float residue (~1 ulp) into the largest other unlocked weight so
  // the sum is 1 while the dragged slider keeps exactly the value shown.
  const residual = 1 - weights.reduce((a, b) => a + b, 0);
  if (residual !== 0) {
    const absorber =
      others.length > 0
        ? others.reduce((best, i) => (weights[i] > weights[best] ? i : best), others[0])
        : id;
    weights[absorber] = Math.max(0, weights[absorber] + residual);
  }

  return { weights, locked: state.locked, active: id };
}

/** Lock or unlock a slider; weights are untouched (still a simplex). */
export function setLock(state: SliderState, id: number, locked: boolean): SliderState {
  checkIndex(id);
  if (state.locked[id] === locked) return state;
  const flags = [...state.locked];
  flags[id] = locked;
  return { weights: state.weights, locked: flags, active: state.active };
}

/** Replace the whole state from an external weight vector (e.g. a frame). */
export function withWeights(state: SliderState, weights: readonly number[]): SliderState {
  if (weights.length !== N_PREFS) {
    throw new RangeError(`expected ${N_PREFS} weights, got ${weights.length}`);
  }
  return { weights: [...weights], locked: state.locked, active: state.active };
}
