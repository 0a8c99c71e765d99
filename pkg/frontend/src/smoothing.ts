/**
 * Exponential smoothing used by the metric strips:
 * s_0 = x_0, then s_t = beta * x_t + (1 - beta) * s_{t-1}.
 */

export const DEFAULT_BETA = 0.6;

function checkBeta(beta: number): void {
  if (!(beta > 0 && beta <= 1)) {
    throw new RangeError(`beta must be in (0, 1], got ${beta}`);
  }
}

export class ExponentialSmoother {
  readonly beta: number;
  private state: number | null = null;

  constructor(beta: number = DEFAULT_BETA) {
    checkBeta(beta);
    this.beta = beta;
  }

  /** Feed one sample and return the smoothed value. */
  push(x: number): number {
    this.state = this.state === null ? x : this.beta * x + (1 - this.beta) * this.state;
    return this.state;
  }

  get value(): number | null {
    return this.state;
  }

  reset(): void {
    this.state = null;
  }
}

/** Smooth a whole series at once; empty input gives an empty output. */
export function smoothSeries(xs: readonly number[], beta: number = DEFAULT_BETA): number[] {
  checkBeta(beta);
  const out: number[] = [];
  let s = 0;
  xs.forEach((x, i) => {
    s = i === 0 ? x : beta * x + (1 - beta) * s;
    out.push(s);
  });
  return out;
}
