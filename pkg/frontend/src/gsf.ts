// Client-side preview of the guidance scale profiles. These mirror the
// server formulas exactly so the editor plot is trustworthy, but the server
// remains authoritative: submitted runs only ever carry the parameters.

export type TemporalKind = "constant" | "ramp_up" | "ramp_down" | "piecewise";

export interface TemporalParams {
  kind: TemporalKind;
  m: number;
  a: number;
  knots?: [number, number][]; // strictly decreasing t
}

export function temporalValue(p: TemporalParams, t: number): number {
  if (t < 0 || t > 1) throw new RangeError(`t must be in [0, 1], got ${t}`);
  switch (p.kind) {
    case "constant":
      return p.m;
    case "ramp_up":
      return Math.max(0, (p.m / p.a) * (p.a - t));
    case "ramp_down":
      return p.m * t;
    case "piecewise": {
      const knots = p.knots ?? [];
      if (knots.length === 0) throw new Error("piecewise profile needs knots");
      // knots arrive with decreasing t; clamp outside their range
      const first = knots[0];
      const last = knots[knots.length - 1];
      if (t >= first[0]) return first[1];
      if (t <= last[0]) return last[1];
      for (let i = 0; i < knots.length - 1; i++) {
        const [t1, s1] = knots[i];
        const [t0, s0] = knots[i + 1];
        if (t <= t1 && t >= t0) {
          const w = (t - t0) / (t1 - t0);
          return s0 + w * (s1 - s0);
        }
      }
      return last[1];
    }
  }
}

/** Samples for the editor plot: `count` evenly spaced t values on [0, 1]. */
export function profileSamples(p: TemporalParams, count = 101): [number, number][] {
  const out: [number, number][] = [];
  for (let i = 0; i < count; i++) {
    const t = i / (count - 1);
    out.push([t, temporalValue(p, t)]);
  }
  return out;
}

export interface ClampResult {
  value: number;
  clamped: boolean;
}

/** Editor inputs are clamped into range with a visible indication. */
export function clampParam(raw: number, lo: number, hi: number): ClampResult {
  if (Number.isNaN(raw)) return { value: lo, clamped: true };
  if (raw < lo) return { value: lo, clamped: true };
  if (raw > hi) return { value: hi, clamped: true };
  return { value: raw, clamped: false };
}
