// Paintable mask grid. Values live in [0, 1]; every tool clamps. The grid is
// what gets POSTed to /masks, so its numbers are the mask -- the canvas is
// only a view of it.

export interface MaskPayload {
  shape: { kind: "grid"; h: number; w: number };
  values: number[];
}

const clamp01 = (v: number) => Math.min(1, Math.max(0, v));

export class MaskGrid {
  readonly h: number;
  readonly w: number;
  readonly values: Float64Array;

  constructor(h: number, w: number, fill = 1.0) {
    if (h < 1 || w < 1) throw new RangeError(`grid must be at least 1x1, got ${h}x${w}`);
    this.h = h;
    this.w = w;
    this.values = new Float64Array(h * w).fill(clamp01(fill));
  }

  at(u: number, v: number): number {
    return this.values[u * this.w + v];
  }

  set(u: number, v: number, value: number): void {
    if (u < 0 || u >= this.h || v < 0 || v >= this.w) return;
    this.values[u * this.w + v] = clamp01(value);
  }

  fill(value: number): void {
    this.values.fill(clamp01(value));
  }

  /** Round brush: paints `value` inside the radius, softly feathered to the edge. */
  brush(cu: number, cv: number, radius: number, value: number, hardness = 1.0): void {
    const r = Math.max(0, radius);
    for (let u = Math.floor(cu - r); u <= Math.ceil(cu + r); u++) {
      for (let v = Math.floor(cv - r); v <= Math.ceil(cv + r); v++) {
        if (u < 0 || u >= this.h || v < 0 || v >= this.w) continue;
        const d = Math.hypot(u - cu, v - cv);
        if (d > r) continue;
        const weight = hardness >= 1 || r === 0 ? 1 : Math.min(1, (1 - d / r) / (1 - hardness));
        const idx = u * this.w + v;
        this.values[idx] = clamp01(this.values[idx] + weight * (value - this.values[idx]));
      }
    }
  }

  /** Half-open rectangle [u0, u1) x [v0, v1) set to a constant. */
  rect(u0: number, v0: number, u1: number, v1: number, value: number): void {
    for (let u = Math.max(0, u0); u < Math.min(this.h, u1); u++) {
      for (let v = Math.max(0, v0); v < Math.min(this.w, v1); v++) {
        this.values[u * this.w + v] = clamp01(value);
      }
    }
  }

  /** Linear fade along an axis: 1 at `from`, 0 at `to`, clamped outside. */
  fade(axis: "u" | "v", from: number, to: number): void {
    if (from === to) throw new RangeError("fade endpoints must differ");
    for (let u = 0; u < this.h; u++) {
      for (let v = 0; v < this.w; v++) {
        const coord = axis === "u" ? u : v;
        this.values[u * this.w + v] = clamp01((to - coord) / (to - from));
      }
    }
  }

  isUniformOne(): boolean {
    return this.values.every((v) => v === 1.0);
  }

  /**
   * Wire payload for POST /masks. Values are rounded through float32 first:
   * that is the stored field precision, so what we send is exactly what any
   * later round trip reproduces.
   */
  payload(): MaskPayload {
    const quantized = Array.from(this.values, (v) => Math.fround(v));
    return { shape: { kind: "grid", h: this.h, w: this.w }, values: quantized };
  }
}
