import { describe, expect, it } from "vitest";

import { MaskGrid } from "../src/mask.js";

describe("mask painter grid", () => {
  it("full-canvas fill at 1.0 is the uniform mask", () => {
    const grid = new MaskGrid(8, 8, 0.3);
    grid.fill(1.0);
    expect(grid.isUniformOne()).toBe(true);
  });

  it("left-to-right fade matches the server linear_fade builder", () => {
    // column values on a width-5 grid fading from col 0 to col 4
    const grid = new MaskGrid(3, 5);
    grid.fade("v", 0, 4);
    for (let u = 0; u < 3; u++) {
      expect([0, 1, 2, 3, 4].map((v) => grid.at(u, v))).toEqual([1, 0.75, 0.5, 0.25, 0]);
    }
  });

  it("eraser to all-zero leaves no weight anywhere", () => {
    const grid = new MaskGrid(4, 4, 1.0);
    grid.fill(0.0);
    expect(Array.from(grid.values).every((v) => v === 0)).toBe(true);
  });

  it("rect tool writes a half-open box and clamps at edges", () => {
    const grid = new MaskGrid(4, 4, 0.0);
    grid.rect(1, 1, 3, 6, 1.0);
    expect(grid.at(0, 0)).toBe(0);
    expect(grid.at(1, 1)).toBe(1);
    expect(grid.at(2, 3)).toBe(1);
    expect(grid.at(3, 3)).toBe(0);
  });

  it("brush stays inside the grid and clamps values into [0, 1]", () => {
    const grid = new MaskGrid(6, 6, 0.0);
    grid.brush(0, 0, 2.5, 5.0);
    expect(Math.max(...grid.values)).toBeLessThanOrEqual(1.0);
    expect(grid.at(0, 0)).toBe(1.0);
    expect(grid.at(5, 5)).toBe(0.0);
  });

  it("payload quantizes through float32 so the wire value is the stored value", () => {
    const grid = new MaskGrid(1, 2, 0.0);
    grid.set(0, 0, 0.1); // 0.1 is not exactly representable in float32
    const payload = grid.payload();
    expect(payload.shape).toEqual({ kind: "grid", h: 1, w: 2 });
    expect(payload.values[0]).toBe(Math.fround(0.1));
    expect(payload.values[1]).toBe(0);
    expect(payload.values.every((v) => v >= 0 && v <= 1)).toBe(true);
  });
});
