// Run spec documents as the service accepts them. Everything the UI submits
// goes through these builders, so any UI state is expressible as a plain
// document a CLI user could write by hand.

import { TemporalParams } from "./gsf.js";

export type MaskRef =
  | "uniform"
  | { id: string }
  | { builder: Record<string, unknown> };

export interface TermDoc {
  condition: string;
  temporal: { kind: string; m?: number; a?: number; knots?: [number, number][] };
  mask?: MaskRef;
}

export interface SamplerDoc {
  kind?: "ddpm" | "ddim";
  eta?: number;
  steps: number;
  seed: number;
  beta_min?: number;
  beta_max?: number;
}

export interface OutputsDoc {
  samples: number;
  record_trajectory?: boolean;
  emit?: string[];
}

export interface RunSpecDoc {
  model: string;
  terms: TermDoc[];
  sampler: SamplerDoc;
  outputs: OutputsDoc;
}

export function temporalDoc(p: TemporalParams): TermDoc["temporal"] {
  switch (p.kind) {
    case "constant":
      return { kind: "constant", m: p.m };
    case "ramp_up":
      return { kind: "ramp_up", m: p.m, a: p.a };
    case "ramp_down":
      return { kind: "ramp_down", m: p.m };
    case "piecewise":
      return { kind: "piecewise", knots: p.knots ?? [] };
  }
}

export interface TermState {
  condition: string;
  temporal: TemporalParams;
  mask: MaskRef;
}

export function buildRunSpec(
  model: string,
  terms: TermState[],
  sampler: SamplerDoc,
  outputs: OutputsDoc,
): RunSpecDoc {
  return {
    model,
    terms: terms.map((t) => ({
      condition: t.condition,
      temporal: temporalDoc(t.temporal),
      mask: t.mask,
    })),
    sampler,
    outputs,
  };
}

/** Stable JSON used as the client-side cache key for submitted documents. */
export function cacheKey(doc: unknown): string {
  const canon = (v: unknown): unknown => {
    if (Array.isArray(v)) return v.map(canon);
    if (v && typeof v === "object") {
      const entries = Object.entries(v as Record<string, unknown>)
        .filter(([, val]) => val !== undefined)
        .sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0));
      return Object.fromEntries(entries.map(([k, val]) => [k, canon(val)]));
    }
    return v;
  };
  return JSON.stringify(canon(doc));
}
