// Walk scrubber: builds the cell documents for an interpolation or magnitude
// walk once, submits them through the caching client, and lets the slider
// revisit cells without any recomputation or re-POST.

import { ApiClient, JobRecord } from "./api.js";
import { RunSpecDoc, TermState, buildRunSpec } from "./runspec.js";
import { TemporalParams } from "./gsf.js";

export interface WalkCell {
  label: string;
  doc: RunSpecDoc;
  runId?: string;
  record?: JobRecord;
  error?: string;
}

export interface InterpolationPlan {
  conditionA: string;
  conditionB: string;
  m: number;
  lambdas: number[];
  temporal: TemporalParams; // magnitude comes from the split
}

export function interpolationCells(
  model: string,
  baseTerms: TermState[],
  sampler: RunSpecDoc["sampler"],
  outputs: RunSpecDoc["outputs"],
  plan: InterpolationPlan,
): WalkCell[] {
  return plan.lambdas.map((lam) => {
    if (lam < 0 || lam > 1) throw new RangeError(`lambda must be in [0, 1], got ${lam}`);
    const termA: TermState = {
      condition: plan.conditionA,
      temporal: { ...plan.temporal, m: plan.m * (1 - lam) },
      mask: "uniform",
    };
    const termB: TermState = {
      condition: plan.conditionB,
      temporal: { ...plan.temporal, m: plan.m * lam },
      mask: "uniform",
    };
    return {
      label: `lambda=${lam}`,
      doc: buildRunSpec(model, [...baseTerms, termA, termB], sampler, outputs),
    };
  });
}

export function magnitudeCells(
  model: string,
  baseTerms: TermState[],
  termIndex: number,
  magnitudes: number[],
  sampler: RunSpecDoc["sampler"],
  outputs: RunSpecDoc["outputs"],
): WalkCell[] {
  if (termIndex < 0 || termIndex >= baseTerms.length) {
    throw new RangeError(`walk references term ${termIndex} of ${baseTerms.length}`);
  }
  return magnitudes.map((m) => {
    const terms = baseTerms.map((t, i) =>
      i === termIndex ? { ...t, temporal: { ...t.temporal, m } } : t,
    );
    return { label: `m=${m}`, doc: buildRunSpec(model, terms, sampler, outputs) };
  });
}

export class WalkScrubber {
  private cells: WalkCell[] = [];
  private position = 0;

  constructor(private readonly api: ApiClient) {}

  get cellCount(): number {
    return this.cells.length;
  }

  get current(): WalkCell | undefined {
    return this.cells[this.position];
  }

  /** Submit every cell once; failures are kept per cell, not thrown. */
  async load(cells: WalkCell[]): Promise<void> {
    this.cells = cells;
    this.position = 0;
    for (const cell of this.cells) {
      try {
        cell.runId = await this.api.submitRun(cell.doc);
      } catch (err) {
        cell.error = String(err);
      }
    }
  }

  async waitAll(pollMs = 1000): Promise<void> {
    for (const cell of this.cells) {
      if (!cell.runId) continue;
      cell.record = await this.api.waitForRun(cell.runId, pollMs);
      if (cell.record.state === "failed") {
        cell.error = cell.record.error ?? "run failed";
      }
    }
  }

  /**
   * Move the slider. Revisiting a cell is a pure lookup: the run id was
   * cached at load time, so no new POST is ever issued here.
   */
  scrubTo(index: number): WalkCell {
    if (index < 0 || index >= this.cells.length) {
      throw new RangeError(`cell ${index} of ${this.cells.length}`);
    }
    this.position = index;
    return this.cells[index];
  }
}
