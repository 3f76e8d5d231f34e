// Studio wiring: model picker, per-term GSF editors, mask painter, sampling
// with 1 Hz job polling, and the walk scrubber. Every pixel on screen comes
// from service artifacts; this file only reads inputs and draws responses.

import { ApiClient, ModelInfo } from "./api.js";
import { ClampResult, TemporalKind, TemporalParams, clampParam } from "./gsf.js";
import { MaskGrid } from "./mask.js";
import { drawGraymap, parsePgm } from "./pgm.js";
import { drawProfile } from "./plot.js";
import { MaskRef, TermState, buildRunSpec } from "./runspec.js";
import { InterpolationPlan, WalkScrubber, interpolationCells } from "./scrubber.js";

const api = new ApiClient("");
const $ = <T extends HTMLElement>(id: string): T => document.getElementById(id) as T;

interface Session {
  model?: ModelInfo;
  terms: TermState[];
  mask: MaskGrid | null;
  maskId?: string;
  seed: number;
  steps: number;
  samples: number;
  history: string[];
}

const session: Session = {
  terms: [],
  mask: null,
  seed: 7,
  steps: 120,
  samples: 4,
  history: [],
};

// ---------------------------------------------------------------------------
// model picker
// ---------------------------------------------------------------------------

async function loadModels(): Promise<void> {
  const names = await api.models();
  const select = $<HTMLSelectElement>("model-select");
  select.innerHTML = "";
  for (const name of names) {
    const opt = document.createElement("option");
    opt.value = name;
    opt.textContent = name;
    select.appendChild(opt);
  }
  select.onchange = () => void pickModel(select.value);
  await pickModel(names[0]);
}

async function pickModel(name: string): Promise<void> {
  session.model = await api.modelInfo(name);
  session.terms = [];
  session.maskId = undefined;
  const conds = session.model.conditions.filter((c) => c.id !== "null");
  const first = conds[0]?.id ?? "";
  if (first) {
    session.terms.push({
      condition: first,
      temporal: { kind: "ramp_down", m: 1.0, a: 1.0 },
      mask: "uniform",
    });
  }
  if (session.model.shape.kind === "grid") {
    session.mask = new MaskGrid(session.model.shape.h, session.model.shape.w, 1.0);
    drawMask();
  } else {
    session.mask = null;
  }
  renderTerms();
}

// ---------------------------------------------------------------------------
// term editors
// ---------------------------------------------------------------------------

function renderTerms(): void {
  const host = $("terms");
  host.innerHTML = "";
  if (!session.model) return;
  const conditionIds = session.model.conditions
    .map((c) => c.id)
    .filter((id) => id !== "null");
  session.terms.forEach((term, index) => {
    host.appendChild(termEditor(term, index, conditionIds));
  });
  const add = document.createElement("button");
  add.textContent = "+ term";
  add.onclick = () => {
    session.terms.push({
      condition: conditionIds[0],
      temporal: { kind: "constant", m: 1.0, a: 1.0 },
      mask: "uniform",
    });
    renderTerms();
  };
  host.appendChild(add);
}

function markClamped(input: HTMLInputElement, result: ClampResult): number {
  input.classList.toggle("clamped", result.clamped);
  if (result.clamped) input.value = String(result.value);
  return result.value;
}

function termEditor(term: TermState, index: number, conditionIds: string[]): HTMLElement {
  const box = document.createElement("div");
  box.className = "term";

  const condSelect = document.createElement("select");
  for (const id of conditionIds) {
    const opt = document.createElement("option");
    opt.value = id;
    opt.textContent = id;
    opt.selected = id === term.condition;
    condSelect.appendChild(opt);
  }
  condSelect.onchange = () => (term.condition = condSelect.value);

  const kindSelect = document.createElement("select");
  for (const kind of ["constant", "ramp_up", "ramp_down"] as TemporalKind[]) {
    const opt = document.createElement("option");
    opt.value = kind;
    opt.textContent = kind;
    opt.selected = kind === term.temporal.kind;
    kindSelect.appendChild(opt);
  }

  const mInput = document.createElement("input");
  mInput.type = "range";
  mInput.min = "-2";
  mInput.max = "8";
  mInput.step = "0.1";
  mInput.value = String(term.temporal.m);
  const mLabel = document.createElement("span");

  const aInput = document.createElement("input");
  aInput.type = "range";
  aInput.min = "0.1";
  aInput.max = "1.5";
  aInput.step = "0.05";
  aInput.value = String(term.temporal.a);
  const aLabel = document.createElement("span");

  const maskToggle = document.createElement("input");
  maskToggle.type = "checkbox";
  maskToggle.checked = term.mask !== "uniform";

  const plot = document.createElement("canvas");
  plot.width = 220;
  plot.height = 90;

  const refresh = () => {
    term.temporal.kind = kindSelect.value as TemporalKind;
    term.temporal.m = markClamped(mInput, clampParam(parseFloat(mInput.value), -2, 8));
    term.temporal.a = markClamped(aInput, clampParam(parseFloat(aInput.value), 0.1, 1.5));
    mLabel.textContent = ` m=${term.temporal.m.toFixed(2)}`;
    aLabel.textContent = ` a=${term.temporal.a.toFixed(2)}`;
    aInput.disabled = term.temporal.kind !== "ramp_up";
    drawProfile(plot, term.temporal);
  };
  kindSelect.onchange = refresh;
  mInput.oninput = refresh;
  aInput.oninput = refresh;
  maskToggle.onchange = () => {
    term.mask = maskToggle.checked && session.maskId ? { id: session.maskId } : "uniform";
  };

  const remove = document.createElement("button");
  remove.textContent = "remove";
  remove.onclick = () => {
    session.terms.splice(index, 1);
    renderTerms();
  };

  const row = (label: string, ...nodes: (HTMLElement | Text)[]) => {
    const div = document.createElement("div");
    div.append(label, ...nodes);
    return div;
  };
  box.append(
    row("condition ", condSelect, remove),
    row("kind ", kindSelect),
    row("magnitude ", mInput, mLabel),
    row("onset ", aInput, aLabel),
    row("painted mask ", maskToggle),
    plot,
  );
  refresh();
  return box;
}

// ---------------------------------------------------------------------------
// mask painter
// ---------------------------------------------------------------------------

let paintValue = 1.0;
let brushRadius = 1.5;
let painting = false;
let toolMode: "brush" | "rect" = "brush";
let rectAnchor: [number, number] | null = null;

function drawMask(): void {
  const canvas = $<HTMLCanvasElement>("mask-canvas");
  if (!session.mask) {
    canvas.hidden = true;
    return;
  }
  canvas.hidden = false;
  const zoom = Math.max(4, Math.floor(256 / Math.max(session.mask.h, session.mask.w)));
  canvas.width = session.mask.w * zoom;
  canvas.height = session.mask.h * zoom;
  const ctx = canvas.getContext("2d")!;
  for (let u = 0; u < session.mask.h; u++) {
    for (let v = 0; v < session.mask.w; v++) {
      const g = Math.round(session.mask.at(u, v) * 255);
      ctx.fillStyle = `rgb(${g},${g},${g})`;
      ctx.fillRect(v * zoom, u * zoom, zoom, zoom);
    }
  }
}

function wireMaskTools(): void {
  const canvas = $<HTMLCanvasElement>("mask-canvas");
  const gridPos = (ev: MouseEvent): [number, number] => {
    const rect = canvas.getBoundingClientRect();
    const zoomW = canvas.width / (session.mask?.w ?? 1);
    const zoomH = canvas.height / (session.mask?.h ?? 1);
    return [(ev.clientY - rect.top) / zoomH, (ev.clientX - rect.left) / zoomW];
  };
  canvas.onmousedown = (ev) => {
    const [u, v] = gridPos(ev);
    if (toolMode === "rect") {
      rectAnchor = [Math.floor(u), Math.floor(v)];
      return;
    }
    painting = true;
    session.mask?.brush(u, v, brushRadius, paintValue);
    drawMask();
  };
  canvas.onmousemove = (ev) => {
    if (!painting || toolMode !== "brush") return;
    const [u, v] = gridPos(ev);
    session.mask?.brush(u, v, brushRadius, paintValue);
    drawMask();
  };
  canvas.onmouseup = (ev) => {
    if (toolMode === "rect" && rectAnchor && session.mask) {
      const [u, v] = gridPos(ev).map(Math.floor) as [number, number];
      session.mask.rect(
        Math.min(rectAnchor[0], u), Math.min(rectAnchor[1], v),
        Math.max(rectAnchor[0], u) + 1, Math.max(rectAnchor[1], v) + 1,
        paintValue,
      );
      rectAnchor = null;
      drawMask();
    }
  };
  window.addEventListener("mouseup", () => (painting = false));

  const mode = $<HTMLSelectElement>("tool-mode");
  mode.onchange = () => (toolMode = mode.value as "brush" | "rect");
  $("tool-fill").onclick = () => {
    session.mask?.fill(1.0);
    drawMask();
  };
  $("tool-clear").onclick = () => {
    session.mask?.fill(0.0);
    drawMask();
  };
  $("tool-fade").onclick = () => {
    session.mask?.fade("v", 0, (session.mask?.w ?? 1) - 1);
    drawMask();
  };
  const value = $<HTMLInputElement>("brush-value");
  value.oninput = () => (paintValue = parseFloat(value.value));
  const radius = $<HTMLInputElement>("brush-radius");
  radius.oninput = () => (brushRadius = parseFloat(radius.value));
  $("mask-upload").onclick = () => void uploadMask();
}

async function uploadMask(): Promise<void> {
  if (!session.mask) return;
  const status = $("mask-status");
  try {
    session.maskId = await api.postMask(session.mask.payload());
    status.textContent = `mask ${session.maskId.slice(0, 12)}… stored`;
  } catch (err) {
    status.textContent = String(err);
  }
}

// ---------------------------------------------------------------------------
// sampling panel
// ---------------------------------------------------------------------------

function currentSpec() {
  return buildRunSpec(
    session.model?.name ?? "",
    session.terms,
    { kind: "ddpm", steps: session.steps, seed: session.seed, beta_min: 1e-4, beta_max: 0.04 },
    { samples: session.samples, emit: ["fields", "images", "metrics"] },
  );
}

async function runOnce(): Promise<void> {
  const status = $("run-status");
  try {
    const spec = currentSpec();
    const runId = await api.submitRun(spec);
    session.history.push(runId);
    status.textContent = `run ${runId.slice(0, 12)}… submitted`;
    const record = await api.waitForRun(runId, 1000);
    if (record.state === "failed") {
      status.textContent = `failed: ${record.error}`;
      return;
    }
    status.textContent = `run ${runId.slice(0, 12)}… done`;
    await showSamples(runId);
    await showMetrics(runId);
  } catch (err) {
    status.textContent = String(err);
  }
}

async function showSamples(runId: string): Promise<void> {
  const host = $("samples");
  host.innerHTML = "";
  for (let i = 0; i < session.samples; i++) {
    try {
      const map = parsePgm(await api.sampleGraymap(runId, i));
      const canvas = document.createElement("canvas");
      const zoom = Math.max(2, Math.floor(128 / Math.max(map.w, map.h)));
      canvas.width = map.w * zoom;
      canvas.height = map.h * zoom;
      drawGraymap(canvas.getContext("2d")!, map, zoom);
      host.appendChild(canvas);
    } catch {
      break;
    }
  }
}

async function showMetrics(runId: string): Promise<void> {
  const host = $("metrics");
  try {
    const reports = await api.metrics(runId);
    host.textContent = reports
      .map((r) => `${r.name}: ${typeof r.value === "number" ? r.value.toPrecision(5) : r.value}`)
      .join("\n");
  } catch {
    host.textContent = "(no metrics emitted)";
  }
}

// ---------------------------------------------------------------------------
// walk scrubber
// ---------------------------------------------------------------------------

const scrubber = new WalkScrubber(api);

async function startWalk(): Promise<void> {
  if (!session.model) return;
  const status = $("walk-status");
  const conds = session.model.conditions.map((c) => c.id).filter((id) => id !== "null");
  if (conds.length < 2) {
    status.textContent = "model has fewer than two non-null conditions";
    return;
  }
  const plan: InterpolationPlan = {
    conditionA: $<HTMLSelectElement>("walk-a").value,
    conditionB: $<HTMLSelectElement>("walk-b").value,
    m: parseFloat($<HTMLInputElement>("walk-m").value),
    lambdas: [0, 0.25, 0.5, 0.75, 1],
    temporal: { kind: "constant", m: 0, a: 1 },
  };
  const withNormMaps = $<HTMLInputElement>("walk-normmaps").checked;
  const cells = interpolationCells(
    session.model.name,
    session.terms,
    { kind: "ddpm", steps: session.steps, seed: session.seed, beta_min: 1e-4, beta_max: 0.04 },
    withNormMaps
      ? { samples: 1, record_trajectory: true, emit: ["fields", "images", "normmaps"] }
      : { samples: 1, emit: ["fields", "images"] },
    plan,
  );
  status.textContent = "submitting cells…";
  await scrubber.load(cells);
  await scrubber.waitAll(1000);
  const slider = $<HTMLInputElement>("walk-slider");
  slider.max = String(cells.length - 1);
  slider.value = "0";
  slider.oninput = () => void showCell(parseInt(slider.value, 10));
  status.textContent = "walk ready";
  await showCell(0);
}

async function showCell(index: number): Promise<void> {
  const cell = scrubber.scrubTo(index);
  const status = $("walk-status");
  const host = $("walk-view");
  host.innerHTML = "";
  if (cell.error || !cell.runId) {
    status.textContent = `${cell.label}: ${cell.error ?? "not submitted"}`;
    return;
  }
  status.textContent = cell.label;
  const draw = (map: ReturnType<typeof parsePgm>, title: string) => {
    const wrap = document.createElement("figure");
    const canvas = document.createElement("canvas");
    const zoom = Math.max(2, Math.floor(192 / Math.max(map.w, map.h)));
    canvas.width = map.w * zoom;
    canvas.height = map.h * zoom;
    drawGraymap(canvas.getContext("2d")!, map, zoom);
    const caption = document.createElement("figcaption");
    caption.textContent = title;
    wrap.append(canvas, caption);
    host.appendChild(wrap);
  };
  draw(parsePgm(await api.sampleGraymap(cell.runId, 0)), "sample");
  if ($<HTMLInputElement>("walk-normmaps").checked) {
    const step = Math.max(0, Math.min(session.steps - 1, Math.round(session.steps * 0.5)));
    try {
      draw(parsePgm(await api.normMapGraymap(cell.runId, step)), `norm map, step ${step}`);
    } catch (err) {
      status.textContent = `${cell.label} (norm map: ${err})`;
    }
  }
}

function wireWalkControls(): void {
  $("walk-start").onclick = () => void startWalk();
  const refreshConditionPickers = () => {
    if (!session.model) return;
    for (const id of ["walk-a", "walk-b"]) {
      const select = $<HTMLSelectElement>(id);
      select.innerHTML = "";
      for (const cond of session.model.conditions.map((c) => c.id)) {
        if (cond === "null") continue;
        const opt = document.createElement("option");
        opt.value = cond;
        opt.textContent = cond;
        select.appendChild(opt);
      }
    }
    $<HTMLSelectElement>("walk-b").selectedIndex = 1;
  };
  $<HTMLSelectElement>("model-select").addEventListener("change", refreshConditionPickers);
  setTimeout(refreshConditionPickers, 500);
}

// ---------------------------------------------------------------------------

function wireRunControls(): void {
  const seed = $<HTMLInputElement>("seed");
  seed.value = String(session.seed);
  seed.onchange = () => (session.seed = parseInt(seed.value, 10) || 0);
  const steps = $<HTMLInputElement>("steps");
  steps.value = String(session.steps);
  steps.onchange = () => (session.steps = Math.max(2, parseInt(steps.value, 10) || 2));
  const samples = $<HTMLInputElement>("samples");
  samples.value = String(session.samples);
  samples.onchange = () => (session.samples = Math.max(1, parseInt(samples.value, 10) || 1));
  $("run").onclick = () => void runOnce();
}

window.addEventListener("DOMContentLoaded", () => {
  wireRunControls();
  wireMaskTools();
  wireWalkControls();
  void loadModels();
});
