// Tiny canvas line plot for s(t) over [0, 1]; t runs right-to-left to match
// the sampling direction (t = 1 is where a run starts).

import { TemporalParams, profileSamples } from "./gsf.js";

export function drawProfile(
  canvas: HTMLCanvasElement,
  params: TemporalParams,
  highlightT?: number,
): void {
  const ctx = canvas.getContext("2d")!;
  const { width: W, height: H } = canvas;
  ctx.clearRect(0, 0, W, H);
  const samples = profileSamples(params);
  const values = samples.map(([, s]) => s);
  const lo = Math.min(0, ...values);
  const hi = Math.max(1e-9, ...values);
  const pad = 14;
  const x = (t: number) => pad + (1 - t) * (W - 2 * pad);
  const y = (s: number) => H - pad - ((s - lo) / (hi - lo)) * (H - 2 * pad);

  ctx.strokeStyle = "#444";
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.moveTo(x(1), y(0));
  ctx.lineTo(x(0), y(0));
  ctx.stroke();

  ctx.strokeStyle = "#4d9fff";
  ctx.lineWidth = 2;
  ctx.beginPath();
  samples.forEach(([t, s], i) => {
    if (i === 0) ctx.moveTo(x(t), y(s));
    else ctx.lineTo(x(t), y(s));
  });
  ctx.stroke();

  ctx.fillStyle = "#999";
  ctx.font = "10px sans-serif";
  ctx.fillText("t=1", x(1) - 8, H - 2);
  ctx.fillText("t=0", x(0) - 8, H - 2);
  ctx.fillText(hi.toFixed(2), 2, y(hi) + 8);

  if (highlightT !== undefined) {
    ctx.strokeStyle = "#ff8c42";
    ctx.setLineDash([3, 3]);
    ctx.beginPath();
    ctx.moveTo(x(highlightT), y(lo));
    ctx.lineTo(x(highlightT), y(hi));
    ctx.stroke();
    ctx.setLineDash([]);
  }
}
