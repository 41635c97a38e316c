/** Figure builders: each consumes bundle artifacts and emits SVG + caption.
 *
 * Captions only quote numbers already present in the inputs; nothing is
 * recomputed here.
 */

import { readFileSync, writeFileSync } from "fs";

import { column, parseDiagnostics } from "./csv.js";
import { Frame, padRange } from "./svg.js";
import { Summary } from "./summary.js";

export type PlotKind =
  | "energy-decay"
  | "residual-convergence"
  | "rescale-deviation"
  | "ensemble-ceiling";

export interface PlotSpec {
  kind: PlotKind;
  csvPath?: string;
  summary: Summary;
  outPath: string;
  title: string;
}

export interface RenderedPlot {
  svgPath: string;
  caption: string;
}

export class EmptyInputError extends Error {}

function quote(x: unknown): string {
  if (typeof x !== "number" || !Number.isFinite(x)) return String(x);
  return Number(x.toPrecision(10)).toString();
}

function criterionValue(summary: Summary, name: string): number | undefined {
  const crit = summary.criteria.find((c) => c.name === name);
  return crit?.value;
}

function renderEnergyDecay(spec: PlotSpec): RenderedPlot {
  if (!spec.csvPath) throw new EmptyInputError("energy-decay plot needs a diagnostics CSV");
  const diag = parseDiagnostics(readFileSync(spec.csvPath, "utf-8"), spec.csvPath);
  const t = column(diag, "t", spec.csvPath);
  const e = column(diag, "E", spec.csvPath);
  const pos = e.filter((v) => v > 0);
  if (pos.length < 2) throw new EmptyInputError(`${spec.csvPath}: no positive energy series`);
  const [ymin, ymax] = padRange(Math.min(...pos), Math.max(...pos), "log");
  const frame = new Frame(
    { label: "t", scale: "linear", min: t[0], max: t[t.length - 1] },
    { label: "E(t)  [log]", scale: "log", min: ymin, max: ymax },
  );
  const keep = e.map((v, i) => [t[i], v]).filter(([, v]) => v > 0);
  const body = [frame.polyline(keep.map((p) => p[0]), keep.map((p) => p[1]))];
  const data = spec.summary.data ?? {};
  const omega = (data["omega"] as number | undefined) ?? criterionValue(spec.summary, "decay-omega");
  const r2 = (data["r2"] as number | undefined) ?? criterionValue(spec.summary, "decay-r2");
  let caption = `Energy history of the ${spec.summary.scenario} run (log scale).`;
  if (omega !== undefined) {
    body.push(frame.annotation(`fitted omega = ${quote(omega)}`));
    caption += ` Fitted decay rate omega = ${quote(omega)}`;
    caption += r2 !== undefined ? `, r^2 = ${quote(r2)}.` : ".";
  }
  writeFileSync(spec.outPath, frame.render(spec.title, body));
  return { svgPath: spec.outPath, caption };
}

function renderResidualConvergence(spec: PlotSpec): RenderedPlot {
  const data = spec.summary.data ?? {};
  const resid = data["residual_max"] as number[] | undefined;
  const dts = (data["residual_dts"] as number[] | undefined) ?? undefined;
  if (!resid || resid.length < 2) {
    throw new EmptyInputError("summary lacks residual_max data for the convergence plot");
  }
  const xs = dts ?? resid.map((_, i) => spec.summary.provenance.dt / Math.pow(2, i));
  const [xmin, xmax] = padRange(Math.min(...xs), Math.max(...xs), "log");
  const [ymin, ymax] = padRange(Math.min(...resid), Math.max(...resid), "log");
  const frame = new Frame(
    { label: "dt  [log]", scale: "log", min: xmin, max: xmax },
    { label: "max residual  [log]", scale: "log", min: ymin, max: ymax },
  );
  const body = [frame.polyline(xs, resid, "#888"), frame.markers(xs, resid)];
  const order = data["residual_order"] as number | undefined;
  let caption = "Energy-balance residual maximum under step halving (log-log).";
  if (order !== undefined) {
    body.push(frame.annotation(`observed order = ${quote(order)}`));
    caption += ` Observed order ${quote(order)}.`;
  }
  writeFileSync(spec.outPath, frame.render(spec.title, body));
  return { svgPath: spec.outPath, caption };
}

function renderRescaleDeviation(spec: PlotSpec): RenderedPlot {
  const data = spec.summary.data ?? {};
  const eps = data["eps"] as number[] | undefined;
  const dev = data["deviation"] as number[] | undefined;
  if (!eps || !dev || eps.length !== dev.length || eps.length === 0) {
    throw new EmptyInputError("summary lacks eps/deviation data for the rescale plot");
  }
  const [xmin, xmax] = padRange(Math.min(...eps), Math.max(...eps), "log");
  const [ymin, ymax] = padRange(Math.min(...dev), Math.max(...dev), "log");
  const frame = new Frame(
    { label: "eps  [log]", scale: "log", min: xmin, max: xmax },
    { label: "deviation from instantaneous limit  [log]", scale: "log", min: ymin, max: ymax },
  );
  const body = [frame.polyline(eps, dev, "#888"), frame.markers(eps, dev)];
  const caption =
    `Distance at the comparison time between the rescaled-kernel run and the ` +
    `instantaneous-viscosity reference: ` +
    eps.map((e, i) => `eps=${quote(e)}: ${quote(dev[i])}`).join(", ") +
    ".";
  writeFileSync(spec.outPath, frame.render(spec.title, body));
  return { svgPath: spec.outPath, caption };
}

function renderEnsembleCeiling(spec: PlotSpec): RenderedPlot {
  const data = spec.summary.data ?? {};
  const ceil = data["ceilings"] as { low?: number[]; high?: number[] } | undefined;
  if (!ceil || (!ceil.low?.length && !ceil.high?.length)) {
    throw new EmptyInputError("summary lacks ceiling data for the ensemble plot");
  }
  const values = [...(ceil.low ?? []), ...(ceil.high ?? [])];
  const labels = [
    ...(ceil.low ?? []).map((_, i) => `low-${i}`),
    ...(ceil.high ?? []).map((_, i) => `high-${i}`),
  ];
  const [ymin, ymax] = padRange(0, Math.max(...values), "linear");
  const frame = new Frame(
    { label: "ensemble member", scale: "linear", min: 0, max: values.length + 1 },
    { label: "post-entry energy ceiling", scale: "linear", min: ymin, max: ymax },
  );
  const xs = values.map((_, i) => i + 1);
  const body = [frame.markers(xs, values, "#1f77b4")];
  const caption =
    "Post-entry energy ceilings per ensemble member: " +
    labels.map((l, i) => `${l}: ${quote(values[i])}`).join(", ") +
    ".";
  writeFileSync(spec.outPath, frame.render(spec.title, body));
  return { svgPath: spec.outPath, caption };
}

export function render(spec: PlotSpec): RenderedPlot {
  switch (spec.kind) {
    case "energy-decay":
      return renderEnergyDecay(spec);
    case "residual-convergence":
      return renderResidualConvergence(spec);
    case "rescale-deviation":
      return renderRescaleDeviation(spec);
    case "ensemble-ceiling":
      return renderEnsembleCeiling(spec);
    default:
      throw new Error(`unknown plot kind ${(spec as PlotSpec).kind}`);
  }
}
