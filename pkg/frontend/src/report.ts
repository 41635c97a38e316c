/** Bundle-to-markdown compiler: criteria table, figures, provenance. */

import { existsSync, readdirSync, writeFileSync } from "fs";
import { basename, join } from "path";

import { PlotKind, PlotSpec, render, RenderedPlot } from "./plots.js";
import { loadSummary, Summary } from "./summary.js";

export class PartialBundleError extends Error {
  constructor(readonly missing: string[]) {
    super(`incomplete bundle, missing: ${missing.join(", ")}`);
    this.name = "PartialBundleError";
  }
}

interface FigurePlan {
  kind: PlotKind;
  csv?: string; // file name inside the bundle
  title: string;
}

const FIGURES: Record<string, FigurePlan[]> = {
  decay: [{ kind: "energy-decay", csv: "decay.csv", title: "energy decay (damped)" }],
  "decay-nodamp": [
    { kind: "energy-decay", csv: "decay.csv", title: "energy decay (memory dissipation only)" },
  ],
  split: [
    { kind: "energy-decay", csv: "split_stable.csv", title: "stable part of the splitting" },
  ],
  absorb: [{ kind: "ensemble-ceiling", title: "absorbing-ball ceilings" }],
  rescale: [{ kind: "rescale-deviation", title: "instantaneous-limit deviation" }],
  refine: [{ kind: "residual-convergence", title: "energy-balance residual convergence" }],
  continuity: [],
  selfcheck: [],
};

function quote(x: unknown): string {
  if (typeof x !== "number" || !Number.isFinite(x)) return String(x);
  return Number(x.toPrecision(10)).toString();
}

function criteriaTable(summary: Summary): string[] {
  const lines = [
    "| criterion | value | threshold | status |",
    "| --- | --- | --- | --- |",
  ];
  for (const c of summary.criteria) {
    const status = c.pass ? "pass" : "**FAIL**";
    const name = c.pass ? c.name : `**${c.name}**`;
    lines.push(`| ${name} | ${quote(c.value)} | ${c.threshold} | ${status} |`);
  }
  return lines;
}

export function compileReport(bundleDir: string, outName = "report.md"): string {
  const missing: string[] = [];
  const summaryPath = join(bundleDir, "summary.json");
  if (!existsSync(bundleDir) || !existsSync(summaryPath)) {
    missing.push("summary.json");
    throw new PartialBundleError(missing);
  }
  const summary = loadSummary(summaryPath);
  const plans = FIGURES[summary.scenario] ?? [];
  for (const plan of plans) {
    if (plan.csv && !existsSync(join(bundleDir, plan.csv))) {
      missing.push(plan.csv);
    }
  }
  if (missing.length > 0) {
    throw new PartialBundleError(missing);
  }

  const figures: RenderedPlot[] = [];
  for (const plan of plans) {
    const spec: PlotSpec = {
      kind: plan.kind,
      csvPath: plan.csv ? join(bundleDir, plan.csv) : undefined,
      summary,
      outPath: join(bundleDir, `fig_${plan.kind}.svg`),
      title: plan.title,
    };
    figures.push(render(spec));
  }

  const lines: string[] = [];
  lines.push(`# Experiment report: ${summary.scenario}`);
  lines.push("");
  const overall = summary.criteria.every((c) => c.pass) ? "all criteria pass" : "FAILURES present";
  lines.push(`Outcome: **${overall}** (${summary.criteria.length} criteria).`);
  lines.push("");
  lines.push("## Criteria");
  lines.push("");
  lines.push(...criteriaTable(summary));
  lines.push("");
  if (figures.length > 0) {
    lines.push("## Figures");
    lines.push("");
    for (const fig of figures) {
      lines.push(`![${basename(fig.svgPath)}](${basename(fig.svgPath)})`);
      lines.push("");
      lines.push(fig.caption);
      lines.push("");
    }
  }
  lines.push("## Provenance");
  lines.push("");
  const prov = summary.provenance;
  lines.push(`- config: \`${prov.config_sha256}\``);
  lines.push(`- seed: ${prov.seed}`);
  lines.push(
    `- resolution: ${prov.dim}D, n=${prov.n}, dt=${quote(prov.dt)}, lag nodes=${prov.history_m} (${prov.history_mode})`,
  );
  lines.push("");
  const text = lines.join("\n");
  writeFileSync(join(bundleDir, outName), text);
  return text;
}

export function listBundleArtifacts(bundleDir: string): string[] {
  if (!existsSync(bundleDir)) return [];
  return readdirSync(bundleDir).sort();
}
