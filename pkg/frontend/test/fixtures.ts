/** Synthetic bundle builders for the reporter tests. */

import { mkdtempSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";

import { DIAGNOSTIC_COLUMNS } from "../src/csv.js";
import { Summary } from "../src/summary.js";

export function tempDir(prefix = "vf-report-"): string {
  return mkdtempSync(join(tmpdir(), prefix));
}

export function writeDecayCsv(dir: string, rate = 0.7, name = "decay.csv"): string {
  const lines = [DIAGNOSTIC_COLUMNS.join(",")];
  for (let i = 0; i <= 200; i++) {
    const t = i * 0.1;
    const e = 3.0 * Math.exp(-rate * t);
    const row = DIAGNOSTIC_COLUMNS.map((c) => {
      if (c === "t") return t.toPrecision(17);
      if (c === "E") return e.toPrecision(17);
      return "0";
    });
    lines.push(row.join(","));
  }
  const path = join(dir, name);
  writeFileSync(path, lines.join("\n") + "\n");
  return path;
}

export function decaySummary(rate = 0.7, pass = true): Summary {
  return {
    scenario: "decay",
    criteria: [
      { name: "monotone-decay", value: 0.0, threshold: "<= 1e-12", pass: true },
      { name: "decay-omega", value: rate, threshold: "> 0.01", pass },
      { name: "decay-r2", value: 1.0, threshold: ">= 0.98", pass: true },
    ],
    provenance: {
      config_sha256: "a".repeat(64),
      seed: 0,
      dim: 2,
      n: 64,
      dt: 1e-3,
      history_m: 256,
      history_mode: "prony",
    },
    data: { omega: rate, r2: 1.0, window: [2, 15] },
  };
}

export function writeDecayBundle(rate = 0.7, pass = true): string {
  const dir = tempDir();
  writeDecayCsv(dir, rate);
  writeFileSync(join(dir, "summary.json"), JSON.stringify(decaySummary(rate, pass), null, 2));
  return dir;
}

export function writeRescaleBundle(): string {
  const dir = tempDir();
  const summary: Summary = {
    scenario: "rescale",
    criteria: [
      {
        name: "rescale-monotone",
        value: 0.0026,
        threshold: "strictly decreasing deviations",
        pass: true,
      },
    ],
    provenance: {
      config_sha256: "b".repeat(64),
      seed: 0,
      dim: 2,
      n: 64,
      dt: 1e-3,
      history_m: 256,
      history_mode: "prony",
    },
    data: {
      eps: [0.4, 0.2, 0.1, 0.05],
      deviation: [0.0219, 0.0108, 0.0054, 0.0026],
      t_compare: 5.0,
    },
  };
  writeFileSync(join(dir, "summary.json"), JSON.stringify(summary, null, 2));
  return dir;
}
