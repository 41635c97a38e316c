/** Types and loader for the scenario runner's summary JSON. */

import { readFileSync } from "fs";

export interface CriterionResult {
  name: string;
  value: number;
  threshold: string;
  pass: boolean;
  details?: Record<string, unknown>;
}

export interface Provenance {
  config_sha256: string;
  seed: number;
  dim: number;
  n: number;
  dt: number;
  history_m: number;
  history_mode: string;
  [key: string]: unknown;
}

export interface Summary {
  scenario: string;
  criteria: CriterionResult[];
  provenance: Provenance;
  data?: Record<string, unknown>;
}

export function loadSummary(path: string): Summary {
  let doc: unknown;
  try {
    doc = JSON.parse(readFileSync(path, "utf-8"));
  } catch (err) {
    throw new Error(`${path}: unreadable summary (${(err as Error).message})`);
  }
  const s = doc as Summary;
  if (typeof s.scenario !== "string" || !Array.isArray(s.criteria)) {
    throw new Error(`${path}: not a scenario summary`);
  }
  return s;
}
