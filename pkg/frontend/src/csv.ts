/** Strict reader for the simulator's diagnostics CSV schema. */

export const DIAGNOSTIC_COLUMNS = [
  "t",
  "E",
  "E1",
  "Pi",
  "Pi1",
  "Phi",
  "Phi1",
  "Psi",
  "Psi1",
  "Lambda_eps",
  "Lambda1",
  "norm_u_minus_theta",
  "norm_u_0",
  "norm_u_1",
  "norm_u_2",
  "residual",
] as const;

export type DiagnosticColumn = (typeof DIAGNOSTIC_COLUMNS)[number];

export interface Diagnostics {
  columns: string[];
  rows: number[][];
}

export class SchemaError extends Error {
  constructor(
    message: string,
    readonly column?: string,
  ) {
    super(message);
    this.name = "SchemaError";
  }
}

export function parseDiagnostics(text: string, source = "<csv>"): Diagnostics {
  const lines = text.split("\n").filter((l) => l.trim().length > 0);
  if (lines.length === 0) {
    throw new SchemaError(`${source}: empty diagnostics file`);
  }
  const columns = lines[0].split(",").map((c) => c.trim());
  for (const required of DIAGNOSTIC_COLUMNS) {
    if (!columns.includes(required)) {
      throw new SchemaError(`${source}: missing column "${required}"`, required);
    }
  }
  const rows = lines.slice(1).map((line, i) => {
    const parts = line.split(",").map(Number);
    if (parts.length !== columns.length || parts.some((v) => Number.isNaN(v))) {
      throw new SchemaError(`${source}: malformed row ${i + 2}`);
    }
    return parts;
  });
  if (rows.length === 0) {
    throw new SchemaError(`${source}: no data rows`);
  }
  return { columns, rows };
}

export function column(diag: Diagnostics, name: string, source = "<csv>"): number[] {
  const idx = diag.columns.indexOf(name);
  if (idx < 0) {
    throw new SchemaError(`${source}: missing column "${name}"`, name);
  }
  return diag.rows.map((r) => r[idx]);
}
