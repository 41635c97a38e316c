import { readFileSync, rmSync, writeFileSync } from "fs";
import { join } from "path";
import { describe, expect, it } from "vitest";

import { parseDiagnostics, SchemaError, column } from "../src/csv.js";
import { render } from "../src/plots.js";
import { compileReport, PartialBundleError } from "../src/report.js";
import { main } from "../src/cli.js";
import {
  decaySummary,
  tempDir,
  writeDecayBundle,
  writeDecayCsv,
  writeRescaleBundle,
} from "./fixtures.js";

describe("csv schema", () => {
  it("rejects a missing column by name", () => {
    const dir = writeDecayBundle();
    const text = readFileSync(join(dir, "decay.csv"), "utf-8");
    const broken = text
      .split("\n")
      .map((line) => line.split(",").filter((_, i) => i !== 3).join(","))
      .join("\n"); // drop the "Pi" column
    expect(() => parseDiagnostics(broken, "broken.csv")).toThrowError(SchemaError);
    try {
      parseDiagnostics(broken, "broken.csv");
    } catch (err) {
      expect((err as SchemaError).column).toBe("Pi");
      expect((err as SchemaError).message).toContain('"Pi"');
    }
  });

  it("parses the full schema", () => {
    const dir = writeDecayBundle();
    const diag = parseDiagnostics(readFileSync(join(dir, "decay.csv"), "utf-8"));
    expect(diag.rows.length).toBe(201);
    expect(column(diag, "E")[0]).toBeCloseTo(3.0, 12);
  });
});

describe("energy-decay plot", () => {
  it("renders a straight line in log scale and quotes the input rate", () => {
    const rate = 0.7;
    const dir = writeDecayBundle(rate);
    const out = render({
      kind: "energy-decay",
      csvPath: join(dir, "decay.csv"),
      summary: decaySummary(rate),
      outPath: join(dir, "fig.svg"),
      title: "t",
    });
    // caption reproduces the input rate to 1e-6
    const match = out.caption.match(/omega = ([-0-9.e+]+)/);
    expect(match).not.toBeNull();
    expect(Math.abs(Number(match![1]) - rate)).toBeLessThan(1e-6);

    // the polyline in the SVG is affine in t: exact exponential in log-y
    const svg = readFileSync(out.svgPath, "utf-8");
    const pts = svg.match(/points="([^"]+)"/)![1]
      .split(" ")
      .map((p) => p.split(",").map(Number));
    const xs = pts.map((p) => p[0]);
    const ys = pts.map((p) => p[1]);
    const slope = (ys[ys.length - 1] - ys[0]) / (xs[xs.length - 1] - xs[0]);
    for (let i = 0; i < xs.length; i++) {
      const pred = ys[0] + slope * (xs[i] - xs[0]);
      expect(Math.abs(ys[i] - pred)).toBeLessThan(0.05);
    }
  });
});

describe("rescale plot", () => {
  it("renders the measured points monotonically", () => {
    const dir = writeRescaleBundle();
    const out = render({
      kind: "rescale-deviation",
      summary: JSON.parse(readFileSync(join(dir, "summary.json"), "utf-8")),
      outPath: join(dir, "fig.svg"),
      title: "rescale",
    });
    const svg = readFileSync(out.svgPath, "utf-8");
    const markers = svg.match(/<circle /g) ?? [];
    expect(markers.length).toBe(4);
    expect(out.caption).toContain("eps=0.05");
  });
});

describe("compile_report", () => {
  it("is byte-identical across repeated compiles", () => {
    const dir = writeDecayBundle();
    const first = compileReport(dir);
    const onDisk1 = readFileSync(join(dir, "report.md"));
    const second = compileReport(dir);
    const onDisk2 = readFileSync(join(dir, "report.md"));
    expect(first).toBe(second);
    expect(Buffer.compare(onDisk1, onDisk2)).toBe(0);
    const svg1 = readFileSync(join(dir, "fig_energy-decay.svg"), "utf-8");
    compileReport(dir);
    const svg2 = readFileSync(join(dir, "fig_energy-decay.svg"), "utf-8");
    expect(svg1).toBe(svg2);
  });

  it("embeds the criteria table and provenance", () => {
    const dir = writeDecayBundle();
    const md = compileReport(dir);
    expect(md).toContain("# Experiment report: decay");
    expect(md).toContain("| criterion | value | threshold | status |");
    expect(md).toContain("| monotone-decay |");
    expect(md).toContain("![fig_energy-decay.svg](fig_energy-decay.svg)");
    expect(md).toContain("`" + "a".repeat(64) + "`");
  });

  it("highlights failed criteria", () => {
    const dir = writeDecayBundle(0.7, false);
    const md = compileReport(dir);
    expect(md).toContain("**FAIL**");
    expect(md).toContain("**decay-omega**");
    expect(md).toContain("FAILURES present");
  });

  it("rejects an empty bundle without writing output", () => {
    const dir = tempDir();
    expect(() => compileReport(dir)).toThrowError(PartialBundleError);
    expect(() => readFileSync(join(dir, "report.md"))).toThrow();
  });

  it("lists missing artifacts", () => {
    const dir = tempDir();
    writeFileSync(join(dir, "summary.json"), JSON.stringify(decaySummary()));
    try {
      compileReport(dir);
      expect.unreachable();
    } catch (err) {
      expect((err as PartialBundleError).missing).toContain("decay.csv");
    }
  });

  it("golden markdown snapshot", () => {
    const dir = writeDecayBundle();
    rmSync(join(dir, "decay.csv"));
    writeDecayCsv(dir, 0.7); // regenerate deterministically
    const md = compileReport(dir);
    const expected = [
      "# Experiment report: decay",
      "",
      "Outcome: **all criteria pass** (3 criteria).",
      "",
      "## Criteria",
      "",
      "| criterion | value | threshold | status |",
      "| --- | --- | --- | --- |",
      "| monotone-decay | 0 | <= 1e-12 | pass |",
      "| decay-omega | 0.7 | > 0.01 | pass |",
      "| decay-r2 | 1 | >= 0.98 | pass |",
      "",
      "## Figures",
      "",
      "![fig_energy-decay.svg](fig_energy-decay.svg)",
      "",
      "Energy history of the decay run (log scale). Fitted decay rate omega = 0.7, r^2 = 1.",
      "",
      "## Provenance",
      "",
      "- config: `" + "a".repeat(64) + "`",
      "- seed: 0",
      "- resolution: 2D, n=64, dt=0.001, lag nodes=256 (prony)",
      "",
    ].join("\n");
    expect(md).toBe(expected);
  });
});

describe("cli", () => {
  it("compiles a bundle and exits zero", () => {
    const dir = writeDecayBundle();
    expect(main(["report", dir])).toBe(0);
    expect(readFileSync(join(dir, "report.md"), "utf-8")).toContain("decay");
  });

  it("exits nonzero on an empty directory", () => {
    expect(main(["report", tempDir()])).toBe(1);
  });

  it("exits nonzero without arguments", () => {
    expect(main([])).toBe(2);
  });
});
