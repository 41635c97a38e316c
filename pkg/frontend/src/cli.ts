#!/usr/bin/env node
/** `voigtflow-report report <bundle-dir> [--out report.md]` */

import { compileReport, PartialBundleError } from "./report.js";

export function main(argv: string[]): number {
  const args = [...argv];
  if (args[0] === "report") args.shift();
  let out = "report.md";
  const outIdx = args.indexOf("--out");
  if (outIdx >= 0) {
    out = args[outIdx + 1];
    args.splice(outIdx, 2);
  }
  const dir = args[0];
  if (!dir) {
    console.error("usage: voigtflow-report report <bundle-dir> [--out report.md]");
    return 2;
  }
  try {
    compileReport(dir, out);
  } catch (err) {
    if (err instanceof PartialBundleError) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
  console.log(`${dir}/${out}`);
  return 0;
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url.endsWith(process.argv[1].split("/").pop()!);
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
