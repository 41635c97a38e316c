/** Deterministic SVG scaffolding: fixed canvas, fonts and tick layout. */

export const WIDTH = 640;
export const HEIGHT = 420;
const MARGIN = { left: 70, right: 20, top: 40, bottom: 50 };
const FONT = "12px monospace";

export type ScaleKind = "linear" | "log";

export interface Axis {
  label: string;
  scale: ScaleKind;
  min: number;
  max: number;
}

function fmt(x: number): string {
  if (!Number.isFinite(x)) return "0";
  return Number(x.toPrecision(8)).toString();
}

function fmtTick(x: number): string {
  const a = Math.abs(x);
  if (a !== 0 && (a < 1e-3 || a >= 1e4)) return x.toExponential(1);
  return Number(x.toPrecision(4)).toString();
}

export class Frame {
  constructor(
    readonly x: Axis,
    readonly y: Axis,
  ) {
    if (x.scale === "log" && x.min <= 0) throw new Error("log x-axis needs positive range");
    if (y.scale === "log" && y.min <= 0) throw new Error("log y-axis needs positive range");
  }

  private tx(v: number): number {
    const { min, max, scale } = this.x;
    const f =
      scale === "log"
        ? (Math.log(v) - Math.log(min)) / (Math.log(max) - Math.log(min))
        : (v - min) / (max - min);
    return MARGIN.left + f * (WIDTH - MARGIN.left - MARGIN.right);
  }

  private ty(v: number): number {
    const { min, max, scale } = this.y;
    const f =
      scale === "log"
        ? (Math.log(v) - Math.log(min)) / (Math.log(max) - Math.log(min))
        : (v - min) / (max - min);
    return HEIGHT - MARGIN.bottom - f * (HEIGHT - MARGIN.top - MARGIN.bottom);
  }

  private ticks(axis: Axis): number[] {
    if (axis.scale === "log") {
      const lo = Math.ceil(Math.log10(axis.min) - 1e-9);
      const hi = Math.floor(Math.log10(axis.max) + 1e-9);
      const out: number[] = [];
      for (let d = lo; d <= hi; d++) out.push(Math.pow(10, d));
      if (out.length < 2) return [axis.min, axis.max];
      return out;
    }
    const n = 5;
    const out: number[] = [];
    for (let i = 0; i <= n; i++) out.push(axis.min + ((axis.max - axis.min) * i) / n);
    return out;
  }

  render(title: string, body: string[]): string {
    const parts: string[] = [];
    parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">`,
    );
    parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
    parts.push(
      `<text x="${WIDTH / 2}" y="22" text-anchor="middle" style="font:14px monospace">${title}</text>`,
    );
    const x0 = MARGIN.left;
    const x1 = WIDTH - MARGIN.right;
    const y0 = HEIGHT - MARGIN.bottom;
    const y1 = MARGIN.top;
    parts.push(
      `<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="black" stroke-width="1"/>`,
    );
    parts.push(
      `<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="black" stroke-width="1"/>`,
    );
    for (const t of this.ticks(this.x)) {
      const px = fmt(this.tx(t));
      parts.push(`<line x1="${px}" y1="${y0}" x2="${px}" y2="${y0 + 5}" stroke="black"/>`);
      parts.push(
        `<text x="${px}" y="${y0 + 18}" text-anchor="middle" style="font:${FONT}">${fmtTick(t)}</text>`,
      );
    }
    for (const t of this.ticks(this.y)) {
      const py = fmt(this.ty(t));
      parts.push(`<line x1="${x0 - 5}" y1="${py}" x2="${x0}" y2="${py}" stroke="black"/>`);
      parts.push(
        `<text x="${x0 - 8}" y="${py}" text-anchor="end" dominant-baseline="middle" style="font:${FONT}">${fmtTick(t)}</text>`,
      );
    }
    parts.push(
      `<text x="${(x0 + x1) / 2}" y="${HEIGHT - 12}" text-anchor="middle" style="font:${FONT}">${this.x.label}</text>`,
    );
    parts.push(
      `<text x="18" y="${(y0 + y1) / 2}" text-anchor="middle" style="font:${FONT}" transform="rotate(-90 18 ${(y0 + y1) / 2})">${this.y.label}</text>`,
    );
    parts.push(...body);
    parts.push("</svg>");
    return parts.join("\n") + "\n";
  }

  polyline(xs: number[], ys: number[], color = "#1f77b4"): string {
    const pts = xs.map((x, i) => `${fmt(this.tx(x))},${fmt(this.ty(ys[i]))}`).join(" ");
    return `<polyline fill="none" stroke="${color}" stroke-width="1.5" points="${pts}"/>`;
  }

  markers(xs: number[], ys: number[], color = "#d62728"): string {
    return xs
      .map(
        (x, i) =>
          `<circle cx="${fmt(this.tx(x))}" cy="${fmt(this.ty(ys[i]))}" r="3.5" fill="${color}"/>`,
      )
      .join("\n");
  }

  annotation(text: string): string {
    return `<text x="${WIDTH - MARGIN.right - 8}" y="${MARGIN.top + 16}" text-anchor="end" style="font:${FONT}" fill="#444">${text}</text>`;
  }
}

export function padRange(min: number, max: number, scale: ScaleKind): [number, number] {
  if (scale === "log") {
    return [min / 1.5, max * 1.5];
  }
  const span = max - min || Math.abs(max) || 1;
  return [min - 0.05 * span, max + 0.05 * span];
}
