/**
 * Deterministic SVG plotting primitives: fixed styling, no timestamps, no
 * randomness -- identical inputs yield identical bytes.
 */

export interface Margin {
  top: number;
  right: number;
  bottom: number;
  left: number;
}

export const MARGIN: Margin = { top: 34, right: 16, bottom: 44, left: 58 };

export class LinearScale {
  constructor(
    readonly d0: number,
    readonly d1: number,
    readonly r0: number,
    readonly r1: number,
  ) {}

  map(x: number): number {
    const t = (x - this.d0) / (this.d1 - this.d0 || 1);
    return this.r0 + t * (this.r1 - this.r0);
  }

  ticks(n = 6): number[] {
    const span = this.d1 - this.d0;
    if (span <= 0) return [this.d0];
    const step = niceStep(span / n);
    const start = Math.ceil(this.d0 / step) * step;
    const out: number[] = [];
    for (let v = start; v <= this.d1 + 1e-12 * Math.abs(span); v += step) {
      out.push(roundTo(v, step));
    }
    return out;
  }
}

function niceStep(raw: number): number {
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const frac = raw / mag;
  const nice = frac < 1.5 ? 1 : frac < 3.5 ? 2 : frac < 7.5 ? 5 : 10;
  return nice * mag;
}

function roundTo(v: number, step: number): number {
  const digits = Math.max(0, -Math.floor(Math.log10(step)) + 1);
  return Number(v.toFixed(digits + 2 > 12 ? 12 : digits + 2));
}

export function fmt(x: number): string {
  if (!Number.isFinite(x)) return String(x);
  const a = Math.abs(x);
  if (a !== 0 && (a < 1e-3 || a >= 1e5)) return x.toExponential(2);
  return String(Number(x.toPrecision(6)));
}

export function extent(values: number[], padFrac = 0.06): [number, number] {
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (!(hi > lo)) {
    lo -= 1;
    hi += 1;
  }
  const pad = (hi - lo) * padFrac;
  return [lo - pad, hi + pad];
}

export class Svg {
  private parts: string[] = [];

  constructor(
    readonly width: number,
    readonly height: number,
  ) {}

  add(s: string): void {
    this.parts.push(s);
  }

  polyline(pts: Array<[number, number]>, stroke: string, width = 1.5, dash = ""): void {
    const d = pts.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    const dashAttr = dash ? ` stroke-dasharray="${dash}"` : "";
    this.add(`<polyline points="${d}" fill="none" stroke="${stroke}" stroke-width="${width}"${dashAttr}/>`);
  }

  circle(x: number, y: number, r: number, fill: string): void {
    this.add(`<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${r}" fill="${fill}"/>`);
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string, width = 1, dash = ""): void {
    const dashAttr = dash ? ` stroke-dasharray="${dash}"` : "";
    this.add(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" stroke="${stroke}" stroke-width="${width}"${dashAttr}/>`,
    );
  }

  text(x: number, y: number, s: string, anchor = "middle", size = 11, fill = "#222"): void {
    this.add(
      `<text x="${fmt(x)}" y="${fmt(y)}" text-anchor="${anchor}" font-family="Helvetica,Arial,sans-serif" font-size="${size}" fill="${fill}">${escapeXml(s)}</text>`,
    );
  }

  render(): string {
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">\n` +
      `<rect width="${this.width}" height="${this.height}" fill="white"/>\n` +
      this.parts.join("\n") +
      `\n</svg>\n`
    );
  }
}

export function escapeXml(s: string): string {
  return s
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

/** Standard axes with ticks and labels inside the margin convention. */
export function axes(
  svg: Svg,
  xs: LinearScale,
  ys: LinearScale,
  xLabel: string,
  yLabel: string,
  title: string,
): void {
  const x0 = xs.r0;
  const x1 = xs.r1;
  const yBottom = ys.r0;
  const yTop = ys.r1;
  svg.line(x0, yBottom, x1, yBottom, "#333");
  svg.line(x0, yBottom, x0, yTop, "#333");
  for (const t of xs.ticks()) {
    const px = xs.map(t);
    svg.line(px, yBottom, px, yBottom + 4, "#333");
    svg.text(px, yBottom + 16, fmt(t), "middle", 10);
  }
  for (const t of ys.ticks()) {
    const py = ys.map(t);
    svg.line(x0 - 4, py, x0, py, "#333");
    svg.text(x0 - 7, py + 3, fmt(t), "end", 10);
  }
  svg.text((x0 + x1) / 2, yBottom + 32, xLabel, "middle", 11);
  svg.add(
    `<text x="14" y="${fmt((yBottom + yTop) / 2)}" text-anchor="middle" font-family="Helvetica,Arial,sans-serif" font-size="11" fill="#222" transform="rotate(-90 14 ${fmt((yBottom + yTop) / 2)})">${escapeXml(yLabel)}</text>`,
  );
  svg.text((x0 + x1) / 2, 18, title, "middle", 12);
}
