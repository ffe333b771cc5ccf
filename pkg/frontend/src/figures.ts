/**
 * The three figure kinds, rendered as deterministic SVG strings:
 *
 *  - angleLines:      measured resonance positions vs sin(phi), overlaid
 *                     with the two predicted lines carried by the summary
 *  - densityProfiles: moving-frame density profiles for both drive
 *                     configurations, grating periods annotated
 *  - resonanceCurve:  v_cm,x (or the scattering proxy) vs detuning with
 *                     vertical markers at the predicted resonances
 *
 * Axis units are either natural detunings in Omega_x ("omega_x") or SI
 * ("si"); the conversion constants come from the summary, never from a
 * local recomputation.
 */
import { numericColumn, readCsv, Table } from "./csv.js";
import { AngleRow, angleRows, lineFits, SchemaError, Summary, Units } from "./schema.js";
import { axes, extent, fmt, LinearScale, MARGIN, Svg } from "./svg.js";

const COLORS = { parallel: "#1f77b4", perp: "#d62728" } as const;
const W = 560;
const H = 400;

function deltaUnit(summary: Summary, units: Units): { factor: number; label: string } {
  const th = summary.theory;
  if (units === "omega_x") {
    return { factor: 1.0 / th.omega_x, label: "detuning  [Omega_x]" };
  }
  const hz = th.units_si?.omega_r_hz;
  if (hz === undefined) throw new SchemaError("missing field 'units_si.omega_r_hz' in summary");
  return { factor: hz / 1e3, label: "detuning / 2pi  [kHz]" };
}

export interface AngleLinesResult {
  svg: string;
  /** per-point distance to that configuration's predicted line (delta units) */
  residuals: Array<{ kind: string; sin_phi: number; residual: number }>;
}

export function angleLines(summary: Summary, units: Units = "omega_x"): AngleLinesResult {
  if (summary.experiment !== "scan-angle") {
    throw new SchemaError(`angle-lines needs a scan-angle summary, got '${summary.experiment}'`);
  }
  const rows = angleRows(summary).filter((r) => r.detected && r.delta_peak !== null);
  if (rows.length === 0) throw new SchemaError("empty point set: no detected resonances to plot");
  const fits = lineFits(summary);
  const { factor, label } = deltaUnit(summary, units);

  const pts = rows.map((r) => ({
    kind: r.kind,
    sx: r.sin_phi,
    y: Math.abs(r.delta_peak as number) * factor,
    unc: (r.delta_peak_unc ?? 0) * factor,
  }));
  const sxs = pts.map((p) => p.sx);
  const [sx0, sx1] = extent([0, ...sxs, Math.max(...sxs) * 1.12]);

  // predicted lines: |delta| = intercept_theory + slope_theory * sin(phi)
  const lines: Array<{ kind: "parallel" | "perp"; a: number; b: number }> = [];
  for (const kind of ["parallel", "perp"] as const) {
    const fit = fits[kind];
    if (!fit) throw new SchemaError(`missing line fit for '${kind}' in summary`);
    if (fit.slope_theory === undefined || fit.intercept_theory === undefined) {
      throw new SchemaError(`missing field 'slope_theory'/'intercept_theory' for '${kind}'`);
    }
    lines.push({ kind, a: fit.intercept_theory * factor, b: fit.slope_theory * factor });
  }
  const lineYs = lines.flatMap((l) => [l.a + l.b * sx0, l.a + l.b * sx1]);
  const [y0, y1] = extent([0, ...pts.map((p) => p.y), ...lineYs]);

  const xs = new LinearScale(sx0, sx1, MARGIN.left, W - MARGIN.right);
  const ys = new LinearScale(y0, y1, H - MARGIN.bottom, MARGIN.top);
  const svg = new Svg(W, H);
  axes(svg, xs, ys, "sin(phi)", label, "resonance positions vs pump-probe half-angle");

  for (const l of lines) {
    svg.polyline(
      [
        [xs.map(sx0), ys.map(l.a + l.b * sx0)],
        [xs.map(sx1), ys.map(l.a + l.b * sx1)],
      ],
      COLORS[l.kind],
      1.4,
      l.kind === "perp" ? "6 3" : "",
    );
  }
  const residuals = pts.map((p) => {
    const line = lines.find((l) => l.kind === p.kind)!;
    const res = p.y - (line.a + line.b * p.sx);
    const px = xs.map(p.sx);
    const py = ys.map(p.y);
    if (p.unc > 0) {
      svg.line(px, ys.map(p.y - p.unc), px, ys.map(p.y + p.unc), COLORS[p.kind as "parallel"], 1);
    }
    svg.circle(px, py, 3.4, COLORS[p.kind as "parallel"]);
    return { kind: p.kind, sin_phi: p.sx, residual: res };
  });

  // legend
  const lx = MARGIN.left + 12;
  svg.circle(lx, MARGIN.top + 12, 3.4, COLORS.parallel);
  svg.text(lx + 8, MARGIN.top + 15, "parallel (matched)", "start");
  svg.circle(lx, MARGIN.top + 28, 3.4, COLORS.perp);
  svg.text(lx + 8, MARGIN.top + 31, "perp (dark)", "start");

  return { svg: svg.render(), residuals };
}

export interface ProfileInput {
  kind: "parallel" | "perp";
  table: Table;
}

export function densityProfiles(summary: Summary, profiles: ProfileInput[],
                                units: Units = "omega_x"): string {
  if (summary.experiment !== "density-profile") {
    throw new SchemaError(`density-profiles needs a density-profile summary, got '${summary.experiment}'`);
  }
  if (profiles.length === 0) throw new SchemaError("empty profile set");
  const res = summary.results as {
    profiles?: Record<string, { q_theory?: number; q_hat?: [number, number] | null; frame_velocity?: number }>;
  };
  if (!res.profiles) throw new SchemaError("missing field 'profiles' in summary results");

  const panelH = 190;
  const svg = new Svg(W, panelH * profiles.length + 40);
  const lenFactor = units === "si" ? (summary.theory.units_si?.length_unit_m ?? NaN) * 1e6 : 1.0;
  if (Number.isNaN(lenFactor)) throw new SchemaError("missing field 'units_si.length_unit_m' in summary");
  const xLabel = units === "si" ? "x - v t  [um]" : "x - v t  [1/k]";

  profiles.forEach((p, i) => {
    const block = res.profiles?.[p.kind];
    if (!block) throw new SchemaError(`missing field 'profiles.${p.kind}' in summary results`);
    if (block.q_theory === undefined) throw new SchemaError(`missing field 'profiles.${p.kind}.q_theory'`);
    const x = numericColumn(p.table, "x").map((v) => v * lenFactor);
    const d = numericColumn(p.table, "density");
    const top = 20 + i * panelH;
    const xs = new LinearScale(Math.min(...x), Math.max(...x), MARGIN.left, W - MARGIN.right);
    const [d0, d1] = extent(d);
    const ys = new LinearScale(d0, d1, top + panelH - 34, top + 14);
    svg.polyline(x.map((v, j) => [xs.map(v), ys.map(d[j])] as [number, number]), COLORS[p.kind], 1.1);
    svg.line(xs.r0, ys.r0, xs.r1, ys.r0, "#333");
    svg.line(xs.r0, ys.r0, xs.r0, ys.r1, "#333");
    const qhat = block.q_hat;
    const period = (2 * Math.PI / (qhat ? qhat[0] : block.q_theory)) * lenFactor;
    const src = qhat ? "measured" : "predicted";
    svg.text(xs.r0 + 6, top + 10, `${p.kind}: grating period ${fmt(period)} (${src}; expected ${fmt(2 * Math.PI / block.q_theory * lenFactor)})`, "start", 11, COLORS[p.kind]);
    if (i === profiles.length - 1) {
      svg.text((xs.r0 + xs.r1) / 2, top + panelH - 12, xLabel, "middle", 11);
    }
  });
  return svg.render();
}

export function resonanceCurve(summary: Summary, table: Table, kind: "parallel" | "perp",
                               units: Units = "omega_x"): string {
  const { factor, label } = deltaUnit(summary, units);
  const deltas = numericColumn(table, "delta").map((v) => v * factor);
  const isProxy = table.columns.includes("s_density");
  const yName = isProxy ? "s_density" : "v_cm_x";
  const y = numericColumn(table, yName);
  if (deltas.length === 0) throw new SchemaError("empty curve");
  const kindTheory = summary.theory[kind];
  if (!kindTheory?.delta_res) throw new SchemaError(`missing field 'theory.${kind}.delta_res'`);

  const [x0, x1] = extent(deltas);
  const [y0, y1] = extent([0, ...y]);
  const xs = new LinearScale(x0, x1, MARGIN.left, W - MARGIN.right);
  const ys = new LinearScale(y0, y1, H - MARGIN.bottom, MARGIN.top);
  const svg = new Svg(W, H);
  const title = isProxy
    ? `phase-matched scattering proxy (${kind})`
    : `center-of-mass velocity (${kind})`;
  axes(svg, xs, ys, label, isProxy ? "S" : "v_cm,x  [omega_r/k]", title);

  // predicted resonance markers (the vertical dashed lines)
  for (const dr of kindTheory.delta_res) {
    const px = dr * factor;
    if (px >= x0 && px <= x1) {
      svg.line(xs.map(px), ys.r0, xs.map(px), ys.r1, "#777", 1, "4 3");
    }
  }
  if (table.columns.includes("v_cm_x_stderr") && !isProxy) {
    const err = numericColumn(table, "v_cm_x_stderr");
    deltas.forEach((d, i) => {
      svg.line(xs.map(d), ys.map(y[i] - err[i]), xs.map(d), ys.map(y[i] + err[i]), COLORS[kind], 1);
    });
  }
  svg.polyline(deltas.map((d, i) => [xs.map(d), ys.map(y[i])] as [number, number]), COLORS[kind], 1.3);
  deltas.forEach((d, i) => svg.circle(xs.map(d), ys.map(y[i]), 2.6, COLORS[kind]));
  return svg.render();
}

export { readCsv };
