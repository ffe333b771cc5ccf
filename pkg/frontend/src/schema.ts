/**
 * Types and validation for the simulator's persisted outputs.
 *
 * The scripts here never recompute physics: every overlay value (resonance
 * lines, predicted detunings, grating wavevectors, unit conversions) is
 * read from the summary JSON, which embeds the closed-form predictions
 * next to the simulated results.
 */
import { readFileSync } from "node:fs";

export const SUPPORTED_SCHEMA = "1";

export type Units = "omega_x" | "si";

export interface TheoryBlock {
  omega_x: number;
  v_mode: number;
  parallel: KindTheory;
  perp: KindTheory;
  units_si: {
    omega_r_hz: number;
    omega_r_rad_s: number;
    velocity_unit_m_s: number;
    wavelength_m: number;
    [k: string]: number;
  };
}

export interface KindTheory {
  delta_res: [number, number];
  delta_res_over_omega_x: [number, number];
  q_magnitude: number;
  mismatch: number;
  phase_matched: boolean;
  [k: string]: unknown;
}

export interface AngleRow {
  kind: "parallel" | "perp";
  phi_deg: number;
  sin_phi: number;
  branch: "positive" | "negative";
  delta_peak: number | null;
  delta_peak_unc: number | null;
  delta_theory: number;
  detected: boolean;
}

export interface LineFit {
  slope: number;
  intercept: number;
  slope_theory: number;
  intercept_theory: number;
  n_points: number;
}

export interface Summary {
  schema_version: string;
  experiment: string;
  config: Record<string, unknown>;
  theory: TheoryBlock;
  results: Record<string, unknown>;
  files: Record<string, string>;
}

export class SchemaError extends Error {}

function requireField(obj: Record<string, unknown>, field: string, where: string): unknown {
  if (!(field in obj) || obj[field] === undefined || obj[field] === null) {
    throw new SchemaError(`missing field '${field}' in ${where}`);
  }
  return obj[field];
}

/** Parse and validate a summary; schema-version mismatch is an error, not a guess. */
export function loadSummary(path: string): Summary {
  const raw = JSON.parse(readFileSync(path, "utf8")) as Record<string, unknown>;
  const version = requireField(raw, "schema_version", path);
  if (version !== SUPPORTED_SCHEMA) {
    throw new SchemaError(
      `summary schema_version ${JSON.stringify(version)} is not the supported '${SUPPORTED_SCHEMA}' (${path})`,
    );
  }
  requireField(raw, "experiment", path);
  const theory = requireField(raw, "theory", path) as Record<string, unknown>;
  for (const f of ["omega_x", "parallel", "perp", "units_si"]) {
    requireField(theory, f, `${path}#theory`);
  }
  requireField(raw, "results", path);
  return raw as unknown as Summary;
}

export function angleRows(summary: Summary): AngleRow[] {
  const res = summary.results as { table?: AngleRow[] };
  if (!res.table) throw new SchemaError("summary carries no angle table");
  return res.table;
}

export function lineFits(summary: Summary): Record<string, LineFit | null> {
  const res = summary.results as { fits?: Record<string, LineFit | null> };
  if (!res.fits) throw new SchemaError("summary carries no line fits");
  return res.fits;
}
