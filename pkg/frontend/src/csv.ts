/** Minimal reader for the simulator's CSV outputs (header + float columns). */
import { readFileSync } from "node:fs";

export interface Table {
  columns: string[];
  rows: Record<string, number | string>[];
}

export function readCsv(path: string): Table {
  const text = readFileSync(path, "utf8").trim();
  const lines = text.split("\n");
  const columns = lines[0].split(",");
  const rows = lines.slice(1).map((line) => {
    const parts = line.split(",");
    const row: Record<string, number | string> = {};
    columns.forEach((c, i) => {
      const v = parts[i] ?? "";
      const num = Number(v);
      row[c] = v !== "" && Number.isFinite(num) ? num : v;
    });
    return row;
  });
  return { columns, rows };
}

export function numericColumn(table: Table, name: string): number[] {
  if (!table.columns.includes(name)) {
    throw new Error(`CSV has no column '${name}' (found: ${table.columns.join(", ")})`);
  }
  return table.rows
    .map((r) => r[name])
    .filter((v): v is number => typeof v === "number");
}
