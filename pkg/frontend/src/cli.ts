/**
 * Figure generator CLI.
 *
 *   node dist/cli.js angle-lines      --summary <scan_angle_summary.json> --out fig.svg [--units omega_x|si]
 *   node dist/cli.js density-profiles --summary <density_profile_summary.json> --csv par.csv --csv perp.csv --out fig.svg [--units ...]
 *   node dist/cli.js resonance-curve  --summary <summary.json> --csv scan.csv --kind parallel --out fig.svg [--units ...]
 *
 * Exit 0 on success (file written); errors go to stderr and nothing is
 * written.
 */
import { writeFileSync } from "node:fs";
import { basename } from "node:path";

import { angleLines, densityProfiles, readCsv, resonanceCurve } from "./figures.js";
import { loadSummary, Units } from "./schema.js";

interface Args {
  command: string;
  summary?: string;
  csv: string[];
  out?: string;
  units: Units;
  kind: "parallel" | "perp";
}

function parseArgs(argv: string[]): Args {
  const args: Args = { command: argv[0] ?? "", csv: [], units: "omega_x", kind: "parallel" };
  for (let i = 1; i < argv.length; i++) {
    const a = argv[i];
    const next = () => {
      const v = argv[++i];
      if (v === undefined) throw new Error(`missing value for ${a}`);
      return v;
    };
    if (a === "--summary") args.summary = next();
    else if (a === "--csv") args.csv.push(next());
    else if (a === "--out") args.out = next();
    else if (a === "--units") args.units = next() as Units;
    else if (a === "--kind") args.kind = next() as "parallel" | "perp";
    else throw new Error(`unknown argument ${a}`);
  }
  if (!["omega_x", "si"].includes(args.units)) throw new Error(`bad --units ${args.units}`);
  return args;
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
    if (!args.summary) throw new Error("--summary is required");
    if (!args.out) throw new Error("--out is required");
    const summary = loadSummary(args.summary);
    let svg: string;
    if (args.command === "angle-lines") {
      svg = angleLines(summary, args.units).svg;
    } else if (args.command === "density-profiles") {
      if (args.csv.length === 0) throw new Error("--csv profile files are required");
      const profiles = args.csv.map((p) => ({
        kind: (basename(p).includes("perp") ? "perp" : "parallel") as "parallel" | "perp",
        table: readCsv(p),
      }));
      svg = densityProfiles(summary, profiles, args.units);
    } else if (args.command === "resonance-curve") {
      if (args.csv.length !== 1) throw new Error("exactly one --csv curve file is required");
      svg = resonanceCurve(summary, readCsv(args.csv[0]), args.kind, args.units);
    } else {
      throw new Error(
        `unknown command '${args.command}' (use angle-lines | density-profiles | resonance-curve)`,
      );
    }
    writeFileSync(args.out, svg);
    process.stdout.write(`${args.out}\n`);
    return 0;
  } catch (err) {
    process.stderr.write(`error: ${err instanceof Error ? err.message : String(err)}\n`);
    return 1;
  }
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(main(process.argv.slice(2)));
}
