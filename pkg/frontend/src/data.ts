/**
 * Loading of zrp experiment artifacts.
 *
 * Every CSV written by the CLI is RFC-4180 with one header row and is
 * accompanied by a sibling `<name>.meta.json` carrying the experiment's
 * configuration echo plus derived quantities (e.g. the predicted gamma).
 * Plot scripts never recompute any of that; they only read it here.
 */

import { readFileSync, existsSync } from "fs";

export interface Table {
  header: string[];
  rows: string[][];
}

export interface Meta {
  experiment: string;
  seed: number;
  gamma?: number;
  prediction?: number;
  columns?: string[];
  [key: string]: unknown;
}

/** Minimal RFC-4180 parser (quoted fields, CRLF or LF rows). */
export function parseCsv(text: string): Table {
  const rows: string[][] = [];
  let field = "";
  let row: string[] = [];
  let inQuotes = false;
  let i = 0;
  const push = () => {
    row.push(field);
    field = "";
  };
  const endRow = () => {
    push();
    rows.push(row);
    row = [];
  };
  while (i < text.length) {
    const c = text[i];
    if (inQuotes) {
      if (c === '"') {
        if (text[i + 1] === '"') {
          field += '"';
          i += 2;
          continue;
        }
        inQuotes = false;
        i += 1;
        continue;
      }
      field += c;
      i += 1;
      continue;
    }
    if (c === '"') {
      inQuotes = true;
      i += 1;
    } else if (c === ",") {
      push();
      i += 1;
    } else if (c === "\r" && text[i + 1] === "\n") {
      endRow();
      i += 2;
    } else if (c === "\n") {
      endRow();
      i += 1;
    } else {
      field += c;
      i += 1;
    }
  }
  if (field.length > 0 || row.length > 0) endRow();
  if (rows.length === 0) throw new Error("empty CSV");
  return { header: rows[0], rows: rows.slice(1) };
}

export function metaPath(csvPath: string): string {
  return csvPath.replace(/\.csv$/, "") + ".meta.json";
}

/** Load a CSV plus its mandatory metadata sidecar. */
export function loadArtifact(csvPath: string): { table: Table; meta: Meta } {
  if (!existsSync(csvPath)) throw new Error(`input CSV not found: ${csvPath}`);
  const mp = metaPath(csvPath);
  if (!existsSync(mp)) throw new Error(`metadata sidecar not found: ${mp}`);
  const table = parseCsv(readFileSync(csvPath, "utf-8"));
  const meta = JSON.parse(readFileSync(mp, "utf-8")) as Meta;
  if (table.rows.length === 0) throw new Error(`no data rows in ${csvPath}`);
  return { table, meta };
}

export function column(table: Table, name: string): number[] {
  const idx = table.header.indexOf(name);
  if (idx < 0) throw new Error(`column ${name} missing (have: ${table.header.join(", ")})`);
  return table.rows.map((r) => Number(r[idx]));
}

export function columnRaw(table: Table, name: string): string[] {
  const idx = table.header.indexOf(name);
  if (idx < 0) throw new Error(`column ${name} missing`);
  return table.rows.map((r) => r[idx]);
}

/** Simple `<input.csv> -o <out.svg>` argument convention. */
export function parseArgs(argv: string[]): { input: string; output: string } {
  let input = "";
  let output = "";
  for (let i = 0; i < argv.length; i++) {
    if (argv[i] === "-o" || argv[i] === "--output") {
      output = argv[++i] ?? "";
    } else if (!input) {
      input = argv[i];
    } else {
      throw new Error(`unexpected argument: ${argv[i]}`);
    }
  }
  if (!input || !output) {
    throw new Error("usage: <input.csv> -o <out.svg>");
  }
  return { input, output };
}
