import { readFileSync } from "fs";

export interface Table {
  header: string[];
  rows: string[][];
}

/** Strict reader for the simulator's comma-separated outputs: no quoting,
 *  first line is the header, every row must match its width. */
export function readCsv(path: string): Table {
  const text = readFileSync(path, "utf8").trim();
  if (text.length === 0) {
    throw new Error(`empty CSV: ${path}`);
  }
  const lines = text.split("\n");
  const header = lines[0].split(",");
  const rows = lines.slice(1).map((line, i) => {
    const cells = line.split(",");
    if (cells.length !== header.length) {
      throw new Error(`row ${i + 2} of ${path} has ${cells.length} cells, expected ${header.length}`);
    }
    return cells;
  });
  if (rows.length === 0) {
    throw new Error(`no data rows in ${path}`);
  }
  return { header, rows };
}

/** Fail fast unless every named column exists; returns index lookup. */
export function requireColumns(table: Table, names: string[], path: string): Record<string, number> {
  const out: Record<string, number> = {};
  for (const name of names) {
    const idx = table.header.indexOf(name);
    if (idx < 0) {
      throw new Error(`missing column '${name}' in ${path} (found: ${table.header.join(", ")})`);
    }
    out[name] = idx;
  }
  return out;
}

export function numeric(table: Table, column: number): number[] {
  return table.rows.map((r) => Number(r[column]));
}
