import { existsSync, readdirSync } from "fs";
import { join } from "path";
import { numeric, readCsv, requireColumns, Table } from "./csv.js";
import {
  axes, document, dots, extent, heatmapCells, hline, legend, linearScale,
  Panel, panel, PALETTE, polyline,
} from "./svg.js";

export type Renderer = (inDir: string) => string;

const PANEL_W = 360;
const PANEL_H = 260;
const MARGIN = 70;

function load(inDir: string, name: string, columns: string[]): { table: Table; col: Record<string, number> } {
  const path = join(inDir, name);
  if (!existsSync(path)) {
    throw new Error(`required input ${name} not found in ${inDir}`);
  }
  const table = readCsv(path);
  return { table, col: requireColumns(table, columns, path) };
}

function groupBy(table: Table, column: number): Map<string, string[][]> {
  const out = new Map<string, string[][]>();
  for (const row of table.rows) {
    const key = row[column];
    if (!out.has(key)) out.set(key, []);
    out.get(key)!.push(row);
  }
  return out;
}

function panelGrid(n: number, cols: number): Array<[number, number]> {
  const offsets: Array<[number, number]> = [];
  for (let i = 0; i < n; i++) {
    const cx = i % cols;
    const cy = Math.floor(i / cols);
    offsets.push([MARGIN + cx * (PANEL_W + MARGIN), MARGIN / 1.5 + cy * (PANEL_H + MARGIN)]);
  }
  return offsets;
}

function docSize(n: number, cols: number): [number, number] {
  const rows = Math.ceil(n / cols);
  return [cols * (PANEL_W + MARGIN) + MARGIN / 2, rows * (PANEL_H + MARGIN) + MARGIN / 2];
}

/** Fig. 3: Liouvillian eigenvalue scatter, one panel per correlator. */
export function renderFig3(inDir: string): string {
  const tags = ["delta", "gauss1", "constant"];
  const panels: Panel[] = [];
  const offsets = panelGrid(tags.length, 3);
  tags.forEach((tag, i) => {
    const { table, col } = load(inDir, `spectrum_${tag}.csv`, ["j", "re_lambda", "im_lambda"]);
    const re = numeric(table, col.re_lambda);
    const im = numeric(table, col.im_lambda);
    const p = panel(offsets[i][0], offsets[i][1], PANEL_W, PANEL_H,
      [Math.max(-8.5, Math.min(...re) * 1.05), 0.2], extent(im));
    axes(p, "Re lambda", "Im lambda", tag);
    const keep = re.map((r, k) => [r, im[k]]).filter(([r]) => r >= p.x.domain[0]);
    dots(p, keep.map(([r]) => r), keep.map(([, i2]) => i2), PALETTE[i]);
    panels.push(p);
  });
  const [w, h] = docSize(3, 3);
  return document(w, h, panels);
}

/** Fig. 4: gaps vs arctan(sigma); delta sits at 0, constant at pi/2. */
export function renderFig4(inDir: string): string {
  const { table, col } = load(inDir, "gaps.csv", ["kind", "sigma", "delta1", "delta2"]);
  const points: Array<{ x: number; d1: number; d2: number }> = [];
  for (const row of table.rows) {
    const kind = row[col.kind];
    const x = kind === "delta" ? 0 : kind === "constant" ? Math.PI / 2
      : Math.atan(Number(row[col.sigma]));
    points.push({ x, d1: Number(row[col.delta1]), d2: Number(row[col.delta2]) });
  }
  points.sort((a, b) => a.x - b.x);
  const offsets = panelGrid(2, 2);
  const panels: Panel[] = [];
  (["d1", "d2"] as const).forEach((key, i) => {
    const ys = points.map((p) => p[key]);
    const p = panel(offsets[i][0], offsets[i][1], PANEL_W, PANEL_H,
      [-0.05, Math.PI / 2 + 0.05], extent(ys.concat(0)));
    axes(p, "arctan(sigma)", key === "d1" ? "Delta_1" : "Delta_2",
      key === "d1" ? "first gap" : "second gap");
    polyline(p, points.map((q) => q.x), ys, PALETTE[i]);
    dots(p, points.map((q) => q.x), ys, PALETTE[i], 3);
    panels.push(p);
  });
  const [w, h] = docSize(2, 2);
  return document(w, h, panels);
}

/** Fig. 5: gap vs N on log-log axes with the fitted power laws; the
 *  annotated exponents are taken verbatim from fits.csv. */
export function renderFig5(inDir: string): string {
  const gaps = load(inDir, "gaps.csv", ["model", "n_sites", "delta1"]);
  const fits = load(inDir, "fits.csv", ["model", "alpha", "prefactor"]);
  const byModel = groupBy(gaps.table, gaps.col.model);
  const allN: number[] = numeric(gaps.table, gaps.col.n_sites);
  const allG: number[] = numeric(gaps.table, gaps.col.delta1);
  const p = panel(MARGIN, MARGIN / 1.5, PANEL_W * 1.6, PANEL_H * 1.4,
    [Math.min(...allN) * 0.9, Math.max(...allN) * 1.1],
    [Math.min(...allG) * 0.8, Math.max(...allG) * 1.25],
    { xLog: true, yLog: true });
  axes(p, "N", "Delta_1", "gap vs system size");
  const entries: Array<[string, string]> = [];
  let i = 0;
  const annotations: string[] = [];
  for (const [model, rows] of byModel) {
    const color = PALETTE[i % PALETTE.length];
    const ns = rows.map((r) => Number(r[gaps.col.n_sites]));
    const gs = rows.map((r) => Number(r[gaps.col.delta1]));
    polyline(p, ns, gs, color);
    dots(p, ns, gs, color, 3);
    const fitRow = fits.table.rows.find((r) => r[fits.col.model] === model);
    if (fitRow) {
      const alpha = Number(fitRow[fits.col.alpha]);
      const pref = Number(fitRow[fits.col.prefactor]);
      polyline(p, ns, ns.map((n) => pref * n ** -alpha), color, { dash: true, width: 1 });
      // exponent annotation: the exact CSV string, as fitted by the pipeline
      annotations.push(`<text x="${p.left + 10}" y="${p.top + 16 + 14 * i}" font-size="11" fill="${color}">alpha(${model}) = ${fitRow[fits.col.alpha]}</text>`);
      console.log(`alpha(${model}) = ${fitRow[fits.col.alpha]}`);
    }
    entries.push([model, color]);
    i += 1;
  }
  legend(p, entries, p.left + p.width - 170, p.top + p.height - 15 * entries.length);
  p.body.push(...annotations);
  const [w, h] = [PANEL_W * 1.6 + 2 * MARGIN, PANEL_H * 1.4 + MARGIN * 1.4];
  return document(w, h, [p]);
}

/** Fig. 6: entropy curves, full-space panel and CP-sector panel. */
export function renderFig6(inDir: string): string {
  const { table, col } = load(inDir, "entropy.csv", ["t", "S", "correlator_tag", "sector_tag"]);
  let limits: Array<[string, number]> = [];
  if (existsSync(join(inDir, "entropy_limits.csv"))) {
    const lim = load(inDir, "entropy_limits.csv", ["sector_tag", "log_dim"]);
    limits = lim.table.rows.map((r) => [r[lim.col.sector_tag], Number(r[lim.col.log_dim])]);
  }
  const offsets = panelGrid(2, 2);
  const panels: Panel[] = [];
  const ts = numeric(table, col.t);
  const ss = numeric(table, col.S);
  const sMax = Math.max(...ss, ...limits.map(([, v]) => v));
  (["full", "sectors"] as const).forEach((mode, ip) => {
    const rows = table.rows.filter((r) => (mode === "full") === (r[col.sector_tag] === "full"));
    if (rows.length === 0) return;
    const p = panel(offsets[ip][0], offsets[ip][1], PANEL_W, PANEL_H,
      [0, Math.max(...ts)], [0, sMax * 1.08]);
    axes(p, "t", "S_vN", mode === "full" ? "full Hilbert space" : "CP sectors (constant correlator)");
    const series = new Map<string, string[][]>();
    for (const r of rows) {
      const key = mode === "full" ? r[col.correlator_tag] : r[col.sector_tag];
      if (!series.has(key)) series.set(key, []);
      series.get(key)!.push(r);
    }
    const entries: Array<[string, string]> = [];
    let i = 0;
    for (const [key, srows] of series) {
      const color = PALETTE[i % PALETTE.length];
      polyline(p, srows.map((r) => Number(r[col.t])), srows.map((r) => Number(r[col.S])), color);
      entries.push([key, color]);
      i += 1;
    }
    for (const [tag, v] of limits) {
      if ((mode === "full") === (tag === "full")) hline(p, v, "#555");
    }
    legend(p, entries, p.left + 40, p.top + 16);
    panels.push(p);
  });
  const [w, h] = docSize(2, 2);
  return document(w, h, panels);
}

function trajHeatmapPanel(inDir: string, file: string, offset: [number, number],
  title: string, subtracted = true): Panel {
  const { table, col } = load(inDir, file, ["t", "link", "E_in_units_of_e", "subtracted_flag"]);
  const want = subtracted ? "1" : "0";
  const rows = table.rows.filter((r) => r[col.subtracted_flag] === want);
  if (rows.length === 0) {
    throw new Error(`no rows with subtracted_flag=${want} in ${file}`);
  }
  const ts = [...new Set(rows.map((r) => Number(r[col.t])))].sort((a, b) => a - b);
  const links = [...new Set(rows.map((r) => Number(r[col.link])))].sort((a, b) => a - b);
  const grid = new Map<string, number>();
  for (const r of rows) {
    grid.set(`${r[col.t]}|${r[col.link]}`, Number(r[col.E_in_units_of_e]));
  }
  const p = panel(offset[0], offset[1], PANEL_W, PANEL_H,
    [Math.min(...ts), Math.max(...ts)], [Math.min(...links) - 0.5, Math.max(...links) + 0.5]);
  // colormap normalized to [-1, +1], time horizontal
  heatmapCells(p, ts, links, (it, il) => grid.get(`${ts[it]}|${links[il]}`) ?? NaN);
  axes(p, "t", "link", title);
  return p;
}

/** Fig. 7: vacuum string-breaking heatmap (subtracted link fields). */
export function renderFig7(inDir: string): string {
  const p = trajHeatmapPanel(inDir, "traj_vacuum.csv", [MARGIN, MARGIN / 1.5], "vacuum string breaking");
  const [w, h] = docSize(1, 1);
  return document(w, h, [p]);
}

function matchFiles(inDir: string, pattern: RegExp): string[] {
  return readdirSync(inDir).filter((f) => pattern.test(f)).sort();
}

/** Fig. 8: in-medium string heatmaps, one panel per D0 file. */
export function renderFig8(inDir: string): string {
  const files = matchFiles(inDir, /^traj_D[0-9.]+\.csv$/);
  if (files.length === 0) {
    throw new Error(`no traj_D*.csv inputs in ${inDir}`);
  }
  const offsets = panelGrid(files.length, 3);
  const panels = files.map((f, i) =>
    trajHeatmapPanel(inDir, f, offsets[i], f.replace("traj_", "").replace(".csv", "")));
  const [w, h] = docSize(files.length, 3);
  return document(w, h, panels);
}

/** Fig. 9: string-peak delay t*(x) per D0, with the vacuum reference. */
export function renderFig9(inDir: string): string {
  const { table, col } = load(inDir, "tstar.csv", ["site", "t_star", "D0"]);
  const byD0 = groupBy(table, col.D0);
  const sites = numeric(table, col.site);
  const tstars = numeric(table, col.t_star);
  const p = panel(MARGIN, MARGIN / 1.5, PANEL_W * 1.4, PANEL_H * 1.2,
    [Math.min(...sites) - 0.2, 3.2], extent(tstars, 0.1));
  axes(p, "site", "t*", "string-breaking delay");
  const entries: Array<[string, string]> = [];
  let i = 0;
  for (const [d0, rows] of byD0) {
    const keep = rows.filter((r) => Number(r[col.site]) <= 3);
    const color = PALETTE[i % PALETTE.length];
    polyline(p, keep.map((r) => Number(r[col.site])), keep.map((r) => Number(r[col.t_star])), color);
    dots(p, keep.map((r) => Number(r[col.site])), keep.map((r) => Number(r[col.t_star])), color, 3);
    entries.push([Number(d0) === 0 ? "vacuum" : `D0=${d0}`, color]);
    i += 1;
  }
  legend(p, entries, p.left + 20, p.top + 18);
  const [w, h] = [PANEL_W * 1.4 + 2 * MARGIN, PANEL_H * 1.2 + MARGIN * 1.3];
  return document(w, h, [p]);
}

/** Fig. 10: Ebar over the (m, e) plane, one heatmap per mode. */
export function renderFig10(inDir: string): string {
  const { table, col } = load(inDir, "phase.csv", ["m", "e", "mode", "Ebar"]);
  const byMode = groupBy(table, col.mode);
  const offsets = panelGrid(byMode.size, 2);
  const panels: Panel[] = [];
  let i = 0;
  for (const [mode, rows] of byMode) {
    const ms = [...new Set(rows.map((r) => Number(r[col.m])))].sort((a, b) => a - b);
    const es = [...new Set(rows.map((r) => Number(r[col.e])))].sort((a, b) => a - b);
    const grid = new Map<string, number>();
    for (const r of rows) grid.set(`${Number(r[col.m])}|${Number(r[col.e])}`, Number(r[col.Ebar]));
    const p = panel(offsets[i][0], offsets[i][1], PANEL_W, PANEL_H,
      [Math.min(...ms) - 0.25, Math.max(...ms) + 0.25],
      [Math.min(...es) - 0.15, Math.max(...es) + 0.15]);
    heatmapCells(p, ms, es, (im, ie) => grid.get(`${ms[im]}|${es[ie]}`) ?? NaN);
    axes(p, "m", "e", `Ebar (${mode})`);
    panels.push(p);
    i += 1;
  }
  const [w, h] = docSize(byMode.size, 2);
  return document(w, h, panels);
}

/** Fig. 11: real-time string dynamics across the (m, e) regimes. */
export function renderFig11(inDir: string): string {
  const files = matchFiles(inDir, /^traj_m[0-9.]+_e[0-9.]+_(vacuum|medium)\.csv$/);
  if (files.length === 0) {
    throw new Error(`no traj_m*_e*_{vacuum,medium}.csv inputs in ${inDir}`);
  }
  const vacuum = files.filter((f) => f.includes("vacuum"));
  const medium = files.filter((f) => f.includes("medium"));
  const ordered = vacuum.concat(medium);
  const offsets = panelGrid(ordered.length, Math.max(vacuum.length, 1));
  const panels = ordered.map((f, i) =>
    trajHeatmapPanel(inDir, f, offsets[i], f.replace("traj_", "").replace(".csv", "")));
  const [w, h] = docSize(ordered.length, Math.max(vacuum.length, 1));
  return document(w, h, panels);
}

function dilationPanels(inDir: string, groupColumns: ("n_cyl" | "r_H" | "r_J")[],
  title: string): Panel[] {
  const { table, col } = load(inDir, "dilation.csv",
    ["t", "n_cyl", "r_H", "r_J", "observable_sum_E", "error_vs_rk4"]);
  const key = (r: string[]) => groupColumns.map((c) => `${c}=${r[col[c]]}`).join(" ");
  const series = new Map<string, string[][]>();
  for (const r of table.rows) {
    const k = key(r);
    if (!series.has(k)) series.set(k, []);
    series.get(k)!.push(r);
  }
  const ts = numeric(table, col.t);
  const obs = numeric(table, col.observable_sum_E);
  const errs = numeric(table, col.error_vs_rk4).filter((e) => e > 0);
  const offsets = panelGrid(2, 2);
  const top = panel(offsets[0][0], offsets[0][1], PANEL_W, PANEL_H,
    [0, Math.max(...ts)], extent(obs));
  axes(top, "t", "sum_n E_n", title);
  const bottom = panel(offsets[1][0], offsets[1][1], PANEL_W, PANEL_H,
    [0, Math.max(...ts)],
    [Math.max(1e-12, Math.min(...errs, 1e-3) / 2), Math.max(...errs, 1e-6) * 2],
    { yLog: true });
  axes(bottom, "t", "|deviation|", "deviation from reference");
  const entries: Array<[string, string]> = [];
  let i = 0;
  for (const [k, rows] of series) {
    const color = PALETTE[i % PALETTE.length];
    polyline(top, rows.map((r) => Number(r[col.t])), rows.map((r) => Number(r[col.observable_sum_E])), color);
    const pos = rows.filter((r) => Number(r[col.error_vs_rk4]) > 0);
    if (pos.length > 1) {
      polyline(bottom, pos.map((r) => Number(r[col.t])), pos.map((r) => Number(r[col.error_vs_rk4])), color);
    }
    entries.push([k, color]);
    i += 1;
  }
  legend(top, entries, top.left + 30, top.top + 16);
  return [top, bottom];
}

/** Fig. 13: dilation cycles vs the exact Lindblad evolution. */
export function renderFig13(inDir: string): string {
  const panels = dilationPanels(inDir, ["n_cyl"], "Stinespring cycles vs RK4");
  const [w, h] = docSize(2, 2);
  return document(w, h, panels);
}

/** Fig. 14: closed-system Trotter curves (r_H total steps, exact = inf). */
export function renderFig14(inDir: string): string {
  const panels = dilationPanels(inDir, ["r_H"], "closed-system Trotterization");
  const [w, h] = docSize(2, 2);
  return document(w, h, panels);
}

/** Fig. 15: per-cycle Trotterization of U_H and/or U_J. */
export function renderFig15(inDir: string): string {
  const panels = dilationPanels(inDir, ["r_H", "r_J"], "dilated-evolution Trotterization");
  const [w, h] = docSize(2, 2);
  return document(w, h, panels);
}

export const RENDERERS: Record<string, Renderer> = {
  fig3: renderFig3,
  fig4: renderFig4,
  fig5: renderFig5,
  fig6: renderFig6,
  fig7: renderFig7,
  fig8: renderFig8,
  fig9: renderFig9,
  fig10: renderFig10,
  fig11: renderFig11,
  fig13: renderFig13,
  fig14: renderFig14,
  fig15: renderFig15,
};
