/** Small SVG plotting toolkit: linear/log scales, axes, polylines, scatter
 *  markers and cell heatmaps, assembled as plain SVG strings. */

export interface Scale {
  (x: number): number;
  domain: [number, number];
  range: [number, number];
  ticks(n?: number): number[];
}

function makeScale(domain: [number, number], range: [number, number], log: boolean): Scale {
  const [d0, d1] = log ? [Math.log10(domain[0]), Math.log10(domain[1])] : domain;
  const f = ((x: number) => {
    const t = log ? Math.log10(x) : x;
    const u = d1 === d0 ? 0.5 : (t - d0) / (d1 - d0);
    return range[0] + u * (range[1] - range[0]);
  }) as Scale;
  f.domain = domain;
  f.range = range;
  f.ticks = (n = 5) => {
    if (log) {
      const ticks: number[] = [];
      for (let p = Math.ceil(Math.log10(domain[0])); p <= Math.floor(Math.log10(domain[1])); p++) {
        ticks.push(10 ** p);
      }
      return ticks.length >= 2 ? ticks : [domain[0], domain[1]];
    }
    const step = niceStep((domain[1] - domain[0]) / n);
    const ticks: number[] = [];
    for (let v = Math.ceil(domain[0] / step) * step; v <= domain[1] + 1e-12; v += step) {
      ticks.push(Number(v.toPrecision(12)));
    }
    return ticks;
  };
  return f;
}

function niceStep(raw: number): number {
  const mag = 10 ** Math.floor(Math.log10(Math.abs(raw) || 1));
  const r = raw / mag;
  return (r >= 5 ? 10 : r >= 2 ? 5 : r >= 1 ? 2 : 1) * mag;
}

export const linearScale = (d: [number, number], r: [number, number]) => makeScale(d, r, false);
export const logScale = (d: [number, number], r: [number, number]) => makeScale(d, r, true);

export function extent(values: number[], pad = 0.05): [number, number] {
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (lo === hi) {
    lo -= 1;
    hi += 1;
  }
  const span = hi - lo;
  return [lo - pad * span, hi + pad * span];
}

export const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
  "#8c564b", "#17becf", "#7f7f7f", "#bcbd22", "#e377c2"];

/** Symmetric diverging colormap on [-1, 1]: blue (negative) through white to red. */
export function divergingColor(v: number): string {
  const t = Math.max(-1, Math.min(1, v));
  const ramp = (from: number[], to: number[], u: number) =>
    from.map((c, i) => Math.round(c + (to[i] - c) * u));
  const rgb = t < 0 ? ramp([255, 255, 255], [5, 48, 97], -t)
    : ramp([255, 255, 255], [165, 15, 21], t);
  return `rgb(${rgb[0]},${rgb[1]},${rgb[2]})`;
}

export interface Panel {
  x: Scale;
  y: Scale;
  body: string[];
  left: number;
  top: number;
  width: number;
  height: number;
}

export function panel(left: number, top: number, width: number, height: number,
  xDomain: [number, number], yDomain: [number, number],
  opts: { xLog?: boolean; yLog?: boolean } = {}): Panel {
  const x = (opts.xLog ? logScale : linearScale)(xDomain, [left, left + width]);
  const y = (opts.yLog ? logScale : linearScale)(yDomain, [top + height, top]);
  return { x, y, body: [], left, top, width, height };
}

export function axes(p: Panel, xLabel: string, yLabel: string, title = ""): void {
  const b = p.body;
  const x0 = p.left, x1 = p.left + p.width, y0 = p.top, y1 = p.top + p.height;
  b.push(`<rect x="${x0}" y="${y0}" width="${p.width}" height="${p.height}" fill="none" stroke="#333"/>`);
  for (const t of p.x.ticks()) {
    const px = p.x(t);
    if (px < x0 - 1e-6 || px > x1 + 1e-6) continue;
    b.push(`<line x1="${px.toFixed(2)}" y1="${y1}" x2="${px.toFixed(2)}" y2="${y1 + 5}" stroke="#333"/>`);
    b.push(`<text x="${px.toFixed(2)}" y="${y1 + 18}" font-size="11" text-anchor="middle">${fmt(t)}</text>`);
  }
  for (const t of p.y.ticks()) {
    const py = p.y(t);
    if (py < y0 - 1e-6 || py > y1 + 1e-6) continue;
    b.push(`<line x1="${x0 - 5}" y1="${py.toFixed(2)}" x2="${x0}" y2="${py.toFixed(2)}" stroke="#333"/>`);
    b.push(`<text x="${x0 - 8}" y="${(py + 4).toFixed(2)}" font-size="11" text-anchor="end">${fmt(t)}</text>`);
  }
  b.push(`<text x="${(x0 + x1) / 2}" y="${y1 + 34}" font-size="13" text-anchor="middle">${escape(xLabel)}</text>`);
  b.push(`<text x="${x0 - 46}" y="${(y0 + y1) / 2}" font-size="13" text-anchor="middle" transform="rotate(-90 ${x0 - 46} ${(y0 + y1) / 2})">${escape(yLabel)}</text>`);
  if (title) {
    b.push(`<text x="${(x0 + x1) / 2}" y="${y0 - 8}" font-size="14" text-anchor="middle" font-weight="bold">${escape(title)}</text>`);
  }
}

function fmt(v: number): string {
  if (v !== 0 && (Math.abs(v) >= 1e4 || Math.abs(v) < 1e-3)) {
    return v.toExponential(0);
  }
  return String(Number(v.toPrecision(6)));
}

export function escape(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function polyline(p: Panel, xs: number[], ys: number[], color: string,
  opts: { dash?: boolean; width?: number } = {}): void {
  const pts = xs.map((x, i) => `${p.x(x).toFixed(2)},${p.y(ys[i]).toFixed(2)}`).join(" ");
  const dash = opts.dash ? ' stroke-dasharray="6,4"' : "";
  p.body.push(`<polyline points="${pts}" fill="none" stroke="${color}" stroke-width="${opts.width ?? 1.6}"${dash}/>`);
}

export function dots(p: Panel, xs: number[], ys: number[], color: string, r = 2.2): void {
  for (let i = 0; i < xs.length; i++) {
    p.body.push(`<circle cx="${p.x(xs[i]).toFixed(2)}" cy="${p.y(ys[i]).toFixed(2)}" r="${r}" fill="${color}" fill-opacity="0.75"/>`);
  }
}

export function hline(p: Panel, y: number, color: string, dash = true): void {
  p.body.push(`<line x1="${p.x.range[0]}" y1="${p.y(y).toFixed(2)}" x2="${p.x.range[1]}" y2="${p.y(y).toFixed(2)}" stroke="${color}"${dash ? ' stroke-dasharray="5,4"' : ""}/>`);
}

export function heatmapCells(p: Panel, xs: number[], ys: number[],
  value: (ix: number, iy: number) => number): void {
  const xEdges = cellEdges(xs, p.x);
  const yEdges = cellEdges(ys, p.y);
  for (let ix = 0; ix < xs.length; ix++) {
    for (let iy = 0; iy < ys.length; iy++) {
      const v = value(ix, iy);
      if (!Number.isFinite(v)) continue;
      const [xa, xb] = xEdges[ix];
      const [ya, yb] = yEdges[iy];
      p.body.push(`<rect x="${Math.min(xa, xb).toFixed(2)}" y="${Math.min(ya, yb).toFixed(2)}" width="${Math.abs(xb - xa).toFixed(2)}" height="${Math.abs(yb - ya).toFixed(2)}" fill="${divergingColor(v)}"/>`);
    }
  }
}

function cellEdges(centers: number[], scale: Scale): Array<[number, number]> {
  return centers.map((c, i) => {
    const lo = i === 0 ? c - (centers[1] - centers[0]) / 2 : (centers[i - 1] + c) / 2;
    const hi = i === centers.length - 1 ? c + (c - centers[i - 1]) / 2 : (c + centers[i + 1]) / 2;
    return [scale(lo), scale(hi)];
  });
}

export function legend(p: Panel, entries: Array<[string, string]>, x?: number, y?: number): void {
  let yy = y ?? p.top + 14;
  const xx = x ?? p.left + p.width - 150;
  for (const [label, color] of entries) {
    p.body.push(`<line x1="${xx}" y1="${yy - 4}" x2="${xx + 22}" y2="${yy - 4}" stroke="${color}" stroke-width="2"/>`);
    p.body.push(`<text x="${xx + 28}" y="${yy}" font-size="11">${escape(label)}</text>`);
    yy += 15;
  }
}

export function document(width: number, height: number, panels: Panel[], extra: string[] = []): string {
  const body = panels.flatMap((p) => p.body).concat(extra).join("\n  ");
  return `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">
  <rect width="${width}" height="${height}" fill="white"/>
  ${body}
</svg>
`;
}
