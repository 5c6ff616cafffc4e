/**
 * Dependency-free SVG line charts.
 *
 * Just enough for the experiment figures: linear/log axes with ticks,
 * polyline series with a legend, and labelled vertical marker lines
 * (used for analytic predictions such as the mixing-time constant).
 */

export interface Series {
  x: number[];
  y: number[];
  color: string;
  label?: string;
  width?: number;
  opacity?: number;
  dash?: string;
}

export interface VMarker {
  value: number;
  label: string;
  color?: string;
}

export interface ChartSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  series: Series[];
  markers?: VMarker[];
  yLog?: boolean;
  width?: number;
  height?: number;
}

const MARGIN = { top: 48, right: 24, bottom: 52, left: 64 };

function niceTicks(lo: number, hi: number, count = 6): number[] {
  if (!(hi > lo)) return [lo];
  const span = hi - lo;
  const step0 = span / Math.max(1, count - 1);
  const mag = Math.pow(10, Math.floor(Math.log10(step0)));
  const step = [1, 2, 2.5, 5, 10].map((m) => m * mag).find((s) => span / s <= count) ?? mag * 10;
  const start = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = start; v <= hi + 1e-12 * span; v += step) ticks.push(Number(v.toPrecision(12)));
  return ticks;
}

function logTicks(lo: number, hi: number): number[] {
  const ticks: number[] = [];
  for (let e = Math.floor(Math.log10(lo)); e <= Math.ceil(Math.log10(hi)); e++) {
    const v = Math.pow(10, e);
    if (v >= lo / 1.0001 && v <= hi * 1.0001) ticks.push(v);
  }
  return ticks.length >= 2 ? ticks : [lo, hi];
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 0.01 && a < 10000) return String(Number(v.toPrecision(4)));
  return v.toExponential(1);
}

const esc = (s: string) =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");

/** Render the chart spec to a standalone SVG document. */
export function renderChart(spec: ChartSpec): string {
  const W = spec.width ?? 800;
  const H = spec.height ?? 500;
  const plotW = W - MARGIN.left - MARGIN.right;
  const plotH = H - MARGIN.top - MARGIN.bottom;

  const xs = spec.series.flatMap((s) => s.x).filter(Number.isFinite);
  let ys = spec.series.flatMap((s) => s.y).filter(Number.isFinite);
  if (spec.yLog) ys = ys.filter((v) => v > 0);
  if (xs.length === 0 || ys.length === 0) throw new Error("nothing to plot");
  const markerXs = (spec.markers ?? []).map((m) => m.value);
  let xLo = Math.min(...xs, ...markerXs);
  let xHi = Math.max(...xs, ...markerXs);
  if (xHi === xLo) xHi = xLo + 1;
  let yLo = Math.min(...ys);
  let yHi = Math.max(...ys);
  if (spec.yLog) {
    yLo = Math.pow(10, Math.floor(Math.log10(yLo)));
    yHi = Math.pow(10, Math.ceil(Math.log10(yHi)));
  } else {
    const pad = 0.05 * (yHi - yLo || 1);
    yLo = Math.min(0, yLo) === 0 && yLo >= 0 ? 0 : yLo - pad;
    yHi = yHi + pad;
  }

  const sx = (v: number) => MARGIN.left + ((v - xLo) / (xHi - xLo)) * plotW;
  const sy = (v: number) =>
    spec.yLog
      ? MARGIN.top + plotH - ((Math.log10(v) - Math.log10(yLo)) / (Math.log10(yHi) - Math.log10(yLo))) * plotH
      : MARGIN.top + plotH - ((v - yLo) / (yHi - yLo)) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" viewBox="0 0 ${W} ${H}" font-family="sans-serif">`,
  );
  parts.push(`<rect width="${W}" height="${H}" fill="white"/>`);
  parts.push(
    `<text x="${W / 2}" y="24" text-anchor="middle" font-size="16" font-weight="bold">${esc(spec.title)}</text>`,
  );

  const xTicks = niceTicks(xLo, xHi);
  const yTicks = spec.yLog ? logTicks(yLo, yHi) : niceTicks(yLo, yHi);
  for (const t of xTicks) {
    const x = sx(t);
    parts.push(`<line x1="${x}" y1="${MARGIN.top}" x2="${x}" y2="${MARGIN.top + plotH}" stroke="#eee"/>`);
    parts.push(
      `<text x="${x}" y="${MARGIN.top + plotH + 18}" text-anchor="middle" font-size="11">${fmt(t)}</text>`,
    );
  }
  for (const t of yTicks) {
    const y = sy(t);
    parts.push(`<line x1="${MARGIN.left}" y1="${y}" x2="${MARGIN.left + plotW}" y2="${y}" stroke="#eee"/>`);
    parts.push(
      `<text x="${MARGIN.left - 6}" y="${y + 4}" text-anchor="end" font-size="11">${fmt(t)}</text>`,
    );
  }
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" fill="none" stroke="#333"/>`,
  );
  parts.push(
    `<text x="${MARGIN.left + plotW / 2}" y="${H - 12}" text-anchor="middle" font-size="13" data-role="x-label">${esc(spec.xLabel)}</text>`,
  );
  parts.push(
    `<text x="16" y="${MARGIN.top + plotH / 2}" text-anchor="middle" font-size="13" transform="rotate(-90 16 ${MARGIN.top + plotH / 2})" data-role="y-label">${esc(spec.yLabel)}</text>`,
  );

  for (const m of spec.markers ?? []) {
    const x = sx(m.value);
    const color = m.color ?? "#c0392b";
    parts.push(
      `<line x1="${x}" y1="${MARGIN.top}" x2="${x}" y2="${MARGIN.top + plotH}" stroke="${color}" stroke-dasharray="6 4" data-role="marker" data-label="${esc(m.label)}" data-value="${m.value}"/>`,
    );
    parts.push(
      `<text x="${x + 4}" y="${MARGIN.top + 14}" font-size="12" fill="${color}">${esc(m.label)}</text>`,
    );
  }

  for (const s of spec.series) {
    const pts: string[] = [];
    for (let i = 0; i < s.x.length; i++) {
      const yv = s.y[i];
      if (!Number.isFinite(yv) || (spec.yLog && yv <= 0)) continue;
      pts.push(`${sx(s.x[i]).toFixed(2)},${sy(yv).toFixed(2)}`);
    }
    if (pts.length === 0) continue;
    const dash = s.dash ? ` stroke-dasharray="${s.dash}"` : "";
    const opacity = s.opacity !== undefined ? ` stroke-opacity="${s.opacity}"` : "";
    parts.push(
      `<polyline points="${pts.join(" ")}" fill="none" stroke="${s.color}" stroke-width="${s.width ?? 1.6}"${dash}${opacity}/>`,
    );
  }

  let ly = MARGIN.top + 8;
  for (const s of spec.series) {
    if (!s.label) continue;
    const lx = MARGIN.left + plotW - 150;
    parts.push(
      `<line x1="${lx}" y1="${ly}" x2="${lx + 22}" y2="${ly}" stroke="${s.color}" stroke-width="2"${s.dash ? ` stroke-dasharray="${s.dash}"` : ""}/>`,
    );
    parts.push(`<text x="${lx + 28}" y="${ly + 4}" font-size="12">${esc(s.label)}</text>`);
    ly += 18;
  }

  parts.push("</svg>");
  return parts.join("\n");
}

export const PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];
