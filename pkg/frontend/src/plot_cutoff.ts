#!/usr/bin/env node
/**
 * Cutoff profile figure: TV lower bound vs t/n, one curve per n, with the
 * predicted rescaled mixing time read from the metadata as a vertical
 * marker.  Exact TV curves (present for small n) are overlaid dashed.
 *
 * Usage: plot_cutoff <cutoff.csv> -o <out.svg>
 */

import { writeFileSync } from "fs";
import { column, columnRaw, loadArtifact, parseArgs } from "./data.js";
import { PALETTE, Series, renderChart } from "./svg.js";

export function buildCutoffSvg(csvPath: string): string {
  const { table, meta } = loadArtifact(csvPath);
  const ns = column(table, "n");
  const t = column(table, "t_over_n");
  const lb = column(table, "tv_lb");
  const exact = columnRaw(table, "tv_exact");

  const distinct = [...new Set(ns)].sort((a, b) => a - b);
  const series: Series[] = [];
  distinct.forEach((n, k) => {
    const idx = ns.map((v, i) => (v === n ? i : -1)).filter((i) => i >= 0);
    series.push({
      x: idx.map((i) => t[i]),
      y: idx.map((i) => lb[i]),
      color: PALETTE[k % PALETTE.length],
      label: `n = ${n}`,
      width: 2,
    });
    const exIdx = idx.filter((i) => exact[i] !== "");
    if (exIdx.length > 0) {
      series.push({
        x: exIdx.map((i) => t[i]),
        y: exIdx.map((i) => Number(exact[i])),
        color: PALETTE[k % PALETTE.length],
        label: `n = ${n} (exact)`,
        dash: "4 3",
        width: 1.4,
      });
    }
  });

  const gamma = meta.gamma;
  if (typeof gamma !== "number") throw new Error("metadata is missing gamma");
  return renderChart({
    title: "Distance to equilibrium vs rescaled time",
    xLabel: "t / n",
    yLabel: "TV lower bound",
    series,
    markers: [{ value: gamma, label: "gamma" }],
  });
}

export function main(argv: string[]): void {
  const { input, output } = parseArgs(argv);
  writeFileSync(output, buildCutoffSvg(input));
  console.log(output);
}

const invoked = process.argv[1] ?? "";
if (invoked.endsWith("plot_cutoff.js") || invoked.endsWith("plot_cutoff.ts")) {
  main(process.argv.slice(2));
}
