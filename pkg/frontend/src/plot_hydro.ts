#!/usr/bin/env node
/**
 * Dissolution figure: simulated per-site rescaled occupancies (one faint
 * line per replica) overlaid with the analytic limiting curves, which are
 * read from the CSV's *_pred columns rather than recomputed here.
 *
 * Usage: plot_hydro <hydro.csv> -o <out.svg>
 */

import { writeFileSync } from "fs";
import { column, loadArtifact, parseArgs } from "./data.js";
import { PALETTE, Series, renderChart } from "./svg.js";

export function buildHydroSvg(csvPath: string): string {
  const { table, meta } = loadArtifact(csvPath);
  const simCols = table.header.filter((h) => /^site\d+_sim$/.test(h));
  if (simCols.length === 0) throw new Error("no site columns in hydro CSV");
  const ns = column(table, "n");
  const reps = column(table, "replica");
  const t = column(table, "t_over_n");

  const series: Series[] = [];
  const nLargest = Math.max(...ns);
  simCols.forEach((simCol, k) => {
    const predCol = simCol.replace("_sim", "_pred");
    const sim = column(table, simCol);
    const pred = column(table, predCol);
    const color = PALETTE[k % PALETTE.length];
    const replicas = [...new Set(reps)];
    for (const rep of replicas) {
      const idx = t.map((_, i) => i).filter((i) => reps[i] === rep && ns[i] === nLargest);
      series.push({
        x: idx.map((i) => t[i]),
        y: idx.map((i) => sim[i]),
        color,
        width: 1,
        opacity: 0.45,
      });
    }
    const idx0 = t.map((_, i) => i).filter((i) => reps[i] === replicas[0] && ns[i] === nLargest);
    series.push({
      x: idx0.map((i) => t[i]),
      y: idx0.map((i) => pred[i]),
      color,
      label: `site ${k + 1} limit`,
      dash: "6 3",
      width: 2.2,
    });
  });

  const markers = typeof meta.prediction === "number" && meta.prediction > 0
    ? [{ value: meta.prediction, label: "dissolution time" }]
    : [];
  return renderChart({
    title: `Solid-phase dissolution (n = ${nLargest})`,
    xLabel: "t / n",
    yLabel: "occupancy / n",
    series,
    markers,
  });
}

export function main(argv: string[]): void {
  const { input, output } = parseArgs(argv);
  writeFileSync(output, buildHydroSvg(input));
  console.log(output);
}

const invoked = process.argv[1] ?? "";
if (invoked.endsWith("plot_hydro.js") || invoked.endsWith("plot_hydro.ts")) {
  main(process.argv.slice(2));
}
