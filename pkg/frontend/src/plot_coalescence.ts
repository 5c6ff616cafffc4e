#!/usr/bin/env node
/**
 * Coalescence figure: survival probability of the tagged-pair
 * coalescence time on a log scale, with its confidence band.
 *
 * Usage: plot_coalescence <coalescence.csv> -o <out.svg>
 */

import { writeFileSync } from "fs";
import { column, loadArtifact, parseArgs } from "./data.js";
import { renderChart } from "./svg.js";

export function buildCoalescenceSvg(csvPath: string): string {
  const { table, meta } = loadArtifact(csvPath);
  const t = column(table, "t");
  const survival = column(table, "survival");
  const lo = column(table, "ci_low");
  const hi = column(table, "ci_high");

  const censored = Number(meta.censored_fraction ?? 0);
  return renderChart({
    title: `Tagged-pair coalescence (censored fraction ${censored.toFixed(3)})`,
    xLabel: "t",
    yLabel: "P(coalescence time > t)",
    yLog: true,
    series: [
      { x: t, y: survival, color: "#1f77b4", label: "survival", width: 2.2 },
      { x: t, y: lo, color: "#1f77b4", label: "95% CI", dash: "3 3", width: 1 },
      { x: t, y: hi, color: "#1f77b4", dash: "3 3", width: 1 },
    ],
  });
}

export function main(argv: string[]): void {
  const { input, output } = parseArgs(argv);
  writeFileSync(output, buildCoalescenceSvg(input));
  console.log(output);
}

const invoked = process.argv[1] ?? "";
if (invoked.endsWith("plot_coalescence.js") || invoked.endsWith("plot_coalescence.ts")) {
  main(process.argv.slice(2));
}
