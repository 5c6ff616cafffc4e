import { describe, expect, it } from "vitest";
import { existsSync, mkdtempSync, readFileSync, statSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";

import { loadArtifact, metaPath, parseCsv } from "../src/data.js";
import { buildCutoffSvg, main as cutoffMain } from "../src/plot_cutoff.js";
import { buildHydroSvg } from "../src/plot_hydro.js";
import { buildCoalescenceSvg } from "../src/plot_coalescence.js";

const GOLDEN = join(__dirname, "..", "golden");
const outDir = mkdtempSync(join(tmpdir(), "zrp-plots-"));

describe("csv parsing", () => {
  it("round-trips the golden cutoff table", () => {
    const table = parseCsv(readFileSync(join(GOLDEN, "cutoff.csv"), "utf-8"));
    expect(table.header).toEqual(["n", "t_over_n", "tv_lb", "lb_ci_low", "lb_ci_high", "tv_exact"]);
    expect(table.rows.length).toBeGreaterThan(10);
  });

  it("handles quoted fields and CRLF", () => {
    const table = parseCsv('a,b\r\n"x,y",2\r\n');
    expect(table.rows[0]).toEqual(["x,y", "2"]);
  });

  it("rejects empty input", () => {
    expect(() => parseCsv("")).toThrow();
  });

  it("requires the metadata sidecar", () => {
    const lonely = join(outDir, "lonely.csv");
    writeFileSync(lonely, "t,tv\r\n0,1\r\n");
    expect(() => loadArtifact(lonely)).toThrow(/metadata/);
  });
});

describe("cutoff figure", () => {
  const csv = join(GOLDEN, "cutoff.csv");

  it("writes a non-empty SVG with the expected axes", () => {
    const out = join(outDir, "cutoff.svg");
    cutoffMain([csv, "-o", out]);
    expect(existsSync(out)).toBe(true);
    expect(statSync(out).size).toBeGreaterThan(0);
    const svg = readFileSync(out, "utf-8");
    expect(svg).toContain("<svg");
    expect(svg).toContain('data-role="x-label">t / n<');
    expect(svg).toContain('data-role="y-label">TV lower bound<');
  });

  it("places the gamma marker at the metadata value", () => {
    const meta = JSON.parse(readFileSync(metaPath(csv), "utf-8"));
    const svg = buildCutoffSvg(csv);
    expect(svg).toContain(`data-label="gamma" data-value="${meta.gamma}"`);
  });

  it("draws one labelled curve per n", () => {
    const svg = buildCutoffSvg(csv);
    expect(svg).toContain("n = 24");
    expect(svg).toContain("n = 48");
  });

  it("rejects an empty curve", () => {
    const empty = join(outDir, "empty.csv");
    writeFileSync(empty, "n,t_over_n,tv_lb,lb_ci_low,lb_ci_high,tv_exact\r\n");
    writeFileSync(metaPath(empty), JSON.stringify({ experiment: "cutoff", gamma: 1.5 }));
    expect(() => buildCutoffSvg(empty)).toThrow();
  });
});

describe("hydro figure", () => {
  const csv = join(GOLDEN, "hydro.csv");

  it("writes a non-empty SVG with per-site overlays", () => {
    const svg = buildHydroSvg(csv);
    expect(svg).toContain("<svg");
    expect(svg).toContain("site 1 limit");
    expect(svg).toContain("site 2 limit");
    expect(svg).toContain('data-role="y-label">occupancy / n<');
    const out = join(outDir, "hydro.svg");
    writeFileSync(out, svg);
    expect(statSync(out).size).toBeGreaterThan(0);
  });

  it("marks the predicted dissolution time from metadata", () => {
    const meta = JSON.parse(readFileSync(metaPath(csv), "utf-8"));
    const svg = buildHydroSvg(csv);
    expect(svg).toContain(`data-value="${meta.prediction}"`);
  });
});

describe("coalescence figure", () => {
  const csv = join(GOLDEN, "coalescence.csv");

  it("writes a non-empty log-scale SVG", () => {
    const svg = buildCoalescenceSvg(csv);
    expect(svg).toContain("<svg");
    expect(svg).toContain("P(coalescence time &gt; t)");
    const out = join(outDir, "coalescence.svg");
    writeFileSync(out, svg);
    expect(statSync(out).size).toBeGreaterThan(0);
  });
});
