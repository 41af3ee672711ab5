import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { column, readTable } from "../src/csv.js";
import { EmptyInput, MissingColumn } from "../src/errors.js";
import { render } from "../src/figures.js";
import { main } from "../src/cli.js";

const FIXTURES = join(__dirname, "fixtures");

describe("convergence figure", () => {
  const spec = {
    kind: "loglog-slope" as const,
    input: join(FIXTURES, "convergence.csv"),
    output: "convergence.svg",
    x: "eps",
    y: "error",
    group: "t",
    slope_column: "slope",
    reference_slopes: [0.5],
    title: "effective-dynamics error rate",
  };

  it("annotates slopes verbatim from the CSV", () => {
    const svg = render(spec);
    const table = readTable(spec.input);
    const slopes = column(table, "slope");
    const ts = column(table, "t");
    for (const t of new Set(ts)) {
      const slope = slopes[ts.indexOf(t)];
      expect(svg).toContain(`t=${t}: slope ${slope}`);
    }
    expect(svg).toContain("reference slope 0.5");
  });

  it("is deterministic byte for byte", () => {
    expect(render(spec)).toEqual(render(spec));
  });
});

describe("defect figure", () => {
  const spec = {
    kind: "loglog-slope" as const,
    input: join(FIXTURES, "defects.csv"),
    output: "defects.svg",
    x: "eta",
    y: "commutator_defect",
    group: "N",
    reference_slopes: [1, 2, 3],
    title: "almost-invariance defects",
  };

  it("draws one curve per truncation order with reference slopes", () => {
    const svg = render(spec);
    for (const n of [0, 1, 2]) expect(svg).toContain(`N=${n}`);
    for (const s of [1, 2, 3]) expect(svg).toContain(`reference slope ${s}`);
    const curves = svg.match(/<polyline/g) ?? [];
    // three data curves + three reference lines
    expect(curves.length).toBe(6);
  });
});

describe("decay figure", () => {
  it("annotates the fitted rates from the table", () => {
    const input = join(FIXTURES, "decay.csv");
    const svg = render({
      kind: "decay-fit", input, output: "decay.svg",
    });
    const table = readTable(input);
    const names = table.rows.map((r) => String(r[0]));
    const values = column(table, "value");
    const gauss = values[names.indexOf("gaussian_rate")];
    expect(svg).toContain(`gaussian_rate: ${gauss}`);
  });
});

describe("drift snapshots figure", () => {
  it("renders peaks and the prediction from evolve.csv", () => {
    const svg = render({
      kind: "drift-snapshots",
      input: join(FIXTURES, "evolve.csv"),
      output: "drift.svg",
    });
    expect(svg).toContain("drift prediction");
    expect((svg.match(/<circle/g) ?? []).length).toBeGreaterThan(0);
  });
});

describe("heatmap figure", () => {
  it("renders a field snapshot deterministically", () => {
    const files = ["field_t0.5.bin", "field_t1.bin"];
    const input = join(FIXTURES, files[0]);
    const spec = { kind: "heatmap" as const, input, output: "field.svg" };
    const svg = render(spec);
    expect(svg).toContain("peak magnitude");
    expect(render(spec)).toEqual(svg);
  });
});

describe("error handling", () => {
  it("raises EmptyInput on a header-only table", () => {
    const dir = mkdtempSync(join(tmpdir(), "fig-"));
    const path = join(dir, "empty.csv");
    writeFileSync(path, "eps,t,error,slope\n");
    expect(() => render({
      kind: "loglog-slope", input: path, output: "x.svg",
    })).toThrow(EmptyInput);
  });

  it("raises MissingColumn when a requested column is absent", () => {
    const dir = mkdtempSync(join(tmpdir(), "fig-"));
    const path = join(dir, "cols.csv");
    writeFileSync(path, "a,b\n1,2\n");
    expect(() => render({
      kind: "loglog-slope", input: path, output: "x.svg", x: "eps",
      y: "error",
    })).toThrow(MissingColumn);
  });
});

describe("cli", () => {
  it("renders a spec file into the output directory", () => {
    const dir = mkdtempSync(join(tmpdir(), "fig-"));
    const spec = [{
      kind: "loglog-slope",
      input: join(FIXTURES, "convergence.csv"),
      output: "convergence.svg",
      x: "eps", y: "error", group: "t", slope_column: "slope",
      reference_slopes: [0.5],
    }];
    const specPath = join(dir, "figures.json");
    writeFileSync(specPath, JSON.stringify(spec));
    const code = main(["render", "--spec", specPath, "--out", dir]);
    expect(code).toBe(0);
    const svg = readFileSync(join(dir, "convergence.svg"), "utf-8");
    expect(svg).toContain("<svg");
  });

  it("exits 2 on a malformed spec", () => {
    const dir = mkdtempSync(join(tmpdir(), "fig-"));
    const specPath = join(dir, "bad.json");
    writeFileSync(specPath, JSON.stringify({ kind: "nope" }));
    expect(main(["render", "--spec", specPath, "--out", dir])).toBe(2);
  });
});
