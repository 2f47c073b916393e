import { writeFileSync } from "node:fs";
import * as echarts from "echarts";
import { num, readCsv } from "./csv.js";
import { fitPowerLaw, groupMeans } from "./ols.js";

const WIDTH = 860;
const HEIGHT = 600;
const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

export interface RenderResult {
    outPath: string;
    slopes: Record<string, number>;
}

interface Series {
    name: string;
    points: [number, number][];
}

/** Strip zrender's per-process counters from class names so identical inputs
    produce identical bytes: renumber classes in order of first appearance. */
function canonicalizeSvg(svg: string): string {
    const unprefixed = svg.replace(/zr\d+-/g, "zr-");
    const mapping = new Map<string, string>();
    return unprefixed.replace(/zr-cls-(\d+)/g, (_m, num: string) => {
        if (!mapping.has(num)) mapping.set(num, String(mapping.size));
        return `zr-cls-${mapping.get(num)}`;
    });
}

function renderLogLog(title: string, xName: string, yName: string,
                      series: Series[], annotations: string[],
                      outPath: string): void {
    const chart = echarts.init(null, null, {
        renderer: "svg", ssr: true, width: WIDTH, height: HEIGHT,
    });
    chart.setOption({
        animation: false,
        color: PALETTE,
        title: {
            text: title,
            subtext: annotations.join("    "),
            left: "center",
        },
        legend: { bottom: 0 },
        grid: { left: 70, right: 30, top: 80, bottom: 60 },
        xAxis: { type: "log", name: xName, nameLocation: "middle", nameGap: 28 },
        yAxis: { type: "log", name: yName, nameLocation: "middle", nameGap: 52 },
        series: series.map((s) => ({
            name: s.name,
            type: "line",
            showSymbol: true,
            symbolSize: 6,
            data: s.points,
        })),
    });
    const svg = canonicalizeSvg(chart.renderToSVGString());
    chart.dispose();
    writeFileSync(outPath, svg);
}

/** Log-log error-vs-n plot with one series and one refit slope per dimension. */
export function renderRates(inPath: string, outPath: string): RenderResult {
    const table = readCsv(inPath, ["fit", "d", "n", "trial", "loc_error"]);
    const dims = [...new Set(table.rows.map((r) => r.d))].sort();
    const series: Series[] = [];
    const annotations: string[] = [];
    const slopes: Record<string, number> = {};
    for (const d of dims) {
        const rows = table.rows.filter((r) => r.d === d && r.loc_error !== "nan");
        const { keys, means } = groupMeans(rows.map((r) => num(r, "n")),
                                           rows.map((r) => num(r, "loc_error")));
        const fit = fitPowerLaw(keys, means);
        slopes[d] = fit.slope;
        annotations.push(`slope d=${d}: ${fit.slope.toFixed(3)}`);
        series.push({
            name: `d=${d} (${rows[0].fit})`,
            points: keys.map((n, i) => [n, means[i]] as [number, number]),
        });
    }
    renderLogLog("Location error vs sample size", "n", "mean location error",
                 series, annotations, outPath);
    return { outPath, slopes };
}

/** Iterate-norm decay with the scalar surrogate overlaid on the same axes. */
export function renderDecay(inPath: string, outPath: string): RenderResult {
    const table = readCsv(inPath, ["d", "t", "theta_norm", "surrogate"]);
    const dims = [...new Set(table.rows.map((r) => r.d))].sort();
    const series: Series[] = [];
    for (const d of dims) {
        const rows = table.rows.filter((r) => r.d === d);
        const iterate = rows
            .filter((r) => num(r, "theta_norm") > 0 && num(r, "t") > 0)
            .map((r) => [num(r, "t"), num(r, "theta_norm")] as [number, number]);
        const surrogate = rows
            .filter((r) => num(r, "surrogate") > 0 && num(r, "t") > 0)
            .map((r) => [num(r, "t"), num(r, "surrogate")] as [number, number]);
        series.push({ name: `d=${d} iterate`, points: iterate });
        series.push({ name: `d=${d} surrogate`, points: surrogate });
    }
    renderLogLog("Population-operator iterate decay", "t", "|theta_t|",
                 series, [], outPath);
    return { outPath, slopes: {} };
}

/** Likelihood gap vs theta for both scan modes, with refit exponents. */
export function renderSurface(inPath: string, outPath: string): RenderResult {
    const table = readCsv(inPath, ["mode", "theta", "gap"]);
    const modes = [...new Set(table.rows.map((r) => r.mode))];
    const series: Series[] = [];
    const annotations: string[] = [];
    const slopes: Record<string, number> = {};
    for (const mode of modes) {
        const rows = table.rows.filter((r) => r.mode === mode && num(r, "gap") > 0);
        const fit = fitPowerLaw(rows.map((r) => num(r, "theta")),
                                rows.map((r) => num(r, "gap")));
        slopes[mode] = fit.slope;
        annotations.push(`${mode}: exponent ${fit.slope.toFixed(3)}`);
        series.push({
            name: mode,
            points: rows.map((r) => [num(r, "theta"), num(r, "gap")] as [number, number]),
        });
    }
    renderLogLog("Population likelihood gap below the truth", "theta", "gap",
                 series, annotations, outPath);
    return { outPath, slopes };
}

/** Mean sup-deviation vs ball radius per operator, with refit exponents. */
export function renderPerturbation(inPath: string, outPath: string): RenderResult {
    const table = readCsv(inPath, ["operator", "d", "n", "r", "mean_sup_dev"]);
    const operators = [...new Set(table.rows.map((r) => r.operator))];
    const series: Series[] = [];
    const annotations: string[] = [];
    const slopes: Record<string, number> = {};
    for (const op of operators) {
        const rows = table.rows.filter((r) => r.operator === op && num(r, "mean_sup_dev") > 0);
        const fit = fitPowerLaw(rows.map((r) => num(r, "r")),
                                rows.map((r) => num(r, "mean_sup_dev")));
        slopes[op] = fit.slope;
        annotations.push(`${op}: exponent ${fit.slope.toFixed(3)}`);
        series.push({
            name: op,
            points: rows.map((r) => [num(r, "r"), num(r, "mean_sup_dev")] as [number, number]),
        });
    }
    renderLogLog("Sample-vs-population operator deviation over balls", "radius r",
                 "mean sup deviation", series, annotations, outPath);
    return { outPath, slopes };
}
