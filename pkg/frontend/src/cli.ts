import { parseArgs } from "node:util";
import { SchemaError } from "./csv.js";
import { RenderResult } from "./figures.js";

/** Shared entry-point wrapper: parse --in/--out, map errors to exit codes. */
export function runRenderer(name: string,
                            render: (inPath: string, outPath: string) => RenderResult): void {
    let inPath: string | undefined;
    let outPath: string | undefined;
    try {
        const { values } = parseArgs({
            args: process.argv.slice(2),
            options: {
                in: { type: "string" },
                out: { type: "string" },
            },
        });
        inPath = values.in;
        outPath = values.out;
    } catch (err) {
        process.stderr.write(`usage: ${name} --in <csv> --out <image>\n`);
        process.stderr.write(`${(err as Error).message}\n`);
        process.exit(2);
    }
    if (!inPath || !outPath) {
        process.stderr.write(`usage: ${name} --in <csv> --out <image>\n`);
        process.exit(2);
    }
    try {
        const result = render(inPath, outPath);
        const slopes = Object.entries(result.slopes)
            .map(([k, v]) => `${k}: ${v.toFixed(3)}`)
            .join(", ");
        process.stdout.write(`wrote ${result.outPath}${slopes ? ` (${slopes})` : ""}\n`);
    } catch (err) {
        if (err instanceof SchemaError) {
            process.stderr.write(`schema error: ${err.message}\n`);
            process.exit(2);
        }
        process.stderr.write(`error: ${(err as Error).message}\n`);
        process.exit(3);
    }
}
