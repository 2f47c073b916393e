import { readFileSync } from "node:fs";

export class SchemaError extends Error {}

export interface Table {
    header: string[];
    rows: Record<string, string>[];
}

/** Read a comma-separated file and check the columns a figure needs. */
export function readCsv(path: string, requiredColumns: string[]): Table {
    let text: string;
    try {
        text = readFileSync(path, "utf8");
    } catch (err) {
        throw new SchemaError(`cannot read ${path}: ${(err as Error).message}`);
    }
    const lines = text.split("\n").filter((line) => line.length > 0);
    if (lines.length === 0) {
        throw new SchemaError(`${path} is empty`);
    }
    const header = lines[0].split(",");
    const missing = requiredColumns.filter((c) => !header.includes(c));
    if (missing.length > 0) {
        throw new SchemaError(
            `${path} is missing required columns: ${missing.join(", ")}`);
    }
    if (lines.length === 1) {
        throw new SchemaError(`${path} has a header but no data rows`);
    }
    const rows = lines.slice(1).map((line, i) => {
        const cells = line.split(",");
        if (cells.length !== header.length) {
            throw new SchemaError(
                `${path} row ${i + 1} has ${cells.length} cells, expected ${header.length}`);
        }
        const row: Record<string, string> = {};
        header.forEach((name, j) => { row[name] = cells[j]; });
        return row;
    });
    return { header, rows };
}

export function num(row: Record<string, string>, column: string): number {
    const value = Number(row[column]);
    if (!Number.isFinite(value)) {
        throw new SchemaError(`non-numeric value ${row[column]!} in column ${column}`);
    }
    return value;
}
