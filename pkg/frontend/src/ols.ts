export interface PowerLawFit {
    slope: number;
    intercept: number;
    stderrSlope: number;
    rSquared: number;
}

/** Ordinary least squares on (log x, log y); x and y must be positive. */
export function fitPowerLaw(xs: number[], ys: number[]): PowerLawFit {
    if (xs.length !== ys.length || xs.length < 3) {
        throw new Error(`need at least 3 matched points, got ${xs.length}`);
    }
    if (xs.some((x) => x <= 0) || ys.some((y) => y <= 0)) {
        throw new Error("power-law fit needs positive values");
    }
    const lx = xs.map(Math.log);
    const ly = ys.map(Math.log);
    const m = lx.length;
    const xbar = lx.reduce((a, b) => a + b, 0) / m;
    const ybar = ly.reduce((a, b) => a + b, 0) / m;
    let sxx = 0;
    let sxy = 0;
    let syy = 0;
    for (let i = 0; i < m; i++) {
        sxx += (lx[i] - xbar) ** 2;
        sxy += (lx[i] - xbar) * (ly[i] - ybar);
        syy += (ly[i] - ybar) ** 2;
    }
    if (sxx === 0) throw new Error("need at least two distinct x values");
    const slope = sxy / sxx;
    const intercept = ybar - slope * xbar;
    let rss = 0;
    for (let i = 0; i < m; i++) {
        rss += (ly[i] - intercept - slope * lx[i]) ** 2;
    }
    const dof = Math.max(m - 2, 1);
    return {
        slope,
        intercept,
        stderrSlope: Math.sqrt(rss / dof / sxx),
        rSquared: syy > 0 ? 1 - rss / syy : 1,
    };
}

/** Averages ys grouped by the matching key, preserving first-seen key order. */
export function groupMeans(keys: number[], values: number[]): { keys: number[]; means: number[] } {
    const order: number[] = [];
    const sums = new Map<number, { total: number; count: number }>();
    keys.forEach((k, i) => {
        if (!sums.has(k)) {
            sums.set(k, { total: 0, count: 0 });
            order.push(k);
        }
        const cell = sums.get(k)!;
        cell.total += values[i];
        cell.count += 1;
    });
    return {
        keys: order,
        means: order.map((k) => sums.get(k)!.total / sums.get(k)!.count),
    };
}
