// Chart geometry: pure functions from data arrays to SVG coordinate strings,
// plus thin DOM builders on top of them. Scaling is the only arithmetic the
// UI performs on server numbers.

export interface Margins {
  left: number;
  right: number;
  top: number;
  bottom: number;
}

export const DENSITY_MARGINS: Margins = { left: 34, right: 8, top: 8, bottom: 20 };
export const SPARK_MARGINS: Margins = { left: 2, right: 2, top: 3, bottom: 3 };

/** Affine map from [d0, d1] to [r0, r1]; a degenerate domain maps to the range midpoint. */
export function linearScale(
  d0: number,
  d1: number,
  r0: number,
  r1: number,
): (x: number) => number {
  const span = d1 - d0;
  if (span === 0) {
    const mid = (r0 + r1) / 2;
    return () => mid;
  }
  const k = (r1 - r0) / span;
  return (x: number) => r0 + (x - d0) * k;
}

/** Round tick positions covering [lo, hi] at a 1/2/5 step near `target` intervals. */
export function niceTicks(lo: number, hi: number, target = 5): number[] {
  if (!(hi > lo) || !isFinite(lo) || !isFinite(hi)) return [lo];
  const rawStep = (hi - lo) / Math.max(1, target);
  const power = Math.floor(Math.log10(rawStep));
  const base = 10 ** power;
  let step = 10 * base;
  for (const mult of [1, 2, 5]) {
    if (mult * base >= rawStep) {
      step = mult * base;
      break;
    }
  }
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + step * 1e-9; v += step) {
    // Snap to the step grid so floating-point drift doesn't accumulate.
    ticks.push(Math.round(v / step) * step);
  }
  return ticks;
}

/** Trapezoid-rule integral of the sampled curve (xs strictly increasing). */
export function trapezoidArea(xs: readonly number[], ys: readonly number[]): number {
  if (xs.length !== ys.length) {
    throw new Error(`length mismatch: ${xs.length} vs ${ys.length}`);
  }
  let area = 0;
  for (let i = 1; i < xs.length; i++) {
    area += ((xs[i] - xs[i - 1]) * (ys[i] + ys[i - 1])) / 2;
  }
  return area;
}

function plotScales(
  xs: readonly number[],
  ys: readonly number[],
  width: number,
  height: number,
  margins: Margins,
  yMax?: number,
) {
  const x = linearScale(
    xs[0],
    xs[xs.length - 1],
    margins.left,
    width - margins.right,
  );
  const top = yMax ?? Math.max(...ys);
  const y = linearScale(0, top > 0 ? top : 1, height - margins.bottom, margins.top);
  return { x, y };
}

/** Closed SVG path for the filled area under a density curve. */
export function densityAreaPath(
  xs: readonly number[],
  ys: readonly number[],
  width: number,
  height: number,
  margins: Margins = DENSITY_MARGINS,
): string {
  if (xs.length < 2) return "";
  const { x, y } = plotScales(xs, ys, width, height, margins);
  const baseline = y(0);
  const parts = [`M ${fmtCoord(x(xs[0]))} ${fmtCoord(baseline)}`];
  for (let i = 0; i < xs.length; i++) {
    parts.push(`L ${fmtCoord(x(xs[i]))} ${fmtCoord(y(ys[i]))}`);
  }
  parts.push(`L ${fmtCoord(x(xs[xs.length - 1]))} ${fmtCoord(baseline)}`, "Z");
  return parts.join(" ");
}

/** "x,y x,y …" attribute value for an SVG <polyline> through the points. */
export function polylinePoints(
  xs: readonly number[],
  ys: readonly number[],
  width: number,
  height: number,
  margins: Margins = SPARK_MARGINS,
  yDomain?: [number, number],
): string {
  if (xs.length === 0) return "";
  const x = linearScale(
    xs[0],
    xs[xs.length - 1],
    margins.left,
    width - margins.right,
  );
  const [lo, hi] = yDomain ?? [Math.min(...ys), Math.max(...ys)];
  const y = linearScale(lo, hi, height - margins.bottom, margins.top);
  return xs.map((xi, i) => `${fmtCoord(x(xi))},${fmtCoord(y(ys[i]))}`).join(" ");
}

function fmtCoord(v: number): string {
  return String(Math.round(v * 100) / 100);
}

/** Compact numeric label: fixed-point in a readable range, scientific outside it. */
export function formatNumber(x: number, digits = 4): string {
  if (!isFinite(x)) return String(x);
  if (x === 0) return "0";
  const magnitude = Math.abs(x);
  if (magnitude >= 1e5 || magnitude < 1e-4) return x.toExponential(digits - 1);
  return x.toPrecision(digits).replace(/\.?0+$/, "");
}

const SVG_NS = "http://www.w3.org/2000/svg";

export interface DensityChartOptions {
  width?: number;
  height?: number;
  marker?: number | null; // vertical line, e.g. at the posterior mean
}

/** Filled density chart with x-axis ticks and an optional marker line. */
export function densityChart(
  doc: Document,
  xs: readonly number[],
  ys: readonly number[],
  options: DensityChartOptions = {},
): SVGSVGElement {
  const width = options.width ?? 560;
  const height = options.height ?? 180;
  const margins = DENSITY_MARGINS;
  const svg = doc.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("class", "density-chart");
  svg.setAttribute("role", "img");
  if (xs.length < 2) return svg;

  const area = doc.createElementNS(SVG_NS, "path");
  area.setAttribute("d", densityAreaPath(xs, ys, width, height, margins));
  area.setAttribute("class", "density-area");
  svg.appendChild(area);

  const { x, y } = plotScales(xs, ys, width, height, margins);
  const axisY = height - margins.bottom;
  const axis = doc.createElementNS(SVG_NS, "line");
  axis.setAttribute("x1", fmtCoord(margins.left));
  axis.setAttribute("x2", fmtCoord(width - margins.right));
  axis.setAttribute("y1", fmtCoord(axisY));
  axis.setAttribute("y2", fmtCoord(axisY));
  axis.setAttribute("class", "axis-line");
  svg.appendChild(axis);

  for (const tick of niceTicks(xs[0], xs[xs.length - 1], 6)) {
    const gx = fmtCoord(x(tick));
    const mark = doc.createElementNS(SVG_NS, "line");
    mark.setAttribute("x1", gx);
    mark.setAttribute("x2", gx);
    mark.setAttribute("y1", fmtCoord(axisY));
    mark.setAttribute("y2", fmtCoord(axisY + 4));
    mark.setAttribute("class", "axis-line");
    svg.appendChild(mark);
    const label = doc.createElementNS(SVG_NS, "text");
    label.setAttribute("x", gx);
    label.setAttribute("y", fmtCoord(axisY + 15));
    label.setAttribute("text-anchor", "middle");
    label.setAttribute("class", "axis-label");
    label.textContent = formatNumber(tick, 3);
    svg.appendChild(label);
  }

  if (options.marker != null) {
    const mx = fmtCoord(x(options.marker));
    const marker = doc.createElementNS(SVG_NS, "line");
    marker.setAttribute("x1", mx);
    marker.setAttribute("x2", mx);
    marker.setAttribute("y1", fmtCoord(margins.top));
    marker.setAttribute("y2", fmtCoord(axisY));
    marker.setAttribute("class", "marker-line");
    svg.appendChild(marker);
  }
  const peak = doc.createElementNS(SVG_NS, "text");
  peak.setAttribute("x", fmtCoord(margins.left - 6));
  peak.setAttribute("y", fmtCoord(y(Math.max(...ys)) + 4));
  peak.setAttribute("text-anchor", "end");
  peak.setAttribute("class", "axis-label");
  peak.textContent = formatNumber(Math.max(...ys), 3);
  svg.appendChild(peak);
  return svg;
}

export interface SparklineOptions {
  width?: number;
  height?: number;
  yDomain?: [number, number];
}

/** Minimal line chart of a numeric series against its index (1-based ticks). */
export function sparkline(
  doc: Document,
  values: readonly number[],
  options: SparklineOptions = {},
): SVGSVGElement {
  const width = options.width ?? 240;
  const height = options.height ?? 48;
  const svg = doc.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("class", "sparkline");
  svg.setAttribute("role", "img");
  if (values.length === 0) return svg;
  const xs = values.map((_, i) => i + 1);
  const line = doc.createElementNS(SVG_NS, "polyline");
  line.setAttribute(
    "points",
    polylinePoints(xs, values, width, height, SPARK_MARGINS, options.yDomain),
  );
  line.setAttribute("class", "spark-line");
  svg.appendChild(line);
  return svg;
}
