/** Deterministic SVG string construction: same inputs, same bytes. */

export function fmt(x: number): string {
  if (!Number.isFinite(x)) return "0";
  if (Number.isInteger(x) && Math.abs(x) < 1e15) return String(x);
  return Number(x.toPrecision(6)).toString();
}

export function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function el(tag: string, attrs: Record<string, string | number>, children: string[] = []): string {
  const parts = Object.entries(attrs)
    .map(([k, v]) => `${k}="${typeof v === "number" ? fmt(v) : esc(v)}"`)
    .join(" ");
  if (children.length === 0) return `<${tag} ${parts}/>`;
  return `<${tag} ${parts}>${children.join("")}</${tag}>`;
}

export function text(x: number, y: number, content: string, attrs: Record<string, string | number> = {}): string {
  return el("text", { x, y, "font-family": "monospace", "font-size": 11, fill: "#222", ...attrs }, [esc(content)]);
}

export interface Frame {
  width: number;
  height: number;
  left: number;
  right: number;
  top: number;
  bottom: number;
}

export const DEFAULT_FRAME: Frame = { width: 840, height: 520, left: 80, right: 120, top: 48, bottom: 56 };

export function document(frame: Frame, body: string[], title: string): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${frame.width}" height="${frame.height}" viewBox="0 0 ${frame.width} ${frame.height}">`,
    el("rect", { x: 0, y: 0, width: frame.width, height: frame.height, fill: "#ffffff" }),
    text(frame.left, frame.top - 20, title, { "font-size": 14, "font-weight": "bold" }),
    ...body,
    "</svg>",
  ].join("\n");
}

/** Linear map from [d0, d1] to [r0, r1]; degenerate domains hit the midpoint. */
export function linearScale(d0: number, d1: number, r0: number, r1: number): (x: number) => number {
  const span = d1 - d0;
  if (span === 0) return () => (r0 + r1) / 2;
  return (x: number) => r0 + ((x - d0) / span) * (r1 - r0);
}

export function niceTicks(lo: number, hi: number, count = 6): number[] {
  if (!(hi > lo)) return [lo];
  const raw = (hi - lo) / count;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const norm = raw / mag;
  const step = (norm >= 5 ? 5 : norm >= 2 ? 2 : 1) * mag;
  const start = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = start; v <= hi + 1e-12 * Math.abs(hi); v += step) ticks.push(Number(v.toPrecision(12)));
  return ticks;
}

export function logTicks(lo: number, hi: number): number[] {
  const ticks: number[] = [];
  for (let e = Math.ceil(Math.log10(lo)); e <= Math.floor(Math.log10(hi)); e++) {
    ticks.push(Math.pow(10, e));
  }
  return ticks.length > 0 ? ticks : [lo];
}

export function axes(
  frame: Frame,
  xTicks: Array<[number, string]>,
  yTicks: Array<[number, string]>,
  xLabel: string,
  yLabel: string,
): string[] {
  const { left, right, top, bottom, width, height } = frame;
  const x1 = width - right;
  const y1 = height - bottom;
  const parts: string[] = [
    el("line", { x1: left, y1, x2: x1, y2: y1, stroke: "#222", "stroke-width": 1 }),
    el("line", { x1: left, y1: top, x2: left, y2: y1, stroke: "#222", "stroke-width": 1 }),
  ];
  for (const [px, label] of xTicks) {
    parts.push(el("line", { x1: px, y1, x2: px, y2: y1 + 4, stroke: "#222", "stroke-width": 1 }));
    parts.push(text(px, y1 + 18, label, { "text-anchor": "middle" }));
  }
  for (const [py, label] of yTicks) {
    parts.push(el("line", { x1: left - 4, y1: py, x2: left, y2: py, stroke: "#222", "stroke-width": 1 }));
    parts.push(text(left - 8, py + 4, label, { "text-anchor": "end" }));
  }
  parts.push(text((left + x1) / 2, height - 12, xLabel, { "text-anchor": "middle", "font-size": 12 }));
  parts.push(
    el("g", { transform: `translate(16 ${(top + y1) / 2}) rotate(-90)` }, [
      text(0, 0, yLabel, { "text-anchor": "middle", "font-size": 12 }),
    ]),
  );
  return parts;
}

/** Viridis-like stops, linearly interpolated; fixed so runs are comparable. */
const COLOR_STOPS: Array<[number, number, number]> = [
  [68, 1, 84],
  [59, 82, 139],
  [33, 145, 140],
  [94, 201, 98],
  [253, 231, 37],
];

export function colormap(value: number, lo: number, hi: number): string {
  const t = Math.min(1, Math.max(0, hi > lo ? (value - lo) / (hi - lo) : 0));
  const pos = t * (COLOR_STOPS.length - 1);
  const i = Math.min(COLOR_STOPS.length - 2, Math.floor(pos));
  const f = pos - i;
  const mix = (a: number, b: number) => Math.round(a + (b - a) * f);
  const [r, g, b] = [0, 1, 2].map((c) => mix(COLOR_STOPS[i][c], COLOR_STOPS[i + 1][c]));
  return `rgb(${r},${g},${b})`;
}

export function colorbar(frame: Frame, lo: number, hi: number, label: string): string[] {
  const x = frame.width - frame.right + 28;
  const top = frame.top;
  const bottom = frame.height - frame.bottom;
  const parts: string[] = [];
  const n = 40;
  for (let i = 0; i < n; i++) {
    const v = lo + ((hi - lo) * i) / (n - 1);
    const y = bottom - ((bottom - top) * (i + 1)) / n;
    parts.push(
      el("rect", {
        x, y, width: 16, height: (bottom - top) / n + 0.5,
        fill: colormap(v, lo, hi),
      }),
    );
  }
  parts.push(text(x + 20, top + 6, fmt(hi)));
  parts.push(text(x + 20, bottom, fmt(lo)));
  parts.push(
    el("g", { transform: `translate(${x + 44} ${(top + bottom) / 2}) rotate(-90)` }, [
      text(0, 0, label, { "text-anchor": "middle", "font-size": 12 }),
    ]),
  );
  return parts;
}
