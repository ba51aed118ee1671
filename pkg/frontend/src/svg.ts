/**
 * Hand-rolled SVG rendering. The figures are simple enough (line panels,
 * bars with whiskers) that a chart library buys nothing; emitting markup
 * directly keeps the output deterministic and dependency-free.
 */

import type { BarsData, CurvesData, PanelData, SeriesData } from "./figures.js";

const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#17becf",
  "#7f7f7f",
];

const FONT = "font-family=\"Helvetica, Arial, sans-serif\"";

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function fmtTick(value: number): string {
  if (value === 0) {
    return "0";
  }
  return Number(value.toPrecision(3)).toString();
}

interface Scale {
  (value: number): number;
  domain: [number, number];
}

function linearScale(domain: [number, number], range: [number, number]): Scale {
  let [d0, d1] = domain;
  if (d0 === d1) {
    d0 -= d0 === 0 ? 1 : Math.abs(d0) * 0.5;
    d1 += d1 === 0 ? 1 : Math.abs(d1) * 0.5;
  }
  const [r0, r1] = range;
  const k = (r1 - r0) / (d1 - d0);
  const scale = ((value: number) => r0 + (value - d0) * k) as Scale;
  scale.domain = [d0, d1];
  return scale;
}

/** Round tick positions covering the domain, roughly `count` of them. */
function ticks(domain: [number, number], count: number): number[] {
  const [lo, hi] = domain;
  const span = hi - lo;
  if (span <= 0) {
    return [lo];
  }
  const rawStep = span / count;
  const power = Math.pow(10, Math.floor(Math.log10(rawStep)));
  const candidates = [1, 2, 5, 10].map((m) => m * power);
  const step = candidates.find((c) => c >= rawStep) ?? candidates[3];
  const start = Math.ceil(lo / step) * step;
  const out: number[] = [];
  for (let v = start; v <= hi + step * 1e-9; v += step) {
    out.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return out;
}

function extent(valuesList: number[][]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const values of valuesList) {
    for (const v of values) {
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
  }
  if (!Number.isFinite(lo) || !Number.isFinite(hi)) {
    return [0, 1];
  }
  return [lo, hi];
}

function polyline(x: number[], y: number[], sx: Scale, sy: Scale): string {
  const points = x.map((xi, i) => `${sx(xi).toFixed(2)},${sy(y[i]).toFixed(2)}`).join(" ");
  return points;
}

interface Box {
  x: number;
  y: number;
  width: number;
  height: number;
}

const MARGIN = { top: 34, right: 14, bottom: 40, left: 58 };

function axes(box: Box, sx: Scale, sy: Scale, panel: PanelData): string {
  const innerLeft = box.x + MARGIN.left;
  const innerRight = box.x + box.width - MARGIN.right;
  const innerTop = box.y + MARGIN.top;
  const innerBottom = box.y + box.height - MARGIN.bottom;
  const parts: string[] = [];
  parts.push(
    `<text x="${box.x + box.width / 2}" y="${box.y + 18}" text-anchor="middle" ${FONT} font-size="14" font-weight="bold" fill="#222">${escapeXml(panel.title)}</text>`,
  );
  for (const t of ticks(sy.domain, 4)) {
    const y = sy(t).toFixed(2);
    parts.push(
      `<line x1="${innerLeft}" y1="${y}" x2="${innerRight}" y2="${y}" stroke="#ddd" stroke-width="1"/>`,
      `<text x="${innerLeft - 6}" y="${y}" text-anchor="end" dominant-baseline="middle" ${FONT} font-size="10" fill="#555">${fmtTick(t)}</text>`,
    );
  }
  for (const t of ticks(sx.domain, 5)) {
    const x = sx(t).toFixed(2);
    parts.push(
      `<line x1="${x}" y1="${innerBottom}" x2="${x}" y2="${innerBottom + 4}" stroke="#888" stroke-width="1"/>`,
      `<text x="${x}" y="${innerBottom + 16}" text-anchor="middle" ${FONT} font-size="10" fill="#555">${fmtTick(t)}</text>`,
    );
  }
  parts.push(
    `<line x1="${innerLeft}" y1="${innerTop}" x2="${innerLeft}" y2="${innerBottom}" stroke="#888" stroke-width="1"/>`,
    `<line x1="${innerLeft}" y1="${innerBottom}" x2="${innerRight}" y2="${innerBottom}" stroke="#888" stroke-width="1"/>`,
    `<text x="${(innerLeft + innerRight) / 2}" y="${innerBottom + 32}" text-anchor="middle" ${FONT} font-size="11" fill="#333">${escapeXml(panel.xLabel)}</text>`,
    `<text x="${innerLeft - 44}" y="${(innerTop + innerBottom) / 2}" text-anchor="middle" ${FONT} font-size="11" fill="#333" transform="rotate(-90 ${innerLeft - 44} ${(innerTop + innerBottom) / 2})">${escapeXml(panel.yLabel)}</text>`,
  );
  return parts.join("\n");
}

function renderPanel(panel: PanelData, box: Box): string {
  const innerLeft = box.x + MARGIN.left;
  const innerRight = box.x + box.width - MARGIN.right;
  const innerTop = box.y + MARGIN.top;
  const innerBottom = box.y + box.height - MARGIN.bottom;
  const withData = panel.series.filter((s) => s.x.length > 0);
  if (withData.length === 0) {
    return [
      `<g class="panel">`,
      `<text x="${box.x + box.width / 2}" y="${box.y + 18}" text-anchor="middle" ${FONT} font-size="14" font-weight="bold" fill="#222">${escapeXml(panel.title)}</text>`,
      `<text x="${(innerLeft + innerRight) / 2}" y="${(innerTop + innerBottom) / 2}" text-anchor="middle" ${FONT} font-size="12" fill="#999">no data</text>`,
      `</g>`,
    ].join("\n");
  }
  const sx = linearScale(extent(withData.map((s) => s.x)), [innerLeft, innerRight]);
  const sy = linearScale(extent(withData.map((s) => s.raw)), [innerBottom, innerTop]);
  const parts: string[] = [`<g class="panel">`, axes(box, sx, sy, panel)];
  panel.series.forEach((s: SeriesData, i: number) => {
    if (s.x.length === 0) {
      return;
    }
    const color = PALETTE[i % PALETTE.length];
    if (s.x.length === 1) {
      parts.push(
        `<circle cx="${sx(s.x[0]).toFixed(2)}" cy="${sy(s.smooth[0]).toFixed(2)}" r="3" fill="${color}"/>`,
      );
      return;
    }
    parts.push(
      `<polyline class="raw" points="${polyline(s.x, s.raw, sx, sy)}" fill="none" stroke="${color}" stroke-width="1" opacity="0.25"/>`,
      `<polyline class="smooth" points="${polyline(s.x, s.smooth, sx, sy)}" fill="none" stroke="${color}" stroke-width="1.8"/>`,
    );
  });
  parts.push(`</g>`);
  return parts.join("\n");
}

function legend(labels: string[], width: number): string {
  const parts: string[] = ['<g class="legend">'];
  const slot = Math.min(230, (width - 20) / Math.max(labels.length, 1));
  labels.forEach((label, i) => {
    const x = 14 + i * slot;
    const color = PALETTE[i % PALETTE.length];
    parts.push(
      `<line x1="${x}" y1="14" x2="${x + 22}" y2="14" stroke="${color}" stroke-width="2.5"/>`,
      `<text x="${x + 27}" y="14" dominant-baseline="middle" ${FONT} font-size="11" fill="#222">${escapeXml(label)}</text>`,
    );
  });
  parts.push("</g>");
  return parts.join("\n");
}

export function renderCurves(data: CurvesData): string {
  const panelWidth = 470;
  const panelHeight = 320;
  const legendHeight = 28;
  const width = panelWidth * 2;
  const height = legendHeight + panelHeight * 2;
  const labels = data.panels[0].series.map((s) => s.label);
  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
    `<rect width="${width}" height="${height}" fill="white"/>`,
    legend(labels, width),
  ];
  data.panels.forEach((panel, i) => {
    const box: Box = {
      x: (i % 2) * panelWidth,
      y: legendHeight + Math.floor(i / 2) * panelHeight,
      width: panelWidth,
      height: panelHeight,
    };
    parts.push(renderPanel(panel, box));
  });
  parts.push("</svg>");
  return parts.join("\n");
}

export function renderBars(data: BarsData): string {
  const width = Math.max(420, 150 * data.bars.length + 120);
  const height = 360;
  const innerLeft = 70;
  const innerRight = width - 20;
  const innerTop = 46;
  const innerBottom = height - 60;
  const lows = data.bars.map((b) => Math.min(0, b.mean - b.sd));
  const highs = data.bars.map((b) => Math.max(0, b.mean + b.sd));
  const sy = linearScale(extent([lows, highs]), [innerBottom, innerTop]);
  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
    `<rect width="${width}" height="${height}" fill="white"/>`,
    `<text x="${width / 2}" y="24" text-anchor="middle" ${FONT} font-size="14" font-weight="bold" fill="#222">${escapeXml(data.metric)}</text>`,
  ];
  for (const t of ticks(sy.domain, 4)) {
    const y = sy(t).toFixed(2);
    parts.push(
      `<line x1="${innerLeft}" y1="${y}" x2="${innerRight}" y2="${y}" stroke="#ddd" stroke-width="1"/>`,
      `<text x="${innerLeft - 6}" y="${y}" text-anchor="end" dominant-baseline="middle" ${FONT} font-size="10" fill="#555">${fmtTick(t)}</text>`,
    );
  }
  const zero = sy(Math.max(sy.domain[0], Math.min(sy.domain[1], 0)));
  const slot = (innerRight - innerLeft) / data.bars.length;
  const barWidth = Math.min(90, slot * 0.6);
  data.bars.forEach((bar, i) => {
    const cx = innerLeft + slot * (i + 0.5);
    const top = sy(bar.mean);
    const y = Math.min(top, zero);
    const h = Math.abs(top - zero);
    const color = PALETTE[i % PALETTE.length];
    parts.push(
      `<rect class="bar" x="${(cx - barWidth / 2).toFixed(2)}" y="${y.toFixed(2)}" width="${barWidth.toFixed(2)}" height="${h.toFixed(2)}" fill="${color}" opacity="0.85"/>`,
      `<line class="whisker" x1="${cx.toFixed(2)}" y1="${sy(bar.mean - bar.sd).toFixed(2)}" x2="${cx.toFixed(2)}" y2="${sy(bar.mean + bar.sd).toFixed(2)}" stroke="#333" stroke-width="1.5"/>`,
      `<line x1="${(cx - 8).toFixed(2)}" y1="${sy(bar.mean - bar.sd).toFixed(2)}" x2="${(cx + 8).toFixed(2)}" y2="${sy(bar.mean - bar.sd).toFixed(2)}" stroke="#333" stroke-width="1.5"/>`,
      `<line x1="${(cx - 8).toFixed(2)}" y1="${sy(bar.mean + bar.sd).toFixed(2)}" x2="${(cx + 8).toFixed(2)}" y2="${sy(bar.mean + bar.sd).toFixed(2)}" stroke="#333" stroke-width="1.5"/>`,
      `<text x="${cx.toFixed(2)}" y="${innerBottom + 16}" text-anchor="middle" ${FONT} font-size="11" fill="#222">${escapeXml(bar.label)}</text>`,
      `<text x="${cx.toFixed(2)}" y="${(Math.min(sy(bar.mean + bar.sd), y) - 6).toFixed(2)}" text-anchor="middle" ${FONT} font-size="10" fill="#333">${fmtTick(bar.mean)}</text>`,
    );
  });
  parts.push(
    `<line x1="${innerLeft}" y1="${zero.toFixed(2)}" x2="${innerRight}" y2="${zero.toFixed(2)}" stroke="#888" stroke-width="1"/>`,
    "</svg>",
  );
  return parts.join("\n");
}
