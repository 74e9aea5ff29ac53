/**
 * SVG rendering for the end-of-day distribution panels.
 *
 * The service returns fixed 101-bin histograms; this renders them with
 * vertical marker lines (the alpha-quantile of the availability and the
 * -h*C threshold). Pure string generation: testable without a DOM.
 */

import { Json, get, numberOf } from "../rawJson.js";

export interface HistogramData {
  edges: number[];   // 102 edges
  counts: number[];  // 101 counts
}

export interface Marker {
  label: string;
  value: number;
  cssClass: string;
}

export function histogramFromResponse(body: Json,
                                      section: string): HistogramData {
  const h = get(body, section, "histogram");
  const edgesNode = get(h!, "edges");
  const countsNode = get(h!, "counts");
  if (edgesNode?.kind !== "array" || countsNode?.kind !== "array") {
    throw new TypeError(`response has no ${section} histogram`);
  }
  return {
    edges: edgesNode.items.map((n) => numberOf(n)),
    counts: countsNode.items.map((n) => numberOf(n)),
  };
}

export interface SvgOptions {
  width?: number;
  height?: number;
}

const MARGIN = { top: 12, right: 12, bottom: 24, left: 12 };

/** Render the histogram and markers as a standalone <svg> string. */
export function histogramSvg(data: HistogramData, markers: Marker[],
                             options: SvgOptions = {}): string {
  const width = options.width ?? 640;
  const height = options.height ?? 220;
  const innerW = width - MARGIN.left - MARGIN.right;
  const innerH = height - MARGIN.top - MARGIN.bottom;
  const lo = data.edges[0]!;
  const hi = data.edges[data.edges.length - 1]!;
  const span = hi - lo || 1;
  const peak = Math.max(...data.counts, 1);

  const x = (v: number): number =>
    MARGIN.left + ((v - lo) / span) * innerW;
  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ` +
    `${height}" class="eod-histogram">`,
  ];

  for (let i = 0; i < data.counts.length; i++) {
    const x0 = x(data.edges[i]!);
    const x1 = x(data.edges[i + 1]!);
    const h = (data.counts[i]! / peak) * innerH;
    parts.push(
      `<rect class="bin" x="${x0.toFixed(2)}" ` +
      `y="${(MARGIN.top + innerH - h).toFixed(2)}" ` +
      `width="${Math.max(x1 - x0, 0.5).toFixed(2)}" ` +
      `height="${h.toFixed(2)}"/>`,
    );
  }

  for (const marker of markers) {
    const mx = x(marker.value);
    parts.push(
      `<line class="marker ${marker.cssClass}" x1="${mx.toFixed(2)}" ` +
      `x2="${mx.toFixed(2)}" y1="${MARGIN.top}" ` +
      `y2="${MARGIN.top + innerH}"/>`,
      `<text class="marker-label ${marker.cssClass}" ` +
      `x="${(mx + 4).toFixed(2)}" y="${MARGIN.top + 10}">` +
      `${escapeXml(marker.label)}</text>`,
    );
  }

  parts.push("</svg>");
  return parts.join("");
}

function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;")
    .replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}
