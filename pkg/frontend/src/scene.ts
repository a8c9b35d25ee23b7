// Pure construction of the canvas display list for one layer: contours,
// hole fills, event markers sized by the service-predicted footprint, and
// any inline diagnostic. No model math happens here; every number shown
// comes from the service documents passed in.

import type { ViewTransform } from "./transform.js";
import type {
  ChannelInfo,
  EventAnnotation,
  EventInfo,
  SliceLayer,
} from "./types.js";
import type { InlineDiagnostic } from "./state.js";

export interface PolygonItem {
  kind: "polygon";
  pointsPx: [number, number][];
  role: "outer" | "hole";
}

export interface MarkerItem {
  kind: "marker";
  xPx: number;
  yPx: number;
  radiusPx: number;
  color: string;
  label: string;
  channel: number;
  eventIndex: number;
}

export interface NoteItem {
  kind: "note";
  xPx: number;
  yPx: number;
  text: string;
}

export type SceneItem = PolygonItem | MarkerItem | NoteItem;

export interface Scene {
  items: SceneItem[];
  layerAreaMm2: number;
}

export function signedArea(ring: [number, number][]): number {
  let sum = 0;
  for (let i = 0; i + 1 < ring.length; i++) {
    const [x0, y0] = ring[i];
    const [x1, y1] = ring[i + 1];
    sum += x0 * y1 - x1 * y0;
  }
  return sum / 2;
}

export function cssColor(rgb: [number, number, number]): string {
  return `rgb(${rgb[0]}, ${rgb[1]}, ${rgb[2]})`;
}

export function formatDiameter(diameterMm: number): string {
  return `${diameterMm.toFixed(3)} mm`;
}

export function formatMass(massMg: number): string {
  return `${massMg.toFixed(3)} mg`;
}

export function markerLabel(annotation: EventAnnotation): string {
  return `${formatDiameter(annotation.diameter_mm)} / ${formatMass(annotation.mass_mg)}`;
}

export function buildScene(
  layer: SliceLayer,
  events: EventInfo[],
  annotations: EventAnnotation[],
  channels: ChannelInfo[],
  transform: ViewTransform,
  diagnostic: InlineDiagnostic | null = null,
): Scene {
  const items: SceneItem[] = [];
  for (const ring of layer.contours) {
    items.push({
      kind: "polygon",
      pointsPx: ring.map(([x, y]) => transform.mmToScreen(x, y)),
      role: signedArea(ring) >= 0 ? "outer" : "hole",
    });
  }

  const byIndex = new Map(channels.map((c) => [c.index, c]));
  events.forEach((event, i) => {
    const annotation = annotations[i] ?? { diameter_mm: 0, mass_mg: 0 };
    const channel = byIndex.get(event.channel);
    const [xPx, yPx] = transform.mmToScreen(event.x_mm, event.y_mm);
    items.push({
      kind: "marker",
      xPx,
      yPx,
      radiusPx: (annotation.diameter_mm / 2) * transform.pxPerMm,
      color: channel ? cssColor(channel.color) : "rgb(128, 128, 128)",
      label: markerLabel(annotation),
      channel: event.channel,
      eventIndex: i,
    });
  });

  if (diagnostic) {
    const [xPx, yPx] = transform.mmToScreen(diagnostic.xMm, diagnostic.yMm);
    items.push({ kind: "note", xPx, yPx, text: diagnostic.message });
  }
  return { items, layerAreaMm2: layer.area };
}

export function layerBounds(layer: SliceLayer) {
  let minX = Infinity, minY = Infinity, maxX = -Infinity, maxY = -Infinity;
  for (const ring of layer.contours) {
    for (const [x, y] of ring) {
      minX = Math.min(minX, x);
      minY = Math.min(minY, y);
      maxX = Math.max(maxX, x);
      maxY = Math.max(maxY, y);
    }
  }
  if (minX > maxX) {
    return { minX: 0, minY: 0, maxX: 1, maxY: 1 };
  }
  return { minX, minY, maxX, maxY };
}

export function stackBounds(layers: SliceLayer[]) {
  const boxes = layers.map(layerBounds);
  return {
    minX: Math.min(...boxes.map((b) => b.minX)),
    minY: Math.min(...boxes.map((b) => b.minY)),
    maxX: Math.max(...boxes.map((b) => b.maxX)),
    maxY: Math.max(...boxes.map((b) => b.maxY)),
  };
}
