// Thin canvas painter for the display list; all geometry was computed by
// the scene builder.

import type { Scene } from "./scene.js";

const OUTER_FILL = "#fdf6ec";
const OUTER_STROKE = "#8a6d3b";
const HOLE_FILL = "#e8e4df";
const HOLE_STROKE = "#b0a79b";

export function drawScene(ctx: CanvasRenderingContext2D, scene: Scene): void {
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);

  const outers = scene.items.filter((i) => i.kind === "polygon" && i.role === "outer");
  const holes = scene.items.filter((i) => i.kind === "polygon" && i.role === "hole");

  // Material region via even-odd fill, then holes restyled distinctly.
  ctx.beginPath();
  for (const item of [...outers, ...holes]) {
    if (item.kind !== "polygon") continue;
    tracePath(ctx, item.pointsPx);
  }
  ctx.fillStyle = OUTER_FILL;
  ctx.fill("evenodd");

  for (const item of holes) {
    if (item.kind !== "polygon") continue;
    ctx.beginPath();
    tracePath(ctx, item.pointsPx);
    ctx.fillStyle = HOLE_FILL;
    ctx.fill();
    ctx.strokeStyle = HOLE_STROKE;
    ctx.setLineDash([4, 3]);
    ctx.lineWidth = 1;
    ctx.stroke();
    ctx.setLineDash([]);
  }
  for (const item of outers) {
    if (item.kind !== "polygon") continue;
    ctx.beginPath();
    tracePath(ctx, item.pointsPx);
    ctx.strokeStyle = OUTER_STROKE;
    ctx.lineWidth = 1.5;
    ctx.stroke();
  }

  for (const item of scene.items) {
    if (item.kind === "marker") {
      ctx.beginPath();
      ctx.arc(item.xPx, item.yPx, Math.max(item.radiusPx, 2), 0, 2 * Math.PI);
      ctx.fillStyle = item.color.replace("rgb", "rgba").replace(")", ", 0.35)");
      ctx.fill();
      ctx.strokeStyle = item.color;
      ctx.lineWidth = 1.5;
      ctx.stroke();
      ctx.beginPath();
      ctx.arc(item.xPx, item.yPx, 2.5, 0, 2 * Math.PI);
      ctx.fillStyle = item.color;
      ctx.fill();
      ctx.fillStyle = "#333";
      ctx.font = "11px sans-serif";
      ctx.fillText(item.label, item.xPx + item.radiusPx + 4, item.yPx + 3);
    } else if (item.kind === "note") {
      ctx.fillStyle = "#b3261e";
      ctx.font = "12px sans-serif";
      ctx.beginPath();
      ctx.arc(item.xPx, item.yPx, 3, 0, 2 * Math.PI);
      ctx.fill();
      ctx.fillText(item.text, item.xPx + 8, item.yPx - 6);
    }
  }
}

function tracePath(ctx: CanvasRenderingContext2D, points: [number, number][]): void {
  if (points.length === 0) return;
  ctx.moveTo(points[0][0], points[0][1]);
  for (let i = 1; i < points.length; i++) {
    ctx.lineTo(points[i][0], points[i][1]);
  }
  ctx.closePath();
}

/** Side-profile thumbnail of the layer stack with the current layer lit. */
export function drawStack(
  ctx: CanvasRenderingContext2D,
  layerCount: number,
  currentLayer: number,
): void {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  if (layerCount === 0) return;
  const bandH = Math.max(1, Math.floor((height - 8) / layerCount));
  for (let k = 0; k < layerCount; k++) {
    const y = height - 4 - (k + 1) * bandH;
    ctx.fillStyle = k === currentLayer ? "#d98324" : "#d8cfc2";
    ctx.fillRect(8, y, width - 16, bandH - 1);
  }
}
