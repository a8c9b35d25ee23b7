// Screen <-> millimeter mapping for the cross-section canvas.
// Y is flipped: mm +y points up, canvas +y points down.

export interface Viewport {
  widthPx: number;
  heightPx: number;
}

export interface Bounds {
  minX: number;
  minY: number;
  maxX: number;
  maxY: number;
}

export class ViewTransform {
  constructor(
    readonly centerXMm: number,
    readonly centerYMm: number,
    readonly pxPerMm: number,
    readonly viewport: Viewport,
    readonly panXPx = 0,
    readonly panYPx = 0,
  ) {}

  static fit(bounds: Bounds, viewport: Viewport, marginPx = 20): ViewTransform {
    const spanX = Math.max(bounds.maxX - bounds.minX, 1e-6);
    const spanY = Math.max(bounds.maxY - bounds.minY, 1e-6);
    const scale = Math.min(
      (viewport.widthPx - 2 * marginPx) / spanX,
      (viewport.heightPx - 2 * marginPx) / spanY,
    );
    return new ViewTransform(
      (bounds.minX + bounds.maxX) / 2,
      (bounds.minY + bounds.maxY) / 2,
      scale,
      viewport,
    );
  }

  mmToScreen(xMm: number, yMm: number): [number, number] {
    return [
      this.viewport.widthPx / 2 + (xMm - this.centerXMm) * this.pxPerMm + this.panXPx,
      this.viewport.heightPx / 2 - (yMm - this.centerYMm) * this.pxPerMm + this.panYPx,
    ];
  }

  screenToMm(xPx: number, yPx: number): [number, number] {
    return [
      this.centerXMm + (xPx - this.viewport.widthPx / 2 - this.panXPx) / this.pxPerMm,
      this.centerYMm - (yPx - this.viewport.heightPx / 2 - this.panYPx) / this.pxPerMm,
    ];
  }

  /** Zoom by `factor`, keeping the given screen point stationary. */
  zoomAt(xPx: number, yPx: number, factor: number): ViewTransform {
    const clamped = Math.min(Math.max(this.pxPerMm * factor, 0.05), 500);
    const actual = clamped / this.pxPerMm;
    const panX = xPx - this.viewport.widthPx / 2 - (xPx - this.viewport.widthPx / 2 - this.panXPx) * actual;
    const panY = yPx - this.viewport.heightPx / 2 - (yPx - this.viewport.heightPx / 2 - this.panYPx) * actual;
    return new ViewTransform(
      this.centerXMm, this.centerYMm, clamped, this.viewport, panX, panY,
    );
  }

  panBy(dxPx: number, dyPx: number): ViewTransform {
    return new ViewTransform(
      this.centerXMm, this.centerYMm, this.pxPerMm, this.viewport,
      this.panXPx + dxPx, this.panYPx + dyPx,
    );
  }
}
