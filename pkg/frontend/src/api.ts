// Typed client for the local service. Mutations return discriminated
// results so the UI can route 409 conflicts and 422 rejections without
// exception plumbing.

import type {
  AllocationRow,
  CalibrationDoc,
  DesignDoc,
  EventAnnotation,
  EventInfo,
  Prediction,
  ServiceState,
  SlicesDoc,
} from "./types.js";

export interface PlaceAccepted {
  ok: true;
  version: number;
  event: EventInfo & { layer: number };
  annotation: EventAnnotation;
  warnings: { severity: string; code: string; message: string }[];
}

export interface MutationConflict {
  ok: false;
  conflict: true;
  currentVersion: number;
}

export interface MutationRejected {
  ok: false;
  conflict: false;
  message: string;
}

export type PlaceResult = PlaceAccepted | MutationConflict | MutationRejected;

export interface PatternAccepted {
  ok: true;
  version: number;
  eventsAdded: number;
  pitchMm: number;
  diameterMm: number;
}

export interface AllocateAccepted {
  ok: true;
  version: number;
  totalTargetMg: number;
  totalAchievedMg: number;
  rows: AllocationRow[];
}

async function rejection(response: Response): Promise<MutationConflict | MutationRejected> {
  const body = await response.json().catch(() => ({ detail: { message: response.statusText } }));
  const detail = body.detail ?? {};
  if (response.status === 409) {
    return { ok: false, conflict: true, currentVersion: detail.current_version ?? -1 };
  }
  return { ok: false, conflict: false, message: detail.message ?? String(detail) };
}

export class ApiClient {
  constructor(readonly base: string = "") {}

  private url(path: string): string {
    return this.base + path;
  }

  async getState(): Promise<ServiceState> {
    return this.getJson("/api/state");
  }

  async getSlices(): Promise<SlicesDoc> {
    return this.getJson("/api/slices");
  }

  async getDesign(): Promise<DesignDoc> {
    return this.getJson("/api/design");
  }

  async getCalibration(): Promise<CalibrationDoc> {
    return this.getJson("/api/calibration");
  }

  private async getJson(path: string): Promise<any> {
    const response = await fetch(this.url(path));
    if (!response.ok) {
      throw new Error(`${path}: HTTP ${response.status}`);
    }
    return response.json();
  }

  /** Full-document replace; returns the new version or a conflict/rejection. */
  async putDesign(doc: any): Promise<{ ok: true; version: number } | MutationConflict | MutationRejected> {
    const response = await fetch(this.url("/api/design"), {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(doc),
    });
    if (!response.ok) {
      return rejection(response);
    }
    const body = await response.json();
    return { ok: true, version: body.version };
  }

  async uploadMesh(
    name: string, data: ArrayBuffer | Uint8Array, layerHeight: number,
  ): Promise<{ version: number; layer_count: number; mesh_hash: string }> {
    const body = data instanceof Uint8Array
      ? data.slice().buffer as ArrayBuffer
      : data;
    const response = await fetch(
      this.url(`/api/mesh?name=${encodeURIComponent(name)}&layer_height=${layerHeight}`),
      { method: "POST", body },
    );
    if (!response.ok) {
      const detail = await response.json().catch(() => ({}));
      throw new Error(detail.detail?.message ?? `upload failed: HTTP ${response.status}`);
    }
    return response.json();
  }

  async predict(standoffMm: number, durationMs: number): Promise<Prediction> {
    const response = await fetch(this.url("/api/predict"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ standoff_mm: standoffMm, duration_ms: durationMs }),
    });
    if (!response.ok) {
      throw new Error(`predict failed: HTTP ${response.status}`);
    }
    return response.json();
  }

  async placeEvent(
    layer: number,
    event: { channel: number; xMm: number; yMm: number; durationMs: number; standoffMm?: number },
    version: number,
  ): Promise<PlaceResult> {
    const response = await fetch(this.url(`/api/design/layers/${layer}/events`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({
        channel: event.channel,
        x_mm: event.xMm,
        y_mm: event.yMm,
        duration_ms: event.durationMs,
        standoff_mm: event.standoffMm ?? null,
        version,
      }),
    });
    if (!response.ok) {
      return rejection(response);
    }
    const body = await response.json();
    return {
      ok: true,
      version: body.version,
      event: body.event,
      annotation: body.annotation,
      warnings: body.warnings,
    };
  }

  async fillPattern(
    params: { layer: number; channel: number; durationMs: number; overlap: number; standoffMm?: number },
    version: number,
  ): Promise<PatternAccepted | MutationConflict | MutationRejected> {
    const response = await fetch(this.url("/api/design/pattern"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({
        layer: params.layer,
        channel: params.channel,
        duration_ms: params.durationMs,
        standoff_mm: params.standoffMm ?? null,
        overlap: params.overlap,
        version,
      }),
    });
    if (!response.ok) {
      return rejection(response);
    }
    const body = await response.json();
    return {
      ok: true,
      version: body.version,
      eventsAdded: body.events_added,
      pitchMm: body.pitch_mm,
      diameterMm: body.diameter_mm,
    };
  }

  async allocate(
    params: { channel: number; totalMassMg: number; standoffMm?: number; dryRun?: boolean },
    version: number,
  ): Promise<AllocateAccepted | MutationConflict | MutationRejected> {
    const response = await fetch(this.url("/api/design/allocate"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({
        channel: params.channel,
        total_mass_mg: params.totalMassMg,
        standoff_mm: params.standoffMm ?? null,
        dry_run: params.dryRun ?? false,
        version,
      }),
    });
    if (!response.ok) {
      return rejection(response);
    }
    const body = await response.json();
    return {
      ok: true,
      version: body.version,
      totalTargetMg: body.total_target_mg,
      totalAchievedMg: body.total_achieved_mg,
      rows: body.rows,
    };
  }

  async generateGcode(): Promise<{ sprayCount: number; designHash: string }> {
    const response = await fetch(this.url("/api/gcode"), { method: "POST" });
    if (!response.ok) {
      const detail = await response.json().catch(() => ({}));
      throw new Error(detail.detail?.message ?? `gcode failed: HTTP ${response.status}`);
    }
    const body = await response.json();
    return { sprayCount: body.spray_count, designHash: body.design_hash };
  }

  /** Raw program bytes, exactly as GET /api/gcode/file serves them. */
  async downloadGcode(): Promise<Uint8Array> {
    const response = await fetch(this.url("/api/gcode/file"));
    if (!response.ok) {
      throw new Error(`no G-code available: HTTP ${response.status}`);
    }
    return new Uint8Array(await response.arrayBuffer());
  }

  async simulate(): Promise<any> {
    const response = await fetch(this.url("/api/simulate"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({}),
    });
    if (!response.ok) {
      const detail = await response.json().catch(() => ({}));
      throw new Error(detail.detail?.message ?? `simulate failed: HTTP ${response.status}`);
    }
    return response.json();
  }
}
