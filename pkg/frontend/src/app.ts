// DOM wiring for the design studio. All planning math and document state
// live on the service; this file routes clicks to API calls and redraws
// from the authoritative responses.

import { ApiClient } from "./api.js";
import { buildScene, cssColor, formatDiameter, formatMass, layerBounds, markerLabel } from "./scene.js";
import { drawScene, drawStack } from "./render.js";
import {
  ViewState,
  applyVersion,
  clearBanner,
  conflict,
  editingEnabled,
  initialState,
  intensityToDuration,
  offline,
  selectChannel,
  setIntensity,
  setLayer,
  setLayerCount,
  setMode,
  setStandoff,
  showDiagnostic,
  showError,
  stepLayer,
} from "./state.js";
import { ViewTransform } from "./transform.js";
import type { CalibrationDoc, DesignDoc, SlicesDoc } from "./types.js";

const api = new ApiClient("");

let state: ViewState = initialState();
let slices: SlicesDoc | null = null;
let design: DesignDoc | null = null;
let calibration: CalibrationDoc | null = null;
let transform: ViewTransform | null = null;

const el = (id: string) => document.getElementById(id)!;
const canvas = () => el("viewer") as HTMLCanvasElement;

function setState(next: ViewState): void {
  state = next;
  redraw();
}

async function boot(): Promise<void> {
  try {
    const info = await api.getState();
    state = applyVersion(state, info.version);
    if (info.mesh_hash) {
      calibration = await api.getCalibration();
      slices = await api.getSlices();
      design = await api.getDesign();
      state = setLayerCount(state, slices.layers.length);
      fitView();
    }
  } catch {
    state = offline(state);
  }
  buildPanels();
  redraw();
}

function fitView(): void {
  if (!slices || slices.layers.length === 0) return;
  const view = { widthPx: canvas().width, heightPx: canvas().height };
  const all = slices.layers.map(layerBounds);
  transform = ViewTransform.fit(
    {
      minX: Math.min(...all.map((b) => b.minX)),
      minY: Math.min(...all.map((b) => b.minY)),
      maxX: Math.max(...all.map((b) => b.maxX)),
      maxY: Math.max(...all.map((b) => b.maxY)),
    },
    view,
  );
}

async function reloadDesign(): Promise<void> {
  try {
    design = await api.getDesign();
    setState(applyVersion(state, design.version));
  } catch {
    setState(offline(state));
  }
}

function redraw(): void {
  const bannerBox = el("banner");
  if (state.banner) {
    bannerBox.textContent = state.banner.message;
    bannerBox.className = `banner ${state.banner.kind}`;
    bannerBox.style.display = "block";
    (el("reload-button") as HTMLButtonElement).style.display =
      state.banner.kind === "conflict" ? "inline-block" : "none";
  } else {
    bannerBox.style.display = "none";
  }

  const ctx = canvas().getContext("2d")!;
  if (!slices || !design || !transform) {
    ctx.clearRect(0, 0, canvas().width, canvas().height);
    renderEventList();
    renderStatus();
    return;
  }
  const k = state.currentLayer;
  const scene = buildScene(
    slices.layers[k],
    design.layers[k] ?? [],
    design.annotations[k] ?? [],
    design.channels,
    transform,
    state.diagnostic,
  );
  drawScene(ctx, scene);
  drawStack(
    (el("stack") as HTMLCanvasElement).getContext("2d")!,
    state.layerCount,
    state.currentLayer,
  );
  renderEventList();
  renderStatus();
}

function renderStatus(): void {
  const layer = slices?.layers[state.currentLayer];
  el("layer-label").textContent = slices
    ? `layer ${state.currentLayer + 1} / ${state.layerCount}` +
      (layer ? `  (z ${layer.z_bottom.toFixed(2)}-${layer.z_top.toFixed(2)} mm, ` +
        `${layer.area.toFixed(1)} mm²)` : "")
    : "no mesh loaded";
  (el("layer-slider") as HTMLInputElement).max = String(Math.max(0, state.layerCount - 1));
  (el("layer-slider") as HTMLInputElement).value = String(state.currentLayer);
}

function renderEventList(): void {
  const list = el("event-list");
  list.innerHTML = "";
  if (!design) return;
  const events = design.layers[state.currentLayer] ?? [];
  const annotations = design.annotations[state.currentLayer] ?? [];
  events.forEach((event, i) => {
    const channel = design!.channels.find((c) => c.index === event.channel);
    const row = document.createElement("li");
    const swatch = document.createElement("span");
    swatch.className = "swatch";
    swatch.style.background = channel ? cssColor(channel.color) : "#888";
    const text = document.createElement("span");
    text.textContent =
      `${channel?.name ?? "ch" + event.channel} @ (${event.x_mm.toFixed(1)}, ` +
      `${event.y_mm.toFixed(1)}) ${event.duration_ms} ms — ` +
      (annotations[i] ? markerLabel(annotations[i]) : "");
    const remove = document.createElement("button");
    remove.textContent = "×";
    remove.title = "remove event";
    remove.onclick = () => removeEvent(i);
    row.append(swatch, text, remove);
    list.append(row);
  });
}

async function removeEvent(index: number): Promise<void> {
  if (!design) return;
  const doc: any = structuredClone(design);
  delete doc.annotations;
  delete doc.design_hash;
  doc.layers[state.currentLayer].splice(index, 1);
  doc.version = state.documentVersion;
  const result = await api.putDesign(doc).catch(() => null);
  if (result === null) return setState(offline(state));
  if (!result.ok && result.conflict) {
    return setState(conflict(state, result.currentVersion));
  }
  if (!result.ok) {
    return setState(showError(state, result.message));
  }
  await reloadDesign();
}

function currentDuration(): number {
  return calibration
    ? intensityToDuration(state.intensity, calibration.duration_range)
    : 20;
}

async function updatePreview(): Promise<void> {
  if (!calibration) return;
  const duration = currentDuration();
  el("intensity-label").textContent = `intensity ${state.intensity} → ${duration} ms`;
  try {
    const p = await api.predict(state.standoffMm, duration);
    el("preview-label").textContent =
      `footprint ${formatDiameter(p.diameter_mm)}, dose ${formatMass(p.mass_mg)}`;
  } catch {
    el("preview-label").textContent = "";
  }
}

async function onCanvasClick(eventPx: { offsetX: number; offsetY: number }): Promise<void> {
  if (!transform || !slices || !design || !editingEnabled(state)) return;
  if (state.mode !== "free") return;
  const [xMm, yMm] = transform.screenToMm(eventPx.offsetX, eventPx.offsetY);
  const result = await api.placeEvent(
    state.currentLayer,
    {
      channel: state.selectedChannel,
      xMm,
      yMm,
      durationMs: currentDuration(),
      standoffMm: state.standoffMm,
    },
    state.documentVersion,
  ).catch(() => null);
  if (result === null) {
    setState(offline(state));
    return;
  }
  if (result.ok) {
    await reloadDesign();
    return;
  }
  if (result.conflict) {
    setState(conflict(state, result.currentVersion));
  } else {
    setState(showDiagnostic(state, xMm, yMm, result.message));
  }
}

async function applyPattern(): Promise<void> {
  if (!design) return;
  const overlap = parseFloat((el("overlap-input") as HTMLInputElement).value) || 0;
  const result = await api.fillPattern(
    {
      layer: state.currentLayer,
      channel: state.selectedChannel,
      durationMs: currentDuration(),
      overlap,
      standoffMm: state.standoffMm,
    },
    state.documentVersion,
  ).catch(() => null);
  if (result === null) return setState(offline(state));
  if (!result.ok) {
    return setState(result.conflict
      ? conflict(state, result.currentVersion)
      : showError(state, result.message));
  }
  await reloadDesign();
}

async function previewAllocation(): Promise<void> {
  const mass = parseFloat((el("total-mass-input") as HTMLInputElement).value);
  if (!mass || mass <= 0) return;
  const result = await api.allocate(
    { channel: state.selectedChannel, totalMassMg: mass,
      standoffMm: state.standoffMm, dryRun: true },
    state.documentVersion,
  ).catch(() => null);
  if (result === null) return setState(offline(state));
  if (!result.ok) {
    return setState(result.conflict
      ? conflict(state, result.currentVersion)
      : showError(state, result.message));
  }
  const table = el("allocation-preview");
  table.innerHTML = "";
  for (const row of result.rows) {
    const tr = document.createElement("tr");
    tr.innerHTML =
      `<td>${row.layer}</td><td>${row.target_mg.toFixed(3)}</td>` +
      `<td>${row.achieved_mg.toFixed(3)}</td><td>${row.event_count}</td>`;
    table.append(tr);
  }
  (el("allocate-confirm") as HTMLButtonElement).disabled = false;
}

async function confirmAllocation(): Promise<void> {
  const mass = parseFloat((el("total-mass-input") as HTMLInputElement).value);
  const result = await api.allocate(
    { channel: state.selectedChannel, totalMassMg: mass,
      standoffMm: state.standoffMm, dryRun: false },
    state.documentVersion,
  ).catch(() => null);
  if (result === null) return setState(offline(state));
  if (!result.ok) {
    return setState(result.conflict
      ? conflict(state, result.currentVersion)
      : showError(state, result.message));
  }
  (el("allocate-confirm") as HTMLButtonElement).disabled = true;
  el("allocation-preview").innerHTML = "";
  await reloadDesign();
}

async function exportGcode(): Promise<void> {
  try {
    await api.generateGcode();
    const bytes = await api.downloadGcode();
    const buffer = bytes.slice().buffer as ArrayBuffer;
    const blob = new Blob([buffer], { type: "text/plain" });
    const url = URL.createObjectURL(blob);
    const a = document.createElement("a");
    a.href = url;
    a.download = (slices?.mesh_name.replace(/\.[^.]+$/, "") || "design") + ".gcode";
    a.click();
    URL.revokeObjectURL(url);
  } catch (err) {
    setState(showError(state, String(err)));
  }
}

async function runSimulation(): Promise<void> {
  try {
    await api.generateGcode();
    const report = await api.simulate();
    const status = report.comparison.all_clear ? "all clear" : "MISMATCH";
    const mass = report.layers
      .flatMap((l: any) => Object.values(l.channels) as number[])
      .reduce((a: number, b: number) => a + b, 0);
    setState(clearBanner({
      ...state,
      banner: {
        kind: "info",
        message: `simulation: ${status}; ${report.spray_count} sprays, ` +
          `${mass.toFixed(2)} mg total, ${report.elapsed_time_s.toFixed(1)} s`,
      },
    } as ViewState));
  } catch (err) {
    setState(showError(state, String(err)));
  }
}

function buildPanels(): void {
  const palette = el("channel-palette");
  palette.innerHTML = "";
  const channels = design?.channels ?? [];
  for (const channel of channels) {
    const button = document.createElement("button");
    button.className = "channel" + (channel.index === state.selectedChannel ? " active" : "");
    button.style.borderColor = cssColor(channel.color);
    button.textContent = channel.name;
    button.onclick = () => {
      setState(selectChannel(state, channel.index));
      buildPanels();
      void updatePreview();
    };
    palette.append(button);
  }
  void updatePreview();
}

function wire(): void {
  el("prev-layer").onclick = () => setState(stepLayer(state, -1));
  el("next-layer").onclick = () => setState(stepLayer(state, 1));
  (el("layer-slider") as HTMLInputElement).oninput = (e) =>
    setState(setLayer(state, parseInt((e.target as HTMLInputElement).value, 10)));
  (el("intensity") as HTMLInputElement).oninput = (e) => {
    setState(setIntensity(state, parseInt((e.target as HTMLInputElement).value, 10)));
    void updatePreview();
  };
  (el("standoff") as HTMLInputElement).oninput = (e) => {
    setState(setStandoff(state, parseFloat((e.target as HTMLInputElement).value) || 20));
    void updatePreview();
  };
  for (const mode of ["free", "pattern", "total_amount"] as const) {
    el(`mode-${mode}`).onclick = () => {
      setState(setMode(state, mode));
      el("pattern-form").style.display = mode === "pattern" ? "block" : "none";
      el("total-form").style.display = mode === "total_amount" ? "block" : "none";
      for (const m of ["free", "pattern", "total_amount"]) {
        el(`mode-${m}`).classList.toggle("active", m === mode);
      }
    };
  }
  el("apply-pattern").onclick = () => void applyPattern();
  el("allocate-preview-btn").onclick = () => void previewAllocation();
  el("allocate-confirm").onclick = () => void confirmAllocation();
  el("export-gcode").onclick = () => void exportGcode();
  el("simulate").onclick = () => void runSimulation();
  el("reload-button").onclick = () => void boot();

  const view = canvas();
  view.onclick = (e) => void onCanvasClick(e);
  view.onwheel = (e) => {
    e.preventDefault();
    if (!transform) return;
    transform = transform.zoomAt(e.offsetX, e.offsetY, e.deltaY < 0 ? 1.15 : 1 / 1.15);
    redraw();
  };
  let dragging: [number, number] | null = null;
  view.onmousedown = (e) => {
    if (e.shiftKey) dragging = [e.offsetX, e.offsetY];
  };
  view.onmousemove = (e) => {
    if (dragging && transform) {
      transform = transform.panBy(e.offsetX - dragging[0], e.offsetY - dragging[1]);
      dragging = [e.offsetX, e.offsetY];
      redraw();
    }
  };
  view.onmouseup = () => { dragging = null; };

  (el("mesh-file") as HTMLInputElement).onchange = async (e) => {
    const input = e.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file) return;
    const layerHeight = parseFloat((el("layer-height") as HTMLInputElement).value) || 1.6;
    try {
      await api.uploadMesh(file.name, await file.arrayBuffer(), layerHeight);
      await boot();
    } catch (err) {
      setState(showError(state, String(err)));
    }
  };
}

wire();
void boot();
