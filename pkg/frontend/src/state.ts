// View state and its pure reducers. The state never carries model numbers
// of its own; footprint and dose values always arrive from the service.

export type Mode = "free" | "pattern" | "total_amount";

export interface Banner {
  kind: "offline" | "conflict" | "error" | "info";
  message: string;
}

export interface InlineDiagnostic {
  xMm: number;
  yMm: number;
  message: string;
}

export interface ViewState {
  currentLayer: number;
  layerCount: number;
  selectedChannel: number;
  intensity: number; // 1..10, mapped linearly onto the calibrated range
  mode: Mode;
  standoffMm: number;
  documentVersion: number;
  banner: Banner | null;
  diagnostic: InlineDiagnostic | null;
}

export function initialState(): ViewState {
  return {
    currentLayer: 0,
    layerCount: 0,
    selectedChannel: 1,
    intensity: 2,
    mode: "free",
    standoffMm: 20,
    documentVersion: 0,
    banner: null,
    diagnostic: null,
  };
}

export function setLayerCount(state: ViewState, count: number): ViewState {
  return {
    ...state,
    layerCount: count,
    currentLayer: Math.min(state.currentLayer, Math.max(0, count - 1)),
  };
}

export function setLayer(state: ViewState, layer: number): ViewState {
  const clamped = Math.min(Math.max(layer, 0), Math.max(0, state.layerCount - 1));
  return { ...state, currentLayer: clamped, diagnostic: null };
}

export function stepLayer(state: ViewState, delta: number): ViewState {
  return setLayer(state, state.currentLayer + delta);
}

export function selectChannel(state: ViewState, channel: number): ViewState {
  return { ...state, selectedChannel: channel };
}

export function setIntensity(state: ViewState, intensity: number): ViewState {
  return { ...state, intensity: Math.min(Math.max(Math.round(intensity), 1), 10) };
}

export function setMode(state: ViewState, mode: Mode): ViewState {
  return { ...state, mode, diagnostic: null };
}

export function setStandoff(state: ViewState, standoffMm: number): ViewState {
  return { ...state, standoffMm };
}

export function applyVersion(state: ViewState, version: number): ViewState {
  return { ...state, documentVersion: version, banner: null };
}

/** A mutation bounced with 409: the document moved under us. */
export function conflict(state: ViewState, currentVersion: number): ViewState {
  return {
    ...state,
    banner: {
      kind: "conflict",
      message:
        `This design changed elsewhere (now at version ${currentVersion}, ` +
        `you had ${state.documentVersion}). Reload to continue editing.`,
    },
  };
}

export function offline(state: ViewState): ViewState {
  return {
    ...state,
    banner: { kind: "offline", message: "Service unreachable; editing disabled." },
  };
}

export function showError(state: ViewState, message: string): ViewState {
  return { ...state, banner: { kind: "error", message } };
}

export function clearBanner(state: ViewState): ViewState {
  return { ...state, banner: null };
}

export function showDiagnostic(
  state: ViewState, xMm: number, yMm: number, message: string,
): ViewState {
  return { ...state, diagnostic: { xMm, yMm, message } };
}

export function editingEnabled(state: ViewState): boolean {
  return state.banner === null || state.banner.kind === "info";
}

/** Intensity 1..10 maps linearly onto the calibrated duration range. */
export function intensityToDuration(
  intensity: number, durationRange: [number, number],
): number {
  const [lo, hi] = durationRange;
  const i = Math.min(Math.max(intensity, 1), 10);
  return Math.round(lo + ((i - 1) / 9) * (hi - lo));
}
