// Shapes of the service documents the studio consumes.

export interface ServiceState {
  tool_version: string;
  schema_version: number;
  mesh_hash: string;
  mesh_name: string;
  layer_count: number;
  layer_height: number;
  infill_density: number;
  version: number;
  has_program: boolean;
  has_simulation: boolean;
}

export interface SliceLayer {
  z_bottom: number;
  z_top: number;
  area: number;
  contours: [number, number][][];
}

export interface SlicesDoc {
  schema_version: number;
  mesh_hash: string;
  mesh_name: string;
  layer_height: number;
  layers: SliceLayer[];
}

export interface ChannelInfo {
  index: number;
  name: string;
  solution_concentration: number;
  color: [number, number, number];
}

export interface EventInfo {
  channel: number;
  x_mm: number;
  y_mm: number;
  duration_ms: number;
  standoff_mm: number;
}

export interface EventAnnotation {
  diameter_mm: number;
  mass_mg: number;
}

export interface DesignDoc {
  schema_version: number;
  version: number;
  mesh_ref: string;
  layer_height: number;
  calibration_ref: string;
  channels: ChannelInfo[];
  layers: EventInfo[][];
  mode_metadata: string[][];
  annotations: EventAnnotation[][];
  design_hash: string;
}

export interface CalibrationDoc {
  beta0: number;
  beta1: number;
  beta2: number;
  alpha0: number;
  alpha1: number;
  distance_range: [number, number];
  duration_range: [number, number];
  identifier: string;
}

export interface Prediction {
  diameter_mm: number;
  mass_mg: number;
  warnings: string[];
}

export interface AllocationRow {
  layer: number;
  target_mg: number;
  achieved_mg: number;
  event_count: number;
  duration_min_ms: number;
  duration_max_ms: number;
  clamped: boolean;
}
