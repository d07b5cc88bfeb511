// Typed client for the annotation service. The UI performs no
// registration math of its own: every number it shows comes from these
// responses.

export interface RigidParamsDto {
  tx: number; ty: number; tz: number;
  rx: number; ry: number; rz: number;
  cx: number; cy: number; cz: number;
}

export interface StyleStateDto {
  volume_window: [number, number];
  slice_window: [number, number];
  resampled_window: [number, number];
  label_color: [number, number, number, number];
  label_opacity: number;
  contour_width: number;
  checker_width: number;
  binarization_threshold: number;
  metric_visible: boolean;
}

export interface SessionStateDto {
  case_id: string;
  slice_ids: string[];
  selected: string;
  mode: "macro" | "micro";
  metric_kind: "nmi" | "sad";
  label_kind: "binary" | "categorical";
  params: Record<string, RigidParamsDto>;
  step_sizes: { translation_mm: number; rotation_deg: number };
  styles: StyleStateDto;
  dirty: boolean;
}

export type MetricDto =
  | { kind: string; value: number; is_best: boolean }
  | { unavailable: string };

export interface SceneSliceDto {
  slice_id: string;
  corners: number[][];
  texture: string;
  cols: number;
  rows: number;
}

export interface SceneDto {
  volume_bbox: { min: number[]; max: number[]; corners: number[][] };
  slices: SceneSliceDto[];
  cameras: Record<string, { position?: number[]; up?: number[] } | number[]>;
  mode: string;
  selected: string;
}

export interface ActionRequest {
  type: "translate" | "rotate" | "undo" | "redo" | "optimize" | "reset";
  frame?: "patient" | "slice";
  axis?: string;
  amount?: number;
}

export class ApiError extends Error {
  constructor(public status: number, public code: string, message: string) {
    super(message);
  }
}

async function parse<T>(response: Response): Promise<T> {
  if (response.ok) {
    return (await response.json()) as T;
  }
  let code = "error";
  let message = `HTTP ${response.status}`;
  try {
    const body = await response.json();
    code = body.code ?? code;
    message = body.message ?? message;
  } catch {
    // non-JSON error body: keep the defaults
  }
  throw new ApiError(response.status, code, message);
}

export class ApiClient {
  constructor(private base: string = "") {}

  private url(path: string): string {
    return this.base + path;
  }

  private async get<T>(path: string): Promise<T> {
    return parse<T>(await fetch(this.url(path)));
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    return parse<T>(await fetch(this.url(path), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    }));
  }

  async uploadConfig(text: string): Promise<{ state: SessionStateDto; case_ids: string[] }> {
    const response = await fetch(this.url("/api/config"), { method: "POST", body: text });
    return parse(response);
  }

  cases(): Promise<{ case_ids: string[] }> {
    return this.get("/api/cases");
  }

  state(): Promise<{ state: SessionStateDto }> {
    return this.get("/api/state");
  }

  selectCase(caseId: string): Promise<{ state: SessionStateDto }> {
    return this.post("/api/case/select", { case_id: caseId });
  }

  shiftCase(direction: "prev" | "next"): Promise<{ state: SessionStateDto }> {
    return this.post("/api/case/shift", { direction });
  }

  selectSlice(sliceId: string): Promise<{ state: SessionStateDto }> {
    return this.post("/api/slice/select", { slice_id: sliceId });
  }

  setMode(mode: "macro" | "micro"): Promise<{ state: SessionStateDto }> {
    return this.post("/api/mode", { mode });
  }

  setSteps(translationMm: number, rotationDeg: number): Promise<{ state: SessionStateDto }> {
    return this.post("/api/steps", {
      translation_mm: translationMm,
      rotation_deg: rotationDeg,
    });
  }

  setStyle(partial: Partial<StyleStateDto>): Promise<{ state: SessionStateDto }> {
    return this.post("/api/style", partial);
  }

  action(request: ActionRequest): Promise<{ state: SessionStateDto; metric: MetricDto }> {
    return this.post("/api/action", request);
  }

  metric(kind?: string): Promise<MetricDto> {
    return this.get(`/api/metric${kind ? `?kind=${kind}` : ""}`);
  }

  scene(): Promise<SceneDto> {
    return this.get("/api/scene");
  }

  save(): Promise<{ state: SessionStateDto }> {
    return this.post("/api/save", {});
  }

  mainPlotUrl(sliceId: string, label: string, format: string, version: number): string {
    return this.url(`/api/plot/main?slice_id=${encodeURIComponent(sliceId)}` +
      `&label=${label}&format=${format}&v=${version}`);
  }

  supportPlotUrl(type: string, version: number): string {
    return this.url(`/api/plot/support?type=${type}&v=${version}`);
  }

  textureUrl(path: string): string {
    return this.url(path);
  }
}
