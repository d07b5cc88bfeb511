// Lightweight 3D panel: orthographic projection onto a 2D canvas. The
// volume appears as a wireframe box and each slice as a textured quad at
// its server-computed world corners. Orthographic projection maps the
// slice parallelogram to a screen parallelogram, so one affine
// transform per quad renders the texture exactly.

import type { SceneDto, SceneSliceDto } from "./api.js";

interface Camera {
  azimuthDeg: number;
  elevationDeg: number;
  zoom: number;           // screen px per mm
  panX: number;
  panY: number;
}

const PRESETS: Record<string, { azimuthDeg: number; elevationDeg: number }> = {
  axial: { azimuthDeg: -90, elevationDeg: 89.9 },     // looking down +Z
  coronal: { azimuthDeg: -90, elevationDeg: 0 },      // looking along +Y
  sagittal: { azimuthDeg: 0, elevationDeg: 0 },       // looking along -X
};

const BOX_EDGES: [number, number][] = [
  [0, 1], [0, 2], [1, 3], [2, 3],
  [4, 5], [4, 6], [5, 7], [6, 7],
  [0, 4], [1, 5], [2, 6], [3, 7],
];

export class ScenePanel {
  private camera: Camera = { azimuthDeg: -60, elevationDeg: 25, zoom: 4, panX: 0, panY: 0 };
  private scene: SceneDto | null = null;
  private textures = new Map<string, HTMLImageElement>();
  private target = [0, 0, 0];
  private dragging: "rotate" | "pan" | null = null;
  private lastPointer = [0, 0];

  constructor(private canvas: HTMLCanvasElement,
              private resolveUrl: (path: string) => string) {
    canvas.addEventListener("mousedown", (e) => {
      this.dragging = e.button === 2 || e.shiftKey ? "pan" : "rotate";
      this.lastPointer = [e.clientX, e.clientY];
    });
    canvas.addEventListener("contextmenu", (e) => e.preventDefault());
    window.addEventListener("mouseup", () => { this.dragging = null; });
    window.addEventListener("mousemove", (e) => this.onDrag(e));
    canvas.addEventListener("wheel", (e) => {
      e.preventDefault();
      this.camera.zoom *= e.deltaY < 0 ? 1.1 : 1 / 1.1;
      this.draw();
    }, { passive: false });
  }

  private onDrag(e: MouseEvent): void {
    if (!this.dragging) {
      return;
    }
    const dx = e.clientX - this.lastPointer[0];
    const dy = e.clientY - this.lastPointer[1];
    this.lastPointer = [e.clientX, e.clientY];
    if (this.dragging === "rotate") {
      this.camera.azimuthDeg -= dx * 0.5;
      this.camera.elevationDeg = Math.max(-89.9, Math.min(89.9,
        this.camera.elevationDeg + dy * 0.5));
    } else {
      this.camera.panX += dx;
      this.camera.panY += dy;
    }
    this.draw();
  }

  setPreset(name: string): void {
    const preset = PRESETS[name];
    if (preset) {
      this.camera.azimuthDeg = preset.azimuthDeg;
      this.camera.elevationDeg = preset.elevationDeg;
      this.camera.panX = 0;
      this.camera.panY = 0;
      this.draw();
    }
  }

  update(scene: SceneDto): void {
    this.scene = scene;
    const lo = scene.volume_bbox.min;
    const hi = scene.volume_bbox.max;
    this.target = [0, 1, 2].map(k => (lo[k] + hi[k]) / 2);
    const extent = Math.max(1, ...[0, 1, 2].map(k => hi[k] - lo[k]));
    this.camera.zoom = Math.min(this.canvas.width, this.canvas.height) / (1.8 * extent);
    for (const slice of scene.slices) {
      const key = `${slice.slice_id}:${slice.texture}`;
      if (!this.textures.has(key)) {
        const img = new Image();
        img.onload = () => this.draw();
        img.src = this.resolveUrl(slice.texture) + `&scene=${Date.now()}`;
        this.textures.set(key, img);
      }
    }
    // textures from superseded states are dropped so the cache stays small
    const live = new Set(scene.slices.map(s => `${s.slice_id}:${s.texture}`));
    for (const key of [...this.textures.keys()]) {
      if (!live.has(key)) {
        this.textures.delete(key);
      }
    }
    this.draw();
  }

  refreshTextures(): void {
    this.textures.clear();
    if (this.scene) {
      this.update(this.scene);
    }
  }

  private basis(): { right: number[]; up: number[] } {
    const az = (this.camera.azimuthDeg * Math.PI) / 180;
    const el = (this.camera.elevationDeg * Math.PI) / 180;
    const forward = [
      Math.cos(el) * Math.cos(az),
      Math.cos(el) * Math.sin(az),
      Math.sin(el),
    ].map(v => -v);
    const worldUp = Math.abs(Math.sin(el)) > 0.999 ? [0, 1, 0] : [0, 0, 1];
    const right = cross(forward, worldUp);
    normalize(right);
    const up = cross(right, forward);
    normalize(up);
    return { right, up };
  }

  private project(p: number[]): [number, number] {
    const { right, up } = this.basis();
    const d = [p[0] - this.target[0], p[1] - this.target[1], p[2] - this.target[2]];
    const x = dot(d, right) * this.camera.zoom + this.canvas.width / 2 + this.camera.panX;
    const y = -dot(d, up) * this.camera.zoom + this.canvas.height / 2 + this.camera.panY;
    return [x, y];
  }

  draw(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) {
      return;
    }
    ctx.setTransform(1, 0, 0, 1, 0, 0);
    ctx.fillStyle = "#10141a";
    ctx.fillRect(0, 0, this.canvas.width, this.canvas.height);
    if (!this.scene) {
      return;
    }

    for (const slice of this.scene.slices) {
      this.drawSlice(ctx, slice);
    }

    const corners = this.scene.volume_bbox.corners.map(c => this.project(c));
    ctx.strokeStyle = "#5aa0d8";
    ctx.lineWidth = 1;
    ctx.beginPath();
    for (const [a, b] of BOX_EDGES) {
      ctx.moveTo(corners[a][0], corners[a][1]);
      ctx.lineTo(corners[b][0], corners[b][1]);
    }
    ctx.stroke();
  }

  private drawSlice(ctx: CanvasRenderingContext2D, slice: SceneSliceDto): void {
    // corners order: (0,0), (cols-1,0), (0,rows-1), (cols-1,rows-1)
    const [p00, p10, p01] = slice.corners.slice(0, 3).map(c => this.project(c));
    const img = this.textures.get(`${slice.slice_id}:${slice.texture}`);
    const w = Math.max(slice.cols - 1, 1);
    const h = Math.max(slice.rows - 1, 1);
    const a = (p10[0] - p00[0]) / w;
    const b = (p10[1] - p00[1]) / w;
    const c = (p01[0] - p00[0]) / h;
    const d = (p01[1] - p00[1]) / h;
    if (img && img.complete && img.naturalWidth > 0) {
      ctx.save();
      // texture pixel (col, row) -> screen; PNGs are rows x cols
      ctx.setTransform(a, b, c, d, p00[0], p00[1]);
      ctx.globalAlpha = 0.9;
      ctx.drawImage(img, 0, 0, w, h);
      ctx.restore();
      ctx.globalAlpha = 1;
    }
    const quad = [p00, p10, this.project(slice.corners[3]), p01];
    ctx.strokeStyle = "#e8b14c";
    ctx.beginPath();
    quad.forEach(([x, y], k) => (k === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
    ctx.closePath();
    ctx.stroke();
  }
}

function cross(a: number[], b: number[]): number[] {
  return [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
}

function dot(a: number[], b: number[]): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

function normalize(v: number[]): void {
  const n = Math.hypot(v[0], v[1], v[2]) || 1;
  v[0] /= n; v[1] /= n; v[2] /= n;
}
