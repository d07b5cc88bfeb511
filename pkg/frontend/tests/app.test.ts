// Integration against a mocked server: page flow, boundary toasts, and
// the one-keypress/one-action contract.

import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { App } from "../src/main.js";
import type { SessionStateDto } from "../src/api.js";

function baseState(): SessionStateDto {
  return {
    case_id: "case01",
    slice_ids: ["s01", "s02"],
    selected: "s01",
    mode: "micro",
    metric_kind: "nmi",
    label_kind: "binary",
    params: {
      s01: { tx: 0, ty: 0, tz: 0, rx: 0, ry: 0, rz: 0, cx: 0, cy: 0, cz: 0 },
      s02: { tx: 0, ty: 0, tz: 0, rx: 0, ry: 0, rz: 0, cx: 0, cy: 0, cz: 0 },
    },
    step_sizes: { translation_mm: 1.0, rotation_deg: 1.0 },
    styles: {
      volume_window: [0, 1], slice_window: [0, 200], resampled_window: [0, 200],
      label_color: [255, 0, 0, 255], label_opacity: 0.5, contour_width: 1,
      checker_width: 32, binarization_threshold: 0.5, metric_visible: true,
    },
    dirty: false,
  };
}

class FakeServer {
  state = baseState();
  calls: { method: string; path: string; body?: unknown }[] = [];
  configured = true;
  atLastCase = true;

  private json(body: unknown, status = 200): Response {
    return new Response(JSON.stringify(body), {
      status,
      headers: { "content-type": "application/json" },
    });
  }

  async handle(input: RequestInfo | URL, init?: RequestInit): Promise<Response> {
    const url = String(input);
    const path = url.split("?")[0];
    const method = init?.method ?? "GET";
    const body = init?.body ? tryParse(String(init.body)) : undefined;
    this.calls.push({ method, path, body });

    if (!this.configured && path !== "/api/config") {
      return this.json({ code: "no_dataset", message: "no dataset configured" }, 409);
    }
    switch (`${method} ${path}`) {
      case "GET /api/state":
        return this.json({ state: this.state });
      case "GET /api/cases":
        return this.json({ case_ids: ["case01"] });
      case "GET /api/metric":
        return this.json({ kind: this.state.metric_kind, value: 1.87, is_best: false });
      case "GET /api/scene":
        return this.json({
          volume_bbox: { min: [0, 0, 0], max: [10, 10, 10], corners: [] },
          slices: [], cameras: {}, mode: this.state.mode,
          selected: this.state.selected,
        });
      case "POST /api/config": {
        try {
          JSON.parse(String(init?.body));
        } catch {
          return this.json({ code: "malformed_config",
                             message: "configuration cannot be decoded" }, 400);
        }
        this.configured = true;
        return this.json({ state: this.state, case_ids: ["case01"] });
      }
      case "POST /api/action": {
        const amount = (body as { amount?: number }).amount ?? 0;
        this.state = structuredClone(this.state);
        this.state.params.s01.ty += amount;
        this.state.dirty = true;
        return this.json({ state: this.state,
                           metric: { kind: "nmi", value: 1.9, is_best: true } });
      }
      case "POST /api/case/shift":
        if (this.atLastCase && (body as { direction: string }).direction === "next") {
          return this.json({ code: "at_boundary",
                             message: "already at the last case" }, 409);
        }
        return this.json({ state: this.state });
      case "POST /api/mode":
      case "POST /api/steps":
      case "POST /api/style":
      case "POST /api/slice/select":
      case "POST /api/case/select":
      case "POST /api/save":
        return this.json({ state: this.state });
      default:
        return this.json({ code: "not_found", message: path }, 404);
    }
  }

  actionCalls(): number {
    return this.calls.filter(c => c.path === "/api/action").length;
  }
}

function tryParse(text: string): unknown {
  try {
    return JSON.parse(text);
  } catch {
    return text;
  }
}

async function flush(times = 8): Promise<void> {
  for (let k = 0; k < times; k += 1) {
    await new Promise((resolve) => setTimeout(resolve, 0));
  }
}

let server: FakeServer;
let container: HTMLElement;

beforeEach(() => {
  server = new FakeServer();
  vi.stubGlobal("fetch", (input: RequestInfo | URL, init?: RequestInit) =>
    server.handle(input, init));
  container = document.createElement("div");
  document.body.appendChild(container);
});

afterEach(() => {
  vi.unstubAllGlobals();
  document.body.innerHTML = "";
});

describe("page flow", () => {
  it("lands on Home when no dataset is configured", async () => {
    server.configured = false;
    const app = new App(container);
    await app.start();
    await flush();
    expect(container.querySelector("#home")).not.toBeNull();
    expect(container.querySelector("#workspace")).toBeNull();
  });

  it("navigates to Main after a config drop", async () => {
    server.configured = false;
    const app = new App(container);
    await app.start();
    await flush();
    const dropzone = container.querySelector("#dropzone") as HTMLElement;
    const drop = new Event("drop", { bubbles: true, cancelable: true });
    Object.defineProperty(drop, "dataTransfer", {
      value: { files: [{ text: async () => '{"dataset_root": "."}' }] },
    });
    dropzone.dispatchEvent(drop);
    await flush();
    expect(container.querySelector("#workspace")).not.toBeNull();
    expect(server.calls.some(c => c.path === "/api/config")).toBe(true);
  });

  it("stays on Home with a pop-up when the config cannot be decoded", async () => {
    server.configured = false;
    const app = new App(container);
    await app.start();
    await flush();
    const dropzone = container.querySelector("#dropzone") as HTMLElement;
    const drop = new Event("drop", { bubbles: true, cancelable: true });
    Object.defineProperty(drop, "dataTransfer", {
      value: { files: [{ text: async () => "not json {{{" }] },
    });
    dropzone.dispatchEvent(drop);
    await flush();
    expect(container.querySelector("#workspace")).toBeNull();
    const error = container.querySelector("#home-error") as HTMLElement;
    expect(error.classList.contains("hidden")).toBe(false);
    expect(error.textContent).toContain("Configuration rejected");
  });

  it("lands on Main when the server already has a dataset", async () => {
    const app = new App(container);
    await app.start();
    await flush();
    expect(container.querySelector("#workspace")).not.toBeNull();
    const slices = container.querySelectorAll("#slice-select option");
    expect(slices.length).toBe(2);
  });
});

describe("workspace behaviour", () => {
  async function startApp(): Promise<App> {
    const app = new App(container);
    await app.start();
    await flush();
    return app;
  }

  it("shows a toast and keeps state on a boundary case shift", async () => {
    await startApp();
    const before = (container.querySelector("#case-select") as HTMLSelectElement).value;
    (container.querySelector("#case-next") as HTMLButtonElement).click();
    await flush();
    const toasts = document.querySelectorAll(".toast");
    expect(toasts.length).toBe(1);
    expect(toasts[0].textContent).toContain("already at the last case");
    expect((container.querySelector("#case-select") as HTMLSelectElement).value)
      .toBe(before);
  });

  it("sends exactly one /api/action per keypress", async () => {
    await startApp();
    expect(server.actionCalls()).toBe(0);
    document.dispatchEvent(new KeyboardEvent("keydown", { key: "w", bubbles: true }));
    await flush();
    expect(server.actionCalls()).toBe(1);
    const call = server.calls.find(c => c.path === "/api/action")!;
    expect(call.body).toEqual({ type: "translate", frame: "patient", axis: "y",
                                amount: 1.0 });
  });

  it("ignores unbound keys entirely", async () => {
    await startApp();
    document.dispatchEvent(new KeyboardEvent("keydown", { key: "x", bubbles: true }));
    await flush();
    expect(server.actionCalls()).toBe(0);
  });

  it("updates the parameter readout from the action response", async () => {
    await startApp();
    document.dispatchEvent(new KeyboardEvent("keydown", { key: "w", bubbles: true }));
    await flush();
    expect(container.querySelector("#params-readout")!.textContent).toContain("1.00");
    expect(container.querySelector("#dirty-flag")!.classList.contains("hidden"))
      .toBe(false);
  });

  it("queues style changes without calling /api/action", async () => {
    await startApp();
    const slider = container.querySelector("#checker-width") as HTMLInputElement;
    slider.value = "8";
    slider.dispatchEvent(new Event("change", { bubbles: true }));
    await flush();
    expect(server.calls.some(c => c.path === "/api/style")).toBe(true);
    expect(server.actionCalls()).toBe(0);
  });

  it("undo button posts an undo action", async () => {
    await startApp();
    (container.querySelector("#btn-undo") as HTMLButtonElement).click();
    await flush();
    const call = server.calls.find(c => c.path === "/api/action")!;
    expect(call.body).toEqual({ type: "undo" });
  });

  it("help modal lists every key binding", async () => {
    await startApp();
    (container.querySelector("#nav-help") as HTMLButtonElement).click();
    const rows = container.querySelectorAll("#help-keys tr");
    expect(rows.length).toBe(19);    // header + 18 bindings
  });
});
