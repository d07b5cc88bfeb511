// Main annotation workspace: transformation controls, mode, evaluation
// readout, 2D plots, the 3D scene panel and case navigation. Every
// control maps to exactly one API endpoint; display-only choices (label
// format, plot type) stay client-side as plot query parameters.

import { ActionRequest, ApiClient, ApiError, MetricDto, SessionStateDto } from "./api.js";
import { KEY_BINDINGS, keyToAction } from "./keymap.js";
import { MutationQueue } from "./queue.js";
import { ScenePanel } from "./scene3d.js";
import { toast } from "./toast.js";

const PARAM_LABELS: [string, string][] = [
  ["tx", "tx (mm)"], ["ty", "ty (mm)"], ["tz", "tz (mm)"],
  ["rx", "rx (deg)"], ["ry", "ry (deg)"], ["rz", "rz (deg)"],
];

export class Workspace {
  private state: SessionStateDto;
  private queue = new MutationQueue();
  private plotVersion = 0;
  private labelType = "resampled";
  private labelFormat = "mask";
  private supportType = "resampled";
  private scenePanel: ScenePanel | null = null;
  private root: HTMLElement;

  constructor(private container: HTMLElement, private client: ApiClient,
              initial: SessionStateDto, private caseIds: string[]) {
    this.state = initial;
    this.root = this.build();
    this.fillHelpTable(this.root.querySelector("#help-keys")!);
    this.wire(this.root);
    this.applyState(initial);
    this.refreshScene();
    this.refreshMetric();
  }

  // -- DOM assembly ---------------------------------------------------------

  private build(): HTMLElement {
    this.container.innerHTML = "";
    const root = document.createElement("div");
    root.id = "workspace";
    root.innerHTML = `
      <header class="topbar">
        <span class="brand">slicealign</span>
        <nav>
          <button id="nav-home" type="button">Home</button>
          <button id="nav-help" type="button">Help</button>
        </nav>
      </header>
      <div class="layout">
        <aside class="sidebar">
          <section class="panel" id="panel-menu">
            <label>Menu
              <select id="menu-select">
                <option value="transformation">Transformation</option>
                <option value="slice-style">2D Slice</option>
                <option value="resampled-style">2D Resampled Slice</option>
                <option value="label-style">2D Segmentation Label</option>
              </select>
            </label>
            <div class="submenu" id="menu-transformation">
              <div class="button-row">
                <button id="btn-undo" type="button">Undo</button>
                <button id="btn-redo" type="button">Redo</button>
                <button id="btn-optimize" type="button">Optimize</button>
                <button id="btn-reset" type="button">Reset</button>
              </div>
              <label>Translation step (mm)
                <input id="step-translation" type="range" min="0.1" max="10" step="0.1">
                <span id="step-translation-value"></span>
              </label>
              <label>Rotation step (deg)
                <input id="step-rotation" type="range" min="0.1" max="10" step="0.1">
                <span id="step-rotation-value"></span>
              </label>
            </div>
            <div class="submenu hidden" id="menu-slice-style">
              <label>Window low <input id="slice-window-lo" type="number" step="any"></label>
              <label>Window high <input id="slice-window-hi" type="number" step="any"></label>
            </div>
            <div class="submenu hidden" id="menu-resampled-style">
              <label>Window low <input id="resampled-window-lo" type="number" step="any"></label>
              <label>Window high <input id="resampled-window-hi" type="number" step="any"></label>
            </div>
            <div class="submenu hidden" id="menu-label-style">
              <label>Opacity
                <input id="label-opacity" type="range" min="0" max="1" step="0.05">
              </label>
              <label>Binarization threshold
                <input id="label-threshold" type="range" min="0.05" max="0.95" step="0.05">
              </label>
            </div>
          </section>
          <section class="panel" id="panel-mode">
            <span class="panel-title">Mode</span>
            <label><input type="radio" name="mode" id="mode-macro" value="macro"> Macro</label>
            <label><input type="radio" name="mode" id="mode-micro" value="micro"> Micro</label>
          </section>
          <section class="panel" id="panel-evaluation">
            <span class="panel-title">Evaluation</span>
            <select id="metric-kind">
              <option value="nmi">NMI</option>
              <option value="sad">SAD</option>
            </select>
            <label><input type="checkbox" id="metric-visible" checked> show</label>
            <span id="metric-value">&ndash;</span>
          </section>
          <section class="panel" id="panel-support-menu">
            <label>Support menu
              <select id="support-menu">
                <option value="contour">Contour</option>
                <option value="checkerboard">Checkerboard</option>
              </select>
            </label>
            <div class="submenu" id="support-menu-contour">
              <label>Line width
                <input id="contour-width" type="range" min="1" max="9" step="1">
              </label>
            </div>
            <div class="submenu hidden" id="support-menu-checkerboard">
              <label>Checker width
                <input id="checker-width" type="range" min="1" max="64" step="1">
              </label>
            </div>
          </section>
          <section class="panel" id="panel-camera">
            <span class="panel-title">Camera</span>
            <div class="button-row">
              <button id="cam-axial" type="button">Axial</button>
              <button id="cam-coronal" type="button">Coronal</button>
              <button id="cam-sagittal" type="button">Sagittal</button>
            </div>
          </section>
          <section class="panel" id="panel-case">
            <span class="panel-title">Case</span>
            <div class="button-row">
              <button id="case-prev" type="button">Previous</button>
              <select id="case-select"></select>
              <button id="case-next" type="button">Next</button>
            </div>
            <button id="btn-save" type="button">Save</button>
            <span id="dirty-flag" class="hidden">unsaved changes</span>
          </section>
        </aside>
        <main class="plots">
          <section class="panel" id="panel-scene">
            <span class="panel-title">3D</span>
            <canvas id="scene-canvas" width="460" height="360"></canvas>
          </section>
          <section class="panel" id="panel-main-plot">
            <div class="plot-controls">
              <select id="slice-select"></select>
              <select id="label-type">
                <option value="resampled">Resampled Label</option>
                <option value="resultant">Resultant Mask</option>
              </select>
              <select id="label-format">
                <option value="contour">Contour</option>
                <option value="mask" selected>Mask</option>
                <option value="none">None</option>
              </select>
            </div>
            <img id="main-plot" alt="selected slice with label overlay">
            <table id="params-readout"></table>
          </section>
          <section class="panel" id="panel-support-plot">
            <div class="plot-controls">
              <select id="support-type">
                <option value="resampled">Resampled Slice</option>
                <option value="checkerboard">Checkerboard</option>
              </select>
            </div>
            <img id="support-plot" alt="resampled comparison">
          </section>
        </main>
      </div>
      <div id="help-modal" class="modal hidden">
        <div class="modal-body">
          <h2>Quick guide</h2>
          <p>Register each 2D slice to the 3D volume, then press Save (outputs
          are also saved automatically when you change case). Keyboard moves the
          slice; watch the metric and the plots while you work.</p>
          <table id="help-keys"></table>
          <p>Buttons: Undo/Redo step through the edit history, Optimize jumps to
          the best-scored pose so far, Reset returns to the original headers.
          Macro mode moves all slices at once; Micro only the selected one.</p>
          <button id="help-close" type="button">Close</button>
        </div>
      </div>`;
    this.container.appendChild(root);
    return root;
  }

  private fillHelpTable(table: HTMLElement): void {
    const header = document.createElement("tr");
    header.innerHTML = "<th>Key</th><th>Action</th>";
    table.appendChild(header);
    for (const b of KEY_BINDINGS) {
      const row = document.createElement("tr");
      const keyName = (b.shift ? "Shift+" : "") + b.key.toUpperCase();
      const verb = b.kind === "translate" ? "translate" : "rotate";
      row.innerHTML = `<td>${keyName}</td>` +
        `<td>${verb} ${b.frame} ${b.axis}${b.sign > 0 ? "+" : "-"} (${b.hint})</td>`;
      table.appendChild(row);
    }
  }

  private el<T extends HTMLElement>(selector: string): T {
    return this.root.querySelector(selector) as T;
  }

  // -- wiring -----------------------------------------------------------------

  private wire(root: HTMLElement): void {
    root.querySelector("#nav-help")!.addEventListener("click", () =>
      this.el("#help-modal").classList.remove("hidden"));
    root.querySelector("#help-close")!.addEventListener("click", () =>
      this.el("#help-modal").classList.add("hidden"));
    root.querySelector("#nav-home")!.addEventListener("click", () =>
      root.dispatchEvent(new CustomEvent("navigate-home", { bubbles: true })));

    this.el<HTMLSelectElement>("#menu-select").addEventListener("change", (e) => {
      const chosen = (e.target as HTMLSelectElement).value;
      for (const name of ["transformation", "slice-style", "resampled-style", "label-style"]) {
        this.el(`#menu-${name}`).classList.toggle("hidden", name !== chosen);
      }
    });
    this.el<HTMLSelectElement>("#support-menu").addEventListener("change", (e) => {
      const chosen = (e.target as HTMLSelectElement).value;
      this.el("#support-menu-contour").classList.toggle("hidden", chosen !== "contour");
      this.el("#support-menu-checkerboard").classList.toggle("hidden",
        chosen !== "checkerboard");
    });

    const actions: [string, string][] = [["#btn-undo", "undo"], ["#btn-redo", "redo"],
                                         ["#btn-optimize", "optimize"], ["#btn-reset", "reset"]];
    for (const [selector, type] of actions) {
      root.querySelector(selector)!.addEventListener("click", () =>
        this.runAction({ type: type as "undo" }));
    }

    this.el<HTMLInputElement>("#step-translation").addEventListener("change", () => this.pushSteps());
    this.el<HTMLInputElement>("#step-rotation").addEventListener("change", () => this.pushSteps());

    for (const [selector, field] of [
      ["#slice-window-lo", "slice_window"], ["#slice-window-hi", "slice_window"],
      ["#resampled-window-lo", "resampled_window"], ["#resampled-window-hi", "resampled_window"],
    ] as [string, "slice_window" | "resampled_window"][]) {
      this.el<HTMLInputElement>(selector).addEventListener("change", () => {
        const lo = this.el<HTMLInputElement>(`#${field.replace("_", "-")}-lo`).valueAsNumber;
        const hi = this.el<HTMLInputElement>(`#${field.replace("_", "-")}-hi`).valueAsNumber;
        this.pushStyle({ [field]: [lo, hi] });
      });
    }
    this.el<HTMLInputElement>("#label-opacity").addEventListener("change", (e) =>
      this.pushStyle({ label_opacity: (e.target as HTMLInputElement).valueAsNumber }));
    this.el<HTMLInputElement>("#label-threshold").addEventListener("change", (e) =>
      this.pushStyle({ binarization_threshold: (e.target as HTMLInputElement).valueAsNumber }));
    this.el<HTMLInputElement>("#contour-width").addEventListener("change", (e) =>
      this.pushStyle({ contour_width: (e.target as HTMLInputElement).valueAsNumber }));
    this.el<HTMLInputElement>("#checker-width").addEventListener("change", (e) =>
      this.pushStyle({ checker_width: (e.target as HTMLInputElement).valueAsNumber }));

    this.el<HTMLInputElement>("#mode-macro").addEventListener("change", () => this.pushMode("macro"));
    this.el<HTMLInputElement>("#mode-micro").addEventListener("change", () => this.pushMode("micro"));

    this.el<HTMLSelectElement>("#metric-kind").addEventListener("change", (e) => {
      void this.mutate(async () => {
        const metric = await this.client.metric((e.target as HTMLSelectElement).value);
        this.state.metric_kind = (e.target as HTMLSelectElement).value as "nmi" | "sad";
        this.showMetric(metric);
      });
    });
    this.el<HTMLInputElement>("#metric-visible").addEventListener("change", (e) => {
      const visible = (e.target as HTMLInputElement).checked;
      this.el("#metric-value").classList.toggle("hidden", !visible);
      void this.mutate(async () => {
        const r = await this.client.setStyle({ metric_visible: visible });
        this.state = r.state;
      });
    });

    this.el<HTMLSelectElement>("#slice-select").addEventListener("change", (e) =>
      void this.mutate(async () => {
        const r = await this.client.selectSlice((e.target as HTMLSelectElement).value);
        this.applyState(r.state);
        this.refreshMetric();
        this.refreshScene();
      }));
    this.el<HTMLSelectElement>("#label-type").addEventListener("change", (e) => {
      this.labelType = (e.target as HTMLSelectElement).value;
      this.refreshPlots();
    });
    this.el<HTMLSelectElement>("#label-format").addEventListener("change", (e) => {
      this.labelFormat = (e.target as HTMLSelectElement).value;
      this.refreshPlots();
    });
    this.el<HTMLSelectElement>("#support-type").addEventListener("change", (e) => {
      this.supportType = (e.target as HTMLSelectElement).value;
      this.refreshPlots();
    });

    root.querySelector("#case-prev")!.addEventListener("click", () => this.shiftCase("prev"));
    root.querySelector("#case-next")!.addEventListener("click", () => this.shiftCase("next"));
    this.el<HTMLSelectElement>("#case-select").addEventListener("change", (e) =>
      void this.mutate(async () => {
        const r = await this.client.selectCase((e.target as HTMLSelectElement).value);
        this.applyState(r.state);
        this.refreshMetric();
        this.refreshScene();
      }));
    root.querySelector("#btn-save")!.addEventListener("click", () =>
      void this.mutate(async () => {
        const r = await this.client.save();
        this.applyState(r.state);
        toast("outputs saved", "info");
      }));

    const scenePanel = new ScenePanel(
      this.el<HTMLCanvasElement>("#scene-canvas"),
      (path) => this.client.textureUrl(path));
    this.scenePanel = scenePanel;
    for (const preset of ["axial", "coronal", "sagittal"]) {
      root.querySelector(`#cam-${preset}`)!.addEventListener("click", () =>
        scenePanel.setPreset(preset));
    }

    document.addEventListener("keydown", this.onKeyDown);
  }

  dispose(): void {
    document.removeEventListener("keydown", this.onKeyDown);
  }

  private onKeyDown = (e: KeyboardEvent): void => {
    if (!this.root.isConnected) {
      this.dispose();           // superseded instance: stop listening
      return;
    }
    const target = e.target as HTMLElement | null;
    if (target && ["INPUT", "SELECT", "TEXTAREA"].includes(target.tagName)) {
      return;
    }
    if (this.el("#help-modal") && !this.el("#help-modal").classList.contains("hidden")) {
      return;
    }
    const action = keyToAction(e.key, e.shiftKey, this.state.step_sizes);
    if (!action) {
      return;
    }
    e.preventDefault();
    this.runAction(action);
  };

  // -- server communication -----------------------------------------------------

  private mutate<T>(task: () => Promise<T>): Promise<T | undefined> {
    return this.queue.enqueue(task).catch((err) => {
      if (err instanceof ApiError) {
        toast(err.message, err.status === 409 ? "warn" : "error");
        return undefined;
      }
      toast(String(err), "error");
      return undefined;
    });
  }

  private runAction(action: ActionRequest): void {
    void this.mutate(async () => {
      const r = await this.client.action(action);
      this.applyState(r.state);
      this.showMetric(r.metric);
      this.refreshScene();
    });
  }

  private pushSteps(): void {
    const t = this.el<HTMLInputElement>("#step-translation").valueAsNumber;
    const r = this.el<HTMLInputElement>("#step-rotation").valueAsNumber;
    void this.mutate(async () => {
      const response = await this.client.setSteps(t, r);
      this.applyState(response.state);
    });
  }

  private pushStyle(partial: Record<string, unknown>): void {
    void this.mutate(async () => {
      const r = await this.client.setStyle(partial);
      this.state = r.state;
      this.refreshPlots();            // style-only: no /api/action involved
      this.scenePanel?.refreshTextures();
    });
  }

  private pushMode(mode: "macro" | "micro"): void {
    void this.mutate(async () => {
      const r = await this.client.setMode(mode);
      this.applyState(r.state);
      this.refreshScene();
    });
  }

  private shiftCase(direction: "prev" | "next"): void {
    void this.mutate(async () => {
      const r = await this.client.shiftCase(direction);
      this.applyState(r.state);
      this.refreshMetric();
      this.refreshScene();
    });
  }

  private refreshMetric(): void {
    void this.client.metric().then((m) => this.showMetric(m)).catch(() => undefined);
  }

  private refreshScene(): void {
    void this.client.scene().then((scene) => this.scenePanel?.update(scene))
      .catch(() => undefined);
  }

  // -- rendering ------------------------------------------------------------------

  private applyState(state: SessionStateDto): void {
    this.state = state;
    const caseSelect = this.el<HTMLSelectElement>("#case-select");
    caseSelect.innerHTML = this.caseIds.map(
      (cid) => `<option value="${cid}"${cid === state.case_id ? " selected" : ""}>${cid}</option>`,
    ).join("");
    const sliceSelect = this.el<HTMLSelectElement>("#slice-select");
    sliceSelect.innerHTML = state.slice_ids.map(
      (sid) => `<option value="${sid}"${sid === state.selected ? " selected" : ""}>${sid}</option>`,
    ).join("");
    this.el<HTMLInputElement>(`#mode-${state.mode}`).checked = true;
    this.el<HTMLSelectElement>("#metric-kind").value = state.metric_kind;
    const steps = state.step_sizes;
    this.el<HTMLInputElement>("#step-translation").value = String(steps.translation_mm);
    this.el("#step-translation-value").textContent = steps.translation_mm.toFixed(1);
    this.el<HTMLInputElement>("#step-rotation").value = String(steps.rotation_deg);
    this.el("#step-rotation-value").textContent = steps.rotation_deg.toFixed(1);
    const styles = state.styles;
    this.el<HTMLInputElement>("#slice-window-lo").value = String(styles.slice_window[0]);
    this.el<HTMLInputElement>("#slice-window-hi").value = String(styles.slice_window[1]);
    this.el<HTMLInputElement>("#resampled-window-lo").value = String(styles.resampled_window[0]);
    this.el<HTMLInputElement>("#resampled-window-hi").value = String(styles.resampled_window[1]);
    this.el<HTMLInputElement>("#label-opacity").value = String(styles.label_opacity);
    this.el<HTMLInputElement>("#label-threshold").value = String(styles.binarization_threshold);
    this.el<HTMLInputElement>("#contour-width").value = String(styles.contour_width);
    this.el<HTMLInputElement>("#checker-width").value = String(styles.checker_width);
    this.el("#dirty-flag").classList.toggle("hidden", !state.dirty);
    this.renderParams();
    this.refreshPlots();
  }

  private renderParams(): void {
    const params = this.state.params[this.state.selected];
    const table = this.el<HTMLTableElement>("#params-readout");
    if (!params) {
      table.innerHTML = "";
      return;
    }
    table.innerHTML = "<tr>" +
      PARAM_LABELS.map(([, label]) => `<th>${label}</th>`).join("") + "</tr><tr>" +
      PARAM_LABELS.map(([key]) =>
        `<td>${(params[key as keyof typeof params] as number).toFixed(2)}</td>`).join("") +
      "</tr>";
  }

  private showMetric(metric: MetricDto): void {
    const out = this.el("#metric-value");
    if ("unavailable" in metric) {
      out.textContent = "n/a";
      out.classList.remove("best");
      return;
    }
    out.textContent = `${metric.kind.toUpperCase()} = ${metric.value.toFixed(4)}` +
      (metric.is_best ? " (best)" : "");
    out.classList.toggle("best", metric.is_best);
  }

  private refreshPlots(): void {
    this.plotVersion += 1;
    this.el<HTMLImageElement>("#main-plot").src = this.client.mainPlotUrl(
      this.state.selected, this.labelType, this.labelFormat, this.plotVersion);
    this.el<HTMLImageElement>("#support-plot").src = this.client.supportPlotUrl(
      this.supportType, this.plotVersion);
  }
}
