// Home page: configuration upload by drag-drop or file picker. A config
// that fails to decode keeps the user here with an error pop-up.

import { ApiClient, ApiError, SessionStateDto } from "./api.js";

export type ConfigLoaded = (state: SessionStateDto, caseIds: string[]) => void;

export function renderHome(container: HTMLElement, client: ApiClient,
                           onLoaded: ConfigLoaded): void {
  container.innerHTML = "";
  const page = document.createElement("div");
  page.id = "home";
  page.innerHTML = `
    <header class="topbar"><span class="brand">slicealign</span></header>
    <main class="home-main">
      <h1>Slice-to-volume annotation</h1>
      <p>Drop a dataset configuration (JSON) below, or click to browse.
      The configuration names the dataset root, the path patterns for the
      volume, 3D label and slices of each case, and where outputs go.</p>
      <div id="dropzone" tabindex="0">
        <span>Drop configuration file here<br>or click to select</span>
        <input id="config-file" type="file" accept="application/json,.json" hidden>
      </div>
      <div id="home-error" class="error-popup hidden" role="alert"></div>
    </main>`;
  container.appendChild(page);

  const dropzone = page.querySelector("#dropzone") as HTMLElement;
  const fileInput = page.querySelector("#config-file") as HTMLInputElement;
  const errorBox = page.querySelector("#home-error") as HTMLElement;

  async function submit(text: string): Promise<void> {
    errorBox.classList.add("hidden");
    try {
      const r = await client.uploadConfig(text);
      onLoaded(r.state, r.case_ids);
    } catch (err) {
      const message = err instanceof ApiError
        ? `Configuration rejected: ${err.message}`
        : `Upload failed: ${String(err)}`;
      errorBox.textContent = message;
      errorBox.classList.remove("hidden");
    }
  }

  async function submitFile(file: File): Promise<void> {
    await submit(await file.text());
  }

  dropzone.addEventListener("click", () => fileInput.click());
  fileInput.addEventListener("change", () => {
    if (fileInput.files && fileInput.files[0]) {
      void submitFile(fileInput.files[0]);
    }
  });
  dropzone.addEventListener("dragover", (e) => {
    e.preventDefault();
    dropzone.classList.add("dragging");
  });
  dropzone.addEventListener("dragleave", () => dropzone.classList.remove("dragging"));
  dropzone.addEventListener("drop", (e) => {
    e.preventDefault();
    dropzone.classList.remove("dragging");
    const file = e.dataTransfer?.files?.[0];
    if (file) {
      void submitFile(file);
    }
  });
}
