// Entry point: lands on Main when the server already has a dataset
// (started with --config), otherwise on Home for config upload.

import { ApiClient, ApiError, SessionStateDto } from "./api.js";
import { renderHome } from "./home.js";
import { Workspace } from "./workspace.js";

export class App {
  private workspace: Workspace | null = null;

  constructor(private container: HTMLElement,
              private client: ApiClient = new ApiClient()) {}

  async start(): Promise<void> {
    try {
      const [{ state }, { case_ids }] = await Promise.all([
        this.client.state(), this.client.cases()]);
      this.showWorkspace(state, case_ids);
    } catch (err) {
      if (err instanceof ApiError && err.code === "no_dataset") {
        this.showHome();
      } else {
        this.showHome(String(err instanceof Error ? err.message : err));
      }
    }
  }

  showHome(initialError?: string): void {
    this.workspace?.dispose();
    this.workspace = null;
    renderHome(this.container, this.client,
               (state, caseIds) => this.showWorkspace(state, caseIds));
    if (initialError) {
      const box = this.container.querySelector("#home-error") as HTMLElement | null;
      if (box) {
        box.textContent = initialError;
        box.classList.remove("hidden");
      }
    }
  }

  showWorkspace(state: SessionStateDto, caseIds: string[]): void {
    this.workspace?.dispose();
    this.workspace = new Workspace(this.container, this.client, state, caseIds);
    this.container.addEventListener("navigate-home", () => this.showHome(),
                                    { once: true });
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  const app = new App(document.getElementById("app") as HTMLElement);
  void app.start();
}
