// Non-blocking notifications; boundary/no-score conflicts surface here
// instead of interrupting the annotator.

let container: HTMLElement | null = null;

function ensureContainer(): HTMLElement {
  if (!container || !document.body.contains(container)) {
    container = document.createElement("div");
    container.className = "toast-container";
    document.body.appendChild(container);
  }
  return container;
}

export function toast(message: string, level: "info" | "warn" | "error" = "warn",
                      ttlMs = 3500): HTMLElement {
  const el = document.createElement("div");
  el.className = `toast toast-${level}`;
  el.setAttribute("role", "status");
  el.textContent = message;
  ensureContainer().appendChild(el);
  setTimeout(() => el.remove(), ttlMs);
  return el;
}
