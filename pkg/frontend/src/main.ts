// Bootstrap: reads a window-level config and mounts the portal.

import { ApiClient } from "./api.js";
import { Portal, type PortalOptions } from "./app.js";
import type { Mode } from "./state.js";

interface WindowConfig extends PortalOptions {
  serviceUrl?: string;
}

declare global {
  interface Window {
    TRAJLAB_PORTAL_CONFIG?: WindowConfig;
  }
}

export function mount(root: HTMLElement, config: WindowConfig = {}): Portal {
  const api = new ApiClient(config.serviceUrl ?? "http://127.0.0.1:8000");
  const portal = new Portal(root, api, {
    mode: (config.mode ?? "annotate") as Mode,
    author: config.author,
    tileUrl: config.tileUrl ?? "https://tile.openstreetmap.org/{z}/{x}/{y}.png",
    profile: config.profile,
  });
  void portal.init();
  return portal;
}

const rootEl = typeof document !== "undefined" ? document.getElementById("app") : null;
if (rootEl) {
  mount(rootEl, window.TRAJLAB_PORTAL_CONFIG ?? {});
}
