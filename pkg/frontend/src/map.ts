// SVG slippy map: Web Mercator projection of the trajectory with tile
// images underneath, a polyline, a cursor marker, and per-author badges.
// The tile provider is configuration; any {z}/{x}/{y} template works.

import type { TripPoint } from "./types.js";
import type { MarkOverlay } from "./charts.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const TILE_SIZE = 256;

function svgEl<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) el.setAttribute(key, value);
  return el;
}

function mercator(lat: number, lng: number, zoom: number): { x: number; y: number } {
  const scale = TILE_SIZE * 2 ** zoom;
  const x = ((lng + 180) / 360) * scale;
  const rad = (lat * Math.PI) / 180;
  const y =
    ((1 - Math.log(Math.tan(rad) + 1 / Math.cos(rad)) / Math.PI) / 2) * scale;
  return { x, y };
}

export interface MapOptions {
  width?: number;
  height?: number;
  tileUrl?: string;
  maxZoom?: number;
}

export class TrajectoryMap {
  readonly svg: SVGSVGElement;
  private readonly width: number;
  private readonly height: number;
  private points: TripPoint[] = [];
  private projected: { x: number; y: number }[] = [];
  private readonly tiles: SVGGElement;
  private readonly path: SVGGElement;
  private readonly marksGroup: SVGGElement;
  private readonly cursorDot: SVGCircleElement;
  onHover: ((step: number) => void) | null = null;
  onSelect: ((step: number) => void) | null = null;

  constructor(container: HTMLElement, private readonly options: MapOptions = {}) {
    this.width = options.width ?? 420;
    this.height = options.height ?? 380;
    this.svg = svgEl("svg", {
      width: String(this.width),
      height: String(this.height),
      viewBox: `0 0 ${this.width} ${this.height}`,
      class: "tl-map",
    });
    this.svg.appendChild(
      svgEl("rect", {
        width: String(this.width),
        height: String(this.height),
        fill: "#eef1f5",
        stroke: "#d8dbe2",
      }),
    );
    this.tiles = svgEl("g", { class: "tl-tiles" });
    this.path = svgEl("g", { class: "tl-path" });
    this.marksGroup = svgEl("g", { class: "tl-marks" });
    this.cursorDot = svgEl("circle", {
      class: "tl-cursor",
      r: "5",
      fill: "none",
      stroke: "#e03131",
      "stroke-width": "2",
      "data-step": "1",
    });
    this.svg.append(this.tiles, this.path, this.marksGroup, this.cursorDot);

    this.svg.addEventListener("mousemove", (event) => {
      const step = this.stepAtClient(event.clientX, event.clientY);
      if (step !== null && this.onHover) this.onHover(step);
    });
    this.svg.addEventListener("click", (event) => {
      const step = this.stepAtClient(event.clientX, event.clientY);
      if (step !== null && this.onSelect) this.onSelect(step);
    });
    container.appendChild(this.svg);
  }

  get cursorStep(): number {
    return Number(this.cursorDot.getAttribute("data-step"));
  }

  render(points: TripPoint[]): void {
    this.points = points;
    this.path.replaceChildren();
    this.tiles.replaceChildren();
    if (!points.length) return;

    const lats = points.map((p) => p.latitude);
    const lngs = points.map((p) => p.longitude);
    const bounds = {
      minLat: Math.min(...lats),
      maxLat: Math.max(...lats),
      minLng: Math.min(...lngs),
      maxLng: Math.max(...lngs),
    };
    // Pick the deepest zoom whose projected bounding box still fits.
    let zoom = this.options.maxZoom ?? 18;
    for (; zoom > 1; zoom -= 1) {
      const a = mercator(bounds.maxLat, bounds.minLng, zoom);
      const b = mercator(bounds.minLat, bounds.maxLng, zoom);
      if (b.x - a.x <= this.width * 0.85 && b.y - a.y <= this.height * 0.85) break;
    }
    const topLeft = mercator(bounds.maxLat, bounds.minLng, zoom);
    const bottomRight = mercator(bounds.minLat, bounds.maxLng, zoom);
    const offsetX = topLeft.x - (this.width - (bottomRight.x - topLeft.x)) / 2;
    const offsetY = topLeft.y - (this.height - (bottomRight.y - topLeft.y)) / 2;

    this.projected = points.map((p) => {
      const world = mercator(p.latitude, p.longitude, zoom);
      return { x: world.x - offsetX, y: world.y - offsetY };
    });

    if (this.options.tileUrl) {
      const firstTileX = Math.floor(offsetX / TILE_SIZE);
      const firstTileY = Math.floor(offsetY / TILE_SIZE);
      const lastTileX = Math.floor((offsetX + this.width) / TILE_SIZE);
      const lastTileY = Math.floor((offsetY + this.height) / TILE_SIZE);
      for (let tx = firstTileX; tx <= lastTileX; tx += 1) {
        for (let ty = firstTileY; ty <= lastTileY; ty += 1) {
          const href = this.options.tileUrl
            .replace("{z}", String(zoom))
            .replace("{x}", String(tx))
            .replace("{y}", String(ty));
          const image = svgEl("image", {
            x: String(tx * TILE_SIZE - offsetX),
            y: String(ty * TILE_SIZE - offsetY),
            width: String(TILE_SIZE),
            height: String(TILE_SIZE),
          });
          image.setAttribute("href", href);
          this.tiles.appendChild(image);
        }
      }
    }

    this.path.appendChild(
      svgEl("polyline", {
        points: this.projected.map((p) => `${p.x},${p.y}`).join(" "),
        fill: "none",
        stroke: "#1864ab",
        "stroke-width": "2.5",
        "stroke-linejoin": "round",
      }),
    );
    this.setCursor(this.cursorStep);
  }

  pointFor(step: number): { x: number; y: number } | null {
    return this.projected[step - 1] ?? null;
  }

  stepAtClient(clientX: number, clientY: number): number | null {
    if (!this.projected.length) return null;
    const rect = this.svg.getBoundingClientRect();
    const x = clientX - rect.left;
    const y = clientY - rect.top;
    let bestStep = 1;
    let bestDist = Infinity;
    this.projected.forEach((p, i) => {
      const dist = (p.x - x) ** 2 + (p.y - y) ** 2;
      if (dist < bestDist) {
        bestDist = dist;
        bestStep = i + 1;
      }
    });
    return bestStep;
  }

  setCursor(step: number): void {
    const point = this.pointFor(step);
    if (point) {
      this.cursorDot.setAttribute("cx", String(point.x));
      this.cursorDot.setAttribute("cy", String(point.y));
    }
    this.cursorDot.setAttribute("data-step", String(step));
  }

  setMarks(overlays: MarkOverlay[]): void {
    this.marksGroup.replaceChildren();
    for (const overlay of overlays) {
      if (!overlay.visible) continue;
      for (const badge of overlay.badges) {
        const point = this.pointFor(badge.step);
        if (!point) continue;
        const circle = svgEl("circle", {
          class: "tl-badge",
          cx: String(point.x),
          cy: String(point.y),
          r: "5",
          fill: overlay.color,
          "fill-opacity": "0.85",
          "data-author": overlay.author,
          "data-step": String(badge.step),
        });
        const title = svgEl("title");
        title.textContent = `${overlay.author} @ ${badge.step}: ${badge.title}`;
        circle.appendChild(title);
        this.marksGroup.appendChild(circle);
      }
    }
  }
}
