// SVG time-series chart (speed or heading-change vs time) with a linked
// cursor, per-author mark badges, and x-axis zoom.  Coordinates are fixed
// logical pixels (viewBox = attribute size), so hit-testing works the
// same in a browser and under jsdom.

const SVG_NS = "http://www.w3.org/2000/svg";

export interface ChartOptions {
  kind: string;
  width?: number;
  height?: number;
  label?: string;
  color?: string;
}

export interface MarkBadge {
  step: number;
  title: string;
}

export interface MarkOverlay {
  author: string;
  color: string;
  visible: boolean;
  badges: MarkBadge[];
}

const PAD = { left: 38, right: 8, top: 8, bottom: 18 };

function svgEl<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) el.setAttribute(key, value);
  return el;
}

export class TimeSeriesChart {
  readonly svg: SVGSVGElement;
  private readonly width: number;
  private readonly height: number;
  private values: number[] = [];
  private xLo = 1;
  private xHi = 1;
  private yMax = 1;
  private readonly plot: SVGGElement;
  private readonly marksGroup: SVGGElement;
  private readonly cursorLine: SVGLineElement;
  onHover: ((step: number) => void) | null = null;
  onSelect: ((step: number) => void) | null = null;

  constructor(container: HTMLElement, private readonly options: ChartOptions) {
    this.width = options.width ?? 760;
    this.height = options.height ?? 180;
    this.svg = svgEl("svg", {
      width: String(this.width),
      height: String(this.height),
      viewBox: `0 0 ${this.width} ${this.height}`,
      class: "tl-chart",
      "data-kind": options.kind,
    });
    this.svg.appendChild(
      svgEl("rect", {
        x: "0",
        y: "0",
        width: String(this.width),
        height: String(this.height),
        fill: "#fcfcfd",
        stroke: "#d8dbe2",
      }),
    );
    if (options.label) {
      const text = svgEl("text", { x: String(PAD.left), y: "14", class: "tl-chart-label" });
      text.textContent = options.label;
      this.svg.appendChild(text);
    }
    this.plot = svgEl("g", { class: "tl-plot" });
    this.marksGroup = svgEl("g", { class: "tl-marks" });
    this.cursorLine = svgEl("line", {
      class: "tl-cursor",
      y1: String(PAD.top),
      y2: String(this.height - PAD.bottom),
      stroke: "#e03131",
      "stroke-width": "1.5",
      "data-step": "1",
    });
    this.svg.appendChild(this.plot);
    this.svg.appendChild(this.marksGroup);
    this.svg.appendChild(this.cursorLine);

    this.svg.addEventListener("mousemove", (event) => {
      const step = this.stepAtClientX(event.clientX);
      if (step !== null && this.onHover) this.onHover(step);
    });
    this.svg.addEventListener("click", (event) => {
      const step = this.stepAtClientX(event.clientX);
      if (step !== null && this.onSelect) this.onSelect(step);
    });
    this.svg.addEventListener("wheel", (event) => {
      event.preventDefault();
      if (event.deltaY < 0) this.zoomIn();
      else this.zoomOut();
    });
    container.appendChild(this.svg);
  }

  get cursorStep(): number {
    return Number(this.cursorLine.getAttribute("data-step"));
  }

  render(values: number[]): void {
    this.values = values;
    this.xLo = 1;
    this.xHi = Math.max(values.length, 1);
    this.yMax = Math.max(...values, 1);
    this.redraw();
  }

  private innerWidth(): number {
    return this.width - PAD.left - PAD.right;
  }

  xForStep(step: number): number {
    const span = Math.max(this.xHi - this.xLo, 1);
    return PAD.left + ((step - this.xLo) / span) * this.innerWidth();
  }

  private yForValue(value: number): number {
    const inner = this.height - PAD.top - PAD.bottom;
    return PAD.top + (1 - value / this.yMax) * inner;
  }

  stepAtClientX(clientX: number): number | null {
    if (!this.values.length) return null;
    const rect = this.svg.getBoundingClientRect();
    const x = clientX - rect.left;
    const span = Math.max(this.xHi - this.xLo, 1);
    const step = Math.round(this.xLo + ((x - PAD.left) / this.innerWidth()) * span);
    return Math.min(Math.max(step, 1), this.values.length);
  }

  setCursor(step: number): void {
    const x = this.xForStep(Math.min(Math.max(step, this.xLo), this.xHi));
    this.cursorLine.setAttribute("x1", String(x));
    this.cursorLine.setAttribute("x2", String(x));
    this.cursorLine.setAttribute("data-step", String(step));
  }

  // Zoom narrows the visible step window around the current cursor; the
  // cursor-to-step mapping stays consistent across views.
  zoomIn(): void {
    const center = this.cursorStep;
    const span = Math.max(this.xHi - this.xLo, 4);
    this.setXRange(center - span / 4, center + span / 4);
  }

  zoomOut(): void {
    const center = this.cursorStep;
    const span = this.xHi - this.xLo;
    this.setXRange(center - span, center + span);
  }

  resetZoom(): void {
    this.setXRange(1, this.values.length);
  }

  setXRange(lo: number, hi: number): void {
    const n = Math.max(this.values.length, 1);
    this.xLo = Math.max(1, Math.floor(lo));
    this.xHi = Math.min(n, Math.ceil(hi));
    if (this.xHi - this.xLo < 2) {
      this.xLo = Math.max(1, this.xHi - 2);
    }
    this.redraw();
  }

  private redraw(): void {
    this.plot.replaceChildren();
    if (!this.values.length) return;
    const points: string[] = [];
    for (let step = this.xLo; step <= this.xHi; step += 1) {
      const value = this.values[step - 1];
      points.push(`${this.xForStep(step)},${this.yForValue(value)}`);
    }
    this.plot.appendChild(
      svgEl("polyline", {
        points: points.join(" "),
        fill: "none",
        stroke: this.options.color ?? "#1864ab",
        "stroke-width": "1.5",
      }),
    );
    const axis = svgEl("text", {
      x: String(this.width - PAD.right),
      y: String(this.height - 4),
      "text-anchor": "end",
      class: "tl-axis",
    });
    axis.textContent = `t ${this.xLo}..${this.xHi}`;
    this.plot.appendChild(axis);
    this.setCursor(this.cursorStep);
  }

  setMarks(overlays: MarkOverlay[]): void {
    this.marksGroup.replaceChildren();
    for (const overlay of overlays) {
      if (!overlay.visible) continue;
      for (const badge of overlay.badges) {
        if (badge.step < this.xLo || badge.step > this.xHi) continue;
        const value = this.values[badge.step - 1] ?? 0;
        const circle = svgEl("circle", {
          class: "tl-badge",
          cx: String(this.xForStep(badge.step)),
          cy: String(this.yForValue(value)),
          r: "4",
          fill: overlay.color,
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
