// Portal assembly: three synchronized views (speed, heading change, map),
// the annotation form, per-annotator overlay toggles, and the aggregation
// workspace with accept / refine / reject decisions.

import { ApiClient, ApiError } from "./api.js";
import { TimeSeriesChart, type MarkOverlay } from "./charts.js";
import { TrajectoryMap } from "./map.js";
import { ViewState, type Mode } from "./state.js";
import {
  SEGMENT_TYPES,
  type AnnotationType,
  type Decision,
  type FinalizedLayer,
  type Layer,
  type SegmentType,
  type Suggestions,
  type TripDetail,
} from "./types.js";

const PALETTE = ["#2b8a3e", "#9c36b5", "#e8590c", "#1971c2", "#c2255c", "#5f3dc4"];
const AUTOANN_COLOR = "#868e96";
const CANDIDATE_COLOR = "#fab005";
const FINALIZED_COLOR = "#0ca678";

export interface PortalOptions {
  mode?: Mode;
  author?: string;
  tileUrl?: string;
  profile?: "strict" | "easy";
}

interface DecisionRowState {
  action: "undecided" | "accept" | "refine" | "reject";
  refineStep: string;
  refineTypes: string;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  if (text !== undefined) node.textContent = text;
  return node;
}

export class Portal {
  readonly state: ViewState;
  speedChart: TimeSeriesChart | null = null;
  headingChart: TimeSeriesChart | null = null;
  map: TrajectoryMap | null = null;
  trip: TripDetail | null = null;
  layers: Layer[] = [];
  suggestions: Suggestions | null = null;
  finalized: FinalizedLayer | null = null;
  private decisions = new Map<string, DecisionRowState>();
  private views: HTMLElement;
  private sidebar: HTMLElement;
  private formPanel: HTMLElement;
  private workspace: HTMLElement;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly options: PortalOptions = {},
  ) {
    const mode = options.mode ?? "annotate";
    this.state = new ViewState(mode, options.author ?? (mode === "aggregate" ? "aggregator" : "annotator"));
    root.classList.add("tl-portal");
    this.sidebar = el("div", { class: "tl-sidebar" });
    this.views = el("div", { class: "tl-views" });
    this.formPanel = el("div", { class: "tl-form" });
    this.workspace = el("div", { class: "tl-workspace" });
    root.append(this.sidebar, this.views, this.formPanel, this.workspace);

    this.state.on("cursor", () => this.syncCursor());
    this.state.on("overlays", () => this.refreshMarks());
    this.state.on("selection", () => this.renderForm());
  }

  async init(): Promise<void> {
    try {
      const trips = await this.api.listTrips();
      this.renderTripPicker(trips.map((t) => t.trip_id));
    } catch (error) {
      this.renderError(error);
    }
  }

  private renderTripPicker(tripIds: string[]): void {
    this.sidebar.replaceChildren();
    const select = el("select", { class: "tl-trip-select" });
    for (const id of tripIds) select.appendChild(el("option", { value: id }, id));
    const load = el("button", { class: "tl-load" }, "Load");
    load.addEventListener("click", () => void this.loadTrip(select.value));
    this.sidebar.append(
      el("div", { class: "tl-identity" }, `${this.state.mode} as ${this.state.author}`),
      select,
      load,
    );
  }

  private renderError(error: unknown): void {
    // No partial render: a failed trip fetch leaves only the banner.
    this.views.replaceChildren();
    this.formPanel.replaceChildren();
    this.workspace.replaceChildren();
    this.speedChart = null;
    this.headingChart = null;
    this.map = null;
    this.trip = null;
    const message = error instanceof Error ? error.message : String(error);
    this.views.appendChild(el("div", { class: "tl-error-banner", role: "alert" }, message));
  }

  async loadTrip(tripId: string): Promise<void> {
    let trip: TripDetail;
    let layers: Layer[];
    let suggestions: Suggestions | null = null;
    try {
      trip = await this.api.getTrip(tripId);
      layers = await this.api.getLayers(tripId);
      if (this.state.mode === "aggregate") {
        suggestions = await this.api.getSuggestions(tripId, this.options.profile ?? "strict");
      }
    } catch (error) {
      this.renderError(error);
      return;
    }
    this.trip = trip;
    this.layers = layers;
    this.suggestions = suggestions;
    this.finalized = null;
    this.decisions.clear();
    this.state.setTrip(trip.trip_id, trip.n);
    this.buildViews();
    this.renderForm();
    this.renderOverlayPanel();
    this.renderWorkspace();
    this.refreshMarks();
  }

  private buildViews(): void {
    if (!this.trip) return;
    this.views.replaceChildren();
    const chartsBox = el("div", { class: "tl-charts" });
    const mapBox = el("div", { class: "tl-map-box" });
    this.views.append(chartsBox, mapBox);

    this.speedChart = new TimeSeriesChart(chartsBox, {
      kind: "speed",
      label: "Speed (mph)",
      color: "#1864ab",
    });
    this.headingChart = new TimeSeriesChart(chartsBox, {
      kind: "heading",
      label: "Heading change (deg)",
      color: "#862e9c",
    });
    this.map = new TrajectoryMap(mapBox, { tileUrl: this.options.tileUrl });

    this.speedChart.render(this.trip.points.map((p) => p.speed));
    this.headingChart.render(this.trip.points.map((p) => p.heading_change));
    this.map.render(this.trip.points);

    for (const view of [this.speedChart, this.headingChart]) {
      view.onHover = (step) => this.state.setCursor(step);
      view.onSelect = (step) => this.state.selectStep(step);
    }
    this.map.onHover = (step) => this.state.setCursor(step);
    this.map.onSelect = (step) => this.state.selectStep(step);
    this.syncCursor();
  }

  private syncCursor(): void {
    const step = this.state.cursorStep;
    this.speedChart?.setCursor(step);
    this.headingChart?.setCursor(step);
    this.map?.setCursor(step);
  }

  private overlayAuthors(): { author: string; color: string }[] {
    const out: { author: string; color: string }[] = [];
    this.layers.forEach((layer, i) => {
      out.push({ author: layer.author, color: PALETTE[i % PALETTE.length] });
    });
    if (this.suggestions) {
      out.push({ author: this.suggestions.autoann.author, color: AUTOANN_COLOR });
      out.push({ author: "candidates", color: CANDIDATE_COLOR });
    }
    return out;
  }

  private renderOverlayPanel(): void {
    const panel = el("div", { class: "tl-overlays" });
    panel.appendChild(el("span", {}, "Show annotations:"));
    for (const { author } of this.overlayAuthors()) {
      const label = el("label", { class: "tl-overlay" });
      const box = el("input", {
        type: "checkbox",
        class: "tl-overlay-toggle",
        "data-author": author,
      });
      box.checked = this.state.overlayVisible(author);
      box.addEventListener("change", () => this.state.toggleOverlay(author, box.checked));
      label.append(box, document.createTextNode(author));
      panel.appendChild(label);
    }
    this.sidebar.querySelector(".tl-overlays")?.remove();
    this.sidebar.appendChild(panel);
  }

  refreshMarks(): void {
    const overlays: MarkOverlay[] = [];
    const colorByAuthor = new Map(this.overlayAuthors().map((o) => [o.author, o.color]));
    for (const layer of this.layers) {
      overlays.push({
        author: layer.author,
        color: colorByAuthor.get(layer.author) ?? "#495057",
        visible: this.state.overlayVisible(layer.author),
        badges: layer.marks.map((m) => ({
          step: m.time_step,
          title: `${m.annotation_type}: ${m.segment_types.join(";")}`,
        })),
      });
    }
    if (this.suggestions) {
      const machine = this.suggestions.autoann;
      overlays.push({
        author: machine.author,
        color: AUTOANN_COLOR,
        visible: this.state.overlayVisible(machine.author),
        badges: machine.marks.map((m) => ({
          step: m.time_step,
          title: `${m.annotation_type}: ${m.segment_types.join(";")}`,
        })),
      });
      overlays.push({
        author: "candidates",
        color: CANDIDATE_COLOR,
        visible: this.state.overlayVisible("candidates"),
        badges: this.suggestions.candidates.map((c) => ({
          step: c.end,
          title: `${c.id} (${c.suggested_types.join(";")}, evidence ${c.evidence})`,
        })),
      });
    }
    if (this.finalized) {
      overlays.push({
        author: "finalized",
        color: FINALIZED_COLOR,
        visible: true,
        badges: this.finalized.marks.map((m) => ({
          step: m.time_step,
          title: `${m.annotation_type}: ${m.segment_types.join(";")}`,
        })),
      });
    }
    this.speedChart?.setMarks(overlays);
    this.headingChart?.setMarks(overlays);
    this.map?.setMarks(overlays);
  }

  // -- annotation form (Box B) -------------------------------------------

  private renderForm(): void {
    if (!this.trip) return;
    this.formPanel.replaceChildren();
    const selected = this.state.selectedStep;
    this.formPanel.appendChild(
      el(
        "div",
        { class: "tl-selected" },
        selected === null ? "No point selected" : `Selected point: step ${selected}`,
      ),
    );
    const annotSelect = el("select", { class: "tl-annotation-type" });
    for (const value of ["Segment", "Maybe-Segment", "Non-Segment"]) {
      annotSelect.appendChild(el("option", { value }, value));
    }
    annotSelect.value = this.state.form.annotationType;
    annotSelect.addEventListener("change", () => {
      this.state.form.annotationType = annotSelect.value as AnnotationType;
    });
    this.formPanel.appendChild(annotSelect);

    // Annotators pick one type; the aggregator may pick several.
    const multi = this.state.mode === "aggregate";
    const typeBox = el("div", { class: "tl-types" });
    for (const segType of SEGMENT_TYPES) {
      const label = el("label", { class: "tl-type" });
      const input = el("input", {
        type: multi ? "checkbox" : "radio",
        name: "tl-segment-type",
        class: "tl-type-choice",
        value: segType,
      });
      input.checked = this.state.form.segmentTypes.has(segType);
      input.addEventListener("change", () => {
        if (!multi) this.state.form.segmentTypes.clear();
        if (input.checked) this.state.form.segmentTypes.add(segType);
        else this.state.form.segmentTypes.delete(segType);
      });
      label.append(input, document.createTextNode(segType));
      typeBox.appendChild(label);
    }
    this.formPanel.appendChild(typeBox);

    const error = el("div", { class: "tl-form-error", role: "alert" });
    const submit = el("button", { class: "tl-submit" }, "Annotate");
    submit.addEventListener("click", () => void this.submitAnnotation(error));
    this.formPanel.append(submit, error);
  }

  async submitAnnotation(errorBox?: HTMLElement): Promise<void> {
    const showError = (message: string) => {
      const box = errorBox ?? this.formPanel.querySelector(".tl-form-error");
      if (box) box.textContent = message;
    };
    if (!this.trip) return;
    const step = this.state.selectedStep;
    if (step === null) {
      showError("Select a point first");
      return;
    }
    const { annotationType, segmentTypes } = this.state.form;
    if (annotationType !== "Non-Segment" && segmentTypes.size === 0) {
      showError("Choose a segment type");
      return;
    }
    try {
      const layer = await this.api.postMark(this.trip.trip_id, {
        author: this.state.author,
        time_step: step,
        annotation_type: annotationType,
        segment_types: [...segmentTypes],
      });
      const index = this.layers.findIndex((l) => l.author === layer.author);
      if (index >= 0) this.layers[index] = layer;
      else this.layers.push(layer);
      this.renderOverlayPanel();
      this.renderWorkspace();
      this.refreshMarks();
      showError("");
    } catch (error) {
      // Server rejection: keep the form as-is, surface the reason.
      showError(error instanceof ApiError ? error.detail : String(error));
    }
  }

  // -- aggregation workspace ----------------------------------------------

  private sourceRows(): { key: string; label: string; decision: Decision }[] {
    const rows: { key: string; label: string; decision: Decision }[] = [];
    const layers = this.suggestions ? [...this.layers, this.suggestions.autoann] : this.layers;
    for (const layer of layers) {
      for (const mark of layer.marks) {
        rows.push({
          key: `mark:${layer.author}:${mark.time_step}`,
          label: `${layer.author} @ ${mark.time_step} (${mark.segment_types.join(";")})`,
          decision: { action: "accept", source_author: layer.author, source_time_step: mark.time_step },
        });
      }
    }
    for (const candidate of this.suggestions?.candidates ?? []) {
      rows.push({
        key: `candidate:${candidate.id}`,
        label: `${candidate.id} (${candidate.suggested_types.join(";")})`,
        decision: { action: "accept", candidate: candidate.id },
      });
    }
    return rows;
  }

  private renderWorkspace(): void {
    this.workspace.replaceChildren();
    if (this.state.mode !== "aggregate" || !this.trip) return;
    const list = el("div", { class: "tl-decisions" });
    for (const row of this.sourceRows()) {
      const rowState = this.decisions.get(row.key) ?? {
        action: "undecided" as const,
        refineStep: "",
        refineTypes: "",
      };
      this.decisions.set(row.key, rowState);
      const rowEl = el("div", { class: "tl-decision-row", "data-source": row.key });
      rowEl.appendChild(el("span", { class: "tl-source" }, row.label));
      const action = el("select", { class: "tl-action" });
      for (const value of ["undecided", "accept", "refine", "reject"]) {
        action.appendChild(el("option", { value }, value));
      }
      action.value = rowState.action;
      const refineStep = el("input", {
        class: "tl-refine-step",
        type: "number",
        placeholder: "new step",
      });
      refineStep.value = rowState.refineStep;
      const refineTypes = el("input", {
        class: "tl-refine-types",
        type: "text",
        placeholder: "Types;separated",
      });
      refineTypes.value = rowState.refineTypes;
      action.addEventListener("change", () => {
        rowState.action = action.value as DecisionRowState["action"];
      });
      refineStep.addEventListener("change", () => {
        rowState.refineStep = refineStep.value;
      });
      refineTypes.addEventListener("change", () => {
        rowState.refineTypes = refineTypes.value;
      });
      rowEl.append(action, refineStep, refineTypes);
      list.appendChild(rowEl);
    }
    const error = el("div", { class: "tl-finalize-error", role: "alert" });
    const finalize = el("button", { class: "tl-finalize" }, "Finalize");
    finalize.addEventListener("click", () => void this.finalizeDecisions(error));
    this.workspace.append(list, finalize, error);
  }

  private collectDecisions(): Decision[] {
    const decisions: Decision[] = [];
    for (const row of this.sourceRows()) {
      const rowState = this.decisions.get(row.key);
      if (!rowState || rowState.action === "undecided") continue;
      const decision: Decision = { ...row.decision, action: rowState.action };
      if (rowState.action === "refine") {
        if (rowState.refineStep) decision.time_step = Number(rowState.refineStep);
        if (rowState.refineTypes) {
          decision.segment_types = rowState.refineTypes
            .split(";")
            .map((t) => t.trim())
            .filter((t) => t.length > 0) as SegmentType[];
        }
      }
      decisions.push(decision);
    }
    return decisions;
  }

  async finalizeDecisions(errorBox?: HTMLElement): Promise<void> {
    if (!this.trip) return;
    const box = errorBox ?? this.workspace.querySelector(".tl-finalize-error");
    for (const rowEl of this.workspace.querySelectorAll(".tl-decision-row.tl-conflict")) {
      rowEl.classList.remove("tl-conflict");
    }
    try {
      this.finalized = await this.api.finalize(this.trip.trip_id, {
        phase: (this.options.profile ?? "strict") as "strict" | "easy",
        decisions: this.collectDecisions(),
        author: this.state.author,
      });
      if (box) box.textContent = "";
      this.refreshMarks();
    } catch (error) {
      const detail = error instanceof ApiError ? error.detail : String(error);
      if (box) box.textContent = detail;
      // Highlight the rows whose decisions collide on one step.
      const match = detail.match(/step (\d+)/);
      if (match) {
        const step = match[1];
        for (const rowEl of this.workspace.querySelectorAll(".tl-decision-row")) {
          if (rowEl.getAttribute("data-source")?.endsWith(`:${step}`)) {
            rowEl.classList.add("tl-conflict");
          }
        }
      }
    }
  }
}
