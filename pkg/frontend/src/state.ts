// Client-side view state: cursor, selection, overlay visibility, and the
// pending annotation form.  Purely presentational; the server owns marks.

import type { AnnotationType, SegmentType } from "./types.js";

export type Mode = "annotate" | "aggregate";

export interface PendingForm {
  annotationType: AnnotationType;
  segmentTypes: Set<SegmentType>;
}

type Listener = () => void;

export class ViewState {
  readonly mode: Mode;
  readonly author: string;
  tripId: string | null = null;
  tripLength = 0;
  private cursor = 1;
  selectedStep: number | null = null;
  private overlayVisibility = new Map<string, boolean>();
  form: PendingForm = { annotationType: "Segment", segmentTypes: new Set() };
  private listeners = new Map<string, Set<Listener>>();

  constructor(mode: Mode, author: string) {
    this.mode = mode;
    this.author = author;
  }

  on(event: "cursor" | "overlays" | "selection", listener: Listener): void {
    if (!this.listeners.has(event)) this.listeners.set(event, new Set());
    this.listeners.get(event)!.add(listener);
  }

  private emit(event: string): void {
    for (const listener of this.listeners.get(event) ?? []) listener();
  }

  setTrip(tripId: string, length: number): void {
    this.tripId = tripId;
    this.tripLength = length;
    this.cursor = 1;
    this.selectedStep = null;
    this.form = { annotationType: "Segment", segmentTypes: new Set() };
  }

  get cursorStep(): number {
    return this.cursor;
  }

  setCursor(step: number): void {
    const clamped = Math.min(Math.max(Math.round(step), 1), Math.max(this.tripLength, 1));
    if (clamped !== this.cursor) {
      this.cursor = clamped;
      this.emit("cursor");
    }
  }

  selectStep(step: number): void {
    this.selectedStep = step;
    this.setCursor(step);
    this.emit("selection");
  }

  overlayVisible(author: string): boolean {
    return this.overlayVisibility.get(author) ?? true;
  }

  toggleOverlay(author: string, visible?: boolean): void {
    const next = visible ?? !this.overlayVisible(author);
    this.overlayVisibility.set(author, next);
    this.emit("overlays");
  }
}
