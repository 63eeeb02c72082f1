// Wire types mirroring the annotation service's JSON bodies.

export type AnnotationType = "Segment" | "Maybe-Segment" | "Non-Segment";

export const SEGMENT_TYPES = [
  "Exit",
  "Merge",
  "Exit-Merge",
  "Loop",
  "Turn",
  "Smooth-Turn",
  "Left-Turn",
  "Right-Turn",
  "Jiggling",
  "Speed-Up",
  "Slow-Down",
  "Traffic-Light",
  "Traffic-Jam",
  "Other",
] as const;

export type SegmentType = (typeof SEGMENT_TYPES)[number];

export interface TripSummary {
  trip_id: string;
  n: number;
  start: string | null;
  end: string | null;
}

export interface TripPoint {
  time_step: number;
  timestamp: string;
  speed: number;
  acceleration: number;
  heading: number;
  heading_change: number;
  latitude: number;
  longitude: number;
}

export interface TripDetail {
  trip_id: string;
  n: number;
  points: TripPoint[];
}

export interface Mark {
  time_step: number;
  annotation_type: AnnotationType;
  segment_types: SegmentType[];
}

export interface Layer {
  trip_id: string;
  author: string;
  marks: Mark[];
}

export interface Candidate {
  id: string;
  kind: "speed" | "heading";
  begin: number;
  end: number;
  suggested_types: SegmentType[];
  evidence: number;
}

export interface Suggestions {
  autoann: Layer;
  histogram: Record<string, number>;
  candidates: Candidate[];
}

export interface MarkRequest {
  author: string;
  time_step: number;
  annotation_type: AnnotationType;
  segment_types: SegmentType[];
}

export interface Decision {
  action: "accept" | "refine" | "reject";
  source_author?: string;
  source_time_step?: number;
  candidate?: string;
  time_step?: number;
  annotation_type?: AnnotationType;
  segment_types?: SegmentType[];
}

export interface FinalizeRequest {
  phase: "strict" | "easy";
  decisions: Decision[];
  author?: string;
}

export interface FinalizedLayer extends Layer {
  phase: string;
}

export interface Assignment {
  trip_id: string;
  annotators: string[];
}
