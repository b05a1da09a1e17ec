// Wire types for the axiom service API.

export const ACTIVITY_CODES = [101, 102, 103, 104, 105] as const;
export type ActivityCode = (typeof ACTIVITY_CODES)[number];

export const ACTIVITY_FIELDS = ["p101", "p102", "p103", "p104", "p105"] as const;
export type ActivityField = (typeof ACTIVITY_FIELDS)[number];

export type Provenance = "learned" | "manual";

export interface AxiomRowDoc {
  code: string;
  p101: number;
  p102: number;
  p103: number;
  p104: number;
  p105: number;
  provenance: Provenance;
}

export interface AxiomTableDoc {
  property: "LAP" | "BHO";
  training_size: number;
  rows: AxiomRowDoc[];
  version: number;
}

export interface ActivityInfo {
  code: number;
  name: string;
}

export interface ObjectInfo {
  id: number;
  name: string;
}

export interface ActivityScoreDoc {
  code: number;
  precision: number;
  recall: number;
  f: number;
}

export interface MetricsReportDoc {
  hit_rate: { k1: number | null; k2: number | null; k3: number | null };
  per_activity: ActivityScoreDoc[];
  weighted_f: number;
  confusion: number[][];
}

export interface RunStatusDoc {
  run_id: string;
  status: "pending" | "running" | "done" | "failed";
  report: MetricsReportDoc | null;
  error: string | null;
}

/** Five probabilities in ACTIVITY_CODES order. */
export type ProbVector = [number, number, number, number, number];

export function zeroVector(): ProbVector {
  return [0, 0, 0, 0, 0];
}

export function vectorSum(v: ProbVector): number {
  return v[0] + v[1] + v[2] + v[3] + v[4];
}

export function fieldIndex(activity: number): number {
  const i = ACTIVITY_CODES.indexOf(activity as ActivityCode);
  if (i < 0) throw new Error(`unknown activity code ${activity}`);
  return i;
}
