// Shared editing model: a set of grid units (one per canonical code),
// each holding five activity probabilities under the sum <= 1
// constraint. Edits are all-or-nothing across the current selection;
// an edit that would overfill any selected unit is rejected and the
// offending units are reported for highlighting.

import {
  ACTIVITY_CODES,
  ACTIVITY_FIELDS,
  AxiomRowDoc,
  ProbVector,
  Provenance,
  fieldIndex,
  vectorSum,
  zeroVector,
} from "./types.js";

const MASS_EPS = 1e-9;

export interface EditResult {
  ok: boolean;
  /** unit keys that would exceed unit mass; empty when ok */
  offending: string[];
}

interface Unit {
  probs: ProbVector;
  provenance: Provenance;
}

export class ProbabilityGrid {
  private units = new Map<string, Unit>();
  private passthrough = new Map<string, AxiomRowDoc>();
  readonly selection = new Set<string>();

  constructor(private readonly validCodes: ReadonlySet<string>) {}

  isValidCode(code: string): boolean {
    return this.validCodes.has(code);
  }

  probabilities(code: string): ProbVector {
    const unit = this.units.get(code);
    return unit ? ([...unit.probs] as ProbVector) : zeroVector();
  }

  provenance(code: string): Provenance {
    return this.units.get(code)?.provenance ?? "learned";
  }

  /** Unallocated mass, displayed as the idle/null remainder. */
  idleMass(code: string): number {
    return Math.max(0, 1 - vectorSum(this.probabilities(code)));
  }

  probability(code: string, activity: number): number {
    return this.probabilities(code)[fieldIndex(activity)];
  }

  // ---- selection -------------------------------------------------------

  select(codes: Iterable<string>, extend = false): void {
    if (!extend) this.selection.clear();
    for (const code of codes) {
      if (!this.validCodes.has(code)) throw new Error(`not a grid code: ${code}`);
      this.selection.add(code);
    }
  }

  clearSelection(): void {
    this.selection.clear();
  }

  // ---- editing ---------------------------------------------------------

  /**
   * Set one activity's probability on every selected unit. If any unit
   * would end up with total mass above 1 the whole edit is rejected and
   * no state changes.
   */
  setProbability(activity: number, p: number, codes?: Iterable<string>): EditResult {
    if (!(p >= 0 && p <= 1)) throw new Error(`probability ${p} outside [0, 1]`);
    const targets = [...(codes ?? this.selection)];
    if (targets.length === 0) return { ok: true, offending: [] };
    const idx = fieldIndex(activity);
    const offending: string[] = [];
    for (const code of targets) {
      if (!this.validCodes.has(code)) throw new Error(`not a grid code: ${code}`);
      const probs = this.probabilities(code);
      const newSum = vectorSum(probs) - probs[idx] + p;
      if (newSum > 1 + MASS_EPS) offending.push(code);
    }
    if (offending.length > 0) return { ok: false, offending };
    for (const code of targets) {
      const unit = this.units.get(code) ?? {
        probs: zeroVector(),
        provenance: "learned" as Provenance,
      };
      unit.probs[idx] = p;
      unit.provenance = "manual";
      this.units.set(code, unit);
    }
    return { ok: true, offending: [] };
  }

  /** Every populated unit satisfies the mass constraint. */
  checkInvariant(): boolean {
    for (const unit of this.units.values()) {
      if (vectorSum(unit.probs) > 1 + MASS_EPS) return false;
    }
    return true;
  }

  // ---- wire mapping ------------------------------------------------------

  /**
   * Load a table. Rows whose codes fall outside the editable grid
   * (unknown locations, null codes) are kept verbatim and re-emitted on
   * save, so load -> save is a fixpoint.
   */
  loadRows(rows: AxiomRowDoc[]): void {
    this.units.clear();
    this.passthrough.clear();
    this.selection.clear();
    for (const row of rows) {
      if (this.validCodes.has(row.code)) {
        const probs = ACTIVITY_FIELDS.map((f) => row[f]) as ProbVector;
        this.units.set(row.code, { probs, provenance: row.provenance });
      } else {
        this.passthrough.set(row.code, { ...row });
      }
    }
  }

  /** Only codes carrying probability mass are transmitted. */
  toRows(): AxiomRowDoc[] {
    const rows: AxiomRowDoc[] = [...this.passthrough.values()].map((r) => ({
      ...r,
    }));
    for (const [code, unit] of this.units) {
      if (vectorSum(unit.probs) <= 0) continue;
      const row = { code, provenance: unit.provenance } as AxiomRowDoc;
      ACTIVITY_CODES.forEach((a, i) => {
        row[ACTIVITY_FIELDS[i]] = unit.probs[i];
      });
      rows.push(row);
    }
    rows.sort((a, b) => (a.code < b.code ? -1 : a.code > b.code ? 1 : 0));
    return rows;
  }
}
