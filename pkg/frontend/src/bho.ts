// BHO editor model: a 24x24 matrix of hands states (right-hand object
// x left-hand object, id 0 = idle), one probability vector per cell.
// The canonical cell code is right*100 + left, zero padded.

import { ProbabilityGrid } from "./grid.js";

export const OBJECT_COUNT = 24;

export function bhoCode(right: number, left: number): string {
  if (right < 0 || right >= OBJECT_COUNT || left < 0 || left >= OBJECT_COUNT) {
    throw new Error(`object ids out of range: ${right}, ${left}`);
  }
  return String(right * 100 + left).padStart(4, "0");
}

function allCodes(): Set<string> {
  const codes = new Set<string>();
  for (let r = 0; r < OBJECT_COUNT; r++) {
    for (let l = 0; l < OBJECT_COUNT; l++) codes.add(bhoCode(r, l));
  }
  return codes;
}

export class BhoGridModel extends ProbabilityGrid {
  constructor() {
    super(allCodes());
  }

  selectCell(right: number, left: number, extend = false): void {
    this.select([bhoCode(right, left)], extend);
  }

  /** Rectangular multi-select over object-id ranges, inclusive. */
  selectBlock(r0: number, r1: number, l0: number, l1: number): void {
    const codes: string[] = [];
    for (let r = Math.min(r0, r1); r <= Math.max(r0, r1); r++) {
      for (let l = Math.min(l0, l1); l <= Math.max(l0, l1); l++) {
        codes.push(bhoCode(r, l));
      }
    }
    this.select(codes);
  }
}
