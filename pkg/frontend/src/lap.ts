// LAP editor model: an 8x8 grid of room cells, each drawn as a rosette
// of six 60-degree angle wedges; a posture tab (stand/walk/sit/lie)
// picks which posture layer the wedges edit. A wedge-posture maps to
// the canonical four-digit code x,y,wedge,posture.

import { ProbabilityGrid } from "./grid.js";

export const GRID_SIZE = 8;
export const WEDGES = 6;
export const POSTURES = [1, 2, 3, 4] as const; // stand, walk, sit, lie
export const POSTURE_NAMES: Record<number, string> = {
  1: "stand",
  2: "walk",
  3: "sit",
  4: "lie",
};

export function lapCode(x: number, y: number, wedge: number, posture: number): string {
  if (x < 1 || x > GRID_SIZE || y < 1 || y > GRID_SIZE) {
    throw new Error(`cell out of range: ${x}, ${y}`);
  }
  if (wedge < 0 || wedge >= WEDGES) throw new Error(`wedge out of range: ${wedge}`);
  if (!POSTURES.includes(posture as (typeof POSTURES)[number])) {
    throw new Error(`posture out of range: ${posture}`);
  }
  return `${x}${y}${wedge}${posture}`;
}

function allCodes(): Set<string> {
  const codes = new Set<string>();
  for (let x = 1; x <= GRID_SIZE; x++) {
    for (let y = 1; y <= GRID_SIZE; y++) {
      for (let w = 0; w < WEDGES; w++) {
        for (const posture of POSTURES) codes.add(lapCode(x, y, w, posture));
      }
    }
  }
  return codes;
}

export class LapWedgeModel extends ProbabilityGrid {
  posture: number = 1;

  constructor() {
    super(allCodes());
  }

  setPosture(posture: number): void {
    if (!POSTURES.includes(posture as (typeof POSTURES)[number])) {
      throw new Error(`posture out of range: ${posture}`);
    }
    this.posture = posture;
    this.clearSelection();
  }

  selectWedge(x: number, y: number, wedge: number, extend = false): void {
    this.select([lapCode(x, y, wedge, this.posture)], extend);
  }

  /** A group of circles: every wedge of every named cell. */
  selectCells(cells: Array<[number, number]>, extend = false): void {
    const codes: string[] = [];
    for (const [x, y] of cells) {
      for (let w = 0; w < WEDGES; w++) codes.push(lapCode(x, y, w, this.posture));
    }
    this.select(codes, extend);
  }

  /** The same wedge direction across a group of cells. */
  selectWedgeAcross(cells: Array<[number, number]>, wedge: number, extend = false): void {
    const codes = cells.map(([x, y]) => lapCode(x, y, wedge, this.posture));
    this.select(codes, extend);
  }
}
