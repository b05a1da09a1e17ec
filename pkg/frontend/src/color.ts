// Probability-to-color mapping: white at 0 rising to vivid red at 1.

export interface Rgb {
  r: number;
  g: number;
  b: number;
}

export function colorFor(p: number): Rgb {
  if (!(p >= 0 && p <= 1)) throw new Error(`probability ${p} outside [0, 1]`);
  const fade = Math.round(255 * (1 - p));
  return { r: 255, g: fade, b: fade };
}

export function cssColor(p: number): string {
  const { r, g, b } = colorFor(p);
  return `rgb(${r},${g},${b})`;
}
