/**
 * Client-side sRGB to CIE-Lab (D65) conversion.
 *
 * Used only to preview what a picked color means in Lab terms before
 * it is stored on the form; once stored, the triple travels to the
 * service untouched. Matches the service's conversion constants so the
 * preview agrees with what the engine would compute.
 */

const RGB_TO_XYZ = [
  [0.4124564, 0.3575761, 0.1804375],
  [0.2126729, 0.7151522, 0.072175],
  [0.0193339, 0.119192, 0.9503041],
] as const;

const WHITE = [0.95047, 1.0, 1.08883] as const;
const DELTA = 6 / 29;

function gammaDecode(c: number): number {
  return c > 0.04045 ? Math.pow((c + 0.055) / 1.055, 2.4) : c / 12.92;
}

function f(t: number): number {
  return t > DELTA ** 3 ? Math.cbrt(t) : t / (3 * DELTA ** 2) + 4 / 29;
}

/** Convert 8-bit sRGB to Lab. L is clamped to [0, 100] like the service does. */
export function rgbToLab(r: number, g: number, b: number): [number, number, number] {
  const lin = [gammaDecode(r / 255), gammaDecode(g / 255), gammaDecode(b / 255)];
  const fxyz = RGB_TO_XYZ.map((row, i) =>
    f((row[0] * lin[0]! + row[1] * lin[1]! + row[2] * lin[2]!) / WHITE[i]!),
  );
  const L = Math.min(100, Math.max(0, 116 * fxyz[1]! - 16));
  return [L, 500 * (fxyz[0]! - fxyz[1]!), 200 * (fxyz[1]! - fxyz[2]!)];
}

/** Parse "#rrggbb" (the value of an <input type="color">) to 8-bit RGB. */
export function hexToRgb(hex: string): [number, number, number] {
  const m = /^#?([0-9a-f]{6})$/i.exec(hex.trim());
  if (!m || m[1] === undefined) throw new Error(`not a #rrggbb color: ${hex}`);
  const v = parseInt(m[1], 16);
  return [(v >> 16) & 0xff, (v >> 8) & 0xff, v & 0xff];
}

function round2(n: number): number {
  const r = Math.round(n * 100) / 100;
  return r === 0 ? 0 : r;
}

/**
 * The Lab triple a picked color contributes to the form: rounded to
 * two decimals at entry so the displayed preview and the submitted
 * value are the same thing.
 */
export function pickedLab(hex: string): [number, number, number] {
  const [r, g, b] = hexToRgb(hex);
  const [L, a, bb] = rgbToLab(r, g, b);
  return [round2(L), round2(a), round2(bb)];
}
