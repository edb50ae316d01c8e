// Mask primitive model mirroring the server wire format.
// size semantics by kind: ellipsoid -> radii, box -> half-extents,
// cylinder -> (radius_a, radius_b, half_height). rotation: XYZ Euler, radians.

export type PrimitiveKind = 'ellipsoid' | 'box' | 'cylinder';

export interface PrimitiveSpec {
  kind: PrimitiveKind;
  center: [number, number, number];
  size: [number, number, number];
  rotation: [number, number, number];
}

export function defaultPrimitive(kind: PrimitiveKind): PrimitiveSpec {
  const size: [number, number, number] =
    kind === 'cylinder' ? [0.12, 0.12, 0.15] : [0.15, 0.15, 0.15];
  return { kind, center: [0, 0.1, 0], size, rotation: [0, 0, 0] };
}

export function clonePrimitive(p: PrimitiveSpec): PrimitiveSpec {
  return {
    kind: p.kind,
    center: [...p.center],
    size: [...p.size],
    rotation: [...p.rotation],
  };
}

const EPS = 1e-9;

function tripleEq(a: number[], b: number[]): boolean {
  return a.length === b.length && a.every((v, i) => Math.abs(v - b[i]) <= EPS);
}

export function primitivesEqual(a: PrimitiveSpec[], b: PrimitiveSpec[]): boolean {
  if (a.length !== b.length) return false;
  return a.every((p, i) =>
    p.kind === b[i].kind &&
    tripleEq(p.center, b[i].center) &&
    tripleEq(p.size, b[i].size) &&
    tripleEq(p.rotation, b[i].rotation));
}

export function validatePrimitive(p: PrimitiveSpec): string | null {
  if (!['ellipsoid', 'box', 'cylinder'].includes(p.kind)) return `unknown kind ${p.kind}`;
  if (p.size.some((s) => !(s > 0))) return 'size parameters must be positive';
  return null;
}
