// Minimal OBJ reader for the server's normalized meshes
// (v lines with optional r g b, polygonal f lines, negative indices).

export interface ParsedObj {
  positions: Float32Array;
  indices: Uint32Array;
  colors: Float32Array | null;
}

export function parseObjText(text: string): ParsedObj {
  const positions: number[] = [];
  const colors: number[] = [];
  const indices: number[] = [];
  let anyColor = false;

  for (const rawLine of text.split('\n')) {
    const line = rawLine.trim();
    if (!line || line.startsWith('#')) continue;
    const tok = line.split(/\s+/);
    if (tok[0] === 'v') {
      positions.push(Number(tok[1]), Number(tok[2]), Number(tok[3]));
      if (tok.length >= 7) {
        colors.push(Number(tok[4]), Number(tok[5]), Number(tok[6]));
        anyColor = true;
      } else {
        colors.push(0.7, 0.7, 0.7);
      }
    } else if (tok[0] === 'f') {
      const nVerts = positions.length / 3;
      const face = tok.slice(1).map((ref) => {
        const idx = parseInt(ref.split('/')[0], 10);
        return idx > 0 ? idx - 1 : nVerts + idx;
      });
      for (let k = 2; k < face.length; k++) {
        indices.push(face[0], face[k - 1], face[k]);
      }
    }
  }
  if (!indices.length) throw new Error('OBJ has no faces');
  return {
    positions: new Float32Array(positions),
    indices: new Uint32Array(indices),
    colors: anyColor ? new Float32Array(colors) : null,
  };
}
