// Binary STL fixture builder (little-endian, 80-byte header + 50-byte records).

const CUBE_QUADS: [number, number, number, number][] = [
  [0, 3, 2, 1],
  [4, 5, 6, 7],
  [0, 1, 5, 4],
  [2, 3, 7, 6],
  [1, 2, 6, 5],
  [3, 0, 4, 7],
];

export function boxStlBytes(
  size: [number, number, number] = [30, 30, 8],
  origin: [number, number, number] = [10, 10, 0],
): Uint8Array {
  const [sx, sy, sz] = size;
  const [ox, oy, oz] = origin;
  const unit: [number, number, number][] = [
    [0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
    [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1],
  ];
  const corners = unit.map(([x, y, z]) =>
    [ox + x * sx, oy + y * sy, oz + z * sz] as [number, number, number]);

  const triangles: [number, number, number][][] = [];
  for (const [a, b, c, d] of CUBE_QUADS) {
    triangles.push([corners[a], corners[b], corners[c]]);
    triangles.push([corners[a], corners[c], corners[d]]);
  }

  const buffer = new ArrayBuffer(84 + 50 * triangles.length);
  const view = new DataView(buffer);
  view.setUint32(80, triangles.length, true);
  let offset = 84;
  for (const tri of triangles) {
    const [v0, v1, v2] = tri;
    const ux = v1[0] - v0[0], uy = v1[1] - v0[1], uz = v1[2] - v0[2];
    const wx = v2[0] - v0[0], wy = v2[1] - v0[1], wz = v2[2] - v0[2];
    let nx = uy * wz - uz * wy;
    let ny = uz * wx - ux * wz;
    let nz = ux * wy - uy * wx;
    const len = Math.hypot(nx, ny, nz) || 1;
    nx /= len; ny /= len; nz /= len;
    for (const value of [nx, ny, nz, ...v0, ...v1, ...v2]) {
      view.setFloat32(offset, value, true);
      offset += 4;
    }
    view.setUint16(offset, 0, true);
    offset += 2;
  }
  return new Uint8Array(buffer);
}
