/**
 * LTV1 tensor container codec, bit-compatible with the core.
 *
 * Layout: bytes 0-3 magic "LTV1"; bytes 4-19 four little-endian uint32
 * dims C, F, H, W; then C*F*H*W little-endian float32 values in
 * (c, t, h, w) row-major order. No padding, no footer.
 */

import { CoreError } from "./errors.js";
import { elementCount, Shape4, TensorView } from "./tensor.js";

export const LTV1_MAGIC = 0x3156544c; // "LTV1" read as little-endian u32
const HEADER_BYTES = 20;

export function encodeLtv(view: TensorView): Buffer {
  const payloadBytes = view.data.length * 4;
  const out = Buffer.allocUnsafe(HEADER_BYTES + payloadBytes);
  out.writeUInt32LE(LTV1_MAGIC, 0);
  view.shape.forEach((dim, i) => out.writeUInt32LE(dim, 4 + 4 * i));
  // assumes a little-endian host, like every platform node ships on
  Buffer.from(view.data.buffer, view.data.byteOffset, payloadBytes).copy(out, HEADER_BYTES);
  return out;
}

export function decodeLtv(blob: Buffer): TensorView {
  if (blob.length < HEADER_BYTES) {
    throw new CoreError("malformed-header", `file shorter than the ${HEADER_BYTES}-byte header`);
  }
  if (blob.readUInt32LE(0) !== LTV1_MAGIC) {
    throw new CoreError("malformed-header", "bad magic, expected LTV1");
  }
  const shape: Shape4 = [
    blob.readUInt32LE(4),
    blob.readUInt32LE(8),
    blob.readUInt32LE(12),
    blob.readUInt32LE(16),
  ];
  if (shape.some((d) => d < 1)) {
    throw new CoreError("malformed-header", `zero dimension in header (${shape})`);
  }
  const count = elementCount(shape);
  if (blob.length - HEADER_BYTES !== count * 4) {
    throw new CoreError(
      "dimension-mismatch",
      `header promises ${count * 4} payload bytes, found ${blob.length - HEADER_BYTES}`
    );
  }
  const payloadOffset = blob.byteOffset + HEADER_BYTES;
  if (payloadOffset % 4 === 0) {
    // borrow the file buffer directly
    return { shape, data: new Float32Array(blob.buffer, payloadOffset, count), owned: false };
  }
  const copy = new Float32Array(count);
  copy.set(new Float32Array(blob.buffer.slice(payloadOffset, payloadOffset + count * 4)));
  return { shape, data: copy, owned: true };
}
