/**
 * Tensor views over host float32 buffers.
 *
 * A view is (C, F, H, W) shape metadata plus a dense row-major
 * Float32Array. `owned` records whether the binding had to copy the
 * payload: `false` means the view borrows the caller's buffer (or a
 * decoded file buffer) with zero copies.
 */

import { DtypeMismatchError, NonContiguousInputError, ShapeMismatchError } from "./errors.js";

export type Shape4 = readonly [number, number, number, number];

export interface TensorView {
  readonly shape: Shape4;
  readonly data: Float32Array;
  /** true when the payload was copied into binding-owned memory */
  readonly owned: boolean;
}

export interface HostTensor {
  shape: Shape4;
  data: Float32Array;
  /** element strides, row-major contiguous when omitted */
  strides?: readonly number[];
}

export function elementCount(shape: Shape4): number {
  return shape[0] * shape[1] * shape[2] * shape[3];
}

export function rowMajorStrides(shape: Shape4): [number, number, number, number] {
  const [, f, h, w] = shape;
  return [f * h * w, h * w, w, 1];
}

function validShape(shape: Shape4): boolean {
  return shape.length === 4 && shape.every((d) => Number.isInteger(d) && d >= 1);
}

/**
 * Wrap a host tensor without copying.
 *
 * The buffer must be a Float32Array whose length matches the shape and
 * whose strides (when given) are exactly the dense row-major ones.
 */
export function fromHost(tensor: HostTensor): TensorView {
  if (!(tensor.data instanceof Float32Array)) {
    const got = Object.prototype.toString.call(tensor.data);
    throw new DtypeMismatchError(`expected a Float32Array payload, got ${got}`);
  }
  if (!validShape(tensor.shape)) {
    throw new ShapeMismatchError(`shape must be four positive integers, got ${tensor.shape}`);
  }
  if (tensor.data.length !== elementCount(tensor.shape)) {
    throw new ShapeMismatchError(
      `buffer holds ${tensor.data.length} values, shape ${tensor.shape} needs ` +
        `${elementCount(tensor.shape)}`
    );
  }
  if (tensor.strides !== undefined) {
    const expected = rowMajorStrides(tensor.shape);
    const got = tensor.strides;
    if (got.length !== 4 || expected.some((s, i) => s !== got[i])) {
      throw new NonContiguousInputError(
        `strides [${got}] are not the dense row-major [${expected}]`
      );
    }
  }
  return { shape: tensor.shape, data: tensor.data, owned: false };
}
