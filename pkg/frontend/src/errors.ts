/**
 * Error types mirroring the core's stable error codes.
 *
 * Failures raised by the core surface on its CLI stderr as
 * `error: <code>: <message>`; the runner parses that back into a
 * CoreError carrying the code. Validation failures that happen on the
 * binding side (before anything reaches the core) use the same code
 * vocabulary.
 */

export class StallocError extends Error {
  readonly code: string;

  constructor(code: string, message: string) {
    super(message);
    this.name = new.target.name;
    this.code = code;
  }
}

/** Host tensor is not a float32 buffer. */
export class DtypeMismatchError extends StallocError {
  constructor(message: string) {
    super("dtype-mismatch", message);
  }
}

/** Host tensor's strides do not describe a dense row-major layout. */
export class NonContiguousInputError extends StallocError {
  constructor(message: string) {
    super("non-contiguous-input", message);
  }
}

/** Shape metadata disagrees with the buffer. */
export class ShapeMismatchError extends StallocError {
  constructor(message: string) {
    super("shape-mismatch", message);
  }
}

/** A failure reported by the core process, code propagated verbatim. */
export class CoreError extends StallocError {}
