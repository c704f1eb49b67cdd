"""Exception types with stable machine-readable codes.

Every failure the library can signal carries a short ``code`` string in
addition to the human-readable message. The CLI prints these codes on
stderr (``error: <code>: <message>``) so out-of-process callers can map
failures back to typed errors without parsing prose.
"""

from __future__ import annotations


class StallocError(Exception):
    """Base class for all library errors."""

    code = "internal-error"


class MalformedHeaderError(StallocError):
    """Container file is truncated, has a bad magic, or zero dims."""

    code = "malformed-header"


class DimensionMismatchError(StallocError):
    """Header dims disagree with the payload length."""

    code = "dimension-mismatch"


class NonFinitePayloadError(StallocError):
    """File payload contains NaN or Inf values."""

    code = "non-finite-payload"


class NonFiniteResultError(StallocError):
    """An operation produced NaN or Inf values."""

    code = "non-finite-result"


class IoFailureError(StallocError):
    """Underlying file I/O failed."""

    code = "io-failure"


class ShapeMismatchError(StallocError):
    """Two tensors that must agree in shape do not."""

    code = "shape-mismatch"


class ShapeInconsistencyError(StallocError):
    """A latent does not match the grid a plan or stage expects."""

    code = "shape-inconsistency"


class OracleError(StallocError):
    """A user-supplied denoiser oracle raised or misbehaved."""

    code = "oracle-failure"


class DegenerateGridError(StallocError):
    """Spatial grid too small for spectral estimation (H or W < 4)."""

    code = "degenerate-grid"


class TooFewFramesError(StallocError):
    """Clip has fewer than two frames; no adjacent pair exists."""

    code = "too-few-frames"


class DegenerateSketchError(StallocError):
    """Sketch latent unusable for demand estimation."""

    code = "degenerate-sketch"


class InvalidStepSplitError(StallocError):
    """Per-stage step counts do not sum to the configured total."""

    code = "invalid-step-split"


class EmptyFeasibleSetError(StallocError):
    """No enumerated action lands inside the budget band.

    ``nearest_density`` carries the achievable density closest to the
    requested target, as a hint for widening the tolerance.
    """

    code = "empty-feasible-set"

    def __init__(self, message: str, nearest_density: float | None = None):
        super().__init__(message)
        self.nearest_density = nearest_density


class EmptyInputError(StallocError):
    """An operation requiring a non-empty collection received none."""

    code = "empty-input"
