"""Exception types shared across the package."""


class EvshapeError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(EvshapeError):
    """Invalid render parameters or CLI configuration."""


class SingularTransform(EvshapeError):
    """The affine map is (numerically) non-invertible, e.g. zero scale."""


class DimensionMismatch(EvshapeError):
    """Two grids that must share dimensions do not."""


class InvalidThreshold(EvshapeError):
    """Integrator threshold must be strictly positive."""


class FormatError(EvshapeError):
    """A file does not follow the on-disk format (bad magic, version, schema)."""


class CorruptFile(EvshapeError):
    """Digest mismatch, truncation, or a missing file named by the manifest."""


class BoundsError(EvshapeError):
    """A stored event record lies outside the bounds declared in the header."""


class BatchError(EvshapeError):
    """One or more items of a batch generation failed.

    Carries per-index failures plus the recordings that did succeed, so a
    caller can report every broken config without losing the good ones.
    """

    def __init__(self, failures, results):
        self.failures = dict(failures)
        self.results = dict(results)
        summary = "; ".join(f"[{i}] {exc!r}" for i, exc in sorted(self.failures.items()))
        super().__init__(f"{len(self.failures)} of {len(self.failures) + len(self.results)} items failed: {summary}")
