"""Exception types shared across the package."""


class SpriteCheckError(Exception):
    """Base class for all spritecheck errors."""


class BundleError(SpriteCheckError):
    """A snapshot bundle could not be read, written, or verified."""


class IncompleteBundleError(BundleError):
    """A required bundle file is missing."""


class MalformedCorError(BundleError):
    """The scene-graph document violates a structural rule."""


class SizeMismatchError(BundleError):
    """Screenshot dimensions disagree with the declared canvas size."""


class RenderError(SpriteCheckError):
    """A node could not be rasterized or composited."""


class PairSkipped(SpriteCheckError):
    """A node produced no comparable pixels; carries the skip reason."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class MetricError(SpriteCheckError):
    """Metric inputs were rejected."""


class ImageTooSmallError(MetricError):
    """Image is smaller than the sliding window of the metric."""


class ProviderError(MetricError):
    """An embedding provider misbehaved; carries the provider name."""

    def __init__(self, provider: str, message: str):
        super().__init__(f"provider {provider}: {message}")
        self.provider = provider


class DetectorError(SpriteCheckError):
    """Calibration or judging was called with inconsistent inputs."""


class SimulationError(SpriteCheckError):
    """The test game was configured or driven incorrectly."""


class IneffectiveBugError(SpriteCheckError):
    """An injected bug produced no visible difference."""
