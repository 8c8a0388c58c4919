"""Image similarity metrics used to judge oracle/object pairs.

Four metrics with complementary failure modes:

- PCT: fraction of pixels that match exactly
- MSE: mean squared RGB difference, 0 for identical images
- SSIM: mean local structural similarity over a sliding uniform window
- ESIM: cosine similarity of image embeddings; the embedding model is
  pluggable, the built-in one is a coarse colour and gradient grid

Only RGB is compared; the alpha channel carries masking information and
is identical on both sides of a pair by construction.
"""

from __future__ import annotations

import io
import math
import shlex
import subprocess
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .errors import ImageTooSmallError, MetricError, ProviderError
from .oracle import ImagePair


class MetricKind(Enum):
    PCT = "PCT"
    MSE = "MSE"
    SSIM = "SSIM"
    ESIM = "ESIM"

    @property
    def higher_is_similar(self) -> bool:
        # MSE is a distance; the other three are similarities
        return self is not MetricKind.MSE

    @staticmethod
    def from_name(name: str) -> "MetricKind":
        try:
            return MetricKind(name.upper())
        except ValueError:
            raise MetricError(f"unknown metric {name!r}") from None


@dataclass(frozen=True)
class SsimParams:
    """Window size and stability constants; L is the dynamic range."""

    window: int = 7
    k1: float = 0.01
    k2: float = 0.03
    data_range: float = 255.0

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise MetricError("SSIM window must be odd and >= 3")


@dataclass
class MetricScore:
    """One metric evaluated on one pair."""

    node_id: str
    kind: MetricKind
    value: float
    snapshot_index: int | None = None


def _as_rgb_pair(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if a.ndim != 3 or b.ndim != 3 or a.shape[2] < 3 or b.shape[2] < 3:
        raise MetricError("metric inputs must be HxWx3 or HxWx4 images")
    if a.shape[:2] != b.shape[:2]:
        raise MetricError("metric inputs must have identical dimensions")
    if a.shape[0] == 0 or a.shape[1] == 0:
        raise MetricError("metric inputs must be non-empty")
    return a[..., :3], b[..., :3]


def pct(a: np.ndarray, b: np.ndarray) -> float:
    """Fraction of pixels whose RGB values match exactly. 1.0 means identical."""
    ra, rb = _as_rgb_pair(a, b)
    return float(np.mean(np.all(ra == rb, axis=-1)))


def mse(a: np.ndarray, b: np.ndarray) -> float:
    """Mean squared difference over all RGB channel values."""
    ra, rb = _as_rgb_pair(a, b)
    d = ra.astype(np.float64) - rb.astype(np.float64)
    return float(np.mean(d * d))


def _box_sums(x: np.ndarray, win: int) -> np.ndarray:
    """Sums over every win x win window (valid positions), via integral image."""
    c = np.cumsum(np.cumsum(x, axis=0), axis=1)
    c = np.pad(c, ((1, 0), (1, 0)))
    return c[win:, win:] - c[:-win, win:] - c[win:, :-win] + c[:-win, :-win]


def ssim(a: np.ndarray, b: np.ndarray, params: SsimParams = SsimParams()) -> float:
    """Mean SSIM over a sliding uniform window, averaged across RGB.

    Uses the sample-covariance normalization (N/(N-1)) that standard
    image toolkits default to, so values line up with common references.
    """
    ra, rb = _as_rgb_pair(a, b)
    win = params.window
    if ra.shape[0] < win or ra.shape[1] < win:
        raise ImageTooSmallError(
            f"image {ra.shape[1]}x{ra.shape[0]} too small for SSIM window {win}")

    n = float(win * win)
    cov_norm = n / (n - 1.0)
    c1 = (params.k1 * params.data_range) ** 2
    c2 = (params.k2 * params.data_range) ** 2

    means = []
    for ch in range(3):
        x = ra[..., ch].astype(np.float64)
        y = rb[..., ch].astype(np.float64)
        ux = _box_sums(x, win) / n
        uy = _box_sums(y, win) / n
        vx = cov_norm * (_box_sums(x * x, win) / n - ux * ux)
        vy = cov_norm * (_box_sums(y * y, win) / n - uy * uy)
        vxy = cov_norm * (_box_sums(x * y, win) / n - ux * uy)
        num = (2.0 * ux * uy + c1) * (2.0 * vxy + c2)
        den = (ux * ux + uy * uy + c1) * (vx + vy + c2)
        means.append(np.mean(num / den))
    return float(np.mean(means))


def cosine_similarity(u, v) -> float:
    """Cosine of the angle between two vectors.

    Equal vectors give exactly 1.0. Two near-zero vectors (norm below
    1e-12) count as identical (1.0); exactly one near-zero vector gives 0.0.
    """
    ua = np.asarray(u, dtype=np.float64).ravel()
    va = np.asarray(v, dtype=np.float64).ravel()
    if ua.shape != va.shape:
        raise MetricError("cosine_similarity requires equal-length vectors")
    if ua.size == 0:
        raise MetricError("cosine_similarity requires non-empty vectors")
    if np.array_equal(ua, va):
        return 1.0
    nu = math.sqrt(float(np.dot(ua, ua)))
    nv = math.sqrt(float(np.dot(va, va)))
    if nu < 1e-12 and nv < 1e-12:
        return 1.0
    if nu < 1e-12 or nv < 1e-12:
        return 0.0
    return float(np.clip(float(np.dot(ua, va)) / (nu * nv), -1.0, 1.0))


def _overlap_matrix(n_out: int, n_in: int) -> np.ndarray:
    """Exact box-filter resampling weights: rows sum to 1, every input
    pixel contributes in proportion to its overlap with the output cell."""
    w = np.zeros((n_out, n_in), dtype=np.float64)
    cell = n_in / n_out
    for i in range(n_out):
        lo = i * cell
        hi = (i + 1) * cell
        j0 = int(np.floor(lo))
        j1 = min(int(np.ceil(hi)), n_in)
        for j in range(j0, j1):
            w[i, j] = (min(hi, j + 1) - max(lo, j)) / cell
    return w


def default_embedding(image: np.ndarray) -> np.ndarray:
    """Built-in 256-value embedding: 8x8 colour grid plus gradient grid.

    The image is box-resampled to 16x16 (every source pixel contributes,
    so even sparse single-pixel corruption moves the vector), then
    reduced to an 8x8 grid of mean R, G, B and mean gradient magnitude.
    """
    if image.ndim != 3 or image.shape[2] < 3:
        raise MetricError("embedding input must be HxWx3 or HxWx4")
    h, w = image.shape[:2]
    if h == 0 or w == 0:
        raise MetricError("embedding input must be non-empty")
    rgb = image[..., :3].astype(np.float64)
    wr = _overlap_matrix(16, h)
    wc = _overlap_matrix(16, w)
    small = np.moveaxis(np.tensordot(np.tensordot(wr, rgb, axes=(1, 0)), wc, axes=(1, 1)), 1, 2)

    cells = small.reshape(8, 2, 8, 2, 3).mean(axis=(1, 3))
    lum = small.mean(axis=2)
    gx = np.zeros_like(lum)
    gy = np.zeros_like(lum)
    gx[:, :-1] = lum[:, 1:] - lum[:, :-1]
    gy[:-1, :] = lum[1:, :] - lum[:-1, :]
    grad = 0.5 * (np.abs(gx) + np.abs(gy))
    gcells = grad.reshape(8, 2, 8, 2).mean(axis=(1, 3))

    return np.concatenate([
        cells[..., 0].ravel(), cells[..., 1].ravel(), cells[..., 2].ravel(),
        gcells.ravel(),
    ])


class EmbeddingProvider:
    """Contract for embedding models: a name, a vector length, and
    embed(image) -> 1-D float vector. The length is locked after the
    first call when not declared up front."""

    def __init__(self, name: str, embed: Callable[[np.ndarray], np.ndarray],
                 dimension: int | None = None):
        self.name = name
        self.dimension = dimension
        self._embed = embed

    def embed(self, image: np.ndarray) -> np.ndarray:
        try:
            vec = np.asarray(self._embed(image), dtype=np.float64).ravel()
        except MetricError:
            raise
        except Exception as exc:
            raise ProviderError(self.name, str(exc)) from exc
        if vec.size == 0 or not np.all(np.isfinite(vec)):
            raise ProviderError(self.name, "embedding must be a finite non-empty vector")
        if self.dimension is None:
            self.dimension = int(vec.size)
        elif vec.size != self.dimension:
            raise ProviderError(
                self.name,
                f"dimension changed between calls: {vec.size} != {self.dimension}")
        return vec


DEFAULT_PROVIDER = EmbeddingProvider("grid-256", default_embedding, dimension=256)


def make_subprocess_provider(command: str | list[str],
                             name: str | None = None) -> EmbeddingProvider:
    """Wrap an external embedder: PNG bytes on stdin, plain text on
    stdout (vector length on the first line, then the values)."""
    argv = shlex.split(command) if isinstance(command, str) else list(command)
    if not argv:
        raise ProviderError("subprocess", "empty command")
    provider_name = name or argv[0].rsplit("/", 1)[-1]

    def embed(image: np.ndarray) -> np.ndarray:
        from PIL import Image

        buf = io.BytesIO()
        if image.ndim != 3 or image.shape[2] not in (3, 4):
            raise ProviderError(provider_name, "image must be HxWx3 or HxWx4")
        mode = "RGBA" if image.shape[2] == 4 else "RGB"
        Image.fromarray(image.astype(np.uint8), mode=mode).save(buf, format="PNG")
        try:
            proc = subprocess.run(argv, input=buf.getvalue(),
                                  capture_output=True, check=True)
        except (OSError, subprocess.CalledProcessError) as exc:
            raise ProviderError(provider_name, f"subprocess failed: {exc}") from exc
        tokens = proc.stdout.split()
        if not tokens:
            raise ProviderError(provider_name, "empty response")
        try:
            length = int(tokens[0])
            values = [float(t) for t in tokens[1:1 + length]]
        except ValueError as exc:
            raise ProviderError(provider_name, f"unparsable response: {exc}") from exc
        if len(values) != length:
            raise ProviderError(provider_name, "response shorter than declared length")
        return np.asarray(values, dtype=np.float64)

    return EmbeddingProvider(provider_name, embed)


def esim(a: np.ndarray, b: np.ndarray,
         provider: EmbeddingProvider | None = None) -> float:
    """Embedding similarity: cosine between provider embeddings."""
    p = provider or DEFAULT_PROVIDER
    return cosine_similarity(p.embed(a), p.embed(b))


def score(pair: ImagePair, kind: MetricKind,
          ssim_params: SsimParams = SsimParams(),
          provider: EmbeddingProvider | None = None) -> MetricScore:
    """Evaluate one metric on one pair."""
    if pair.skipped:
        raise MetricError(f"cannot score skipped pair for node {pair.node_id}")
    a, b = pair.oracle, pair.object_image
    if kind is MetricKind.PCT:
        value = pct(a, b)
    elif kind is MetricKind.MSE:
        value = mse(a, b)
    elif kind is MetricKind.SSIM:
        value = ssim(a, b, ssim_params)
    elif kind is MetricKind.ESIM:
        value = esim(a, b, provider)
    else:  # pragma: no cover
        raise MetricError(f"unknown metric {kind}")
    return MetricScore(node_id=pair.node_id, kind=kind, value=value)
