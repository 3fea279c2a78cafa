"""Whitespace detection on rendered slides via box-filter local variance.

Pipeline: grayscale -> small Gaussian pre-smoothing (texture defense) ->
local variance over a large rectangular neighborhood (integral images) ->
clip/normalize to F(x,y) in [0,1] -> binarize at tau -> border crop ->
whitespace ratio.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

REC601_WEIGHTS = (0.299, 0.587, 0.114)


class EmptyImageError(ValueError):
    pass


class ImageTooSmallError(ValueError):
    pass


@dataclass(frozen=True)
class WhitespaceConfig:
    """Parameters of the whitespace pipeline.

    Kernel sizes must be odd.  ``tau`` is the binarization threshold on the
    normalized variance map; ``border_crop_frac`` is removed from each side
    before counting.
    """

    gaussian_kernel: int = 21
    box_h: int = 201
    box_w: int = 151
    t_clip: float = 50.0
    tau: float = 0.05
    border_crop_frac: float = 0.05

    def __post_init__(self):
        for k in (self.gaussian_kernel, self.box_h, self.box_w):
            if k < 1 or k % 2 == 0:
                raise ValueError(f"kernel sizes must be odd and >= 1, got {k}")
        if self.t_clip <= 0:
            raise ValueError("t_clip must be positive")
        if not 0 < self.tau < 1:
            raise ValueError("tau must lie in (0, 1)")
        if not 0 <= self.border_crop_frac <= 0.25:
            raise ValueError("border_crop_frac must lie in [0, 0.25]")


def to_grayscale(image: np.ndarray) -> np.ndarray:
    """Convert an RGB raster (H, W, 3) to Rec. 601 luminance, float64.

    Channel-equal inputs map to the shared channel value exactly.
    """
    image = np.asarray(image)
    if image.ndim == 2:  # already single channel
        gray = image.astype(np.float64)
    elif image.ndim == 3 and image.shape[2] >= 3:
        r, g, b = (image[:, :, i].astype(np.float64) for i in range(3))
        wr, wg, wb = REC601_WEIGHTS
        gray = wr * r + wg * g + wb * b
    else:
        raise ValueError(f"expected (H, W, 3) or (H, W) array, got {image.shape}")
    if gray.size == 0:
        raise EmptyImageError("zero-dimension image")
    return gray


def gaussian_sigma_for_kernel(kernel: int) -> float:
    """Default sigma derived from an odd kernel size."""
    return 0.3 * ((kernel - 1) * 0.5 - 1) + 0.8


def gaussian_kernel_1d(kernel: int, sigma: float | None = None) -> np.ndarray:
    if kernel < 1 or kernel % 2 == 0:
        raise ValueError("kernel must be odd and >= 1")
    if sigma is None:
        sigma = gaussian_sigma_for_kernel(kernel)
    half = kernel // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    w = np.exp(-(x**2) / (2.0 * sigma**2))
    return w / w.sum()


def gaussian_smooth(gray: np.ndarray, kernel: int = 21) -> np.ndarray:
    """Separable Gaussian blur with symmetric (edge-reflecting) borders.

    kernel=1 is the identity.  The normalized kernel plus symmetric borders
    preserve the global mean to float precision.
    """
    gray = np.asarray(gray, dtype=np.float64)
    if kernel == 1:
        return gray.copy()
    w = gaussian_kernel_1d(kernel)
    half = kernel // 2
    padded = np.pad(gray, ((half, half), (half, half)), mode="symmetric")
    # correlate rows then columns; kernel is symmetric so conv == corr
    out = _correlate_axis(padded, w, axis=1)
    out = _correlate_axis(out, w, axis=0)
    return out


def _correlate_axis(arr: np.ndarray, w: np.ndarray, axis: int) -> np.ndarray:
    """Valid-mode 1-D correlation along one axis of a padded 2-D array."""
    k = len(w)
    n = arr.shape[axis] - k + 1
    out = np.zeros((arr.shape[0] if axis == 1 else n,
                    n if axis == 1 else arr.shape[1]))
    for i, wi in enumerate(w):
        if axis == 1:
            out += wi * arr[:, i:i + n]
        else:
            out += wi * arr[i:i + n, :]
    return out


def integral_image(arr: np.ndarray) -> np.ndarray:
    """Summed-area table with a leading zero row/column."""
    ii = np.zeros((arr.shape[0] + 1, arr.shape[1] + 1), dtype=np.float64)
    np.cumsum(np.cumsum(arr, axis=0), axis=1, out=ii[1:, 1:])
    return ii


def _box_mean(padded: np.ndarray, box_h: int, box_w: int) -> np.ndarray:
    """Mean over box_h x box_w windows (valid placement) via integral image."""
    ii = integral_image(padded)
    h = padded.shape[0] - box_h + 1
    w = padded.shape[1] - box_w + 1
    s = (ii[box_h:box_h + h, box_w:box_w + w]
         - ii[:h, box_w:box_w + w]
         - ii[box_h:box_h + h, :w]
         + ii[:h, :w])
    return s / (box_h * box_w)


def local_variance_map(gray: np.ndarray, box_h: int = 201, box_w: int = 151) -> np.ndarray:
    """Per-pixel variance over the centered box neighborhood.

    Computed as E[x^2] - E[x]^2 with two integral-image box filters over the
    symmetric-padded image; tiny negatives from cancellation clamp to 0.
    """
    gray = np.asarray(gray, dtype=np.float64)
    if gray.ndim != 2 or gray.size == 0:
        raise EmptyImageError("expected a non-empty 2-D array")
    if box_h % 2 == 0 or box_w % 2 == 0:
        raise ValueError("box dimensions must be odd")
    ph, pw = box_h // 2, box_w // 2
    padded = np.pad(gray, ((ph, ph), (pw, pw)), mode="symmetric")
    mean = _box_mean(padded, box_h, box_w)
    mean_sq = _box_mean(padded * padded, box_h, box_w)
    var = mean_sq - mean * mean
    np.maximum(var, 0.0, out=var)
    return var


def normalize_clip(var_field: np.ndarray, t_clip: float = 50.0) -> np.ndarray:
    """Map variance to F = min(sqrt(Var), t_clip) / t_clip in [0, 1]."""
    if t_clip <= 0:
        raise ValueError("t_clip must be positive")
    sigma = np.sqrt(np.asarray(var_field, dtype=np.float64))
    return np.minimum(sigma, t_clip) / t_clip


def variance_map(screenshot: np.ndarray, config: WhitespaceConfig = WhitespaceConfig()) -> np.ndarray:
    """Full-resolution normalized variance map F for a screenshot."""
    gray = to_grayscale(screenshot)
    smoothed = gaussian_smooth(gray, config.gaussian_kernel)
    var = local_variance_map(smoothed, config.box_h, config.box_w)
    return normalize_clip(var, config.t_clip)


def crop_border(arr: np.ndarray, frac: float) -> np.ndarray:
    """Drop a `frac` border from each side; errors if nothing survives."""
    h, w = arr.shape[:2]
    dy, dx = int(h * frac), int(w * frac)
    cropped = arr[dy:h - dy, dx:w - dx]
    if cropped.size == 0:
        raise ImageTooSmallError(f"{h}x{w} image has no interior at crop fraction {frac}")
    return cropped


MIN_SIDE_PX = 8


def whitespace_mask(screenshot: np.ndarray, config: WhitespaceConfig = WhitespaceConfig()) -> np.ndarray:
    """Boolean whitespace mask (F < tau) over the border-cropped region."""
    screenshot = np.asarray(screenshot)
    if min(screenshot.shape[:2]) < MIN_SIDE_PX:
        raise ImageTooSmallError(
            f"image sides must be >= {MIN_SIDE_PX} px, got {screenshot.shape[:2]}")
    f = variance_map(screenshot, config)
    return crop_border(f, config.border_crop_frac) < config.tau


def whitespace_ratio(screenshot: np.ndarray, config: WhitespaceConfig = WhitespaceConfig()) -> float:
    """Fraction of border-cropped pixels classified as whitespace, in [0, 1]."""
    mask = whitespace_mask(screenshot, config)
    return float(np.count_nonzero(mask)) / mask.size
