"""HSV colour histograms, Bhattacharyya distance and the observation likelihood.

A histogram has 110 bins: a 10x10 hue/saturation grid (indices 0-99, hue
major) for pixels with S > 0.1 and V > 0.2, followed by 10 value bins
(indices 100-109) collecting every other pixel.
"""
from __future__ import annotations

import math
from functools import cached_property

import numpy as np

from sgtrack.geometry import BBox

N_HUE = 10
N_SAT = 10
N_VAL = 10
N_BINS = N_HUE * N_SAT + N_VAL
SAT_THRESHOLD = 0.1
VAL_THRESHOLD = 0.2
NORM_TOL = 1e-9


class InvalidRegionError(ValueError):
    """Raised when an observation box has no pixels inside the frame."""


class HistogramNotNormalizedError(ValueError):
    pass


def rgb_to_hsv(rgb: np.ndarray) -> np.ndarray:
    """Convert an (..., 3) RGB array (uint8 or floats in [0, 1]) to HSV in [0, 1].

    Hue lies in [0, 1).
    """
    rgb = np.asarray(rgb)
    if rgb.dtype == np.uint8:
        rgb = rgb.astype(np.float64) / 255.0
    else:
        rgb = rgb.astype(np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    v = rgb.max(axis=-1)
    c = v - rgb.min(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(v > 0, c / np.where(v > 0, v, 1.0), 0.0)
        safe_c = np.where(c > 0, c, 1.0)
        h = np.where(
            v == r,
            ((g - b) / safe_c) % 6.0,
            np.where(v == g, (b - r) / safe_c + 2.0, (r - g) / safe_c + 4.0),
        )
    h = np.where(c > 0, h / 6.0, 0.0)
    h = np.where(h >= 1.0, 0.0, h)
    return np.stack([h, s, v], axis=-1)


def hsv_bin_indices(hsv: np.ndarray) -> np.ndarray:
    """Histogram bin index (0-109) of every pixel of an (..., 3) HSV array."""
    h, s, v = hsv[..., 0], hsv[..., 1], hsv[..., 2]
    hi = np.clip(np.floor(h * N_HUE), 0, N_HUE - 1).astype(np.int16)
    si = np.clip(np.floor(s * N_SAT), 0, N_SAT - 1).astype(np.int16)
    vi = np.clip(np.floor(v * N_VAL), 0, N_VAL - 1).astype(np.int16)
    chromatic = (s > SAT_THRESHOLD) & (v > VAL_THRESHOLD)
    return np.where(chromatic, hi * N_SAT + si, N_HUE * N_SAT + vi).astype(np.int16)


def rgb8_bin_indices(rgb: np.ndarray) -> np.ndarray:
    """Exact histogram bin index of every pixel of an (..., 3) uint8 RGB array.

    Integer arithmetic only, so values lying exactly on a bin boundary land
    in the bin the real-valued definition prescribes.
    """
    rgb = np.asarray(rgb, dtype=np.int32)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    v = np.maximum(np.maximum(r, g), b)
    c = v - np.minimum(np.minimum(r, g), b)
    safe_v = np.maximum(v, 1)
    safe_c = np.maximum(c, 1)
    # hue in sixths: segment * c + signed offset, wrapped into [0, 6c)
    hue6 = np.where(v == r, (g - b) % (6 * safe_c), np.where(v == g, 2 * c + (b - r), 4 * c + (r - g)))
    hi = np.where(c > 0, np.minimum((N_HUE * hue6) // (6 * safe_c), N_HUE - 1), 0)
    si = np.where(v > 0, np.minimum((N_SAT * c) // safe_v, N_SAT - 1), 0)
    vi = np.minimum((N_VAL * v) // 255, N_VAL - 1)
    # S > 0.1 and V > 0.2 with S = c / v and V = v / 255
    chromatic = (10 * c > v) & (5 * v > 255)
    return np.where(chromatic, hi * N_SAT + si, N_HUE * N_SAT + vi).astype(np.int16)


def pixel_bounds(centers: np.ndarray, size: tuple[float, float], width: int, height: int) -> np.ndarray:
    """Integer pixel ranges [x0, x1) x [y0, y1) of boxes, clipped to the frame.

    Returns an (n, 4) int array of x0, y0, x1, y1.
    """
    centers = np.asarray(centers, dtype=float).reshape(-1, 2)
    half_w, half_h = size[0] / 2.0, size[1] / 2.0
    x0 = np.floor(centers[:, 0] - half_w + 0.5)
    x1 = np.floor(centers[:, 0] + half_w + 0.5)
    y0 = np.floor(centers[:, 1] - half_h + 0.5)
    y1 = np.floor(centers[:, 1] + half_h + 0.5)
    out = np.stack(
        [
            np.clip(x0, 0, width),
            np.clip(y0, 0, height),
            np.clip(x1, 0, width),
            np.clip(y1, 0, height),
        ],
        axis=1,
    )
    return out.astype(np.int64)


class Frame:
    """A read-only RGB image with cached histogram machinery.

    ``pixels`` is an (height, width, 3) uint8 array.
    """

    def __init__(self, pixels: np.ndarray):
        pixels = np.asarray(pixels)
        if pixels.ndim != 3 or pixels.shape[2] != 3:
            raise ValueError(f"expected an (H, W, 3) image, got shape {pixels.shape}")
        if pixels.shape[0] == 0 or pixels.shape[1] == 0:
            raise ValueError("frame dimensions must be positive")
        self.pixels = pixels
        self.pixels.setflags(write=False)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @cached_property
    def bin_map(self) -> np.ndarray:
        if self.pixels.dtype == np.uint8:
            return rgb8_bin_indices(self.pixels)
        return hsv_bin_indices(rgb_to_hsv(self.pixels))

    @cached_property
    def _integral(self) -> tuple[np.ndarray, np.ndarray]:
        present = np.unique(self.bin_map)
        onehot = self.bin_map[None, :, :] == present[:, None, None]
        integral = np.zeros((len(present), self.height + 1, self.width + 1), dtype=np.int32)
        np.cumsum(np.cumsum(onehot, axis=1, dtype=np.int32), axis=2, out=integral[:, 1:, 1:])
        return present, integral

    def histograms(self, centers: np.ndarray, size: tuple[float, float]) -> tuple[np.ndarray, np.ndarray]:
        """Normalised histograms of equally sized boxes centred at ``centers``.

        Returns ``(hists, valid)``: an (n, 110) array and a boolean mask that is
        False for boxes lying entirely outside the frame (their rows are zero).
        """
        bounds = pixel_bounds(centers, size, self.width, self.height)
        x0, y0, x1, y1 = bounds.T
        present, integral = self._integral
        counts = integral[:, y1, x1] - integral[:, y0, x1] - integral[:, y1, x0] + integral[:, y0, x0]
        total = (x1 - x0) * (y1 - y0)
        valid = total > 0
        hists = np.zeros((len(x0), N_BINS))
        hists[:, present] = counts.T / np.where(valid, total, 1)[:, None]
        return hists, valid


def extract_histogram(frame: Frame, box: BBox) -> np.ndarray:
    """Normalised 110-bin histogram of the pixels of ``box`` (clipped to the frame)."""
    hists, valid = frame.histograms(np.array([[box.cx, box.cy]]), (box.width, box.height))
    if not valid[0]:
        raise InvalidRegionError(f"box {box} lies outside the {frame.width}x{frame.height} frame")
    return hists[0]


def _check_normalized(h: np.ndarray) -> None:
    if np.any(h < 0) or abs(float(h.sum()) - 1.0) > NORM_TOL:
        raise HistogramNotNormalizedError(f"histogram sums to {float(h.sum())!r}, expected 1")


def bhattacharyya(h1: np.ndarray, h2: np.ndarray) -> float:
    """Bhattacharyya distance sqrt(1 - sum(sqrt(h1 * h2))) between normalised histograms."""
    h1 = np.asarray(h1, dtype=float)
    h2 = np.asarray(h2, dtype=float)
    if h1.shape != h2.shape:
        raise ValueError(f"histogram shapes differ: {h1.shape} vs {h2.shape}")
    _check_normalized(h1)
    _check_normalized(h2)
    coeff = float(np.sum(np.sqrt(h1 * h2)))
    return math.sqrt(min(1.0, max(0.0, 1.0 - coeff)))


def bhattacharyya_many(model: np.ndarray, hists: np.ndarray) -> np.ndarray:
    """Distances from one histogram to each row of ``hists``; no normalisation checks."""
    coeff = np.sqrt(hists * model[None, :]).sum(axis=1)
    return np.sqrt(np.clip(1.0 - coeff, 0.0, 1.0))


def likelihood_from_distance(d_b, sigma_b: float):
    if sigma_b <= 0:
        raise ValueError(f"sigma_b must be positive, got {sigma_b}")
    return np.exp(-np.square(d_b) / (2.0 * sigma_b * sigma_b))


def likelihood(h_model: np.ndarray, h_obs: np.ndarray, sigma_b: float) -> float:
    """Observation likelihood exp(-d_B^2 / (2 sigma_b^2))."""
    if sigma_b <= 0:
        raise ValueError(f"sigma_b must be positive, got {sigma_b}")
    return float(likelihood_from_distance(bhattacharyya(h_model, h_obs), sigma_b))


def box_likelihoods(
    frame: Frame, model: np.ndarray, centers: np.ndarray, size: tuple[float, float], sigma_b: float
) -> np.ndarray:
    """Likelihood of boxes at ``centers``; boxes fully outside the frame score 0."""
    hists, valid = frame.histograms(centers, size)
    lik = likelihood_from_distance(bhattacharyya_many(model, hists), sigma_b)
    return np.where(valid, lik, 0.0)
