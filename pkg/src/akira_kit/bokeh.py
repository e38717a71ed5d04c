"""Disparity-driven bokeh: per-pixel disc blur with a radius proportional
to the disparity offset from the in-focus point.

The blur is a gather: each output pixel averages the input over a disc
whose radius comes from that pixel's own blur radius.  Discs get an
anti-aliased rim (pixels partially covered by the disc contribute with
fractional weight) and are clipped at the frame border, where the average
renormalizes over the pixels actually inside.  Occlusion ordering is
ignored on purpose — the halo around depth edges is an accepted artifact
of the single-pass formulation.
"""

from __future__ import annotations

import math

import numpy as np

from .backend import HAVE_NUMBA, njit, prange, resolve_backend
from .errors import ConfigError

DEFAULT_GAIN = 0.25  # blur radius in px per unit of |disparity - focus disparity| per alpha
DEFAULT_CAP = 25.0  # hard ceiling on the blur radius, px


def blur_radius_map(
    disparity: np.ndarray,
    alpha: float,
    focus_u: float,
    focus_v: float,
    gain: float = DEFAULT_GAIN,
    cap: float = DEFAULT_CAP,
) -> np.ndarray:
    """Per-pixel blur radius gain * alpha * |d - d_focus|, capped.

    The focus disparity is read at the pixel nearest the focus point.
    """
    disparity = np.asarray(disparity, dtype=np.float64)
    if disparity.ndim != 2:
        raise ConfigError(f"disparity must be (H, W), got {disparity.shape}")
    if disparity.min() < -1e-9 or disparity.max() > 1.0 + 1e-9:
        raise ConfigError(
            f"disparity must be normalized to [0, 1], got range "
            f"[{disparity.min():.4g}, {disparity.max():.4g}]"
        )
    h, w = disparity.shape
    ju = min(max(int(math.floor(focus_u + 0.5)), 0), w - 1)
    jv = min(max(int(math.floor(focus_v + 0.5)), 0), h - 1)
    d_focus = disparity[jv, ju]
    radius = gain * alpha * np.abs(disparity - d_focus)
    return np.minimum(radius, cap)


if HAVE_NUMBA:

    @njit(cache=True, parallel=True)
    def _disc_blur_numba(img, radius, out):  # pragma: no cover - compiled
        h, w, c = img.shape
        for i in prange(h):
            for j in range(w):
                r = radius[i, j]
                reach = int(r + 0.5) + 1
                for k in range(c):
                    out[i, j, k] = 0.0
                wsum = 0.0
                for di in range(-reach, reach + 1):
                    ii = i + di
                    if ii < 0 or ii >= h:
                        continue
                    for dj in range(-reach, reach + 1):
                        jj = j + dj
                        if jj < 0 or jj >= w:
                            continue
                        wgt = r - math.sqrt(di * di + dj * dj) + 0.5
                        if wgt <= 0.0:
                            continue
                        if wgt > 1.0:
                            wgt = 1.0
                        wsum += wgt
                        for k in range(c):
                            out[i, j, k] += wgt * img[ii, jj, k]
                for k in range(c):
                    out[i, j, k] /= wsum


def _disc_blur_numpy(img, radius, out):
    h, w, _ = img.shape
    reach = int(radius.max() + 0.5) + 1
    acc = np.zeros_like(img)
    wsum = np.zeros((h, w), dtype=np.float64)
    for di in range(-reach, reach + 1):
        ti0, ti1 = max(0, -di), min(h, h - di)  # target rows with a valid source row
        if ti0 >= ti1:
            continue
        for dj in range(-reach, reach + 1):
            tj0, tj1 = max(0, -dj), min(w, w - dj)
            if tj0 >= tj1:
                continue
            dist = math.sqrt(di * di + dj * dj)
            wgt = np.clip(radius[ti0:ti1, tj0:tj1] - dist + 0.5, 0.0, 1.0)
            if not wgt.any():
                continue
            src = img[ti0 + di : ti1 + di, tj0 + dj : tj1 + dj]
            acc[ti0:ti1, tj0:tj1] += wgt[..., None] * src
            wsum[ti0:ti1, tj0:tj1] += wgt
    out[...] = acc / wsum[..., None]


def disc_blur(image: np.ndarray, radius: np.ndarray, backend: str | None = None) -> np.ndarray:
    """Variable-radius disc average of ``image`` (coverage-weighted rim)."""
    image = np.asarray(image, dtype=np.float64)
    squeeze = image.ndim == 2
    if squeeze:
        image = image[:, :, None]
    radius = np.asarray(radius, dtype=np.float64)
    if radius.shape != image.shape[:2]:
        raise ConfigError(f"radius map {radius.shape} does not match image {image.shape[:2]}")
    if radius.min() < 0.0:
        raise ConfigError("blur radii must be non-negative")
    out = np.empty_like(image)
    if resolve_backend(backend) == "numba":
        _disc_blur_numba(np.ascontiguousarray(image), np.ascontiguousarray(radius), out)
    else:
        _disc_blur_numpy(image, radius, out)
    return out[..., 0] if squeeze else out


def bokeh_render(
    frame: np.ndarray,
    disparity: np.ndarray,
    alpha: float,
    focus_u: float,
    focus_v: float,
    gain: float = DEFAULT_GAIN,
    cap: float = DEFAULT_CAP,
    backend: str | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Blur a frame by its disparity-derived per-pixel radius map.

    Returns (blurred frame, radius map).  alpha = 0 returns the input
    array unchanged (a copy), byte for byte.
    """
    frame = np.asarray(frame, dtype=np.float64)
    radius = blur_radius_map(disparity, alpha, focus_u, focus_v, gain=gain, cap=cap)
    if alpha == 0.0 or radius.max() == 0.0:
        return frame.copy(), radius
    return disc_blur(frame, radius, backend=backend), radius
