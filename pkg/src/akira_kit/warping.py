"""Image-space warps: centered zoom, radial-distortion resampling, and the
crop factor that keeps distorted sampling inside the source frame.

A warp is stored as per-output-pixel *source* coordinates (inverse
mapping); applying one is a single bilinear gather.  The distortion warp
evaluates the radial polynomial directly at each output pixel — the same
closed form the camera model uses — so a frame and the camera map built
from its emitted parameters always agree.

Sign convention that falls out of this: positive k1 widens the view
(border pixels sample beyond the source border), so positive coefficients
are what require a crop factor s > 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import HAVE_NUMBA, njit, prange, resolve_backend
from .camera import CameraIntrinsics, Distortion, distort_pixel
from .errors import ConfigError, NumericError

_CROP_FACTOR_CEIL = 64.0


@dataclass(frozen=True, eq=False)
class WarpField:
    """Per-output-pixel source coordinates, shape (H, W, 2) as (u, v)."""

    source: np.ndarray

    def __post_init__(self):
        src = np.ascontiguousarray(self.source, dtype=np.float64)
        if src.ndim != 3 or src.shape[2] != 2:
            raise ConfigError(f"warp field must be (H, W, 2), got {src.shape}")
        object.__setattr__(self, "source", src)

    @property
    def shape(self) -> tuple[int, int]:
        return self.source.shape[:2]

    def bounds_mask(self, width: int, height: int) -> np.ndarray:
        """Per-pixel mask of sources inside [0, W-1] x [0, H-1]."""
        u = self.source[..., 0]
        v = self.source[..., 1]
        return (u >= 0) & (u <= width - 1) & (v >= 0) & (v <= height - 1)

    def in_bounds(self, width: int, height: int) -> bool:
        """True when every source coordinate lies inside [0, W-1] x [0, H-1]."""
        return bool(self.bounds_mask(width, height).all())

    def apply(self, image: np.ndarray, backend: str | None = None) -> np.ndarray:
        return bilinear_sample(image, self.source, backend=backend)


# ---------------------------------------------------------------------------
# Bilinear gather (numba kernel + numpy fallback)

if HAVE_NUMBA:

    @njit(cache=True, parallel=True)
    def _bilinear_numba(img, xs, ys, out):  # pragma: no cover - compiled
        h, w, c = img.shape
        ho, wo = xs.shape
        for i in prange(ho):
            for j in range(wo):
                x = xs[i, j]
                y = ys[i, j]
                if x < 0.0:
                    x = 0.0
                elif x > w - 1.0:
                    x = w - 1.0
                if y < 0.0:
                    y = 0.0
                elif y > h - 1.0:
                    y = h - 1.0
                x0 = int(x)
                y0 = int(y)
                if x0 > w - 2:
                    x0 = w - 2
                if y0 > h - 2:
                    y0 = h - 2
                fx = x - x0
                fy = y - y0
                for k in range(c):
                    v00 = img[y0, x0, k]
                    v01 = img[y0, x0 + 1, k]
                    v10 = img[y0 + 1, x0, k]
                    v11 = img[y0 + 1, x0 + 1, k]
                    top = v00 + fx * (v01 - v00)
                    bot = v10 + fx * (v11 - v10)
                    out[i, j, k] = top + fy * (bot - top)


def _bilinear_numpy(img, xs, ys, out):
    h, w, _ = img.shape
    x = np.clip(xs, 0.0, w - 1.0)
    y = np.clip(ys, 0.0, h - 1.0)
    x0 = np.minimum(x.astype(np.int64), w - 2)
    y0 = np.minimum(y.astype(np.int64), h - 2)
    fx = (x - x0)[..., None]
    fy = (y - y0)[..., None]
    v00 = img[y0, x0]
    v01 = img[y0, x0 + 1]
    v10 = img[y0 + 1, x0]
    v11 = img[y0 + 1, x0 + 1]
    top = v00 + fx * (v01 - v00)
    bot = v10 + fx * (v11 - v10)
    out[...] = top + fy * (bot - top)


def bilinear_sample(image: np.ndarray, coords: np.ndarray, backend: str | None = None) -> np.ndarray:
    """Sample ``image`` at per-pixel coordinates (..., 2) = (u, v).

    Source coordinates are clamped to the valid interpolation domain, so
    callers that guarantee in-bounds sampling lose nothing and exact-edge
    coordinates stay well defined.  Images of shape (H, W) or (H, W, C)
    are accepted; output matches the coordinate grid's shape.
    """
    image = np.asarray(image, dtype=np.float64)
    squeeze = image.ndim == 2
    if squeeze:
        image = image[:, :, None]
    if image.ndim != 3:
        raise ConfigError(f"image must be (H, W) or (H, W, C), got {image.shape}")
    if image.shape[0] < 2 or image.shape[1] < 2:
        raise ConfigError("bilinear sampling needs at least a 2x2 image")
    coords = np.asarray(coords, dtype=np.float64)
    if coords.ndim != 3 or coords.shape[2] != 2:
        raise ConfigError(f"coords must be (H, W, 2), got {coords.shape}")
    xs = np.ascontiguousarray(coords[..., 0])
    ys = np.ascontiguousarray(coords[..., 1])
    out = np.empty(xs.shape + (image.shape[2],), dtype=np.float64)
    if resolve_backend(backend) == "numba":
        _bilinear_numba(np.ascontiguousarray(image), xs, ys, out)
    else:
        _bilinear_numpy(image, xs, ys, out)
    return out[..., 0] if squeeze else out


# ---------------------------------------------------------------------------
# Centered zoom

def zoom_positions(intrinsics: CameraIntrinsics, s: float) -> WarpField:
    """Inverse-sampling positions for a centered zoom-in by factor ``s``."""
    if s < 1.0:
        raise ConfigError(f"zoom factor must be >= 1, got {s}")
    h, w = intrinsics.height, intrinsics.width
    vv, uu = np.mgrid[0:h, 0:w].astype(np.float64)
    src_u = intrinsics.cx + (uu - intrinsics.cx) / s
    src_v = intrinsics.cy + (vv - intrinsics.cy) / s
    return WarpField(np.stack([src_u, src_v], axis=-1))


def zoom_warp(
    frame: np.ndarray, intrinsics: CameraIntrinsics, s: float, backend: str | None = None
) -> tuple[np.ndarray, CameraIntrinsics]:
    """Zoom into the frame center by factor ``s`` (>= 1).

    Equivalent to cropping the central 1/s of the frame and resizing back
    up.  Returns the resampled frame and intrinsics with focal lengths
    scaled by ``s`` (the principal point is the zoom center and stays put).
    """
    field = zoom_positions(intrinsics, s)
    return field.apply(frame, backend=backend), intrinsics.scaled(s)


# ---------------------------------------------------------------------------
# Radial distortion warp and its crop factor

def distortion_positions(
    intrinsics: CameraIntrinsics, dist: Distortion, s: float = 1.0
) -> WarpField:
    """Source positions for the distortion warp at crop zoom ``s``.

    Output pixel q first maps through the zoom inverse into the central
    crop, then through the radial polynomial to its source coordinate.
    """
    if s < 1.0:
        raise ConfigError(f"crop factor must be >= 1, got {s}")
    h, w = intrinsics.height, intrinsics.width
    vv, uu = np.mgrid[0:h, 0:w].astype(np.float64)
    cu = intrinsics.cx + (uu - intrinsics.cx) / s
    cv = intrinsics.cy + (vv - intrinsics.cy) / s
    src_u, src_v = distort_pixel(cu, cv, intrinsics, dist)
    return WarpField(np.stack([src_u, src_v], axis=-1))


def _border_points(width: int, height: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """n points marching the frame border (corners included), sub-pixel spaced."""
    perimeter = 2.0 * ((width - 1) + (height - 1))
    t = np.linspace(0.0, perimeter, n, endpoint=False)
    u = np.empty(n)
    v = np.empty(n)
    w1, h1 = width - 1.0, height - 1.0
    for i, ti in enumerate(t):
        if ti < w1:
            u[i], v[i] = ti, 0.0
        elif ti < w1 + h1:
            u[i], v[i] = w1, ti - w1
        elif ti < 2 * w1 + h1:
            u[i], v[i] = w1 - (ti - w1 - h1), h1
        else:
            u[i], v[i] = 0.0, ti - 2 * w1 - h1
    return u, v


def distortion_crop_factor(
    intrinsics: CameraIntrinsics, dist: Distortion, n_border: int | None = None
) -> float:
    """Smallest centered zoom s >= 1 keeping all distorted sampling in-bounds.

    The frame border is sampled densely (at least 4*(W+H) positions, the
    worst offenders under a radially monotone map) and s is bisected until
    every border sample's source coordinate lies inside the frame.
    """
    if n_border is None:
        n_border = 4 * (intrinsics.width + intrinsics.height)
    bu, bv = _border_points(intrinsics.width, intrinsics.height, n_border)
    w1, h1 = intrinsics.width - 1.0, intrinsics.height - 1.0

    def ok(s: float) -> bool:
        cu = intrinsics.cx + (bu - intrinsics.cx) / s
        cv = intrinsics.cy + (bv - intrinsics.cy) / s
        su, sv = distort_pixel(cu, cv, intrinsics, dist)
        return bool((su >= 0).all() and (su <= w1).all() and (sv >= 0).all() and (sv <= h1).all())

    if ok(1.0):
        return 1.0
    lo, hi = 1.0, 2.0
    while not ok(hi):
        lo, hi = hi, hi * 2.0
        if hi > _CROP_FACTOR_CEIL:
            raise NumericError(
                f"no crop factor below {_CROP_FACTOR_CEIL} keeps distortion "
                f"{dist} in-bounds; coefficients are outside the usable regime"
            )
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi  # invariant: ok(hi) held throughout


def distortion_warp(
    frame: np.ndarray,
    intrinsics: CameraIntrinsics,
    dist: Distortion,
    s: float | None = None,
    backend: str | None = None,
) -> tuple[np.ndarray, float]:
    """Resample a frame through the radial distortion model.

    ``s`` is the crop factor folded into the warp; when omitted it is
    computed with :func:`distortion_crop_factor` so no output pixel samples
    outside the source.  Returns the warped frame and the crop factor used.
    """
    if s is None:
        s = distortion_crop_factor(intrinsics, dist)
    field = distortion_positions(intrinsics, dist, s)
    return field.apply(frame, backend=backend), s
