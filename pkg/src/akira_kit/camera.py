"""Extended pinhole camera model: intrinsics, radial distortion, pose,
aperture, and the per-pixel 9-channel camera map built from them.

Conventions used throughout the toolkit:

* Pixel coordinates are continuous, with integer values at pixel centers
  and (0, 0) the top-left pixel.  No half-pixel offset is applied.
* Poses are world-from-camera: ``x_cam = R @ x_world + t``; the camera
  center in world coordinates is ``-R.T @ t``.
* Radial distortion acts on center-relative coordinates normalized by the
  image half-diagonal, so the dimensionless radius is 1.0 at the frame
  corners regardless of resolution.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    BehindCameraError,
    ConfigError,
    InversionError,
    NumericError,
    UnsupportedDistortionError,
)

# Coefficient range the augmentation sampler draws from; values outside it
# are legal but get a warning because downstream consumers are tuned to it.
DISTORTION_RANGE = (-0.1, 0.1)
ALPHA_RANGE = (0.0, 100.0)

_UNDISTORT_MAX_ITER = 50
_UNDISTORT_TOL_PX = 1e-6
# Radial search ceiling for inversion, in half-diagonal units.  Preimages of
# in-frame pixels under |k| <= 0.1 live well below this.
_RADIUS_CEIL = 4.0


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics plus the pixel frame they apply to."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ConfigError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if not (self.width >= 1 and self.height >= 1):
            raise ConfigError(f"frame size must be at least 1x1, got {self.width}x{self.height}")

    @property
    def K(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]], dtype=np.float64
        )

    @property
    def half_diagonal(self) -> float:
        """Distance from frame center to a corner, in pixels."""
        return 0.5 * math.hypot(self.width, self.height)

    def scaled(self, s: float) -> "CameraIntrinsics":
        """Intrinsics after a centered zoom by factor ``s`` (focal lengths scale)."""
        return CameraIntrinsics(self.fx * s, self.fy * s, self.cx, self.cy, self.width, self.height)


@dataclass(frozen=True)
class Distortion:
    """Radial distortion coefficients (r^2, r^4, r^6 terms)."""

    k1: float = 0.0
    k2: float = 0.0
    k3: float = 0.0

    def __post_init__(self):
        lo, hi = DISTORTION_RANGE
        for name, k in (("k1", self.k1), ("k2", self.k2), ("k3", self.k3)):
            if not math.isfinite(k):
                raise ConfigError(f"distortion coefficient {name} must be finite, got {k}")
            if not (lo <= k <= hi):
                warnings.warn(
                    f"distortion coefficient {name}={k} outside the calibrated range "
                    f"[{lo}, {hi}]; results may be extreme",
                    stacklevel=2,
                )

    @property
    def coeffs(self) -> np.ndarray:
        return np.array([self.k1, self.k2, self.k3], dtype=np.float64)

    def is_zero(self) -> bool:
        return self.k1 == 0.0 and self.k2 == 0.0 and self.k3 == 0.0


@dataclass(frozen=True)
class ApertureSpec:
    """Aperture opening and in-focus point.

    ``alpha`` is a dimensionless opening in [0, 100]; 0 is a pinhole
    (everything sharp), larger values blur out-of-focus content more.
    ``focus_u``/``focus_v`` give the pixel whose disparity is in focus.
    """

    alpha: float
    focus_u: float
    focus_v: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha >= 0.0):
            raise ConfigError(f"alpha must be finite and >= 0, got {self.alpha}")


@dataclass(frozen=True, eq=False)
class CameraPose:
    """World-from-camera rigid transform: x_cam = R @ x_world + t."""

    R: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.R, dtype=np.float64).reshape(3, 3)
        t = np.asarray(self.t, dtype=np.float64).reshape(3)
        err = np.abs(R.T @ R - np.eye(3)).max()
        if err > 1e-9:
            raise ConfigError(f"rotation is not orthonormal (max |R^T R - I| = {err:.3g})")
        det = np.linalg.det(R)
        if abs(det - 1.0) > 1e-9:
            raise ConfigError(f"rotation determinant must be +1, got {det!r}")
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "t", t)

    @classmethod
    def identity(cls) -> "CameraPose":
        return cls(np.eye(3), np.zeros(3))

    @property
    def center(self) -> np.ndarray:
        """Camera center in world coordinates."""
        return -self.R.T @ self.t


def project(point_world, intrinsics: CameraIntrinsics, pose: CameraPose) -> tuple[float, float]:
    """Pinhole-project a world point to pixel coordinates.

    Raises :class:`BehindCameraError` when the point is at or behind the
    camera plane (z_cam <= 1e-9), where the projection is undefined.
    """
    X = np.asarray(point_world, dtype=np.float64).reshape(3)
    xc = pose.R @ X + pose.t
    if xc[2] <= 1e-9:
        raise BehindCameraError(f"point has camera-frame depth z={xc[2]:.6g}; cannot project")
    u = intrinsics.fx * xc[0] / xc[2] + intrinsics.cx
    v = intrinsics.fy * xc[1] / xc[2] + intrinsics.cy
    return float(u), float(v)


def radial_factor(r2, dist: Distortion):
    """Polynomial distortion gain 1 + k1 r^2 + k2 r^4 + k3 r^6 (r^2 given)."""
    r2 = np.asarray(r2, dtype=np.float64)
    return 1.0 + r2 * (dist.k1 + r2 * (dist.k2 + r2 * dist.k3))


def distort_pixel(u, v, intrinsics: CameraIntrinsics, dist: Distortion):
    """Apply radial distortion to pixel coordinates.

    Coordinates are taken relative to the principal point and normalized by
    the image half-diagonal before the radial polynomial is applied, so the
    coefficients mean the same thing at every resolution.  Accepts scalars
    or arrays (broadcast together); returns float64 arrays or floats.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    hd = intrinsics.half_diagonal
    du = u - intrinsics.cx
    dv = v - intrinsics.cy
    r2 = (du * du + dv * dv) / (hd * hd)
    f = radial_factor(r2, dist)
    ud = intrinsics.cx + du * f
    vd = intrinsics.cy + dv * f
    if ud.ndim == 0:
        return float(ud), float(vd)
    return ud, vd


def _displacement(r, dist: Distortion):
    """g(r) = r * factor(r^2) and its derivative, both at normalized radius r."""
    r = np.asarray(r, dtype=np.float64)
    r2 = r * r
    g = r * (1.0 + r2 * (dist.k1 + r2 * (dist.k2 + r2 * dist.k3)))
    dg = 1.0 + r2 * (3.0 * dist.k1 + r2 * (5.0 * dist.k2 + r2 * 7.0 * dist.k3))
    return g, dg


@functools.lru_cache(maxsize=256)
def _monotone_radius(dist: Distortion) -> float:
    """Largest normalized radius up to which the radial displacement g(r)
    is strictly increasing (capped at _RADIUS_CEIL).

    Cached per coefficient triple: the sweep-and-bisect search costs far more
    than one Newton solve, and callers typically invert many pixels under the
    same distortion.
    """
    rs = np.linspace(0.0, _RADIUS_CEIL, 513)
    _, dg = _displacement(rs, dist)
    bad = np.nonzero(dg <= 0.0)[0]
    if bad.size == 0:
        return _RADIUS_CEIL
    lo, hi = rs[bad[0] - 1], rs[bad[0]]
    for _ in range(60):  # bisect the first sign change of g'
        mid = 0.5 * (lo + hi)
        _, d = _displacement(mid, dist)
        if d > 0.0:
            lo = mid
        else:
            hi = mid
    return lo


def undistort_pixel(u, v, intrinsics: CameraIntrinsics, dist: Distortion) -> tuple[float, float]:
    """Invert :func:`distort_pixel` for a single pixel.

    Solves the scalar radial equation g(r) = r_target with safeguarded
    Newton iterations (bisection fallback), which requires g to be strictly
    increasing over the radii involved.  Raises
    :class:`UnsupportedDistortionError` when the coefficients admit no
    preimage for this pixel, and :class:`InversionError` when the iteration
    fails to reach tolerance within 50 steps.

    This exists for verification; image-space warps never invert the
    distortion per pixel.
    """
    if dist.is_zero():
        return float(u), float(v)
    hd = intrinsics.half_diagonal
    du = float(u) - intrinsics.cx
    dv = float(v) - intrinsics.cy
    rho = math.hypot(du, dv) / hd
    if rho == 0.0:
        return intrinsics.cx, intrinsics.cy

    r_mono = _monotone_radius(dist)
    g_max, _ = _displacement(r_mono, dist)
    if g_max < rho:
        raise UnsupportedDistortionError(
            f"pixel ({u}, {v}) has no preimage: radial displacement peaks at "
            f"{float(g_max):.6g} (normalized) before turning over, target is {rho:.6g}"
        )

    lo, hi = 0.0, float(r_mono)
    r = min(rho, hi)
    tol = _UNDISTORT_TOL_PX / hd
    g = None
    for _ in range(_UNDISTORT_MAX_ITER):
        g, dg = _displacement(r, dist)
        g, dg = float(g), float(dg)
        if abs(g - rho) <= tol:
            break
        if g < rho:
            lo = r
        else:
            hi = r
        if dg > 0.0:
            step = r - (g - rho) / dg
            r = step if lo < step < hi else 0.5 * (lo + hi)
        else:
            r = 0.5 * (lo + hi)
    else:
        raise InversionError(
            f"undistortion did not converge for pixel ({u}, {v})",
            residual=abs(g - rho) * hd,
        )
    scale = r / rho
    return intrinsics.cx + du * scale, intrinsics.cy + dv * scale


def plucker_ray(u, v, intrinsics: CameraIntrinsics, dist: Distortion, pose: CameraPose):
    """World-space Plucker ray (direction, moment) for pixel coordinates.

    The pixel is first pushed through the distortion model, back-projected
    with the inverse intrinsics, rotated into world frame, and unit
    normalized.  The moment is ``m = O x d`` with O the camera center, so
    ``m . d == 0`` and a camera at the world origin has zero moment.
    Accepts scalars or equal-shape arrays; returns (..., 3) float64 arrays.
    """
    ud, vd = distort_pixel(u, v, intrinsics, dist)
    ud = np.asarray(ud, dtype=np.float64)
    vd = np.asarray(vd, dtype=np.float64)
    x = (ud - intrinsics.cx) / intrinsics.fx
    y = (vd - intrinsics.cy) / intrinsics.fy
    d_cam = np.stack([x, y, np.ones_like(x)], axis=-1)
    d = d_cam @ pose.R  # == (R.T @ d_cam.T).T
    d /= np.linalg.norm(d, axis=-1, keepdims=True)
    origin = pose.center
    m = np.cross(np.broadcast_to(origin, d.shape), d)
    return d, m


def aperture_exponent(alpha: float, sigmoid_scale: float = 1.0) -> float:
    """Exponent 1/sigmoid(scale * alpha) applied to the focus distance.

    alpha = 0 gives exponent 2 (quadratic falloff); large alpha saturates
    the sigmoid and the exponent approaches 1 (linear falloff).
    """
    s = 1.0 / (1.0 + math.exp(-sigmoid_scale * alpha))
    return 1.0 / s


def aperture_map_value(u, v, spec: ApertureSpec, sigmoid_scale: float = 1.0):
    """Three-channel aperture encoding for pixel coordinates.

    Channels are the offset from the in-focus point and that offset's
    length raised to :func:`aperture_exponent`.  Accepts scalars or arrays.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    du = u - spec.focus_u
    dv = v - spec.focus_v
    rho = np.hypot(du, dv)
    e = aperture_exponent(spec.alpha, sigmoid_scale)
    return np.stack([du, dv, rho**e], axis=-1)


@dataclass(frozen=True, eq=False)
class CameraMap:
    """Per-pixel camera encoding: ray direction, ray moment, aperture.

    Stored as three (H, W, 3) float32 planes; geometry is computed in
    float64 and narrowed only on storage.
    """

    direction: np.ndarray
    moment: np.ndarray
    aperture: np.ndarray

    def __post_init__(self):
        for name in ("direction", "moment", "aperture"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float32)
            if arr.ndim != 3 or arr.shape[2] != 3:
                raise ConfigError(f"camera map plane {name} must be (H, W, 3), got {arr.shape}")
            object.__setattr__(self, name, arr)
        if not (self.direction.shape == self.moment.shape == self.aperture.shape):
            raise ConfigError("camera map planes must share one shape")

    @property
    def shape(self) -> tuple[int, int]:
        return self.direction.shape[:2]

    def as_array(self) -> np.ndarray:
        """Channel-major (9, H, W) float32 view: direction, moment, aperture."""
        return np.concatenate(
            [
                np.moveaxis(self.direction, -1, 0),
                np.moveaxis(self.moment, -1, 0),
                np.moveaxis(self.aperture, -1, 0),
            ],
            axis=0,
        )

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "CameraMap":
        arr = np.asarray(arr)
        if arr.ndim != 3 or arr.shape[0] != 9:
            raise ConfigError(f"camera map array must be (9, H, W), got {arr.shape}")
        planes = np.moveaxis(arr, 0, -1)
        return cls(planes[..., 0:3], planes[..., 3:6], planes[..., 6:9])

    def validate(self, atol: float = 1e-6) -> None:
        """Check the stored planes satisfy the ray invariants."""
        d = self.direction.astype(np.float64)
        m = self.moment.astype(np.float64)
        norm_err = np.abs(np.linalg.norm(d, axis=-1) - 1.0).max()
        if norm_err > atol:
            raise NumericError(f"direction norms off unit by {norm_err:.3g}")
        dot_err = np.abs((d * m).sum(axis=-1)).max()
        if dot_err > atol:
            raise NumericError(f"moment not orthogonal to direction: {dot_err:.3g}")
        if self.aperture[..., 2].min() < 0.0:
            raise NumericError("aperture distance channel has negative entries")


def build_camera_map(
    intrinsics: CameraIntrinsics,
    dist: Distortion,
    aperture: ApertureSpec,
    pose: CameraPose,
    sigmoid_scale: float = 1.0,
) -> CameraMap:
    """Build the (H, W, 9) camera map for one frame.

    The in-focus point must lie inside the pixel frame.  With zero
    distortion coefficients the direction/moment planes are bit-identical
    to a build that skips the distortion step entirely, because the radial
    factor is exactly 1.0.
    """
    W, H = intrinsics.width, intrinsics.height
    if not (0.0 <= aperture.focus_u <= W - 1 and 0.0 <= aperture.focus_v <= H - 1):
        raise ConfigError(
            f"focus point ({aperture.focus_u}, {aperture.focus_v}) outside frame "
            f"{W}x{H}"
        )
    vv, uu = np.mgrid[0:H, 0:W].astype(np.float64)
    d, m = plucker_ray(uu, vv, intrinsics, dist, pose)
    a = aperture_map_value(uu, vv, aperture, sigmoid_scale)
    return CameraMap(
        direction=d.astype(np.float32),
        moment=m.astype(np.float32),
        aperture=a.astype(np.float32),
    )


@dataclass(frozen=True, eq=False)
class CameraParams:
    """Everything known about the camera for one frame.

    This is the record serialized to the per-frame JSON-lines sidecar and
    the input from which camera maps are rebuilt.
    """

    intrinsics: CameraIntrinsics
    distortion: Distortion
    aperture: ApertureSpec
    pose: CameraPose

    def to_dict(self) -> dict:
        return {
            "fx": self.intrinsics.fx,
            "fy": self.intrinsics.fy,
            "cx": self.intrinsics.cx,
            "cy": self.intrinsics.cy,
            "width": self.intrinsics.width,
            "height": self.intrinsics.height,
            "k1": self.distortion.k1,
            "k2": self.distortion.k2,
            "k3": self.distortion.k3,
            "alpha": self.aperture.alpha,
            "focus_u": self.aperture.focus_u,
            "focus_v": self.aperture.focus_v,
            "R": [float(x) for x in self.pose.R.reshape(-1)],
            "t": [float(x) for x in self.pose.t],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CameraParams":
        try:
            return cls(
                intrinsics=CameraIntrinsics(
                    fx=float(d["fx"]),
                    fy=float(d["fy"]),
                    cx=float(d["cx"]),
                    cy=float(d["cy"]),
                    width=int(d["width"]),
                    height=int(d["height"]),
                ),
                distortion=Distortion(float(d["k1"]), float(d["k2"]), float(d["k3"])),
                aperture=ApertureSpec(
                    alpha=float(d["alpha"]),
                    focus_u=float(d["focus_u"]),
                    focus_v=float(d["focus_v"]),
                ),
                pose=CameraPose(np.asarray(d["R"], dtype=np.float64).reshape(3, 3), d["t"]),
            )
        except KeyError as exc:
            raise ConfigError(f"camera record missing key {exc}") from exc

    def camera_map(self, sigmoid_scale: float = 1.0) -> CameraMap:
        return build_camera_map(
            self.intrinsics, self.distortion, self.aperture, self.pose, sigmoid_scale
        )
