"""Flow-direction fidelity metrics.

The core score compares two flow fields by the cosine of the angle
between them, averaged over pixels where *both* fields move more than a
threshold — near-static pixels carry no direction information and only
add noise.  Reference fields for the camera effects come in closed form:
a centered zoom moves content radially in proportion to the zoom delta,
and a radial-distortion change moves content radially with the polynomial
delta as gain.

Sign conventions match the warp module: zooming in (s growing) pushes
content outward, while raising the distortion gain widens the view and
pulls content inward.  Consumers pairing consecutive frames therefore
evaluate zoom references as (s_next, s_current) and distortion references
as (d_current, d_next).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .camera import CameraIntrinsics, Distortion
from .errors import ConfigError
from .warping import WarpField

DEFAULT_THRESHOLD = 0.5  # px; below this a pixel's direction is considered noise


@dataclass(frozen=True)
class FlowSimResult:
    """Mean cosine similarity over jointly-moving pixels.

    ``score`` is in [-1, 1]; ``valid_fraction`` is the share of pixels
    that passed both magnitude thresholds.  When no pixel qualifies the
    score is defined as 0.0 and ``empty`` is set.
    """

    score: float
    valid_fraction: float
    empty: bool

    @property
    def percent(self) -> float:
        """Score scaled by 100, the conventional reporting unit."""
        return 100.0 * self.score


def _check_flow(name: str, flow: np.ndarray) -> np.ndarray:
    flow = np.asarray(flow, dtype=np.float64)
    if flow.ndim != 3 or flow.shape[2] != 2:
        raise ConfigError(f"{name} flow must be (H, W, 2), got {flow.shape}")
    return flow


def flowsim(reference: np.ndarray, generated: np.ndarray, threshold: float = DEFAULT_THRESHOLD) -> FlowSimResult:
    """Directional agreement between a reference and a generated flow field."""
    ref = _check_flow("reference", reference)
    gen = _check_flow("generated", generated)
    if ref.shape != gen.shape:
        raise ConfigError(f"flow shapes differ: {ref.shape} vs {gen.shape}")
    if threshold < 0.0:
        raise ConfigError(f"threshold must be >= 0, got {threshold}")
    mag_r = np.hypot(ref[..., 0], ref[..., 1])
    mag_g = np.hypot(gen[..., 0], gen[..., 1])
    mask = (mag_r > threshold) & (mag_g > threshold)
    n = int(mask.sum())
    if n == 0:
        return FlowSimResult(score=0.0, valid_fraction=0.0, empty=True)
    dots = (ref[..., 0] * gen[..., 0] + ref[..., 1] * gen[..., 1])[mask]
    cos = dots / (mag_r[mask] * mag_g[mask])
    return FlowSimResult(
        score=float(cos.mean()),
        valid_fraction=n / mask.size,
        empty=False,
    )


def theoretical_zoom_flow(intrinsics: CameraIntrinsics, s: float, s_ref: float) -> np.ndarray:
    """Radial flow (s - s_ref) * (pixel - principal point)."""
    h, w = intrinsics.height, intrinsics.width
    vv, uu = np.mgrid[0:h, 0:w].astype(np.float64)
    du = uu - intrinsics.cx
    dv = vv - intrinsics.cy
    delta = float(s) - float(s_ref)
    return np.stack([delta * du, delta * dv], axis=-1)


def theoretical_distortion_flow(
    intrinsics: CameraIntrinsics, dist: Distortion, dist_ref: Distortion
) -> np.ndarray:
    """Radial flow from a distortion-coefficient change.

    At each pixel the centered offset (in px) is scaled by the coefficient
    delta contracted with (r^2, r^4, r^6), r being the offset normalized
    by the image half-diagonal — the same convention the distortion model
    itself uses.
    """
    h, w = intrinsics.height, intrinsics.width
    vv, uu = np.mgrid[0:h, 0:w].astype(np.float64)
    du = uu - intrinsics.cx
    dv = vv - intrinsics.cy
    hd = intrinsics.half_diagonal
    r2 = (du * du + dv * dv) / (hd * hd)
    dk = dist.coeffs - dist_ref.coeffs
    gain = r2 * (dk[0] + r2 * (dk[1] + r2 * dk[2]))
    return np.stack([gain * du, gain * dv], axis=-1)


def zoomsim(
    generated: np.ndarray,
    intrinsics: CameraIntrinsics,
    s: float,
    s_ref: float,
    threshold: float = DEFAULT_THRESHOLD,
) -> FlowSimResult:
    """flowsim against the closed-form zoom flow for (s, s_ref)."""
    return flowsim(theoretical_zoom_flow(intrinsics, s, s_ref), generated, threshold)


def distortsim(
    generated: np.ndarray,
    intrinsics: CameraIntrinsics,
    dist: Distortion,
    dist_ref: Distortion,
    threshold: float = DEFAULT_THRESHOLD,
) -> FlowSimResult:
    """flowsim against the closed-form distortion flow for (dist, dist_ref)."""
    return flowsim(theoretical_distortion_flow(intrinsics, dist, dist_ref), generated, threshold)


def focus_area(radius_map: np.ndarray, radius_threshold: float = 1.0) -> float:
    """Fraction of pixels whose blur radius stays below the threshold."""
    radius_map = np.asarray(radius_map, dtype=np.float64)
    if radius_map.ndim != 2:
        raise ConfigError(f"radius map must be (H, W), got {radius_map.shape}")
    if radius_threshold <= 0.0:
        raise ConfigError(f"radius threshold must be positive, got {radius_threshold}")
    return float((radius_map < radius_threshold).mean())


def flow_from_warp(field: WarpField) -> np.ndarray:
    """Forward flow field implied by an inverse-sampling warp.

    Each output pixel p samples source q = field[p]; the content at q
    therefore moves by (p - q).  That motion is deposited at the source
    pixel nearest q (half-up rounding), contributions to the same pixel
    are averaged, and source pixels nothing mapped to are filled from
    their nearest assigned neighbor.
    """
    src = field.source
    h, w = field.shape
    vv, uu = np.mgrid[0:h, 0:w].astype(np.float64)
    sx = src[..., 0].ravel()
    sy = src[..., 1].ravel()
    qx = np.floor(sx + 0.5).astype(np.int64)
    qy = np.floor(sy + 0.5).astype(np.int64)
    ok = (qx >= 0) & (qx < w) & (qy >= 0) & (qy < h)
    qx, qy = qx[ok], qy[ok]
    du = (uu.ravel() - sx)[ok]
    dv = (vv.ravel() - sy)[ok]
    sum_u = np.zeros((h, w), dtype=np.float64)
    sum_v = np.zeros((h, w), dtype=np.float64)
    cnt = np.zeros((h, w), dtype=np.float64)
    np.add.at(sum_u, (qy, qx), du)
    np.add.at(sum_v, (qy, qx), dv)
    np.add.at(cnt, (qy, qx), 1.0)
    hit = cnt > 0
    if not hit.any():
        raise ConfigError("warp field deposits no samples inside the frame")
    flow = np.zeros((h, w, 2), dtype=np.float64)
    flow[hit, 0] = sum_u[hit] / cnt[hit]
    flow[hit, 1] = sum_v[hit] / cnt[hit]
    if not hit.all():
        # holes inherit the nearest assigned pixel's flow
        nearest = ndimage.distance_transform_edt(~hit, return_distances=False, return_indices=True)
        flow = flow[nearest[0], nearest[1]]
    return flow
