"""Clip augmentation pipeline: bokeh, then distortion, then zoom.

Effects are gated per clip by the nested dropout and parameterized by the
smooth per-frame trajectories from :mod:`akira_kit.sampling`.  The two
geometric effects collapse into a single resampling pass: the distortion
warp already takes a centered zoom, so the sampled zoom and the
distortion's own crop factor multiply into one effective zoom per frame.
The emitted per-frame camera parameters describe the output frames — the
same warp falls out of re-composing them, and camera maps built from them
match what was applied.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bokeh import bokeh_render
from .camera import ApertureSpec, CameraIntrinsics, CameraParams, CameraPose, Distortion
from .errors import ConfigError
from .sampling import AugmentConfig, OpticalTrajectory, sample_optical_trajectory
from .warping import distortion_crop_factor, distortion_positions, zoom_warp


@dataclass(frozen=True, eq=False)
class Frame:
    """One video frame: (H, W, 3) pixels in [0, 1], optional (H, W) disparity."""

    pixels: np.ndarray
    disparity: np.ndarray | None = None

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ConfigError(f"frame pixels must be (H, W, 3), got {px.shape}")
        if px.min() < 0.0 or px.max() > 1.0:
            raise ConfigError(
                f"frame pixels must lie in [0, 1], got range [{px.min():.4g}, {px.max():.4g}]"
            )
        object.__setattr__(self, "pixels", px)
        if self.disparity is not None:
            d = np.asarray(self.disparity, dtype=np.float64)
            if d.shape != px.shape[:2]:
                raise ConfigError(
                    f"disparity shape {d.shape} does not match frame {px.shape[:2]}"
                )
            object.__setattr__(self, "disparity", d)

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape[:2]


@dataclass(frozen=True, eq=False)
class AugmentResult:
    """Augmented frames plus everything needed to reconstruct the cameras."""

    frames: list[np.ndarray]
    params: list[CameraParams]
    trajectory: OpticalTrajectory


def augment_clip(
    frames: list[Frame],
    params: list[CameraParams],
    seed: int,
    config: AugmentConfig | None = None,
    backend: str | None = None,
) -> AugmentResult:
    """Apply the randomized optical augmentations to one clip.

    ``params`` gives the source camera per frame (a single-element list is
    broadcast).  Source cameras must be pinhole-clean for any effect the
    pipeline may add itself: zero distortion when the distortion effect is
    live, zero aperture opening when bokeh is live — the emitted
    coefficients describe the output in closed form, which composing onto
    an already-distorted source could not.

    With probability (1 - p) no effect fires and the output frames and
    parameters are the inputs, untouched.
    """
    if config is None:
        config = AugmentConfig()
    n = len(frames)
    if n == 0:
        raise ConfigError("clip holds no frames")
    if len(params) == 1:
        params = list(params) * n
    if len(params) != n:
        raise ConfigError(f"{n} frames but {len(params)} camera records")
    h, w = frames[0].shape
    for i, fr in enumerate(frames):
        if fr.shape != (h, w):
            raise ConfigError(f"frame {i} is {fr.shape}, expected {(h, w)}")
    for i, p in enumerate(params):
        if (p.intrinsics.width, p.intrinsics.height) != (w, h):
            raise ConfigError(
                f"camera record {i} is {p.intrinsics.width}x{p.intrinsics.height}, "
                f"frames are {w}x{h}"
            )

    bokeh_possible = config.p > 0.0 and config.enable_bokeh
    if bokeh_possible:
        missing = [i for i, fr in enumerate(frames) if fr.disparity is None]
        if missing:
            raise ConfigError(
                f"bokeh may fire (p={config.p}) but frame {missing[0]} has no disparity"
            )
    geometric_possible = config.p > 0.0 and (config.enable_distortion or config.enable_zoom)
    if geometric_possible and any(not p.distortion.is_zero() for p in params):
        raise ConfigError(
            "geometric augmentations need a distortion-free source camera; "
            "the input records carry nonzero coefficients"
        )
    if bokeh_possible and any(p.aperture.alpha != 0.0 for p in params):
        raise ConfigError(
            "bokeh augmentation needs a pinhole source camera (alpha = 0); "
            "the input records carry a nonzero aperture"
        )

    traj = sample_optical_trajectory(seed, n, w, h, config)
    flags = traj.flags

    out_frames: list[np.ndarray] = []
    out_params: list[CameraParams] = []
    effective = np.ones(n, dtype=np.float64)
    for i in range(n):
        px = frames[i].pixels
        intr = params[i].intrinsics
        if flags.bokeh:
            px, _ = bokeh_render(
                px,
                frames[i].disparity,
                float(traj.alpha[i]),
                float(traj.focus[i, 0]),
                float(traj.focus[i, 1]),
                gain=config.bokeh_gain,
                cap=config.bokeh_cap,
                backend=backend,
            )
        dist = Distortion(*traj.distortion[i]) if flags.distortion else params[i].distortion
        s = float(traj.zoom[i]) if flags.zoom else 1.0
        if flags.distortion:
            s *= distortion_crop_factor(intr, dist)
            px = distortion_positions(intr, dist, s).apply(px, backend=backend)
        elif s > 1.0:
            px, _ = zoom_warp(px, intr, s, backend=backend)
        effective[i] = s

        alpha = float(traj.alpha[i]) if flags.bokeh else params[i].aperture.alpha
        focus_u = float(traj.focus[i, 0]) if flags.bokeh else params[i].aperture.focus_u
        focus_v = float(traj.focus[i, 1]) if flags.bokeh else params[i].aperture.focus_v
        out_frames.append(px)
        out_params.append(
            CameraParams(
                intrinsics=intr.scaled(s) if s != 1.0 else intr,
                distortion=dist,
                aperture=ApertureSpec(alpha=alpha, focus_u=focus_u, focus_v=focus_v),
                pose=params[i].pose,
            )
        )

    return AugmentResult(
        frames=out_frames,
        params=out_params,
        trajectory=traj.with_effective_zoom(effective),
    )


def identity_params(
    intrinsics: CameraIntrinsics, n: int, pose: CameraPose | None = None
) -> list[CameraParams]:
    """Distortion-free pinhole records, one per frame, all sharing one pose."""
    if pose is None:
        pose = CameraPose.identity()
    record = CameraParams(
        intrinsics=intrinsics,
        distortion=Distortion(),
        aperture=ApertureSpec(alpha=0.0, focus_u=intrinsics.cx, focus_v=intrinsics.cy),
        pose=pose,
    )
    return [record] * n
