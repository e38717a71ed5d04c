"""Synthetic clips with exactly known flows, cameras, and trajectories.

A scene is a textured card with a piecewise-constant disparity layout.
Frames are produced by running the real warp/bokeh operators over the
card with scripted parameter curves, so every quantity a metric consumes
— flow between consecutive frames, per-frame camera, pose trajectory —
is available in closed form rather than estimated.  Camera pose curves
feed the trajectory outputs only; the card itself does not parallax.

Bundle layout on disk:

    frames/%05d.png    disparity/%05d.pfm    flow/%05d.flo
    traj.tum           cameramap.akmp        params.jsonl    spec.json
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .bokeh import bokeh_render
from .camera import (
    ApertureSpec,
    CameraIntrinsics,
    CameraParams,
    CameraPose,
    Distortion,
    _displacement,
)
from .errors import ConfigError, FormatError, NumericError
from .formats import (
    read_params_jsonl,
    read_pfm,
    read_png,
    write_camera_maps,
    write_flo,
    write_params_jsonl,
    write_pfm,
    write_png,
)
from .pipeline import Frame
from .sampling import sample_spline_trajectory, substream
from .trajectory import PoseTrajectory, write_tum
from .warping import distortion_crop_factor, distortion_positions

# Scene substream ids (disjoint from the augmentation sampler's by fiat).
S_TEXTURE = 100
S_ZOOM = 101
S_K1 = 102
S_ALPHA = 103


@dataclass(frozen=True)
class PlaneSpec:
    """Axis-aligned rectangle (fractional coords) at constant disparity."""

    x0: float
    y0: float
    x1: float
    y1: float
    disparity: float

    def __post_init__(self):
        if not (0.0 <= self.x0 < self.x1 <= 1.0 and 0.0 <= self.y0 < self.y1 <= 1.0):
            raise ConfigError(f"plane rectangle {self} is not a valid fractional box")
        if not (0.0 <= self.disparity <= 1.0):
            raise ConfigError(f"plane disparity must be in [0, 1], got {self.disparity}")


@dataclass(frozen=True)
class EffectCurve:
    """How one scalar parameter evolves over the clip.

    mode 'off' leaves the effect out entirely; 'constant' holds ``lo``;
    'linear' ramps lo -> hi; 'spline' draws a smooth random curve in
    [lo, hi] from the bundle seed.
    """

    mode: str = "off"
    lo: float = 0.0
    hi: float = 0.0

    def __post_init__(self):
        if self.mode not in ("off", "constant", "linear", "spline"):
            raise ConfigError(f"unknown curve mode {self.mode!r}")
        if self.mode != "off" and self.hi < self.lo:
            raise ConfigError(f"curve range [{self.lo}, {self.hi}] is empty")

    @property
    def active(self) -> bool:
        return self.mode != "off"

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.mode == "off":
            return np.zeros(n)
        if self.mode == "constant":
            return np.full(n, self.lo)
        if self.mode == "linear":
            return np.linspace(self.lo, self.hi, n)
        return sample_spline_trajectory(rng, n, self.lo, self.hi)

    def to_dict(self) -> dict:
        return {"mode": self.mode, "lo": self.lo, "hi": self.hi}

    @classmethod
    def from_dict(cls, d) -> "EffectCurve":
        d = dict(d)
        mode = d.pop("mode", "off")
        lo = float(d.pop("lo", 0.0))
        hi = float(d.pop("hi", lo))
        if d:
            raise ConfigError(f"unknown curve keys: {sorted(d)}")
        return cls(mode, lo, hi)


@dataclass(frozen=True)
class SceneSpec:
    """Complete description of a synthetic clip."""

    width: int = 256
    height: int = 256
    n_frames: int = 16
    texture: str = "checker"  # checker | noise | gradient
    period: int = 16
    background_disparity: float = 0.1
    planes: tuple[PlaneSpec, ...] = ()
    zoom: EffectCurve = field(default_factory=lambda: EffectCurve("off", 1.0, 1.0))
    distortion: EffectCurve = field(default_factory=EffectCurve)  # drives k1; k2 = k3 = 0
    alpha: EffectCurve = field(default_factory=EffectCurve)
    focus_u: float | None = None  # default: frame center
    focus_v: float | None = None
    bokeh_gain: float = 0.25
    bokeh_cap: float = 25.0
    pose_motion: str = "static"  # static | line | arc
    pose_step: float = 0.0  # units per frame (line) or degrees per frame (arc)
    pose_radius: float = 5.0  # arc radius
    fx: float | None = None  # default: 0.8 * max(width, height)

    def __post_init__(self):
        if self.width < 2 or self.height < 2:
            raise ConfigError(f"scene must be at least 2x2, got {self.width}x{self.height}")
        if self.n_frames < 2:
            raise ConfigError(f"scene needs at least 2 frames, got {self.n_frames}")
        if self.texture not in ("checker", "noise", "gradient"):
            raise ConfigError(f"unknown texture {self.texture!r}")
        if self.period < 1:
            raise ConfigError(f"texture period must be >= 1, got {self.period}")
        if not (0.0 <= self.background_disparity <= 1.0):
            raise ConfigError(f"background disparity must be in [0, 1]")
        if self.zoom.active and self.zoom.lo < 1.0:
            raise ConfigError(f"zoom curve must stay >= 1, got lo={self.zoom.lo}")
        for name, frac in (("focus_u", self.focus_u), ("focus_v", self.focus_v)):
            if frac is not None and not (0.0 <= frac <= 1.0):
                raise ConfigError(f"{name} is a frame fraction in [0, 1], got {frac}")
        if self.pose_motion not in ("static", "line", "arc"):
            raise ConfigError(f"unknown pose motion {self.pose_motion!r}")

    def intrinsics(self) -> CameraIntrinsics:
        f = self.fx if self.fx is not None else 0.8 * max(self.width, self.height)
        return CameraIntrinsics(
            fx=f,
            fy=f,
            cx=(self.width - 1) / 2.0,
            cy=(self.height - 1) / 2.0,
            width=self.width,
            height=self.height,
        )

    def focus_point(self) -> tuple[float, float]:
        """Focus position in pixels; focus_u / focus_v are frame fractions."""
        intr = self.intrinsics()
        u = intr.cx if self.focus_u is None else self.focus_u * (self.width - 1)
        v = intr.cy if self.focus_v is None else self.focus_v * (self.height - 1)
        return u, v

    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "n_frames": self.n_frames,
            "texture": self.texture,
            "period": self.period,
            "background_disparity": self.background_disparity,
            "planes": [
                {"x0": p.x0, "y0": p.y0, "x1": p.x1, "y1": p.y1, "disparity": p.disparity}
                for p in self.planes
            ],
            "zoom": self.zoom.to_dict(),
            "distortion": self.distortion.to_dict(),
            "alpha": self.alpha.to_dict(),
            "focus_u": self.focus_u,
            "focus_v": self.focus_v,
            "bokeh_gain": self.bokeh_gain,
            "bokeh_cap": self.bokeh_cap,
            "pose_motion": self.pose_motion,
            "pose_step": self.pose_step,
            "pose_radius": self.pose_radius,
            "fx": self.fx,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SceneSpec":
        d = dict(d)
        kwargs = {}
        if "planes" in d:
            kwargs["planes"] = tuple(PlaneSpec(**p) for p in d.pop("planes"))
        for key in ("zoom", "distortion", "alpha"):
            if key in d:
                kwargs[key] = EffectCurve.from_dict(d.pop(key))
        for key in (
            "width", "height", "n_frames", "texture", "period", "background_disparity",
            "focus_u", "focus_v", "bokeh_gain", "bokeh_cap",
            "pose_motion", "pose_step", "pose_radius", "fx",
        ):
            if key in d:
                kwargs[key] = d.pop(key)
        if d:
            raise ConfigError(f"unknown scene keys: {sorted(d)}")
        return cls(**kwargs)


# ---------------------------------------------------------------------------
# Card rendering

def _texture(spec: SceneSpec, rng: np.random.Generator) -> np.ndarray:
    h, w, p = spec.height, spec.width, spec.period
    if spec.texture == "checker":
        vv, uu = np.mgrid[0:h, 0:w]
        parity = ((uu // p) + (vv // p)) % 2
        dark = np.array([0.15, 0.25, 0.35])
        light = np.array([0.85, 0.75, 0.65])
        return np.where(parity[..., None] == 0, dark, light)
    if spec.texture == "noise":
        cells = rng.random((math.ceil(h / p), math.ceil(w / p), 3))
        return np.repeat(np.repeat(cells, p, axis=0), p, axis=1)[:h, :w]
    ramp_u = np.linspace(0.0, 1.0, w)[None, :, None]
    ramp_v = np.linspace(0.0, 1.0, h)[:, None, None]
    return np.concatenate(
        [
            np.broadcast_to(ramp_u, (h, w, 1)),
            np.broadcast_to(ramp_v, (h, w, 1)),
            np.full((h, w, 1), 0.5),
        ],
        axis=2,
    )


def _disparity(spec: SceneSpec) -> np.ndarray:
    d = np.full((spec.height, spec.width), spec.background_disparity, dtype=np.float64)
    for p in spec.planes:
        y0, y1 = int(p.y0 * spec.height), int(p.y1 * spec.height)
        x0, x1 = int(p.x0 * spec.width), int(p.x1 * spec.width)
        d[y0:y1, x0:x1] = p.disparity
    return d


def _poses(spec: SceneSpec) -> PoseTrajectory:
    n = spec.n_frames
    stamps = np.arange(n, dtype=np.float64)
    rots = np.empty((n, 3, 3))
    trans = np.empty((n, 3))
    for i in range(n):
        if spec.pose_motion == "static":
            rots[i] = np.eye(3)
            trans[i] = 0.0
        elif spec.pose_motion == "line":
            rots[i] = np.eye(3)
            trans[i] = (0.0, 0.0, spec.pose_step * i)
        else:  # arc in the xz-plane, heading along the tangent
            th = math.radians(spec.pose_step) * i
            c, s = math.cos(th), math.sin(th)
            rots[i] = np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
            trans[i] = (spec.pose_radius * math.sin(th), 0.0, spec.pose_radius * (1.0 - math.cos(th)))
    return PoseTrajectory(stamps, rots, trans)


# ---------------------------------------------------------------------------
# Closed-form flow between two parameterizations of the same card

def _invert_radial(rho: np.ndarray, dist: Distortion) -> np.ndarray:
    """Elementwise solve of r * factor(r) = rho (Newton; monotone regime)."""
    if dist.is_zero():
        return rho.copy()
    r = rho.copy()
    for _ in range(40):
        g, dg = _displacement(r, dist)
        if (dg <= 0.0).any():
            raise NumericError(
                f"radial displacement for {dist} is not monotone over the needed "
                "radii; closed-form flow is undefined"
            )
        step = (g - rho) / dg
        r -= step
        if np.abs(step).max() < 1e-14:
            break
    g, _ = _displacement(r, dist)
    if np.abs(g - rho).max() > 1e-10:
        raise NumericError("radial inversion failed to converge")
    return r


def flow_between(
    intrinsics: CameraIntrinsics,
    dist_a: Distortion,
    dist_b: Distortion,
    zoom_a: float,
    zoom_b: float,
) -> np.ndarray:
    """Exact flow from frame A to frame B of the same card.

    Both frames sample the card through (distortion, effective zoom); each
    pixel of frame A is traced to its card position and back into frame B.
    """
    h, w = intrinsics.height, intrinsics.width
    hd = intrinsics.half_diagonal
    vv, uu = np.mgrid[0:h, 0:w].astype(np.float64)
    # pixel -> card (frame A, exact forward maps)
    cu = intrinsics.cx + (uu - intrinsics.cx) / zoom_a
    cv = intrinsics.cy + (vv - intrinsics.cy) / zoom_a
    du = cu - intrinsics.cx
    dv = cv - intrinsics.cy
    rho = np.hypot(du, dv) / hd
    g, _ = _displacement(rho, dist_a)
    # card radius -> frame-B crop radius (radial inversion), then zoom out
    r_b = _invert_radial(g, dist_b)
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(rho > 0.0, r_b / rho, 1.0)
    qu = intrinsics.cx + du * scale * zoom_b
    qv = intrinsics.cy + dv * scale * zoom_b
    return np.stack([qu - uu, qv - vv], axis=-1)


# ---------------------------------------------------------------------------
# Scene rendering

@dataclass(eq=False)
class SceneBundle:
    """Everything a rendered scene produces, in memory."""

    spec: SceneSpec
    seed: int
    frames: list[np.ndarray]
    disparity: np.ndarray
    flows: list[np.ndarray]
    params: list[CameraParams]
    traj: PoseTrajectory

    @property
    def n_frames(self) -> int:
        return len(self.frames)


def render_scene(spec: SceneSpec, seed: int, backend: str | None = None) -> SceneBundle:
    """Render a scene spec into frames, flows, cameras, and poses."""
    intr = spec.intrinsics()
    n = spec.n_frames
    card = _texture(spec, substream(seed, S_TEXTURE))
    disparity = _disparity(spec)
    focus_u, focus_v = spec.focus_point()

    zooms = spec.zoom.sample(substream(seed, S_ZOOM), n) if spec.zoom.active else np.ones(n)
    k1s = spec.distortion.sample(substream(seed, S_K1), n)
    alphas = spec.alpha.sample(substream(seed, S_ALPHA), n)
    dists = [Distortion(k1=float(k)) for k in k1s]

    # One crop factor for the whole clip keeps frame-to-frame motion purely
    # the effect delta instead of mixing in a breathing crop.
    crop = 1.0
    if spec.distortion.active:
        crop = max(distortion_crop_factor(intr, d) for d in dists)
    effective = zooms * crop

    frames = []
    for i in range(n):
        px = card
        if spec.alpha.active and alphas[i] > 0.0:
            px, _ = bokeh_render(
                px, disparity, float(alphas[i]), focus_u, focus_v,
                gain=spec.bokeh_gain, cap=spec.bokeh_cap, backend=backend,
            )
        if spec.distortion.active or effective[i] != 1.0:
            px = distortion_positions(intr, dists[i], float(effective[i])).apply(px, backend=backend)
        frames.append(np.clip(px, 0.0, 1.0))

    flows = [
        flow_between(intr, dists[i], dists[i + 1], float(effective[i]), float(effective[i + 1]))
        for i in range(n - 1)
    ]

    traj = _poses(spec)
    params = []
    for i in range(n):
        pose = CameraPose(
            traj.rotations[i].T,  # world-from-camera
            -traj.rotations[i].T @ traj.translations[i],
        )
        params.append(
            CameraParams(
                intrinsics=intr.scaled(float(effective[i])) if effective[i] != 1.0 else intr,
                distortion=dists[i],
                aperture=ApertureSpec(alpha=float(alphas[i]), focus_u=focus_u, focus_v=focus_v),
                pose=pose,
            )
        )
    return SceneBundle(
        spec=spec, seed=seed, frames=frames, disparity=disparity,
        flows=flows, params=params, traj=traj,
    )


def write_bundle(bundle: SceneBundle, out_dir) -> None:
    """Write a rendered scene in the standard bundle layout."""
    os.makedirs(os.path.join(out_dir, "frames"), exist_ok=True)
    os.makedirs(os.path.join(out_dir, "disparity"), exist_ok=True)
    os.makedirs(os.path.join(out_dir, "flow"), exist_ok=True)
    for i, frame in enumerate(bundle.frames):
        write_png(os.path.join(out_dir, "frames", f"{i:05d}.png"), frame)
        write_pfm(os.path.join(out_dir, "disparity", f"{i:05d}.pfm"), bundle.disparity)
    for i, flow in enumerate(bundle.flows):
        write_flo(os.path.join(out_dir, "flow", f"{i:05d}.flo"), flow)
    write_tum(os.path.join(out_dir, "traj.tum"), bundle.traj)
    write_params_jsonl(os.path.join(out_dir, "params.jsonl"), bundle.params)
    write_camera_maps(
        os.path.join(out_dir, "cameramap.akmp"), [p.camera_map() for p in bundle.params]
    )
    with open(os.path.join(out_dir, "spec.json"), "w", encoding="ascii") as f:
        json.dump({"seed": bundle.seed, "scene": bundle.spec.to_dict()}, f, indent=2)
        f.write("\n")


def dolly_zoom_bundle(
    seed: int,
    width: int = 256,
    height: int = 256,
    n_frames: int = 16,
    zoom_end: float = 2.0,
    travel_per_frame: float = 0.25,
    backend: str | None = None,
) -> SceneBundle:
    """Coupled zoom-in and backward dolly: fx and |t| climb together."""
    spec = SceneSpec(
        width=width,
        height=height,
        n_frames=n_frames,
        zoom=EffectCurve("linear", 1.0, zoom_end),
        pose_motion="line",
        pose_step=travel_per_frame,
    )
    return render_scene(spec, seed, backend=backend)


def load_clip(path) -> tuple[list[Frame], list[CameraParams]]:
    """Read a bundle-shaped directory back as pipeline inputs.

    Expects ``frames/*.png`` and ``params.jsonl``; ``disparity/*.pfm`` is
    attached when present (matched to frames by sorted order).
    """
    frames_dir = os.path.join(path, "frames")
    if not os.path.isdir(frames_dir):
        raise FormatError("clip directory has no frames/ subdirectory", path=str(path))
    names = sorted(n for n in os.listdir(frames_dir) if n.lower().endswith(".png"))
    if not names:
        raise FormatError("no PNG frames found", path=str(frames_dir))
    disp_dir = os.path.join(path, "disparity")
    disp_names = []
    if os.path.isdir(disp_dir):
        disp_names = sorted(n for n in os.listdir(disp_dir) if n.lower().endswith(".pfm"))
        if disp_names and len(disp_names) != len(names):
            raise FormatError(
                f"{len(names)} frames but {len(disp_names)} disparity maps", path=str(path)
            )
    frames = []
    for i, name in enumerate(names):
        px = read_png(os.path.join(frames_dir, name))
        disp = read_pfm(os.path.join(disp_dir, disp_names[i])) if disp_names else None
        frames.append(Frame(px, disp))
    params_path = os.path.join(path, "params.jsonl")
    if not os.path.isfile(params_path):
        raise FormatError("clip directory has no params.jsonl", path=str(path))
    params = read_params_jsonl(params_path)
    if len(params) == 1:
        params = params * len(frames)
    if len(params) != len(frames):
        raise FormatError(
            f"{len(frames)} frames but {len(params)} camera records", path=str(params_path)
        )
    return frames, params
