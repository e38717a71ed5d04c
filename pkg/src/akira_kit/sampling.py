"""Randomized optical-parameter trajectories and the nested dropout gate.

Each augmentation parameter follows a smooth curve over the clip: a few
control values drawn uniformly from the configured range, joined by a
natural cubic spline and clamped back to the range.  Whether an effect
fires at all is decided by a two-level Bernoulli gate, so with gate
probability p each individual effect appears with probability p**2.

Every random decision draws from its own child stream of the clip seed,
keyed by a fixed stream id (and nothing else), so adding or disabling one
effect never shifts the numbers another effect sees.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigError

# Substream ids (order is part of the on-disk reproducibility contract).
STREAM_DROPOUT = 0
STREAM_ZOOM = 1
STREAM_K1 = 2
STREAM_K2 = 3
STREAM_K3 = 4
STREAM_ALPHA = 5
STREAM_FOCUS_U = 6
STREAM_FOCUS_V = 7


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for (seed, key...); same inputs, same stream."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class EffectFlags:
    """Which augmentations fire for a clip."""

    bokeh: bool = False
    distortion: bool = False
    zoom: bool = False

    @property
    def any(self) -> bool:
        return self.bokeh or self.distortion or self.zoom


def apply_dropout(rng: np.random.Generator, p: float) -> EffectFlags:
    """Two-level effect gate.

    An outer Bernoulli(p) decides whether any augmentation may run; only
    then does each effect flip its own Bernoulli(p) coin, in the fixed
    order bokeh, distortion, zoom.  p = 0 disables everything, p = 1
    enables everything, and each effect individually fires with
    probability p**2.
    """
    if not (0.0 <= p <= 1.0):
        raise ConfigError(f"dropout probability must be in [0, 1], got {p}")
    if rng.random() >= p:
        return EffectFlags()
    return EffectFlags(
        bokeh=bool(rng.random() < p),
        distortion=bool(rng.random() < p),
        zoom=bool(rng.random() < p),
    )


def spline_sequence(controls, n_frames: int, lo: float, hi: float) -> np.ndarray:
    """Evaluate a natural cubic spline through ``controls`` at every frame.

    Control values sit at uniformly spaced knots spanning the clip; the
    evaluated curve is clamped to [lo, hi] (the spline may overshoot
    between knots).
    """
    controls = np.asarray(controls, dtype=np.float64)
    if controls.ndim != 1 or controls.size < 2:
        raise ConfigError(f"need at least 2 control values, got shape {controls.shape}")
    if n_frames < 1:
        raise ConfigError(f"n_frames must be >= 1, got {n_frames}")
    if n_frames == 1:
        return np.clip(controls[:1].copy(), lo, hi)
    knots = np.linspace(0.0, n_frames - 1.0, controls.size)
    curve = CubicSpline(knots, controls, bc_type="natural")(np.arange(n_frames, dtype=np.float64))
    return np.clip(curve, lo, hi)


def sample_spline_trajectory(
    rng: np.random.Generator, n_frames: int, lo: float, hi: float, knots: int = 4
) -> np.ndarray:
    """Draw ``knots`` uniform control values in [lo, hi] and spline them."""
    if hi < lo:
        raise ConfigError(f"empty range [{lo}, {hi}]")
    if knots < 2:
        raise ConfigError(f"need at least 2 spline knots, got {knots}")
    controls = rng.uniform(lo, hi, size=knots)
    return spline_sequence(controls, n_frames, lo, hi)


@dataclass(frozen=True)
class AugmentConfig:
    """Knobs for the clip augmentation pipeline."""

    p: float = 0.2
    knots: int = 4
    zoom_range: tuple[float, float] = (1.0, 3.0)
    distortion_range: tuple[float, float] = (-0.1, 0.1)
    alpha_range: tuple[float, float] = (0.0, 100.0)
    focus_margin: float = 0.1
    bokeh_gain: float = 0.25
    bokeh_cap: float = 25.0
    sigmoid_scale: float = 1.0
    enable_bokeh: bool = True
    enable_distortion: bool = True
    enable_zoom: bool = True

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0):
            raise ConfigError(f"p must be in [0, 1], got {self.p}")
        if self.knots < 2:
            raise ConfigError(f"knots must be >= 2, got {self.knots}")
        for name, (lo, hi) in (
            ("zoom", self.zoom_range),
            ("distortion", self.distortion_range),
            ("alpha", self.alpha_range),
        ):
            if hi < lo:
                raise ConfigError(f"{name} range [{lo}, {hi}] is empty")
        if self.zoom_range[0] < 1.0:
            raise ConfigError(f"zoom range must start at >= 1, got {self.zoom_range}")
        if self.alpha_range[0] < 0.0:
            raise ConfigError(f"alpha range must be non-negative, got {self.alpha_range}")
        if not (0.0 <= self.focus_margin < 0.5):
            raise ConfigError(f"focus margin must be in [0, 0.5), got {self.focus_margin}")
        if self.bokeh_gain <= 0.0 or self.bokeh_cap < 0.0:
            raise ConfigError(
                f"bokeh gain must be positive and cap non-negative, got "
                f"gain={self.bokeh_gain}, cap={self.bokeh_cap}"
            )
        if self.sigmoid_scale <= 0.0:
            raise ConfigError(f"sigmoid scale must be positive, got {self.sigmoid_scale}")

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "knots": self.knots,
            "zoom": list(self.zoom_range),
            "distortion": list(self.distortion_range),
            "alpha": list(self.alpha_range),
            "focus_margin": self.focus_margin,
            "bokeh_gain": self.bokeh_gain,
            "bokeh_cap": self.bokeh_cap,
            "sigmoid_scale": self.sigmoid_scale,
            "enable_bokeh": self.enable_bokeh,
            "enable_distortion": self.enable_distortion,
            "enable_zoom": self.enable_zoom,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AugmentConfig":
        d = dict(d)
        kwargs = {}
        for json_key, attr in (("zoom", "zoom_range"), ("distortion", "distortion_range"), ("alpha", "alpha_range")):
            if json_key in d:
                pair = d.pop(json_key)
                if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
                    raise ConfigError(f"config key {json_key!r} must be a [lo, hi] pair, got {pair!r}")
                kwargs[attr] = (float(pair[0]), float(pair[1]))
        for key in (
            "p", "knots", "focus_margin", "bokeh_gain", "bokeh_cap", "sigmoid_scale",
            "enable_bokeh", "enable_distortion", "enable_zoom",
        ):
            if key in d:
                kwargs[key] = d.pop(key)
        if d:
            raise ConfigError(f"unknown config keys: {sorted(d)}")
        return cls(**kwargs)


@dataclass(frozen=True, eq=False)
class OpticalTrajectory:
    """Per-frame optical parameters for one clip.

    ``zoom`` holds the sampled zoom curve; ``effective_zoom`` is what the
    pipeline actually applies once the distortion crop factor is folded in
    (equal to 1 everywhere until the pipeline fills it).
    """

    flags: EffectFlags
    zoom: np.ndarray
    distortion: np.ndarray  # (N, 3) k1 k2 k3
    alpha: np.ndarray
    focus: np.ndarray  # (N, 2) focus_u focus_v
    effective_zoom: np.ndarray

    def __post_init__(self):
        n = len(self.zoom)
        if not (
            self.distortion.shape == (n, 3)
            and self.alpha.shape == (n,)
            and self.focus.shape == (n, 2)
            and self.effective_zoom.shape == (n,)
        ):
            raise ConfigError("optical trajectory arrays disagree on frame count")

    def __len__(self) -> int:
        return len(self.zoom)

    def with_effective_zoom(self, effective: np.ndarray) -> "OpticalTrajectory":
        return replace(self, effective_zoom=np.asarray(effective, dtype=np.float64))

    def records(self) -> list[dict]:
        out = []
        for i in range(len(self)):
            out.append(
                {
                    "frame": i,
                    "zoom": float(self.zoom[i]),
                    "effective_zoom": float(self.effective_zoom[i]),
                    "k1": float(self.distortion[i, 0]),
                    "k2": float(self.distortion[i, 1]),
                    "k3": float(self.distortion[i, 2]),
                    "alpha": float(self.alpha[i]),
                    "focus_u": float(self.focus[i, 0]),
                    "focus_v": float(self.focus[i, 1]),
                    "bokeh_enabled": self.flags.bokeh,
                    "distortion_enabled": self.flags.distortion,
                    "zoom_enabled": self.flags.zoom,
                }
            )
        return out


def sample_optical_trajectory(
    seed: int, n_frames: int, width: int, height: int, config: AugmentConfig
) -> OpticalTrajectory:
    """Roll the dropout gate and draw one smooth trajectory per parameter.

    Effects disabled in ``config`` never fire regardless of the gate.
    Parameter curves are drawn from fixed substreams whether or not their
    effect fired, so the same seed always yields the same curves.
    """
    flags = apply_dropout(substream(seed, STREAM_DROPOUT), config.p)
    flags = EffectFlags(
        bokeh=flags.bokeh and config.enable_bokeh,
        distortion=flags.distortion and config.enable_distortion,
        zoom=flags.zoom and config.enable_zoom,
    )
    k = config.knots
    zoom = sample_spline_trajectory(
        substream(seed, STREAM_ZOOM), n_frames, *config.zoom_range, knots=k
    )
    dlo, dhi = config.distortion_range
    distortion = np.stack(
        [
            sample_spline_trajectory(substream(seed, sid), n_frames, dlo, dhi, knots=k)
            for sid in (STREAM_K1, STREAM_K2, STREAM_K3)
        ],
        axis=1,
    )
    alpha = sample_spline_trajectory(
        substream(seed, STREAM_ALPHA), n_frames, *config.alpha_range, knots=k
    )
    # The in-focus point wanders inside the central (1 - 2*margin) box.
    m = config.focus_margin
    focus = np.stack(
        [
            sample_spline_trajectory(
                substream(seed, STREAM_FOCUS_U), n_frames, m * (width - 1), (1 - m) * (width - 1), knots=k
            ),
            sample_spline_trajectory(
                substream(seed, STREAM_FOCUS_V), n_frames, m * (height - 1), (1 - m) * (height - 1), knots=k
            ),
        ],
        axis=1,
    )
    return OpticalTrajectory(
        flags=flags,
        zoom=zoom,
        distortion=distortion,
        alpha=alpha,
        focus=focus,
        effective_zoom=np.ones(n_frames, dtype=np.float64),
    )
