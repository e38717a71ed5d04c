"""Clip augmentation pipeline: gating, parameter emission, closure."""

import numpy as np
import pytest

import akira_kit as ak
from akira_kit import (
    AugmentConfig,
    CameraIntrinsics,
    ConfigError,
    Distortion,
    Frame,
)
from akira_kit.warping import distortion_positions


@pytest.fixture
def intr():
    return CameraIntrinsics(fx=90.0, fy=90.0, cx=47.5, cy=35.5, width=96, height=72)


def make_clip(intr, n=5, with_disparity=True, rng=None):
    rng = rng or np.random.default_rng(0)
    frames = []
    for _ in range(n):
        px = rng.random((intr.height, intr.width, 3))
        disp = rng.random((intr.height, intr.width)) if with_disparity else None
        frames.append(Frame(px, disp))
    return frames, ak.identity_params(intr, n)


# ---------------------------------------------------------------------------
# gating

def test_p_zero_is_exact_passthrough(intr):
    frames, params = make_clip(intr)
    res = ak.augment_clip(frames, params, seed=9, config=AugmentConfig(p=0.0))
    assert not res.trajectory.flags.any
    for out, inp in zip(res.frames, frames):
        assert np.array_equal(out, inp.pixels)
    for out, inp in zip(res.params, params):
        assert out.to_dict() == inp.to_dict()


def test_p_one_fires_every_effect(intr):
    frames, params = make_clip(intr)
    res = ak.augment_clip(frames, params, seed=3, config=AugmentConfig(p=1.0))
    flags = res.trajectory.flags
    assert flags.bokeh and flags.distortion and flags.zoom
    for out, inp in zip(res.frames, frames):
        assert not np.array_equal(out, inp.pixels)
    # emitted intrinsics carry the effective zoom
    assert res.params[0].intrinsics.fx == pytest.approx(
        intr.fx * res.trajectory.effective_zoom[0]
    )
    assert res.params[0].distortion.coeffs == pytest.approx(
        tuple(res.trajectory.distortion[0])
    )


def test_determinism_same_seed_bitwise(intr):
    frames, params = make_clip(intr)
    cfg = AugmentConfig(p=1.0)
    a = ak.augment_clip(frames, params, seed=21, config=cfg)
    b = ak.augment_clip(frames, params, seed=21, config=cfg)
    for fa, fb in zip(a.frames, b.frames):
        assert np.array_equal(fa, fb)
    assert a.params[2].to_dict() == b.params[2].to_dict()


def test_different_seeds_differ(intr):
    frames, params = make_clip(intr)
    cfg = AugmentConfig(p=1.0)
    a = ak.augment_clip(frames, params, seed=1, config=cfg)
    b = ak.augment_clip(frames, params, seed=2, config=cfg)
    assert not np.array_equal(a.frames[0], b.frames[0])


def test_effect_toggles_respected(intr):
    frames, params = make_clip(intr, with_disparity=False)
    cfg = AugmentConfig(p=1.0, enable_bokeh=False, enable_distortion=False)
    res = ak.augment_clip(frames, params, seed=4, config=cfg)
    assert not res.trajectory.flags.bokeh
    assert not res.trajectory.flags.distortion
    assert res.trajectory.flags.zoom
    # zoom-only: emitted distortion stays zero
    assert res.params[0].distortion.is_zero()


# ---------------------------------------------------------------------------
# output validity

def test_outputs_finite_in_unit_range(intr):
    frames, params = make_clip(intr)
    for seed in range(5):
        res = ak.augment_clip(frames, params, seed=seed, config=AugmentConfig(p=1.0))
        for f in res.frames:
            assert np.isfinite(f).all()
            assert f.min() >= 0.0 and f.max() <= 1.0


def test_sampled_parameters_within_ranges(intr):
    frames, params = make_clip(intr)
    cfg = AugmentConfig(p=1.0, zoom_range=(1.0, 2.0), distortion_range=(-0.06, 0.06))
    for seed in range(10):
        res = ak.augment_clip(frames, params, seed=seed, config=cfg)
        tr = res.trajectory
        assert tr.zoom.min() >= 1.0 and tr.zoom.max() <= 2.0
        assert tr.distortion.min() >= -0.06 and tr.distortion.max() <= 0.06
        assert tr.alpha.min() >= 0.0 and tr.alpha.max() <= 100.0


# ---------------------------------------------------------------------------
# closure: emitted parameters fully describe the applied geometry

def test_emitted_params_rebuild_applied_warp(intr):
    """Rebuilding the warp from the *emitted* records reproduces the output
    frame bitwise and the source positions to well under 1e-3 px."""
    frames, params = make_clip(intr)
    cfg = AugmentConfig(p=1.0, enable_bokeh=False)  # geometry only
    res = ak.augment_clip(frames, params, seed=17, config=cfg)

    rng = np.random.default_rng(5)
    for i in (0, 2, 4):
        rec = res.params[i].to_dict()
        s = rec["fx"] / intr.fx  # effective zoom recovered from intrinsics
        dist = Distortion(rec["k1"], rec["k2"], rec["k3"])
        rebuilt = distortion_positions(intr, dist, s)
        redone = rebuilt.apply(frames[i].pixels)
        # fx carries s through a multiply/divide round trip (one ulp), so
        # demand float-noise agreement rather than byte identity
        assert np.abs(redone - res.frames[i]).max() < 1e-9
        exact = distortion_positions(intr, dist, res.trajectory.effective_zoom[i])
        assert np.array_equal(exact.apply(frames[i].pixels), res.frames[i])

        # spot-check the forward map at 100 random pixels
        us = rng.uniform(0, intr.width - 1, 100)
        vs = rng.uniform(0, intr.height - 1, 100)
        zi_u = intr.cx + (us - intr.cx) / s
        zi_v = intr.cy + (vs - intr.cy) / s
        du, dv = ak.distort_pixel(zi_u, zi_v, intr, dist)
        iu = np.clip(np.floor(us).astype(int), 0, intr.width - 2)
        iv = np.clip(np.floor(vs).astype(int), 0, intr.height - 2)
        # bilinear interpolation of the rebuilt field at (us, vs)
        fu, fv = us - iu, vs - iv
        grid = rebuilt.source
        interp = (
            grid[iv, iu] * ((1 - fu) * (1 - fv))[:, None]
            + grid[iv, iu + 1] * (fu * (1 - fv))[:, None]
            + grid[iv + 1, iu] * ((1 - fu) * fv)[:, None]
            + grid[iv + 1, iu + 1] * (fu * fv)[:, None]
        )
        direct = np.stack([du, dv], axis=-1)
        # the map is smooth, so bilinear vs direct evaluation agree closely
        assert np.abs(interp - direct).max() < 1e-3


def test_zoom_only_rebuild(intr):
    frames, params = make_clip(intr, with_disparity=False)
    cfg = AugmentConfig(p=1.0, enable_bokeh=False, enable_distortion=False)
    res = ak.augment_clip(frames, params, seed=8, config=cfg)
    for i in (0, 3):
        # the recorded trajectory value reproduces the output bitwise
        redone, _ = ak.zoom_warp(frames[i].pixels, intr, res.trajectory.effective_zoom[i])
        assert np.array_equal(redone, res.frames[i])
        # recovering s from the emitted intrinsics costs one ulp at most
        s = res.params[i].intrinsics.fx / intr.fx
        redone2, _ = ak.zoom_warp(frames[i].pixels, intr, s)
        assert np.abs(redone2 - res.frames[i]).max() < 1e-9


def test_distortion_folds_crop_into_effective_zoom(intr):
    frames, params = make_clip(intr, with_disparity=False)
    cfg = AugmentConfig(p=1.0, enable_bokeh=False, enable_zoom=False)
    res = ak.augment_clip(frames, params, seed=6, config=cfg)
    tr = res.trajectory
    assert not tr.flags.zoom and tr.flags.distortion
    for i in range(len(frames)):
        dist = Distortion(*tr.distortion[i])
        expected = ak.distortion_crop_factor(intr, dist)
        assert tr.effective_zoom[i] == pytest.approx(expected, rel=1e-12)
        assert tr.effective_zoom[i] >= 1.0


def test_camera_maps_from_emitted_params_validate(intr):
    frames, params = make_clip(intr)
    res = ak.augment_clip(frames, params, seed=12, config=AugmentConfig(p=1.0))
    for p in res.params[:2]:
        cmap = p.camera_map()
        cmap.validate()
        # direction at a probe pixel equals the single-ray computation
        d, m = ak.plucker_ray(30.0, 40.0, p.intrinsics, p.distortion, p.pose)
        assert np.allclose(cmap.direction[40, 30], d, atol=1e-6)


# ---------------------------------------------------------------------------
# preconditions

def test_bokeh_requires_disparity(intr):
    frames, params = make_clip(intr, with_disparity=False)
    with pytest.raises(ConfigError) as exc:
        ak.augment_clip(frames, params, seed=0, config=AugmentConfig(p=0.5))
    assert "disparity" in str(exc.value)
    # disabling bokeh lifts the requirement
    cfg = AugmentConfig(p=0.5, enable_bokeh=False)
    ak.augment_clip(frames, params, seed=0, config=cfg)


def test_geometric_effects_require_undistorted_input(intr):
    frames, _ = make_clip(intr)
    params = [
        ak.CameraParams(
            intr, Distortion(0.05, 0, 0), ak.ApertureSpec(0, 10, 10), ak.CameraPose.identity()
        )
    ] * len(frames)
    with pytest.raises(ConfigError):
        ak.augment_clip(frames, params, seed=0, config=AugmentConfig(p=1.0))


def test_bokeh_requires_closed_input_aperture(intr):
    frames, _ = make_clip(intr)
    params = [
        ak.CameraParams(
            intr, Distortion(0, 0, 0), ak.ApertureSpec(50.0, 10, 10), ak.CameraPose.identity()
        )
    ] * len(frames)
    with pytest.raises(ConfigError):
        ak.augment_clip(frames, params, seed=0, config=AugmentConfig(p=1.0))


def test_single_camera_record_broadcasts(intr):
    frames, params = make_clip(intr, n=4)
    res = ak.augment_clip(frames, [params[0]], seed=2, config=AugmentConfig(p=0.0))
    assert len(res.params) == 4


def test_mismatched_lengths_rejected(intr):
    frames, params = make_clip(intr, n=4)
    with pytest.raises(ConfigError):
        ak.augment_clip(frames, params[:2], seed=0, config=AugmentConfig(p=0.0))


def test_frame_validation():
    with pytest.raises(ConfigError):
        Frame(np.full((8, 8, 3), 1.5))  # out of range
    with pytest.raises(ConfigError):
        Frame(np.zeros((8, 8)))  # missing channels
    with pytest.raises(ConfigError):
        Frame(np.zeros((8, 8, 3)), disparity=np.zeros((4, 4)))  # shape clash
