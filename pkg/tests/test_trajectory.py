"""Pose trajectories: TUM files, quaternions, APE/RPE, scale correction."""

import math

import numpy as np
import pytest

import akira_kit as ak
from akira_kit import ConfigError, FormatError, NumericError, PoseTrajectory


def yaw(deg):
    a = math.radians(deg)
    return np.array(
        [
            [math.cos(a), -math.sin(a), 0.0],
            [math.sin(a), math.cos(a), 0.0],
            [0.0, 0.0, 1.0],
        ]
    )


def make_traj(n, step=(1.0, 0.0, 0.0), yaw_per_frame=0.0):
    ts = np.arange(n, dtype=np.float64)
    Rs = np.stack([yaw(yaw_per_frame * i) for i in range(n)])
    tr = np.cumsum(np.tile(np.asarray(step), (n, 1)), axis=0) - np.asarray(step)
    return PoseTrajectory(ts, Rs, tr)


# ---------------------------------------------------------------------------
# quaternions

def test_quat_rot_roundtrip(rng):
    # quaternions everywhere use the trajectory-file field order (x, y, z, w)
    for _ in range(100):
        q = rng.normal(size=4)
        q /= np.linalg.norm(q)
        R = ak.quat_to_rot(*q)
        back = ak.rot_to_quat(R)
        # q and -q encode the same rotation; the converter picks w >= 0
        if q[3] < 0:
            q = -q
        assert np.allclose(back, q, atol=1e-12)


def test_quat_identity():
    assert np.allclose(ak.quat_to_rot(0.0, 0.0, 0.0, 1.0), np.eye(3))
    assert np.allclose(ak.rot_to_quat(np.eye(3)), [0.0, 0.0, 0.0, 1.0])


def test_rotation_angle_known_values():
    assert ak.rotation_angle(np.eye(3)) == pytest.approx(0.0)
    assert math.degrees(ak.rotation_angle(yaw(10.0))) == pytest.approx(10.0, abs=1e-9)
    assert math.degrees(ak.rotation_angle(yaw(180.0))) == pytest.approx(180.0, abs=1e-6)


# ---------------------------------------------------------------------------
# TUM i/o

def test_tum_roundtrip(tmp_path):
    traj = make_traj(5, step=(0.1, 0.2, -0.05), yaw_per_frame=3.0)
    p = tmp_path / "t.tum"
    ak.write_tum(p, traj)
    back = ak.read_tum(p)
    assert np.allclose(back.timestamps, traj.timestamps)
    assert np.allclose(back.rotations, traj.rotations, atol=1e-8)
    assert np.allclose(back.translations, traj.translations, atol=1e-8)


def test_tum_skips_comments_and_blanks(tmp_path):
    p = tmp_path / "c.tum"
    p.write_text(
        "# trajectory\n"
        "\n"
        "0.0 0 0 0 0 0 0 1\n"
        "# interlude\n"
        "1.0 1 0 0 0 0 0 1\n"
    )
    traj = ak.read_tum(p)
    assert len(traj) == 2
    assert np.allclose(traj.translations[1], [1, 0, 0])


def test_tum_quaternion_order_is_xyzw(tmp_path):
    # qx qy qz qw: a 180-degree yaw is (0 0 1 0) in the last four fields
    p = tmp_path / "q.tum"
    p.write_text("0.0 0 0 0 0 0 1 0\n0.5 0 0 0 0 0 1 0\n")
    traj = ak.read_tum(p)
    assert np.allclose(traj.rotations[0], yaw(180.0), atol=1e-12)


def test_tum_rejects_wrong_field_count(tmp_path):
    p = tmp_path / "bad.tum"
    p.write_text("0.0 1 2 3 0 0 1\n")
    with pytest.raises(FormatError) as exc:
        ak.read_tum(p)
    assert "line 1" in str(exc.value)


def test_tum_rejects_non_numeric(tmp_path):
    p = tmp_path / "nan.tum"
    p.write_text("0.0 0 0 0 0 0 zero 1\n")
    with pytest.raises(FormatError):
        ak.read_tum(p)


def test_tum_rejects_denormalized_quaternion(tmp_path):
    p = tmp_path / "norm.tum"
    p.write_text("0.0 0 0 0 0.5 0.5 0.5 0.9\n")  # norm far from 1
    with pytest.raises(FormatError):
        ak.read_tum(p)


def test_tum_renormalizes_slightly_off_quaternion(tmp_path):
    w = 1.0 + 5e-4  # within tolerance, must be renormalized silently
    p = tmp_path / "near.tum"
    p.write_text(f"0.0 0 0 0 0 0 0 {w}\n0.5 0 0 0 0 0 0 {w}\n")
    traj = ak.read_tum(p)
    assert np.allclose(traj.rotations[0] @ traj.rotations[0].T, np.eye(3), atol=1e-12)


def test_tum_empty_rejected(tmp_path):
    p = tmp_path / "e.tum"
    p.write_text("# nothing\n")
    with pytest.raises(FormatError):
        ak.read_tum(p)


# ---------------------------------------------------------------------------
# APE

def test_ape_zero_for_identical(rng):
    traj = make_traj(6, yaw_per_frame=2.0)
    res = ak.ape(traj, traj)
    assert res.trans_mean == 0.0
    assert res.rot_mean_deg == pytest.approx(0.0, abs=1e-9)


def test_ape_picks_up_constant_rotation_offset():
    ref = make_traj(8)
    est = PoseTrajectory(
        ref.timestamps, np.stack([yaw(10.0) @ R for R in ref.rotations]), ref.translations
    )
    res = ak.ape(est, ref)
    assert res.rot_mean_deg == pytest.approx(10.0, abs=1e-6)
    assert np.allclose(res.rot_errors_deg, 10.0, atol=1e-6)


def test_ape_translation_offset():
    ref = make_traj(5)
    est = PoseTrajectory(ref.timestamps, ref.rotations, ref.translations + [0.0, 3.0, 4.0])
    res = ak.ape(est, ref)
    assert res.trans_mean == pytest.approx(5.0)


# ---------------------------------------------------------------------------
# RPE

def test_rpe_zero_for_identical():
    traj = make_traj(7, yaw_per_frame=1.5)
    res = ak.rpe(traj, traj)
    assert res.trans_mean == pytest.approx(0.0, abs=1e-12)
    assert res.rot_mean_deg == pytest.approx(0.0, abs=1e-9)
    assert len(res.trans_errors) == 6  # n - 1 increments


def test_rpe_is_local_ape_is_global():
    """Corrupting one pose touches exactly two increments but every
    absolute error from that pose onward."""
    ref = make_traj(10)
    est_t = ref.translations.copy()
    est_t[4] += [0.0, 0.5, 0.0]
    est = PoseTrajectory(ref.timestamps, ref.rotations, est_t)

    rpe_res = ak.rpe(est, ref)
    assert int(np.count_nonzero(rpe_res.trans_errors > 1e-12)) == 2
    assert set(np.nonzero(rpe_res.trans_errors > 1e-12)[0]) == {3, 4}

    # a global offset shows up in every APE term but no RPE term
    shifted = PoseTrajectory(ref.timestamps, ref.rotations, ref.translations + [1.0, 0, 0])
    assert np.all(ak.ape(shifted, ref).trans_errors > 0.999)
    assert np.allclose(ak.rpe(shifted, ref).trans_errors, 0.0, atol=1e-12)


def test_rpe_rotation_increment_errors():
    ref = make_traj(6, yaw_per_frame=0.0)
    rots = ref.rotations.copy()
    rots[3] = yaw(4.0)  # one pose twisted
    est = PoseTrajectory(ref.timestamps, rots, ref.translations)
    res = ak.rpe(est, ref)
    nz = res.rot_errors_deg > 1e-9
    assert nz.sum() == 2
    assert res.rot_errors_deg[nz] == pytest.approx([4.0, 4.0], abs=1e-9)


def test_rpe_se3_mode_accounts_for_frame_change():
    ref = make_traj(6, step=(1.0, 0.0, 0.0), yaw_per_frame=5.0)
    est = make_traj(6, step=(1.0, 0.0, 0.0), yaw_per_frame=5.0)
    for mode in ("delta", "se3"):
        res = ak.rpe(est, ref, mode=mode)
        assert res.trans_mean == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ConfigError):
        ak.rpe(est, ref, mode="nope")


def test_rpe_se3_body_frame_increment():
    # straight track vs the same track rotated 90 degrees globally:
    # body-frame increments are identical, so se3 RPE is zero
    ref = make_traj(5, step=(1.0, 0.0, 0.0))
    R90 = yaw(90.0)
    est = PoseTrajectory(
        ref.timestamps,
        np.stack([R90 @ R for R in ref.rotations]),
        (R90 @ ref.translations.T).T,
    )
    res = ak.rpe(est, ref, mode="se3")
    assert res.trans_mean == pytest.approx(0.0, abs=1e-12)


# ---------------------------------------------------------------------------
# scale correction

@pytest.mark.parametrize("lam", [0.1, 2.0, 10.0])
def test_scale_correction_recovers_uniform_scaling(lam):
    ref = make_traj(8, step=(0.3, 0.1, -0.2), yaw_per_frame=2.0)
    est = PoseTrajectory(ref.timestamps, ref.rotations, ref.translations * lam)
    fixed, ratio = ak.scale_correct(est, ref)
    assert ratio == pytest.approx(1.0 / lam, rel=1e-12)
    assert np.allclose(fixed.translations, ref.translations, atol=1e-9)
    # rotations must never be touched by scale correction
    assert np.array_equal(fixed.rotations, est.rotations)


def test_scale_correct_rejects_degenerate_estimate():
    ref = make_traj(4)
    est = PoseTrajectory(ref.timestamps, ref.rotations, np.zeros((4, 3)))
    with pytest.raises(NumericError):
        ak.scale_correct(est, ref)


def test_align_and_evaluate_report_keys():
    ref = make_traj(6, yaw_per_frame=1.0)
    est = PoseTrajectory(ref.timestamps, ref.rotations, ref.translations * 3.0)
    rep = ak.align_and_evaluate(est, ref)
    assert set(rep) >= {"n_poses", "scale_ratio", "ape_trans", "ape_rot_deg", "rpe_trans", "rpe_rot_deg"}
    assert rep["n_poses"] == 6
    assert rep["rpe_trans"] < 1e-9
    assert rep["ape_trans"] < 1e-9


def test_align_without_scale_keeps_raw_errors():
    ref = make_traj(6)
    est = PoseTrajectory(ref.timestamps, ref.rotations, ref.translations * 2.0)
    rep = ak.align_and_evaluate(est, ref, scale=False)
    assert rep["rpe_trans"] == pytest.approx(1.0)  # each unit step doubled
    assert rep["scale_ratio"] == 1.0


def test_timestamp_mismatch_names_offender():
    a = make_traj(4)
    b = PoseTrajectory(a.timestamps + [0, 0, 0.5, 0], a.rotations, a.translations)
    with pytest.raises(ConfigError) as exc:
        ak.ape(a, b)
    assert "index 2" in str(exc.value)


def test_pair_length_mismatch():
    with pytest.raises(ConfigError):
        ak.ape(make_traj(4), make_traj(5))
    with pytest.raises(ConfigError):
        ak.rpe(make_traj(1), make_traj(1))  # needs at least 2 poses


def test_path_length():
    traj = make_traj(4, step=(3.0, 4.0, 0.0))
    assert traj.path_length() == pytest.approx(15.0)
