"""Camera-trajectory error metrics and TUM-format trajectory I/O.

Absolute pose error (APE) compares pose i of the estimate against pose i
of the reference; relative pose error (RPE) compares consecutive-pose
increments, which localizes single-pose faults to the two increments that
touch them.  Monocular estimates carry an arbitrary global scale, so both
can be preceded by a path-length scale correction that rescales the
estimated translations (rotations are scale-free and untouched).

Rotation errors use the relative rotation between estimate and reference:
angle(R_est @ R_ref.T).  For the increments the error rotation is
dR_est @ dR_ref.T as well — both factors are honest rotations, keeping
the angle extraction well defined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, FormatError, NumericError

QUAT_NORM_TOL = 1e-3  # unit-quaternion tolerance accepted when parsing


def quat_to_rot(qx: float, qy: float, qz: float, qw: float) -> np.ndarray:
    """Rotation matrix from a unit quaternion (x, y, z, w)."""
    x, y, z, w = qx, qy, qz, qw
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ],
        dtype=np.float64,
    )


def rot_to_quat(R: np.ndarray) -> tuple[float, float, float, float]:
    """Quaternion (x, y, z, w) from a rotation matrix, w >= 0."""
    R = np.asarray(R, dtype=np.float64)
    t = np.trace(R)
    if t > 0:
        s = np.sqrt(t + 1.0) * 2.0
        w = 0.25 * s
        x = (R[2, 1] - R[1, 2]) / s
        y = (R[0, 2] - R[2, 0]) / s
        z = (R[1, 0] - R[0, 1]) / s
    else:
        i = int(np.argmax(np.diag(R)))
        if i == 0:
            s = np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2.0
            x, y, z = 0.25 * s, (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s
            w = (R[2, 1] - R[1, 2]) / s
        elif i == 1:
            s = np.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2.0
            x, y, z = (R[0, 1] + R[1, 0]) / s, 0.25 * s, (R[1, 2] + R[2, 1]) / s
            w = (R[0, 2] - R[2, 0]) / s
        else:
            s = np.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2.0
            x, y, z = (R[0, 2] + R[2, 0]) / s, (R[1, 2] + R[2, 1]) / s, 0.25 * s
            w = (R[1, 0] - R[0, 1]) / s
    if w < 0:
        x, y, z, w = -x, -y, -z, -w
    return float(x), float(y), float(z), float(w)


def rotation_angle(R: np.ndarray) -> float:
    """Geodesic angle of a rotation matrix, radians.

    Uses atan2 of the skew-symmetric part against the trace: arccos of the
    trace alone loses half its precision near zero, turning exactly-equal
    pose increments into ~1e-7 rad of phantom error.
    """
    s = 0.5 * math.sqrt(
        (R[2, 1] - R[1, 2]) ** 2 + (R[0, 2] - R[2, 0]) ** 2 + (R[1, 0] - R[0, 1]) ** 2
    )
    c = 0.5 * (np.trace(R) - 1.0)
    return math.atan2(s, c)


@dataclass(frozen=True, eq=False)
class PoseTrajectory:
    """Timestamped poses: (N,) times, (N, 3, 3) rotations, (N, 3) translations."""

    timestamps: np.ndarray
    rotations: np.ndarray
    translations: np.ndarray

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=np.float64).reshape(-1)
        R = np.asarray(self.rotations, dtype=np.float64)
        t = np.asarray(self.translations, dtype=np.float64)
        n = ts.size
        if n == 0:
            raise ConfigError("trajectory must hold at least one pose")
        if R.shape != (n, 3, 3) or t.shape != (n, 3):
            raise ConfigError(
                f"trajectory arrays disagree: {n} stamps, R {R.shape}, t {t.shape}"
            )
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "rotations", R)
        object.__setattr__(self, "translations", t)

    def __len__(self) -> int:
        return self.timestamps.size

    def path_length(self) -> float:
        """Sum of translation increments along the trajectory."""
        deltas = np.diff(self.translations, axis=0)
        return float(np.linalg.norm(deltas, axis=1).sum())

    def scaled(self, ratio: float) -> "PoseTrajectory":
        return PoseTrajectory(self.timestamps, self.rotations, self.translations * ratio)


def read_tum(path) -> PoseTrajectory:
    """Parse a TUM trajectory: 'timestamp tx ty tz qx qy qz qw' per line.

    Lines starting with '#' and blank lines are skipped.  Quaternions must
    be unit length within 1e-3; they are renormalized exactly before the
    rotation matrix is built.
    """
    stamps, rots, trans = [], [], []
    with open(path, "r", encoding="ascii") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            if len(fields) != 8:
                raise FormatError(
                    f"line {lineno}: expected 8 fields, got {len(fields)}",
                    path=str(path),
                    offset=lineno,
                )
            try:
                vals = [float(x) for x in fields]
            except ValueError as exc:
                raise FormatError(
                    f"line {lineno}: non-numeric field: {exc}", path=str(path), offset=lineno
                )
            ts, tx, ty, tz, qx, qy, qz, qw = vals
            norm = np.sqrt(qx * qx + qy * qy + qz * qz + qw * qw)
            if abs(norm - 1.0) > QUAT_NORM_TOL:
                raise FormatError(
                    f"line {lineno}: quaternion norm {norm:.6f} deviates from 1 "
                    f"by more than {QUAT_NORM_TOL}",
                    path=str(path),
                    offset=lineno,
                )
            stamps.append(ts)
            rots.append(quat_to_rot(qx / norm, qy / norm, qz / norm, qw / norm))
            trans.append([tx, ty, tz])
    if not stamps:
        raise FormatError("trajectory file holds no poses", path=str(path), offset=0)
    return PoseTrajectory(np.array(stamps), np.array(rots), np.array(trans))


def write_tum(path, traj: PoseTrajectory) -> None:
    with open(path, "w", encoding="ascii") as f:
        f.write("# timestamp tx ty tz qx qy qz qw\n")
        for i in range(len(traj)):
            qx, qy, qz, qw = rot_to_quat(traj.rotations[i])
            tx, ty, tz = traj.translations[i]
            f.write(
                f"{traj.timestamps[i]:.6f} {tx:.9g} {ty:.9g} {tz:.9g} "
                f"{qx:.9g} {qy:.9g} {qz:.9g} {qw:.9g}\n"
            )


def _check_pair(est: PoseTrajectory, ref: PoseTrajectory, min_len: int) -> None:
    if len(est) != len(ref):
        raise ConfigError(f"trajectory lengths differ: est {len(est)} vs ref {len(ref)}")
    if len(est) < min_len:
        raise ConfigError(f"need at least {min_len} poses, got {len(est)}")
    diff = np.abs(est.timestamps - ref.timestamps)
    bad = np.nonzero(diff > 1e-9)[0]
    if bad.size:
        i = int(bad[0])
        raise ConfigError(
            f"timestamps diverge at index {i}: est {est.timestamps[i]!r} "
            f"vs ref {ref.timestamps[i]!r}"
        )


@dataclass(frozen=True, eq=False)
class TrajErrorResult:
    """Mean errors plus the per-term breakdown they were averaged from."""

    trans_mean: float
    rot_mean_deg: float
    trans_errors: np.ndarray
    rot_errors_deg: np.ndarray


def ape(est: PoseTrajectory, ref: PoseTrajectory) -> TrajErrorResult:
    """Absolute pose error: per-pose translation distance and rotation angle."""
    _check_pair(est, ref, min_len=1)
    terr = np.linalg.norm(est.translations - ref.translations, axis=1)
    rerr = np.array(
        [
            rotation_angle(est.rotations[i] @ ref.rotations[i].T)
            for i in range(len(est))
        ]
    )
    rerr_deg = np.degrees(rerr)
    return TrajErrorResult(float(terr.mean()), float(rerr_deg.mean()), terr, rerr_deg)


def rpe(est: PoseTrajectory, ref: PoseTrajectory, mode: str = "delta") -> TrajErrorResult:
    """Relative pose error over consecutive pose increments.

    mode='delta' differences translations and rotations independently:
    trans error |dt_est - dt_ref|, rot error angle(dR_est @ dR_ref.T).
    mode='se3' composes each increment as a rigid transform in the first
    pose's frame and measures the translation/rotation of the residual
    transform; use it when increments should be judged in body coordinates.
    """
    if mode not in ("delta", "se3"):
        raise ConfigError(f"unknown rpe mode {mode!r}")
    _check_pair(est, ref, min_len=2)
    n = len(est) - 1
    terr = np.empty(n)
    rerr = np.empty(n)
    for i in range(n):
        dR_est = est.rotations[i + 1] @ est.rotations[i].T
        dR_ref = ref.rotations[i + 1] @ ref.rotations[i].T
        if mode == "delta":
            dt_est = est.translations[i + 1] - est.translations[i]
            dt_ref = ref.translations[i + 1] - ref.translations[i]
            terr[i] = np.linalg.norm(dt_est - dt_ref)
            rerr[i] = rotation_angle(dR_est @ dR_ref.T)
        else:
            # increments in the frame of pose i: T_i^-1 T_{i+1}
            dR_est_b = est.rotations[i].T @ est.rotations[i + 1]
            dt_est_b = est.rotations[i].T @ (est.translations[i + 1] - est.translations[i])
            dR_ref_b = ref.rotations[i].T @ ref.rotations[i + 1]
            dt_ref_b = ref.rotations[i].T @ (ref.translations[i + 1] - ref.translations[i])
            # residual transform (ref increment)^-1 (est increment)
            R_res = dR_ref_b.T @ dR_est_b
            t_res = dR_ref_b.T @ (dt_est_b - dt_ref_b)
            terr[i] = np.linalg.norm(t_res)
            rerr[i] = rotation_angle(R_res)
    rerr_deg = np.degrees(rerr)
    return TrajErrorResult(float(terr.mean()), float(rerr_deg.mean()), terr, rerr_deg)


def scale_correct(est: PoseTrajectory, ref: PoseTrajectory) -> tuple[PoseTrajectory, float]:
    """Rescale estimated translations so both trajectories cover the same
    path length.  Returns the corrected estimate and the ratio applied."""
    _check_pair(est, ref, min_len=2)
    est_len = est.path_length()
    if est_len <= 1e-12:
        raise NumericError(
            f"estimated trajectory is degenerate (path length {est_len:.3g}); "
            "scale correction undefined"
        )
    ratio = ref.path_length() / est_len
    return est.scaled(ratio), ratio


def align_and_evaluate(
    est: PoseTrajectory,
    ref: PoseTrajectory,
    mode: str = "delta",
    scale: bool = True,
) -> dict:
    """Scale-correct (optionally) and report APE/RPE in one pass."""
    ratio = 1.0
    if scale:
        est, ratio = scale_correct(est, ref)
    a = ape(est, ref)
    r = rpe(est, ref, mode=mode)
    return {
        "n_poses": len(est),
        "scale_ratio": ratio,
        "ape_trans": a.trans_mean,
        "ape_rot_deg": a.rot_mean_deg,
        "rpe_trans": r.trans_mean,
        "rpe_rot_deg": r.rot_mean_deg,
    }
